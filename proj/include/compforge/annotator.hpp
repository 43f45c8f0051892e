#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "compforge/error.hpp"
#include "compforge/manifest.hpp"

namespace compforge::annotate {

/// One text-guidance job: the annotator sees both images and the instruction
/// and describes how to turn the poor image into the good one.
struct GuidanceRequest {
    std::string pair_id;
    Task task = Task::Shift;
    std::string poor_path;
    std::string good_path;
    std::string instruction;
};

std::string render_instruction(Task task);

/// Paths are `<image_root>/<side key>`; crop sides carry a "#xywh=" fragment
/// for the raster tool that renders them.
GuidanceRequest make_request(const PairRecord& pair, const std::string& image_root);

/// Backend failures. Transient ones are retried, permanent ones are not.
class TransientBackendError : public Error {
public:
    using Error::Error;
};

class PermanentBackendError : public Error {
public:
    using Error::Error;
};

class AnnotationBackend {
public:
    virtual ~AnnotationBackend() = default;
    virtual std::string id() const = 0;
    /// Must be safe to call from several threads at once.
    virtual std::string complete(const GuidanceRequest& req) = 0;
};

/// Offline backend: "STUB:<pair_id>:<task>".
class StubBackend : public AnnotationBackend {
public:
    std::string id() const override { return "stub"; }
    std::string complete(const GuidanceRequest& req) override;
};

/// Chat-completion style JSON over HTTP(S):
///   POST {model, instruction, images: [poor, good]}  ->  {text}
/// 5xx, 408, 429 and connection failures are transient; other statuses permanent.
class HttpBackend : public AnnotationBackend {
public:
    HttpBackend(std::string url, std::string model, std::string token = {},
                std::chrono::seconds timeout = std::chrono::seconds(120));

    /// Endpoint from COMPFORGE_ANNOTATOR_URL, credential from
    /// COMPFORGE_ANNOTATOR_TOKEN, model from COMPFORGE_ANNOTATOR_MODEL.
    static std::unique_ptr<HttpBackend> from_env(const std::string& url_override = {});

    std::string id() const override;
    std::string complete(const GuidanceRequest& req) override;

private:
    std::string scheme_host_port_;
    std::string path_;
    std::string model_;
    std::string token_;
    std::chrono::seconds timeout_;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{1000};  // doubled after every failure
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct Annotation {
    std::string text;
    int attempts = 0;
    std::string backend;
};

/// Calls the backend, retrying transient failures with exponential backoff.
/// Throws AnnotationError on a permanent failure, an empty response, or once
/// the attempts are used up.
Annotation annotate(const GuidanceRequest& req, AnnotationBackend& backend, const RetryPolicy& policy);

struct AnnotateOptions {
    std::string image_root = ".";
    int jobs = 1;  // requests in flight
    RetryPolicy retry{};
    bool check_paths = false;  // require poor/good files to exist before dispatch
};

/// Annotates every pair that has no guidance yet. Results are applied by
/// pair_id; provenance gains ";annotator=<backend id>".
void annotate_pairs(PairManifest& pairs, AnnotationBackend& backend, const AnnotateOptions& opts);

}  // namespace compforge::annotate
