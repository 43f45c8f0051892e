#include "compforge/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "compforge/jsonl.hpp"
#include "compforge/log.hpp"

namespace compforge::annotate {

std::string render_instruction(Task task) {
    std::string op;
    switch (task) {
        case Task::Shift: op = "shifting the framing"; break;
        case Task::ZoomIn: op = "zooming in"; break;
        case Task::ViewChange: op = "changing the camera viewpoint"; break;
    }
    return "The first image is poorly composed and the second image is its improved version. "
           "In one or two sentences, describe how to get from the first to the second by " +
           op + ", naming the subject and the direction of the adjustment.";
}

GuidanceRequest make_request(const PairRecord& pair, const std::string& image_root) {
    std::filesystem::path root(image_root.empty() ? "." : image_root);
    GuidanceRequest req;
    req.pair_id = pair.pair_id;
    req.task = pair.task;
    req.poor_path = (root / pair.poor.key()).string();
    req.good_path = (root / pair.good.key()).string();
    req.instruction = render_instruction(pair.task);
    return req;
}

std::string StubBackend::complete(const GuidanceRequest& req) {
    return "STUB:" + req.pair_id + ":" + std::string(to_string(req.task));
}

HttpBackend::HttpBackend(std::string url, std::string model, std::string token, std::chrono::seconds timeout)
    : model_(std::move(model)), token_(std::move(token)), timeout_(timeout) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("annotator url needs a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported annotator url scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = url;
        path_ = "/";
    } else {
        scheme_host_port_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
    if (scheme_host_port_.size() <= scheme_end + 3) throw ConfigError("annotator url has no host: " + url);
}

std::unique_ptr<HttpBackend> HttpBackend::from_env(const std::string& url_override) {
    auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? v : "";
    };
    std::string url = url_override.empty() ? env("COMPFORGE_ANNOTATOR_URL") : url_override;
    if (url.empty()) throw ConfigError("COMPFORGE_ANNOTATOR_URL is not set");
    std::string model = env("COMPFORGE_ANNOTATOR_MODEL");
    if (model.empty()) model = "default";
    return std::make_unique<HttpBackend>(std::move(url), std::move(model), env("COMPFORGE_ANNOTATOR_TOKEN"));
}

std::string HttpBackend::id() const { return "http:" + model_; }

std::string HttpBackend::complete(const GuidanceRequest& req) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    Json body = {
        {"model", model_},
        {"instruction", req.instruction},
        {"images", {req.poor_path, req.good_path}},
    };
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransientBackendError("request failed: " + httplib::to_string(res.error()));
    const int status = res->status;
    if (status >= 500 || status == 408 || status == 429)
        throw TransientBackendError("server returned " + std::to_string(status));
    if (status < 200 || status >= 300) throw PermanentBackendError("server returned " + std::to_string(status));

    Json reply;
    try {
        reply = Json::parse(res->body);
    } catch (const Json::exception& e) {
        throw PermanentBackendError(std::string("malformed response: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string())
        throw PermanentBackendError("response has no string field \"text\"");
    return reply["text"].get<std::string>();
}

Annotation annotate(const GuidanceRequest& req, AnnotationBackend& backend, const RetryPolicy& policy) {
    if (policy.max_attempts < 1) throw ConfigError("retry max_attempts must be at least 1");
    auto delay = policy.base_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        try {
            std::string text = backend.complete(req);
            if (text.find_first_not_of(" \t\r\n") == std::string::npos)
                throw AnnotationError(req.pair_id, "empty response from " + backend.id());
            return {std::move(text), attempt, backend.id()};
        } catch (const TransientBackendError& e) {
            last_error = e.what();
        } catch (const PermanentBackendError& e) {
            throw AnnotationError(req.pair_id, e.what());
        }
        if (attempt == policy.max_attempts) break;
        log::warn(req.pair_id + ": attempt " + std::to_string(attempt) + " failed (" + last_error + "), retrying in " +
                  std::to_string(delay.count()) + "ms");
        if (policy.sleep)
            policy.sleep(delay);
        else
            std::this_thread::sleep_for(delay);
        delay *= 2;
    }
    throw AnnotationError(req.pair_id,
                          "gave up after " + std::to_string(policy.max_attempts) + " attempts: " + last_error);
}

void annotate_pairs(PairManifest& pairs, AnnotationBackend& backend, const AnnotateOptions& opts) {
    if (opts.jobs < 1) throw ConfigError("jobs must be at least 1");

    std::vector<GuidanceRequest> todo;
    for (const auto& p : pairs.records) {
        if (p.text_guidance) continue;
        auto req = make_request(p, opts.image_root);
        if (opts.check_paths) {
            for (const auto* path : {&req.poor_path, &req.good_path}) {
                const auto file = path->substr(0, path->find("#xywh="));
                if (!std::filesystem::exists(file)) throw IoError("missing image for " + p.pair_id + ": " + file);
            }
        }
        todo.push_back(std::move(req));
    }

    std::map<std::string, Annotation> results;
    std::mutex results_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            try {
                auto a = annotate(todo[i], backend, opts.retry);
                std::lock_guard lock(results_mutex);
                results.emplace(todo[i].pair_id, std::move(a));
            } catch (...) {
                std::lock_guard lock(results_mutex);
                if (!first_error) first_error = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };

    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(opts.jobs), todo.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    for (auto& p : pairs.records) {
        auto it = results.find(p.pair_id);
        if (it == results.end()) continue;
        p.text_guidance = it->second.text;
        p.provenance += ";annotator=" + it->second.backend;
    }
}

}  // namespace compforge::annotate
