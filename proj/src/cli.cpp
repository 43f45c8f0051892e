#include "compforge/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "compforge/annotator.hpp"
#include "compforge/config.hpp"
#include "compforge/log.hpp"
#include "compforge/seeding.hpp"
#include "compforge/stats.hpp"

namespace compforge::cli {

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool dry_run = false;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception wins.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

class Runner {
public:
    Runner(const Globals& g, std::ostream& out) : g_(g), out_(out) {
        if (!g.config_path.empty()) cfg_ = load_config(g.config_path);
        if (g.seed) cfg_.seed = *g.seed;
        if (g.jobs < 1) throw ConfigError("--jobs must be at least 1");
    }

    const PipelineConfig& cfg() const { return cfg_; }
    int jobs() const { return g_.jobs; }

    void emit(const std::string& path, const std::string& text) const {
        if (g_.dry_run) {
            log::info("dry run: would write " + std::to_string(text.size()) + " bytes to " + path);
            return;
        }
        if (path == "-")
            out_ << text;
        else
            write_text(path, text);
    }

    void emit_json(const std::string& path, const OrderedJson& j) const { emit(path, j.dump(2) + "\n"); }

private:
    const Globals& g_;
    std::ostream& out_;
    PipelineConfig cfg_;
};

// ---- infer-scores ---------------------------------------------------------

struct InferArgs {
    std::string targets, out, diagnostics;
    bool strict = false;
};

void cmd_infer_scores(Runner& r, const InferArgs& a) {
    const auto targets = scores::read_targets(a.targets);
    for (const auto& t : targets) {
        try {
            scores::validate_targets(t.targets, a.strict ? scores::TargetCheck::Strict : scores::TargetCheck::Range);
        } catch (const Error& e) {
            throw ValidationError("targets for " + t.image_id + ": " + e.what());
        }
    }

    std::vector<scores::SolveResult> results(targets.size());
    parallel_for(targets.size(), r.jobs(), [&](std::size_t i) {
        const auto seed = derive_seed(r.cfg().seed, "infer:" + targets[i].image_id);
        try {
            results[i] = scores::optimize(targets[i].targets, r.cfg().solver, seed);
            results[i].scores = scores::normalize_scores(results[i].scores, r.cfg().solver);
        } catch (const OptimizationError& e) {
            throw OptimizationError(targets[i].image_id + ": " + e.what());
        }
    });

    std::vector<OrderedJson> rows, diag_rows;
    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& res = results[i];
        scores::ScoresRecord rec;
        rec.image_id = targets[i].image_id;
        rec.scores_raw = res.scores.raw;
        rec.scores_norm = *res.scores.normalized;
        rec.optimizer = res.diagnostics.optimizer;
        rec.final_loss = res.diagnostics.final_loss;
        rows.push_back(scores::to_json(rec));
        if (res.diagnostics.fallback_triggered) ++fallbacks;

        const auto& d = res.diagnostics;
        OrderedJson dj;
        dj["image_id"] = rec.image_id;
        dj["optimizer"] = scores::to_string(d.optimizer);
        dj["final_loss"] = d.final_loss;
        dj["lbfgs_loss"] = d.lbfgs_loss;
        if (d.adam_loss) dj["adam_loss"] = *d.adam_loss;
        dj["fallback_triggered"] = d.fallback_triggered;
        dj["lbfgs_failed"] = d.lbfgs_failed;
        dj["adam_failed"] = d.adam_failed;
        dj["lbfgs_iterations"] = d.lbfgs_iterations;
        dj["adam_iterations"] = d.adam_iterations;
        dj["seed"] = d.seed;
        diag_rows.push_back(std::move(dj));
    }
    if (fallbacks)
        log::info(std::to_string(fallbacks) + " of " + std::to_string(targets.size()) +
                  " images needed the Adam fallback");
    r.emit(a.out, to_jsonl(rows));
    if (!a.diagnostics.empty()) r.emit(a.diagnostics, to_jsonl(diag_rows));
}

// ---- build-pairs ----------------------------------------------------------

struct BuildArgs {
    std::string task, images, crops, scores, scenes, out;
};

void cmd_build_pairs(Runner& r, const BuildArgs& a) {
    const Task task = parse_task(a.task);
    const auto& cfg = r.cfg();
    const auto images = read_manifest<ImageRef>(a.images);
    const pairs::BuildContext ctx{cfg.seed, cfg.templates()};

    PairManifest out;
    if (task == Task::ViewChange) {
        if (a.scenes.empty()) throw ConfigError("build-pairs --task view_change needs --scenes");
        auto sel = pairs::select_view_pairs(pairs::read_scene_scores(a.scenes), images, cfg.view, ctx);
        for (const auto& w : sel.warnings) log::warn(w);
        out.records = std::move(sel.pairs);
    } else {
        if (a.crops.empty()) throw ConfigError("build-pairs --task " + a.task + " needs --crops");
        auto crops = read_manifest<CropRecord>(a.crops);
        if (!a.scores.empty()) pairs::attach_scores(crops, scores::read_scores(a.scores));
        out.records = task == Task::Shift ? pairs::build_shift_pairs(images, crops, cfg.shift, cfg.bins, ctx)
                                          : pairs::build_zoom_pairs(images, crops, cfg.zoom, ctx);
    }
    log::info(std::string(to_string(task)) + ": " + std::to_string(out.records.size()) + " pairs");
    r.emit(a.out, serialize_manifest(out));
}

// ---- filter ---------------------------------------------------------------

struct FilterArgs {
    std::string pairs, sidecar, out, report;
};

void cmd_filter(Runner& r, const FilterArgs& a) {
    const auto pairs = read_manifest<PairRecord>(a.pairs);
    const auto sidecar = a.sidecar.empty() ? filter::SidecarIndex{} : filter::read_sidecar(a.sidecar);
    const auto result = filter::run_chain(pairs, sidecar, r.cfg().filter);

    std::map<std::string, std::size_t> failures;
    std::vector<OrderedJson> rows;
    for (const auto& rep : result.reports) {
        if (rep.failed_stage) ++failures[std::string(filter::to_string(*rep.failed_stage))];
        rows.push_back(filter::to_json(rep));
    }
    std::ostringstream summary;
    summary << result.passed.records.size() << " of " << pairs.records.size() << " pairs passed";
    for (const auto& [stage, n] : failures) summary << "; " << stage << ": " << n;
    log::info(summary.str());

    r.emit(a.out, serialize_manifest(result.passed));
    if (!a.report.empty()) r.emit(a.report, to_jsonl(rows));
}

// ---- resample -------------------------------------------------------------

struct ResampleArgs {
    std::string in, spec, out, score_field = "score";
};

void cmd_resample(Runner& r, const ResampleArgs& a) {
    resample::StrataSpec spec;
    if (!a.spec.empty()) {
        Json obj;
        try {
            obj = Json::parse(read_text(a.spec));
        } catch (const Json::exception& e) {
            throw ConfigError(a.spec + ": " + e.what());
        }
        spec = resample::strata_from_json(obj);
    } else if (r.cfg().strata) {
        spec = *r.cfg().strata;
    } else {
        throw ConfigError("resample needs --spec or a \"strata\" section in the config");
    }

    // Records pass through byte for byte; only the score field is interpreted.
    const std::string text = read_text(a.in);
    std::vector<std::string> lines;
    std::vector<double> scores;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json obj;
        try {
            obj = Json::parse(line);
        } catch (const Json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
        const auto it = obj.find(a.score_field);
        if (it == obj.end() || !it->is_number())
            throw ParseError("missing numeric field \"" + a.score_field + "\"", line_no);
        const double s = it->get<double>();
        if (!resample::range_of(s, spec))
            throw ValidationError("line " + std::to_string(line_no) + ": score " + std::to_string(s) +
                                  " is outside every range");
        lines.push_back(line);
        scores.push_back(s);
    }

    const auto picked = resample::stratified_select(scores, spec, r.cfg().seed);
    std::string out;
    for (std::size_t i : picked) out += lines[i] + "\n";

    const auto before = resample::range_counts(scores, spec);
    std::ostringstream summary;
    summary << "kept " << picked.size() << " of " << scores.size() << " records; per range";
    for (std::size_t k = 0; k < before.size(); ++k) summary << ' ' << spec.target_counts[k] << '/' << before[k];
    log::info(summary.str());
    r.emit(a.out, out);
}

// ---- annotate -------------------------------------------------------------

struct AnnotateArgs {
    std::string pairs, out, backend = "stub", url, image_root = ".";
    int retries = 3;
    bool check_paths = false;
};

void cmd_annotate(Runner& r, const AnnotateArgs& a) {
    auto pairs = read_manifest<PairRecord>(a.pairs);
    std::unique_ptr<annotate::AnnotationBackend> backend;
    if (a.backend == "stub")
        backend = std::make_unique<annotate::StubBackend>();
    else
        backend = annotate::HttpBackend::from_env(a.url);

    annotate::AnnotateOptions opts;
    opts.image_root = a.image_root;
    opts.jobs = r.jobs();
    opts.retry.max_attempts = a.retries;
    opts.check_paths = a.check_paths;
    annotate::annotate_pairs(pairs, *backend, opts);
    r.emit(a.out, serialize_manifest(pairs));
}

// ---- grpo-eval ------------------------------------------------------------

struct GrpoArgs {
    std::string in, out, groups;
};

void cmd_grpo_eval(Runner& r, const GrpoArgs& a) {
    const auto report = grpo::evaluate_rollouts(grpo::read_rollouts(a.in), r.cfg().grpo);
    std::vector<OrderedJson> rows, groups;
    for (const auto& x : report.rollouts) rows.push_back(grpo::to_json(x));
    for (const auto& g : report.groups) {
        if (static_cast<int>(g.n) != r.cfg().grpo.n_rollouts)
            log::warn(g.query_id + ": " + std::to_string(g.n) + " rollouts, expected " +
                      std::to_string(r.cfg().grpo.n_rollouts));
        groups.push_back(grpo::to_json(g));
    }
    r.emit(a.out, to_jsonl(rows));
    if (!a.groups.empty()) r.emit(a.groups, to_jsonl(groups));
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string judgments, consistency, out;
    bool no_exclusions = false;
};

void cmd_eval(Runner& r, const EvalArgs& a) {
    const auto judgments = eval::read_judgments(a.judgments);
    const auto consistency =
        a.consistency.empty() ? std::vector<eval::ConsistencyScore>{} : eval::read_consistency(a.consistency);
    auto cfg = r.cfg().eval;
    if (a.no_exclusions) cfg.excluded.clear();
    r.emit_json(a.out, eval::eval_report(judgments, consistency, cfg));
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
    std::string in, out;
};

void cmd_stats(Runner& r, const StatsArgs& a) {
    r.emit_json(a.out, stats::stats_report(read_manifest<PairRecord>(a.in)));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto previous_sink = log::set_sink([&err](log::Level level, std::string_view msg) {
        err << (level == log::Level::Info ? "" : level == log::Level::Warn ? "warning: " : "error: ") << msg
            << '\n';
    });
    struct RestoreSink {
        log::Sink sink;
        ~RestoreSink() { log::set_sink(std::move(sink)); }
    } restore{std::move(previous_sink)};

    CLI::App app{"Build, filter and evaluate composition-editing training data."};
    app.name("compforge");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Global seed; overrides the config");
    app.add_option("--jobs,-j", g.jobs, "Worker threads / requests in flight")->check(CLI::PositiveNumber);
    app.add_flag("--dry-run", g.dry_run, "Read and validate everything, write nothing");

    std::function<void(Runner&)> action;

    InferArgs infer;
    auto* sc = app.add_subcommand("infer-scores", "Fit per-crop scores to annotation targets");
    sc->add_option("--targets", infer.targets, "Targets JSONL")->required();
    sc->add_option("--out", infer.out, "Scores JSONL ('-' for stdout)")->required();
    sc->add_option("--diagnostics", infer.diagnostics, "Per-image optimizer diagnostics JSONL");
    sc->add_flag("--strict", infer.strict, "Also require sum(top3) = 3 and sum(good) in [8, 20]");
    sc->callback([&] { action = [&](Runner& r) { cmd_infer_scores(r, infer); }; });

    BuildArgs build;
    sc = app.add_subcommand("build-pairs", "Build shift, zoom_in or view_change pairs");
    sc->add_option("--task", build.task, "shift | zoom_in | view_change")
        ->required()
        ->check(CLI::IsMember({"shift", "zoom_in", "view_change"}));
    sc->add_option("--images", build.images, "Image manifest")->required();
    sc->add_option("--crops", build.crops, "Crop manifest (shift, zoom_in)");
    sc->add_option("--scores", build.scores, "infer-scores output to attach to crops");
    sc->add_option("--scenes", build.scenes, "Scene scores JSONL (view_change)");
    sc->add_option("--out", build.out, "Pair manifest")->required();
    sc->callback([&] { action = [&](Runner& r) { cmd_build_pairs(r, build); }; });

    FilterArgs filt;
    sc = app.add_subcommand("filter", "Run the filter chain over a pair manifest");
    sc->add_option("--pairs", filt.pairs, "Pair manifest")->required();
    sc->add_option("--scores", filt.sidecar, "Scores sidecar JSONL");
    sc->add_option("--out", filt.out, "Manifest of passing pairs")->required();
    sc->add_option("--report", filt.report, "Per-pair verdict JSONL");
    sc->callback([&] { action = [&](Runner& r) { cmd_filter(r, filt); }; });

    ResampleArgs res;
    sc = app.add_subcommand("resample", "Stratified resampling by score range");
    sc->add_option("--in", res.in, "Scored records JSONL")->required();
    sc->add_option("--spec", res.spec, "Strata spec JSON (else the config's \"strata\")");
    sc->add_option("--score-field", res.score_field, "Top-level numeric field to stratify on");
    sc->add_option("--out", res.out, "Selected records JSONL")->required();
    sc->callback([&] { action = [&](Runner& r) { cmd_resample(r, res); }; });

    AnnotateArgs ann;
    sc = app.add_subcommand("annotate", "Fill in text guidance for pairs");
    sc->add_option("--pairs", ann.pairs, "Pair manifest")->required();
    sc->add_option("--backend", ann.backend, "stub | http")->check(CLI::IsMember({"stub", "http"}));
    sc->add_option("--url", ann.url, "Endpoint; overrides COMPFORGE_ANNOTATOR_URL");
    sc->add_option("--image-root", ann.image_root, "Directory holding the images");
    sc->add_option("--retries", ann.retries, "Attempts per pair")->check(CLI::PositiveNumber);
    sc->add_flag("--check-paths", ann.check_paths, "Fail early if an image file is missing");
    sc->add_option("--out", ann.out, "Annotated pair manifest")->required();
    sc->callback([&] { action = [&](Runner& r) { cmd_annotate(r, ann); }; });

    GrpoArgs gr;
    sc = app.add_subcommand("grpo-eval", "Rewards, advantages and objective for rollout groups");
    sc->add_option("--in", gr.in, "Rollouts JSONL")->required();
    sc->add_option("--out", gr.out, "Per-rollout rewards JSONL")->required();
    sc->add_option("--groups", gr.groups, "Per-group summary JSONL");
    sc->callback([&] { action = [&](Runner& r) { cmd_grpo_eval(r, gr); }; });

    EvalArgs ev;
    sc = app.add_subcommand("eval", "Aggregate judge verdicts into win rates");
    sc->add_option("--judgments", ev.judgments, "Judgments JSONL")->required();
    sc->add_option("--consistency", ev.consistency, "Consistency scores JSONL");
    sc->add_flag("--no-exclusions", ev.no_exclusions, "Report every (task, comparison) column");
    sc->add_option("--out", ev.out, "Report JSON ('-' for stdout)")->required();
    sc->callback([&] { action = [&](Runner& r) { cmd_eval(r, ev); }; });

    StatsArgs st;
    sc = app.add_subcommand("stats", "Pair counts and guidance length statistics");
    sc->add_option("--in", st.in, "Pair manifest")->required();
    sc->add_option("--out", st.out, "Report JSON ('-' for stdout)")->required();
    sc->callback([&] { action = [&](Runner& r) { cmd_stats(r, st); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (*seed_opt) g.seed = seed;

    try {
        Runner runner(g, out);
        action(runner);
        return kOk;
    } catch (const IoError& e) {
        log::error(e.what());
        return kIoFailure;
    } catch (const Error& e) {
        log::error(e.what());
        return kFailure;
    } catch (const std::exception& e) {
        log::error(std::string("internal: ") + e.what());
        return kFailure;
    }
}

}  // namespace compforge::cli
