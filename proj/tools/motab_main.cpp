#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "motab/baselines.hpp"
#include "motab/biaslab.hpp"
#include "motab/config.hpp"
#include "motab/dataio.hpp"
#include "motab/fixtures.hpp"
#include "motab/pipeline.hpp"
#include "motab/remote.hpp"
#include "motab/util.hpp"

using nlohmann::ordered_json;

namespace {

struct BackendFlags {
    std::string kind;  // "remote" or "tabular:<fixture>"
    std::string url;
    std::string model;
    std::string auth_env;
};

void add_backend_flags(CLI::App* sub, const std::string& role, BackendFlags& f) {
    sub->add_option("--" + role, f.kind, "backend kind: remote or tabular:<fixture>")->required();
    sub->add_option("--" + role + "-url", f.url, "base URL of the " + role + " endpoint");
    sub->add_option("--" + role + "-model", f.model, "model name at the " + role + " endpoint");
    sub->add_option("--" + role + "-auth-env", f.auth_env,
                    "environment variable holding the " + role + " bearer token");
}

std::unique_ptr<motab::PolicyBackend> make_backend(const BackendFlags& f, const std::string& role,
                                                   bool echo_scoring) {
    if (f.kind.rfind("tabular:", 0) == 0) {
        return std::make_unique<motab::TabularPolicy>(
            motab::fixtures::fixture(f.kind.substr(8)));
    }
    if (f.kind == "remote") {
        if (f.url.empty() || f.model.empty() || f.auth_env.empty())
            throw motab::ConfigError("remote " + role + " needs --" + role + "-url, --" + role +
                                     "-model and --" + role + "-auth-env");
        motab::RemoteEndpoint ep;
        ep.base_url = f.url;
        ep.model = f.model;
        ep.auth_env = f.auth_env;
        motab::RemotePolicy::Options opt;
        opt.use_echo_scoring = echo_scoring;
        return std::make_unique<motab::RemotePolicy>(ep, opt);
    }
    throw motab::ConfigError(role + ": unknown backend kind '" + f.kind +
                             "' (expected remote or tabular:<fixture>)");
}

// Flags that override RunConfig after the config file is applied.
struct RunFlags {
    std::string config_path;
    double gamma0 = 0, alpha = 0, student_temperature = 0, teacher_temperature = 0;
    int max_step_tokens = 0, max_trajectory_tokens = 0, samples_per_question = 0,
        entropy_top_k = 0, concurrency_limit = 0;
    std::uint64_t seed = 0;
    std::string stop_sequence, rev_token, answer_markers;

    CLI::Option *o_gamma0 = nullptr, *o_alpha = nullptr, *o_stemp = nullptr, *o_ttemp = nullptr,
                *o_mstep = nullptr, *o_mtraj = nullptr, *o_samples = nullptr, *o_topk = nullptr,
                *o_conc = nullptr, *o_seed = nullptr, *o_stop = nullptr, *o_rev = nullptr,
                *o_markers = nullptr;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
    sub->add_option("--config", f.config_path, "flat key=value config file");
    f.o_gamma0 = sub->add_option("--gamma0", f.gamma0, "safety boundary scale, (0, 1]");
    f.o_alpha = sub->add_option("--alpha", f.alpha, "entropy sensitivity of the boundary");
    f.o_stemp = sub->add_option("--student-temperature", f.student_temperature);
    f.o_ttemp = sub->add_option("--teacher-temperature", f.teacher_temperature);
    f.o_mstep = sub->add_option("--max-step-tokens", f.max_step_tokens);
    f.o_mtraj = sub->add_option("--max-trajectory-tokens", f.max_trajectory_tokens);
    f.o_samples = sub->add_option("--samples-per-question", f.samples_per_question);
    f.o_topk = sub->add_option("--entropy-top-k", f.entropy_top_k);
    f.o_conc = sub->add_option("--concurrency", f.concurrency_limit, "worker pool size");
    f.o_seed = sub->add_option("--seed", f.seed, "run seed");
    f.o_stop = sub->add_option("--stop-sequence", f.stop_sequence, "step delimiter");
    f.o_rev = sub->add_option("--rev-token", f.rev_token, "revision token");
    f.o_markers = sub->add_option("--answer-markers", f.answer_markers,
                                  "'|'-separated final-answer markers");
}

motab::RunConfig resolve_config(const RunFlags& f) {
    motab::RunConfig cfg;
    if (!f.config_path.empty()) motab::apply_config(motab::load_flat_config(f.config_path), cfg);
    if (f.o_gamma0->count()) cfg.gamma0 = f.gamma0;
    if (f.o_alpha->count()) cfg.alpha = f.alpha;
    if (f.o_stemp->count()) cfg.student_temperature = f.student_temperature;
    if (f.o_ttemp->count()) cfg.teacher_temperature = f.teacher_temperature;
    if (f.o_mstep->count()) cfg.max_step_tokens = f.max_step_tokens;
    if (f.o_mtraj->count()) cfg.max_trajectory_tokens = f.max_trajectory_tokens;
    if (f.o_samples->count()) cfg.samples_per_question = f.samples_per_question;
    if (f.o_topk->count()) cfg.entropy_top_k = f.entropy_top_k;
    if (f.o_conc->count()) cfg.concurrency_limit = f.concurrency_limit;
    if (f.o_seed->count()) cfg.seed = f.seed;
    if (f.o_stop->count()) cfg.stop_sequence = f.stop_sequence;
    if (f.o_rev->count()) cfg.rev_token = f.rev_token;
    if (f.o_markers->count()) {
        cfg.answer_markers.clear();
        for (const auto& part : motab::split_by(f.answer_markers, "|"))
            if (!part.empty()) cfg.answer_markers.push_back(part);
    }
    auto violations = cfg.validate();
    if (!violations.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw motab::ConfigError(msg);
    }
    return cfg;
}

std::string escape_value(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

void print_effective_config(const motab::RunConfig& cfg) {
    using motab::format_double17;
    std::printf("effective config:\n");
    std::printf("  gamma0 = %s\n", format_double17(cfg.gamma0).c_str());
    std::printf("  alpha = %s\n", format_double17(cfg.alpha).c_str());
    std::printf("  student_temperature = %s\n", format_double17(cfg.student_temperature).c_str());
    std::printf("  teacher_temperature = %s\n", format_double17(cfg.teacher_temperature).c_str());
    std::printf("  stop_sequence = %s\n", escape_value(cfg.stop_sequence).c_str());
    std::printf("  max_step_tokens = %d\n", cfg.max_step_tokens);
    std::printf("  max_trajectory_tokens = %d\n", cfg.max_trajectory_tokens);
    std::printf("  samples_per_question = %d\n", cfg.samples_per_question);
    std::printf("  entropy_top_k = %d\n", cfg.entropy_top_k);
    std::printf("  concurrency_limit = %d\n", cfg.concurrency_limit);
    std::printf("  seed = %llu\n", static_cast<unsigned long long>(cfg.seed));
    std::printf("  rev_token = %s\n", escape_value(cfg.rev_token).c_str());
    std::string markers;
    for (const auto& m : cfg.answer_markers) {
        if (!markers.empty()) markers += '|';
        markers += escape_value(m);
    }
    std::printf("  answer_markers = %s\n", markers.c_str());
    std::printf("  config_fingerprint = %s\n", motab::config_fingerprint(cfg).c_str());
}

void print_backend_line(const char* role, const motab::PolicyBackend& backend,
                        const BackendFlags& f) {
    if (f.kind == "remote")
        std::printf("  %s = %s (auth from env %s; value not shown)\n", role,
                    backend.name().c_str(), f.auth_env.c_str());
    else
        std::printf("  %s = %s\n", role, backend.name().c_str());
}

ordered_json config_to_json(const motab::RunConfig& cfg) {
    ordered_json j;
    j["gamma0"] = cfg.gamma0;
    j["alpha"] = cfg.alpha;
    j["student_temperature"] = cfg.student_temperature;
    j["teacher_temperature"] = cfg.teacher_temperature;
    j["stop_sequence"] = cfg.stop_sequence;
    j["max_step_tokens"] = cfg.max_step_tokens;
    j["max_trajectory_tokens"] = cfg.max_trajectory_tokens;
    j["samples_per_question"] = cfg.samples_per_question;
    j["entropy_top_k"] = cfg.entropy_top_k;
    j["concurrency_limit"] = cfg.concurrency_limit;
    j["seed"] = cfg.seed;
    j["rev_token"] = cfg.rev_token;
    j["answer_markers"] = cfg.answer_markers;
    return j;
}

ordered_json counters_to_json(const motab::CallCounters& c) {
    ordered_json j;
    j["student_gen_tokens"] = c.student_gen_tokens;
    j["teacher_score_calls"] = c.teacher_score_calls;
    j["teacher_gen_tokens"] = c.teacher_gen_tokens;
    j["teacher_topk_calls"] = c.teacher_topk_calls;
    return j;
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<motab::Question> load_questions(const std::string& questions_path,
                                            int fixture_questions) {
    if (!questions_path.empty() && fixture_questions > 0)
        throw motab::ConfigError("pass either --questions or --fixture-questions, not both");
    if (!questions_path.empty()) return motab::read_questions(questions_path);
    if (fixture_questions > 0) return motab::fixtures::fixture_questions(fixture_questions);
    throw motab::ConfigError("no questions: pass --questions <file> or --fixture-questions <n>");
}

void print_summary(const motab::RunSummary& s, const std::string& sink) {
    std::printf("scheduled %lld  skipped_resume %lld  completed %lld  revised %lld  "
                "truncated %lld  failed %lld\n",
                static_cast<long long>(s.scheduled), static_cast<long long>(s.skipped_resume),
                static_cast<long long>(s.completed), static_cast<long long>(s.revised),
                static_cast<long long>(s.truncated), static_cast<long long>(s.failed));
    std::printf("calls: student_gen_tokens %lld  teacher_score_calls %lld  "
                "teacher_gen_tokens %lld  teacher_topk_calls %lld\n",
                static_cast<long long>(s.counters.student_gen_tokens),
                static_cast<long long>(s.counters.teacher_score_calls),
                static_cast<long long>(s.counters.teacher_gen_tokens),
                static_cast<long long>(s.counters.teacher_topk_calls));
    std::printf("wall %.2f s  sink %s\n", s.wall_seconds, sink.c_str());
}

ordered_json summary_to_json(const motab::RunSummary& s) {
    ordered_json j;
    j["scheduled"] = s.scheduled;
    j["skipped_resume"] = s.skipped_resume;
    j["completed"] = s.completed;
    j["revised"] = s.revised;
    j["truncated"] = s.truncated;
    j["failed"] = s.failed;
    j["counters"] = counters_to_json(s.counters);
    return j;
}

struct SynthArgs {
    RunFlags run;
    BackendFlags student;
    BackendFlags teacher;
    std::string questions_path;
    int fixture_questions = 0;
    std::string sink;
    std::string checkpoint;
    bool fresh_start = false;
    bool no_echo_scoring = false;
};

void add_io_flags(CLI::App* sub, SynthArgs& a) {
    sub->add_option("--questions", a.questions_path, "questions file, one object per line");
    sub->add_option("--fixture-questions", a.fixture_questions,
                    "generate this many synthetic questions instead of reading a file");
    sub->add_option("--out", a.sink, "dataset sink path")->required();
    sub->add_option("--checkpoint", a.checkpoint, "completion-log path for resumable runs");
    sub->add_flag("--fresh-start", a.fresh_start, "discard a corrupt or stale checkpoint");
    sub->add_flag("--no-echo-scoring", a.no_echo_scoring,
                  "remote backends: per-token fallback instead of echo scoring");
}

int run_synth_like(const SynthArgs& a, motab::Method method, const motab::BaselineConfig& bl) {
    using namespace motab;
    RunConfig cfg = resolve_config(a.run);
    auto questions = load_questions(a.questions_path, a.fixture_questions);
    auto student = make_backend(a.student, "student", !a.no_echo_scoring);
    std::unique_ptr<PolicyBackend> teacher;
    if (method != Method::plain) teacher = make_backend(a.teacher, "teacher", !a.no_echo_scoring);

    print_effective_config(cfg);
    print_backend_line("student", *student, a.student);
    if (teacher) print_backend_line("teacher", *teacher, a.teacher);
    std::printf("  method = %s\n  questions = %zu\n", to_string(method), questions.size());

    StitchSpec spec{cfg.rev_token, cfg.stop_sequence};
    Synthesizer synth;
    switch (method) {
        case Method::motab:
            synth = [&](const Question& q, int s) {
                return synthesize_trajectory(*student, *teacher, q, cfg, spec, s);
            };
            break;
        case Method::skd:
            synth = [&](const Question& q, int s) {
                return skd_synthesize_trajectory(*student, *teacher, q, cfg, bl, s);
            };
            break;
        case Method::imitkd:
            synth = [&](const Question& q, int s) {
                return imitkd_synthesize_trajectory(*student, *teacher, q, cfg, bl, s);
            };
            break;
        case Method::plain:
            synth = [&](const Question& q, int s) { return plain_rollout(*student, q, cfg, s); };
            break;
    }

    RunBatchOptions opts;
    opts.checkpoint_path = a.checkpoint;
    opts.fresh_start = a.fresh_start;
    RunSummary summary = run_batch(synth, questions, cfg, method, spec, a.sink, opts);
    print_summary(summary, a.sink);

    ordered_json manifest;
    manifest["artifact_version"] = "motab-dataset v1";
    manifest["subcommand"] = method == Method::motab ? "synth" : "baseline";
    manifest["method"] = to_string(method);
    manifest["sink"] = a.sink;
    manifest["config"] = config_to_json(cfg);
    manifest["config_fingerprint"] = config_fingerprint(cfg);
    manifest["student"] = student->name();
    if (teacher) manifest["teacher"] = teacher->name();
    if (a.student.kind == "remote") manifest["student_auth_env"] = a.student.auth_env;
    if (teacher && a.teacher.kind == "remote") manifest["teacher_auth_env"] = a.teacher.auth_env;
    if (method == Method::skd || method == Method::imitkd) {
        ordered_json b;
        b["beta"] = bl.beta;
        b["mix_p"] = bl.mix_p;
        manifest["baseline"] = b;
    }
    manifest["questions"] = static_cast<std::int64_t>(questions.size());
    manifest["summary"] = summary_to_json(summary);
    write_json_file(a.sink + ".manifest.json", manifest);

    return summary.failed > 0 ? 1 : 0;
}

int cmd_biaslab(const motab::LabConfig& lab, const std::string& out_dir) {
    std::printf("effective config:\n");
    std::printf("  max_length = %d\n  gamma0 = %s\n  alpha = %s\n  seed = %llu\n"
                "  mc_samples = %lld\n  out_dir = %s\n",
                lab.max_length, motab::format_double17(lab.gamma0).c_str(),
                motab::format_double17(lab.alpha).c_str(),
                static_cast<unsigned long long>(lab.seed), lab.mc_samples, out_dir.c_str());
    std::string summary = motab::run_lab(lab, out_dir);
    std::printf("%s\n", summary.c_str());

    ordered_json manifest;
    manifest["artifact_version"] = "motab-lab v1";
    manifest["subcommand"] = "biaslab";
    ordered_json cfg;
    cfg["max_length"] = lab.max_length;
    cfg["gamma0"] = lab.gamma0;
    cfg["alpha"] = lab.alpha;
    cfg["seed"] = lab.seed;
    cfg["mc_samples"] = lab.mc_samples;
    cfg["enumeration_guard"] = lab.enumeration_guard;
    cfg["start_context"] = lab.start_context;
    manifest["config"] = cfg;
    manifest["fixtures"] = {"lab-absorbing-student", "lab-absorbing-teacher", "smoothed8-teacher",
                            "lab-flawed-student", "lab-flawed-teacher", "lab-delayed-student",
                            "lab-delayed-teacher"};
    write_json_file(out_dir + "/manifest.json", manifest);
    return 0;
}

int cmd_stats(const std::string& data_path, const std::string& rev_token,
              const std::string& json_path) {
    auto rr = motab::read_records(data_path);
    if (rr.skipped_torn_tail)
        std::fprintf(stderr, "warning: skipped one torn trailing line in %s\n", data_path.c_str());
    auto stats = motab::trajectory_stats(rr.records, rev_token);
    std::printf("%s", motab::render_stats_text(stats).c_str());
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error("cannot write " + json_path);
        out << motab::stats_to_json(stats) << '\n';
        std::printf("stats json written to %s\n", json_path.c_str());
    }
    return 0;
}

int cmd_validate(const std::string& data_path, const std::string& rev_token) {
    auto rr = motab::read_records(data_path);
    if (rr.skipped_torn_tail)
        std::fprintf(stderr, "warning: skipped one torn trailing line in %s\n", data_path.c_str());

    std::vector<std::string> violations;
    std::set<std::tuple<std::string, int, std::string>> seen;
    std::set<std::string> fingerprints;
    for (size_t i = 0; i < rr.records.size(); ++i) {
        const auto& r = rr.records[i];
        auto fail = [&](const std::string& msg) {
            violations.push_back("record " + std::to_string(i + 1) + " (" + r.question_id + "/" +
                                 std::to_string(r.sample_index) + "/" + motab::to_string(r.method) +
                                 "): " + msg);
        };
        if (!seen.insert({r.question_id, r.sample_index, motab::to_string(r.method)}).second)
            fail("duplicate (question_id, sample_index, method)");
        if (r.step_values.size() != r.step_thresholds.size())
            fail("step_values and step_thresholds differ in length");
        for (double v : r.step_values)
            if (!(v >= 0.0 && v <= 1.0)) fail("step value outside [0, 1]");
        for (double t : r.step_thresholds)
            if (!(t > 0.0)) fail("non-positive step threshold");
        if (r.config_fingerprint.size() != 16) {
            fail("config_fingerprint must be 16 hex digits");
        } else {
            for (char c : r.config_fingerprint)
                if (!std::isxdigit(static_cast<unsigned char>(c))) {
                    fail("config_fingerprint must be 16 hex digits");
                    break;
                }
        }
        fingerprints.insert(r.config_fingerprint);
        if (r.counters.student_gen_tokens < 0 || r.counters.teacher_score_calls < 0 ||
            r.counters.teacher_gen_tokens < 0 || r.counters.teacher_topk_calls < 0)
            fail("negative call counter");
        size_t n = r.step_values.size();
        if (r.revised) {
            if (!r.unsafe_step || !r.backtrack_point || !r.depth) {
                fail("revised record missing unsafe_step/backtrack_point/depth");
                continue;
            }
            int unsafe = *r.unsafe_step, back = *r.backtrack_point, depth = *r.depth;
            if (unsafe < 1 || static_cast<size_t>(unsafe) != n)
                fail("unsafe_step must index the final retained step");
            if (back < 1 || back > unsafe) fail("backtrack_point outside [1, unsafe_step]");
            if (depth != unsafe - back) fail("depth must equal unsafe_step - backtrack_point");
            if (static_cast<size_t>(unsafe) <= n &&
                r.step_values.size() == r.step_thresholds.size()) {
                for (size_t k = 0; k + 1 < static_cast<size_t>(unsafe); ++k)
                    if (r.step_values[k] < r.step_thresholds[k])
                        fail("unsafe step before the recorded breach");
                if (r.step_values[unsafe - 1] >= r.step_thresholds[unsafe - 1])
                    fail("recorded breach step is not below its threshold");
            }
            if (r.completion.find(rev_token) == std::string::npos)
                fail("revised completion lacks the revision token");
            if (r.terminal == motab::Terminal::completed)
                fail("revised record cannot be terminal=completed");
        } else {
            if (r.unsafe_step || r.backtrack_point || r.depth)
                fail("unrevised record carries breach fields");
            if (r.step_values.size() == r.step_thresholds.size())
                for (size_t k = 0; k < n; ++k)
                    if (r.step_values[k] < r.step_thresholds[k])
                        fail("unrevised record contains an unsafe step");
            if (r.terminal == motab::Terminal::revised)
                fail("unrevised record cannot be terminal=revised");
        }
    }

    if (fingerprints.size() > 1)
        std::printf("note: %zu distinct config fingerprints in one sink\n", fingerprints.size());
    if (violations.empty()) {
        std::printf("ok: %zu records, no invariant violations\n", rr.records.size());
        return 0;
    }
    size_t shown = std::min<size_t>(violations.size(), 50);
    for (size_t i = 0; i < shown; ++i) std::printf("violation: %s\n", violations[i].c_str());
    if (shown < violations.size())
        std::printf("... and %zu more\n", violations.size() - shown);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reasoning-distillation data synthesis over monitored student rollouts"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "monitored synthesis with backtracked teacher "
                                                  "corrections");
    add_run_flags(synth_cmd, synth_args.run);
    add_backend_flags(synth_cmd, "student", synth_args.student);
    add_backend_flags(synth_cmd, "teacher", synth_args.teacher);
    add_io_flags(synth_cmd, synth_args);

    SynthArgs base_args;
    std::string base_method = "skd";
    motab::BaselineConfig base_cfg;
    auto* base_cmd = app.add_subcommand("baseline", "comparison-method synthesis (skd, imitkd, "
                                                    "plain)");
    base_cmd->add_option("--method", base_method, "skd, imitkd or plain")->required();
    base_cmd->add_option("--beta", base_cfg.beta, "skd acceptance margin");
    base_cmd->add_option("--mix-p", base_cfg.mix_p, "imitkd per-step teacher probability");
    add_run_flags(base_cmd, base_args.run);
    add_backend_flags(base_cmd, "student", base_args.student);
    base_cmd->add_option("--teacher", base_args.teacher.kind,
                         "backend kind: remote or tabular:<fixture>");
    base_cmd->add_option("--teacher-url", base_args.teacher.url, "");
    base_cmd->add_option("--teacher-model", base_args.teacher.model, "");
    base_cmd->add_option("--teacher-auth-env", base_args.teacher.auth_env, "");
    add_io_flags(base_cmd, base_args);

    motab::LabConfig lab;
    std::string lab_out = "lab_out";
    auto* lab_cmd = app.add_subcommand("biaslab", "exact verification battery on tabular toy "
                                                  "policies");
    lab_cmd->add_option("--out-dir", lab_out, "directory for curve files and summary.json");
    lab_cmd->add_option("--max-length", lab.max_length, "trajectory length for enumerations");
    lab_cmd->add_option("--gamma0", lab.gamma0, "safety boundary scale");
    lab_cmd->add_option("--alpha", lab.alpha, "entropy sensitivity");
    lab_cmd->add_option("--seed", lab.seed, "Monte Carlo seed");
    lab_cmd->add_option("--mc-samples", lab.mc_samples, "Monte Carlo draws per point");

    std::string stats_data, stats_rev = "However,", stats_json;
    auto* stats_cmd = app.add_subcommand("stats", "dataset shape: backtrack rate, depth and "
                                                  "position histograms, margins");
    stats_cmd->add_option("--data", stats_data, "dataset path")->required();
    stats_cmd->add_option("--rev-token", stats_rev, "revision token to count");
    stats_cmd->add_option("--json", stats_json, "also write the summary as JSON here");

    std::string val_data, val_rev = "However,";
    auto* val_cmd = app.add_subcommand("validate", "check an existing dataset against the record "
                                                   "invariants");
    val_cmd->add_option("--data", val_data, "dataset path")->required();
    val_cmd->add_option("--rev-token", val_rev, "revision token revised records must contain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth_cmd->parsed()) {
            return run_synth_like(synth_args, motab::Method::motab, {});
        }
        if (base_cmd->parsed()) {
            auto method = motab::method_from_string(base_method);
            if (!method || *method == motab::Method::motab)
                throw motab::ConfigError("--method must be skd, imitkd or plain (use synth for "
                                         "the monitored pipeline)");
            if (*method != motab::Method::plain && base_args.teacher.kind.empty())
                throw motab::ConfigError("--teacher is required for skd and imitkd");
            return run_synth_like(base_args, *method, base_cfg);
        }
        if (lab_cmd->parsed()) return cmd_biaslab(lab, lab_out);
        if (stats_cmd->parsed()) return cmd_stats(stats_data, stats_rev, stats_json);
        if (val_cmd->parsed()) return cmd_validate(val_data, val_rev);
    } catch (const motab::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const motab::CheckpointError& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
