// Acceptance gate. Each criterion prints exactly one line,
//   PASS|FAIL criterion N: <label>
// and the process exits nonzero when any executed criterion fails.
// argv[1] selects a single criterion by number; no argument runs all twelve.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "motab/backtrack.hpp"
#include "motab/baselines.hpp"
#include "motab/biaslab.hpp"
#include "motab/dataio.hpp"
#include "motab/fixtures.hpp"
#include "motab/monitor.hpp"
#include "motab/pipeline.hpp"
#include "motab/remote.hpp"
#include "motab/util.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"

using namespace motab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "motab-accept-XXXXXX").string();
        path = mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

bool close_to(double a, long double b, double tol) {
    return std::fabs(a - static_cast<double>(b)) <= tol;
}

std::vector<TokenScore> as_scores(const std::vector<double>& logprobs) {
    std::vector<TokenScore> out;
    out.reserve(logprobs.size());
    for (size_t i = 0; i < logprobs.size(); ++i)
        out.push_back({"t" + std::to_string(i), logprobs[i]});
    return out;
}

// The risky pair: the student picks a weakly supported opening 30% of the
// time; everything downstream of the good opening is deterministic.
RunConfig risky_config(std::uint64_t seed, int samples, int concurrency) {
    RunConfig cfg;
    cfg.gamma0 = 0.3;
    cfg.alpha = 1.0;
    cfg.student_temperature = 1.0;
    cfg.teacher_temperature = 0.0;
    cfg.stop_sequence = " %% ";
    cfg.max_step_tokens = 16;
    cfg.max_trajectory_tokens = 64;
    cfg.samples_per_question = samples;
    cfg.concurrency_limit = concurrency;
    cfg.seed = seed;
    return cfg;
}

RunSummary run_risky_batch(const RunConfig& cfg, int n_questions, const std::string& sink,
                           const RunBatchOptions& opts) {
    auto student = fixtures::fixture("risky-student");
    auto teacher = fixtures::fixture("risky-teacher");
    StitchSpec spec{cfg.rev_token, cfg.stop_sequence};
    auto questions = fixtures::fixture_questions(n_questions);
    Synthesizer synth = [&](const Question& q, int s) {
        return synthesize_trajectory(student, teacher, q, cfg, spec, s);
    };
    return run_batch(synth, questions, cfg, Method::motab, spec, sink, opts);
}

std::vector<std::string> sorted_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    std::sort(lines.begin(), lines.end());
    return lines;
}

// 1. Scalar scoring primitives against extended-precision oracles.
bool criterion_equation_oracles() {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> lp(-8.0, 0.0);
    std::uniform_real_distribution<double> wide(-20.0, 0.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<int> klen(1, 20);

    for (int it = 0; it < 1000; ++it) {
        std::vector<double> lps(static_cast<size_t>(len(rng)));
        for (auto& v : lps) v = lp(rng);
        if (!close_to(step_value(as_scores(lps)), oracles::step_value(lps), 1e-12)) return false;
        if (!close_to(geometric_mean_prob(as_scores(lps)), oracles::step_value(lps), 1e-12))
            return false;

        std::vector<double> topk(static_cast<size_t>(klen(rng)));
        for (auto& v : topk) v = wide(rng);
        if (!close_to(renormalized_entropy(as_scores(topk)), oracles::renormalized_entropy(topk),
                      1e-12))
            return false;

        double gamma0 = 1e-3 + 0.999 * unit(rng);
        double alpha = 1e-3 + 5.0 * unit(rng);
        double entropy = 4.0 * unit(rng);
        if (!close_to(adaptive_threshold(gamma0, alpha, entropy),
                      oracles::adaptive_threshold(gamma0, alpha, entropy), 1e-12))
            return false;

        std::vector<double> values(static_cast<size_t>(len(rng)));
        for (auto& v : values) v = unit(rng);
        auto got = td_errors(values);
        auto want = oracles::td_errors(values);
        if (got.size() != want.size()) return false;
        for (size_t i = 0; i < got.size(); ++i)
            if (!close_to(got[i], want[i], 1e-12)) return false;

        double tg = unit(rng), sg = unit(rng), beta = 1e-3 + 2.0 * unit(rng);
        if (skd_accept(tg, sg, beta) != oracles::skd_accept(tg, sg, beta)) return false;
    }
    return true;
}

// 2. Safe-point selection against an exhaustive legal-candidate scan.
bool criterion_backtrack_oracle() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 12);

    for (int it = 0; it < 1000; ++it) {
        int n = len(rng);
        std::vector<double> thresholds(static_cast<size_t>(n));
        std::vector<double> values(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            thresholds[static_cast<size_t>(i)] = 0.05 + 0.55 * unit(rng);
            values[static_cast<size_t>(i)] = unit(rng);
        }
        // Force a first breach at the final index.
        values[static_cast<size_t>(n - 1)] =
            thresholds[static_cast<size_t>(n - 1)] * 0.999 * unit(rng);

        int got = select_safe_point(values, thresholds, n);
        int want = oracles::select_safe_point(values, thresholds, n);
        if (got != want) return false;
        if (got < 1 || got > n) return false;
        if (got > 1 && values[static_cast<size_t>(got) - 2] <
                           thresholds[static_cast<size_t>(got) - 2])
            return false;
    }
    return true;
}

// 3. End to end on the delayed-fault pair: the breach surfaces at step 5,
// the restart lands two steps earlier than the breach, and the record stitches
// exactly one revision marker.
bool criterion_delayed_error_end_to_end() {
    auto student = fixtures::fixture("delayed-error-student");
    auto teacher = fixtures::fixture("delayed-error-teacher");
    RunConfig cfg = risky_config(17, 1, 1);
    StitchSpec spec{cfg.rev_token, cfg.stop_sequence};
    auto q = fixtures::fixture_questions(1).front();

    auto t = synthesize_trajectory(student, teacher, q, cfg, spec, 0);
    if (!t.revised) return false;
    if (!t.unsafe_step || *t.unsafe_step != 5) return false;
    if (!t.backtrack_point || *t.backtrack_point != 3) return false;
    int depth = *t.unsafe_step - *t.backtrack_point;
    if (depth != 2 || depth <= 1) return false;
    if (!validate_trajectory(t).empty()) return false;

    for (const auto& step : t.student_steps) {
        if (step.source != StepSource::student) continue;
        bool before_breach = step.index < *t.unsafe_step;
        if (step.safe != before_breach) return false;
    }

    auto record = make_sft_record(t, q, Method::motab, 0, cfg, spec);
    if (count_occurrences(record.completion, cfg.rev_token) != 1) return false;
    if (!record.depth || *record.depth != 2) return false;
    return true;
}

// 4. Exact enumeration of the monitored process: the distance between the
// student and the truncated-and-corrected process stays within the summed
// first-breach mass.
bool criterion_coverage_bound() {
    auto student = fixtures::fixture("lab-delayed-student");
    auto teacher = fixtures::fixture("lab-delayed-teacher");
    LabConfig cfg;
    cfg.max_length = 6;
    cfg.alpha = 1.0;
    for (double g : {0.1, 0.3, 0.5}) {
        cfg.gamma0 = g;
        auto r = coverage_bound_check(student, teacher, cfg);
        if (!(r.empirical_tv <= r.bound + 1e-12)) return false;
        if (!(r.bound <= 1.0 + 1e-12)) return false;
    }
    return true;
}

// 5. The smoothed teacher's next-token entropy is near its maximum on
// contexts it never saw and collapses on contexts it models.
bool criterion_entropy_collapse() {
    auto teacher = fixtures::fixture("smoothed8-teacher");
    double max_h = std::log(8.0);
    double familiar = static_cast<double>(oracles::smoothed_entropy({1.0}, 0.01, 8));

    for (const auto& ctx : {"e", "f", "g"}) {
        auto pts = ood_entropy_probe(teacher, {{ctx}});
        if (!(pts[0].entropy >= 0.9 * max_h)) return false;
        if (!close_to(pts[0].entropy, max_h, 1e-6)) return false;
    }
    for (const auto& ctx : {"q", "a", "b", "c", "d"}) {
        auto pts = ood_entropy_probe(teacher, {{ctx}});
        if (!(pts[0].entropy <= 0.5 * max_h)) return false;
        if (!close_to(pts[0].entropy, familiar, 1e-6)) return false;
    }
    return true;
}

// 6. On the absorbing-error pair the per-length distribution gap follows the
// closed form 1 - (1-eps)^L, strictly above the linear one-error floor.
bool criterion_compounding_tv() {
    auto student = fixtures::fixture("lab-absorbing-student");
    auto teacher = fixtures::fixture("lab-absorbing-teacher");
    double eps = fixtures::kAbsorbingErrorRate;
    auto curve = tv_growth_curve(teacher, student, 12, {"q"});
    if (curve.values.size() != 12) return false;
    for (int l = 1; l <= 12; ++l) {
        double got = curve.values[static_cast<size_t>(l - 1)];
        if (!close_to(got, oracles::absorbing_tv(eps, l), 1e-9)) return false;
        double floor = l * eps * std::pow(1.0 - eps, l - 1);
        if (l == 1) {
            if (!close_to(got, floor, 1e-12)) return false;
        } else {
            if (!(got > floor)) return false;
        }
    }
    return true;
}

// 7. Over every first-breach event, the teacher is calmer at the restart
// context than at the context it just rejected.
bool criterion_correction_validity() {
    LabConfig cfg;
    cfg.max_length = 6;
    for (const auto& pair : {"lab-delayed", "lab-flawed"}) {
        auto student = fixtures::fixture(std::string(pair) + "-student");
        auto teacher = fixtures::fixture(std::string(pair) + "-teacher");
        auto r = validity_check(student, teacher, cfg);
        if (r.empty || r.breach_count <= 0) return false;
        if (!(r.median_correction_entropy < r.median_breach_entropy)) return false;
    }
    return true;
}

// 8. Across the mixture grid one term only rises and the other only falls,
// and no grid point minimizes both at once.
bool criterion_mixture_antagonism() {
    auto student = fixtures::fixture("lab-flawed-student");
    auto teacher = fixtures::fixture("lab-flawed-teacher");
    LabConfig cfg;
    cfg.max_length = 5;
    auto points = mixture_tradeoff_scan(teacher, student, {0.0, 0.25, 0.5, 0.75, 1.0}, cfg);
    if (points.size() != 5) return false;

    double min_corr = points[0].supervision_corruption;
    double min_inf = points[0].inference_divergence;
    for (const auto& p : points) {
        min_corr = std::min(min_corr, p.supervision_corruption);
        min_inf = std::min(min_inf, p.inference_divergence);
    }
    for (size_t i = 1; i < points.size(); ++i) {
        if (points[i].supervision_corruption < points[i - 1].supervision_corruption) return false;
        if (points[i].inference_divergence > points[i - 1].inference_divergence) return false;
    }
    for (const auto& p : points) {
        bool best_corr = p.supervision_corruption <= min_corr;
        bool best_inf = p.inference_divergence <= min_inf;
        if (best_corr && best_inf) return false;
    }
    return true;
}

// 9. On a batch where 30% of rollouts need a correction, teacher generation
// stays well under student generation and scoring covers exactly the
// retained steps.
bool criterion_call_accounting() {
    TempDir dir;
    auto sink = dir.file("risky.jsonl");
    RunConfig cfg = risky_config(333, 1, 4);
    auto summary = run_risky_batch(cfg, 100, sink, {});
    if (summary.failed != 0) return false;
    if (summary.completed + summary.revised + summary.truncated != 100) return false;

    if (summary.counters.student_gen_tokens <= 0) return false;
    if (!(summary.counters.teacher_gen_tokens <
          0.5 * static_cast<double>(summary.counters.student_gen_tokens)))
        return false;

    auto records = read_records(sink).records;
    if (records.size() != 100) return false;
    std::int64_t scored_steps = 0;
    for (const auto& r : records) scored_steps += static_cast<std::int64_t>(r.step_values.size());
    if (scored_steps != summary.counters.teacher_score_calls) return false;

    if (summary.revised < 15 || summary.revised > 45) return false;
    return true;
}

// 10. The serialized request shape never varies, transient server failures
// are retried, and client errors are surfaced without a retry.
bool criterion_wire_protocol() {
    setenv("MOTAB_ACCEPT_TOKEN", "tok-accept", 1);
    testsupport::StubServer server;
    RemoteEndpoint ep;
    ep.base_url = server.base_url();
    ep.model = "toy";
    ep.auth_env = "MOTAB_ACCEPT_TOKEN";
    ep.max_retries = 3;
    ep.initial_backoff_ms = 1;
    RemotePolicy policy(ep);

    const std::set<std::string> wire_fields = {"model",       "prompt", "max_tokens",
                                               "temperature", "stop",   "logprobs",
                                               "echo",        "seed"};
    auto fields_ok = [&](const nlohmann::json& req) {
        if (req.size() != wire_fields.size()) return false;
        for (const auto& f : wire_fields)
            if (!req.contains(f)) return false;
        return true;
    };

    GenerationRequest gen;
    gen.stop_sequence = " %% ";
    gen.max_tokens = 32;
    gen.temperature = 0.7;
    gen.seed = 9;
    server.script(testsupport::completion_reply(" alpha", "stop", {{" alpha", -0.1}}));
    policy.generate_step("q", gen);
    auto gen_req = server.requests().back();

    server.clear();
    server.script(testsupport::completion_reply("", "stop", {{"q", -0.4}, {" alpha", -0.2}}));
    policy.score_tokens("q", " alpha");
    auto score_req = server.requests().back();

    server.clear();
    server.script(testsupport::topk_reply({{" a", -0.1}, {" b", -0.7}}));
    policy.top_k_next("q", 2);
    auto topk_req = server.requests().back();

    for (const auto& req : {gen_req, score_req, topk_req})
        if (!fields_ok(req)) return false;
    if (score_req["echo"] != true || score_req["max_tokens"] != 0) return false;
    if (topk_req["max_tokens"] != 1) return false;

    server.clear();
    size_t before = server.request_count();
    server.fail_next_with_500(2);
    server.script(testsupport::completion_reply(" beta", "stop", {{" beta", -0.2}}));
    auto retried = policy.generate_step("q", gen);
    if (retried.text != " beta") return false;
    if (server.request_count() - before != 3) return false;

    before = server.request_count();
    server.fail_all_with_400(true);
    bool protocol_error = false;
    try {
        policy.generate_step("q", gen);
    } catch (const ProtocolError&) {
        protocol_error = true;
    }
    server.fail_all_with_400(false);
    if (!protocol_error) return false;
    if (server.request_count() - before != 1) return false;
    return true;
}

// 11. Identical configs reproduce identical datasets at any worker count,
// and a killed run resumes to the same dataset without duplicates.
bool criterion_reproducibility() {
    TempDir dir;
    auto serial = dir.file("serial.jsonl");
    auto parallel = dir.file("parallel.jsonl");
    run_risky_batch(risky_config(99, 2, 1), 20, serial, {});
    run_risky_batch(risky_config(99, 2, 8), 20, parallel, {});
    auto reference = sorted_lines(serial);
    if (reference.size() != 40) return false;
    if (sorted_lines(parallel) != reference) return false;

    auto resumed = dir.file("resumed.jsonl");
    RunBatchOptions interrupt;
    interrupt.checkpoint_path = dir.file("resumed.ckpt");
    interrupt.stop_after_records = 13;
    run_risky_batch(risky_config(99, 2, 8), 20, resumed, interrupt);

    RunBatchOptions finish;
    finish.checkpoint_path = dir.file("resumed.ckpt");
    auto summary = run_risky_batch(risky_config(99, 2, 8), 20, resumed, finish);
    if (summary.skipped_resume != 13) return false;
    if (sorted_lines(resumed) != reference) return false;

    auto records = read_records(resumed).records;
    std::set<std::tuple<std::string, int, std::string>> keys;
    for (const auto& r : records) keys.insert({r.question_id, r.sample_index, to_string(r.method)});
    return keys.size() == records.size() && records.size() == 40;
}

// 12. Dataset statistics expose the method's signature: backtracked records
// carry their depth, and a rejection-sampling baseline never stitches a
// revision marker.
bool criterion_dataset_stats() {
    TempDir dir;

    auto delayed_sink = dir.file("delayed.jsonl");
    {
        auto student = fixtures::fixture("delayed-error-student");
        auto teacher = fixtures::fixture("delayed-error-teacher");
        RunConfig cfg = risky_config(17, 2, 2);
        StitchSpec spec{cfg.rev_token, cfg.stop_sequence};
        auto questions = fixtures::fixture_questions(6);
        Synthesizer synth = [&](const Question& q, int s) {
            return synthesize_trajectory(student, teacher, q, cfg, spec, s);
        };
        run_batch(synth, questions, cfg, Method::motab, spec, delayed_sink, {});
    }
    auto delayed_stats = trajectory_stats(read_records(delayed_sink).records, "However,");
    if (delayed_stats.total != 12) return false;
    auto depth2 = delayed_stats.depth_histogram.find(2);
    if (depth2 == delayed_stats.depth_histogram.end() || depth2->second <= 1) return false;

    auto skd_sink = dir.file("skd.jsonl");
    {
        auto student = fixtures::fixture("risky-student");
        auto teacher = fixtures::fixture("risky-teacher");
        RunConfig cfg = risky_config(5, 1, 2);
        StitchSpec spec{cfg.rev_token, cfg.stop_sequence};
        BaselineConfig bl;
        auto questions = fixtures::fixture_questions(20);
        Synthesizer synth = [&](const Question& q, int s) {
            return skd_synthesize_trajectory(student, teacher, q, cfg, bl, s);
        };
        run_batch(synth, questions, cfg, Method::skd, spec, skd_sink, {});
    }
    auto skd_stats = trajectory_stats(read_records(skd_sink).records, "However,");
    if (skd_stats.total != 20) return false;
    if (skd_stats.rev_token_occurrences != 0) return false;
    if (skd_stats.revised != 0) return false;
    return true;
}

struct Criterion {
    int number;
    const char* label;
    bool (*run)();
};

const Criterion kCriteria[] = {
    {1, "scoring primitives match extended-precision oracles", criterion_equation_oracles},
    {2, "backtracking restarts at the deepest legal value drop", criterion_backtrack_oracle},
    {3, "a delayed fault is corrected from the last reliable step",
     criterion_delayed_error_end_to_end},
    {4, "the monitored process stays within the truncation mass bound", criterion_coverage_bound},
    {5, "teacher entropy separates unfamiliar contexts from familiar ones",
     criterion_entropy_collapse},
    {6, "the student-teacher gap compounds with trajectory length", criterion_compounding_tv},
    {7, "correction contexts are calmer than breach contexts", criterion_correction_validity},
    {8, "no mixture weight minimizes both trade-off terms", criterion_mixture_antagonism},
    {9, "teacher generation stays a fraction of student generation", criterion_call_accounting},
    {10, "the wire protocol stays fixed and survives transient faults", criterion_wire_protocol},
    {11, "runs reproduce across concurrency and resume without duplicates",
     criterion_reproducibility},
    {12, "dataset statistics carry the backtracking signature", criterion_dataset_stats},
};

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    if (argc > 1) {
        selected = std::atoi(argv[1]);
        if (selected < 1 || selected > 12) {
            std::fprintf(stderr, "usage: %s [criterion 1..12]\n", argv[0]);
            return 2;
        }
    }

    bool any_failed = false;
    for (const auto& c : kCriteria) {
        if (selected != 0 && c.number != selected) continue;
        bool ok = false;
        std::string note;
        try {
            ok = c.run();
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", c.number, c.label);
        if (!ok && !note.empty()) std::fprintf(stderr, "  threw: %s\n", note.c_str());
        if (!ok) any_failed = true;
    }
    return any_failed ? 1 : 0;
}
