#include "motab/biaslab.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include "motab/backtrack.hpp"
#include "motab/fixtures.hpp"
#include "motab/monitor.hpp"
#include "motab/util.hpp"

namespace motab {

namespace {

void check_shared_vocab(const TabularPolicy& a, const TabularPolicy& b, const char* who) {
    if (a.vocabulary() != b.vocabulary())
        throw std::invalid_argument(std::string(who) + ": policies must share a vocabulary");
}

void check_guard(size_t vocab, int length, double guard, const char* who) {
    if (length < 0) throw std::invalid_argument(std::string(who) + ": negative length");
    if (std::pow(static_cast<double>(vocab), static_cast<double>(length)) > guard)
        throw EnumerationError(std::string(who) +
                               ": |V|^L exceeds the enumeration guard; "
                               "use the Monte Carlo estimator for this size");
}

std::vector<int> to_ids(const TabularPolicy& p, const std::vector<std::string>& tokens,
                        const char* who) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        int id = p.token_id(t);
        if (id < 0) throw std::invalid_argument(std::string(who) + ": unknown token '" + t + "'");
        ids.push_back(id);
    }
    return ids;
}

void enum_dfs(const TabularPolicy& policy, std::vector<int>& ctx, std::string& key, int depth,
              int length, double mass, std::map<std::string, double>& out) {
    if (mass == 0.0) return;
    if (depth == length) {
        out[key] += mass;
        return;
    }
    auto dist = policy.next_distribution(ctx);
    for (int tok = 0; tok < static_cast<int>(dist.size()); ++tok) {
        if (dist[tok] == 0.0) continue;
        ctx.push_back(tok);
        key.push_back(static_cast<char>(tok));
        enum_dfs(policy, ctx, key, depth + 1, length, mass * dist[tok], out);
        key.pop_back();
        ctx.pop_back();
    }
}

void tv_dfs(const TabularPolicy& teacher, const TabularPolicy& student, std::vector<int>& ctx,
            int depth, int max_len, double mass_t, double mass_s, std::vector<double>& tv) {
    if (depth == max_len) return;
    auto dt = teacher.next_distribution(ctx);
    auto ds = student.next_distribution(ctx);
    for (int tok = 0; tok < static_cast<int>(dt.size()); ++tok) {
        double mt = mass_t * dt[tok];
        double ms = mass_s * ds[tok];
        if (mt == 0.0 && ms == 0.0) continue;
        tv[depth] += 0.5 * std::abs(mt - ms);
        if (mt == 0.0 || ms == 0.0) {
            // One side is extinct on this subtree; extensions preserve the
            // surviving mass, so every deeper length gets the same term.
            for (int d = depth + 1; d < max_len; ++d) tv[d] += 0.5 * std::abs(mt - ms);
            continue;
        }
        ctx.push_back(tok);
        tv_dfs(teacher, student, ctx, depth + 1, max_len, mt, ms, tv);
        ctx.pop_back();
    }
}

int draw(const std::vector<double>& dist, double u) {
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < static_cast<int>(dist.size()); ++i) {
        if (dist[i] <= 0.0) continue;
        last = i;
        acc += dist[i];
        if (u < acc) return i;
    }
    return last;
}

// Walks every student trajectory of up to max_len tokens, judging each token
// at the smoothed teacher probability against the entropy-adaptive boundary,
// and reports full-length safe paths and first-breach events.
struct MonitoredWalker {
    const TabularPolicy& student;
    const TabularPolicy& teacher;
    int max_len;
    double gamma0;
    double alpha;
    std::function<void(const std::string& key, double mass)> on_safe_leaf;
    std::function<void(const std::vector<int>& ctx, const std::string& key,
                       int breach_index, int safe_point, double mass)>
        on_breach;

    std::vector<int> ctx;
    std::string key;
    std::vector<double> values;
    std::vector<double> thresholds;

    void walk(double mass, int depth) {
        if (depth == max_len) {
            on_safe_leaf(key, mass);
            return;
        }
        auto ds = student.next_distribution(ctx);
        auto dt = teacher.next_distribution(ctx);
        double gamma = adaptive_threshold(gamma0, alpha, distribution_entropy(dt));
        for (int tok = 0; tok < static_cast<int>(ds.size()); ++tok) {
            double m = mass * ds[tok];
            if (m == 0.0) continue;
            double v = dt[tok];
            ctx.push_back(tok);
            key.push_back(static_cast<char>(tok));
            values.push_back(v);
            thresholds.push_back(gamma);
            if (v >= gamma) {
                walk(m, depth + 1);
            } else {
                int lstar = select_safe_point(values, thresholds, depth + 1);
                on_breach(ctx, key, depth + 1, lstar, m);
            }
            thresholds.pop_back();
            values.pop_back();
            key.pop_back();
            ctx.pop_back();
        }
    }
};

void teacher_fill_dfs(const TabularPolicy& teacher, std::vector<int>& ctx, std::string& key,
                      int depth, int max_len, double mass, std::map<std::string, double>& out) {
    if (mass == 0.0) return;
    if (depth == max_len) {
        out[key] += mass;
        return;
    }
    auto dt = teacher.next_distribution(ctx);
    for (int tok = 0; tok < static_cast<int>(dt.size()); ++tok) {
        if (dt[tok] == 0.0) continue;
        ctx.push_back(tok);
        key.push_back(static_cast<char>(tok));
        teacher_fill_dfs(teacher, ctx, key, depth + 1, max_len, mass * dt[tok], out);
        key.pop_back();
        ctx.pop_back();
    }
}

double map_tv(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double acc = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            acc += std::abs(ia->second);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            acc += std::abs(ib->second);
            ++ib;
        } else {
            acc += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * acc;
}

double weighted_median(std::vector<std::pair<double, double>> points) {
    std::sort(points.begin(), points.end());
    double total = 0.0;
    for (const auto& [v, w] : points) total += w;
    double cum = 0.0;
    for (const auto& [v, w] : points) {
        cum += w;
        if (cum >= 0.5 * total) return v;
    }
    return points.back().first;
}

const char* estimator_name(LabEstimator e) {
    return e == LabEstimator::exact_enumeration ? "exact_enumeration" : "monte_carlo";
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

double distribution_entropy(const std::vector<double>& dist) {
    double acc = 0.0;
    for (double p : dist)
        if (p > 0.0) acc -= p * std::log(p);
    return acc;
}

std::map<std::string, double> exact_prefix_distribution(const TabularPolicy& policy, int length,
                                                        const std::vector<std::string>& start,
                                                        double enumeration_guard) {
    check_guard(policy.vocabulary().size(), length, enumeration_guard, "exact_prefix_distribution");
    auto ctx = to_ids(policy, start, "exact_prefix_distribution");
    std::map<std::string, double> out;
    std::string key;
    enum_dfs(policy, ctx, key, 0, length, 1.0, out);
    return out;
}

DivergenceCurve tv_growth_curve(const TabularPolicy& teacher, const TabularPolicy& student,
                                int max_len, const std::vector<std::string>& start,
                                double enumeration_guard) {
    check_shared_vocab(teacher, student, "tv_growth_curve");
    if (max_len < 1) throw std::invalid_argument("tv_growth_curve: max_len must be >= 1");
    check_guard(teacher.vocabulary().size(), max_len, enumeration_guard, "tv_growth_curve");
    auto ctx = to_ids(teacher, start, "tv_growth_curve");
    std::vector<double> tv(static_cast<size_t>(max_len), 0.0);
    tv_dfs(teacher, student, ctx, 0, max_len, 1.0, 1.0, tv);
    DivergenceCurve curve;
    curve.measure = DivergenceMeasure::tv;
    curve.estimator = LabEstimator::exact_enumeration;
    curve.sample_count = 0;
    for (int l = 1; l <= max_len; ++l) {
        curve.lengths.push_back(l);
        curve.values.push_back(std::min(1.0, tv[static_cast<size_t>(l - 1)]));
    }
    return curve;
}

DivergenceCurve mc_divergence_curve(const TabularPolicy& teacher, const TabularPolicy& student,
                                    int max_len, DivergenceMeasure measure, long long samples,
                                    std::uint64_t seed, const std::vector<std::string>& start) {
    check_shared_vocab(teacher, student, "mc_divergence_curve");
    if (max_len < 1) throw std::invalid_argument("mc_divergence_curve: max_len must be >= 1");
    if (samples < 2) throw std::invalid_argument("mc_divergence_curve: need at least 2 samples");
    auto start_ids = to_ids(teacher, start, "mc_divergence_curve");
    size_t n = static_cast<size_t>(max_len);
    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    std::vector<long long> inf_count(n, 0);
    std::vector<int> ctx;
    for (long long i = 0; i < samples; ++i) {
        SplitMix64 rng(mix64(seed, static_cast<std::uint64_t>(i)));
        ctx = start_ids;
        double log_s = 0.0, log_t = 0.0;
        bool teacher_zero = false;
        for (int l = 1; l <= max_len; ++l) {
            auto ds = student.next_distribution(ctx);
            int tok = draw(ds, rng.next_double());
            auto dt = teacher.next_distribution(ctx);
            log_s += std::log(ds[static_cast<size_t>(tok)]);
            if (dt[static_cast<size_t>(tok)] == 0.0)
                teacher_zero = true;
            else
                log_t += std::log(dt[static_cast<size_t>(tok)]);
            ctx.push_back(tok);
            size_t idx = static_cast<size_t>(l - 1);
            if (measure == DivergenceMeasure::tv) {
                double stat = teacher_zero ? 1.0 : std::max(0.0, 1.0 - std::exp(log_t - log_s));
                sum[idx] += stat;
                sumsq[idx] += stat * stat;
            } else if (teacher_zero) {
                ++inf_count[idx];
            } else {
                double stat = log_s - log_t;
                sum[idx] += stat;
                sumsq[idx] += stat * stat;
            }
        }
    }
    DivergenceCurve curve;
    curve.measure = measure;
    curve.estimator = LabEstimator::monte_carlo;
    curve.sample_count = samples;
    double nd = static_cast<double>(samples);
    for (int l = 1; l <= max_len; ++l) {
        size_t idx = static_cast<size_t>(l - 1);
        curve.lengths.push_back(l);
        if (inf_count[idx] > 0) {
            curve.values.push_back(std::numeric_limits<double>::infinity());
            curve.std_errors.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        double mean = sum[idx] / nd;
        double var = std::max(0.0, (sumsq[idx] - nd * mean * mean) / (nd - 1.0));
        curve.values.push_back(mean);
        curve.std_errors.push_back(std::sqrt(var / nd));
    }
    return curve;
}

std::vector<EntropyProbePoint> ood_entropy_probe(
    const TabularPolicy& teacher, const std::vector<std::vector<std::string>>& prefixes) {
    std::vector<EntropyProbePoint> out;
    out.reserve(prefixes.size());
    for (const auto& prefix : prefixes) {
        auto ids = to_ids(teacher, prefix, "ood_entropy_probe");
        out.push_back({prefix, distribution_entropy(teacher.next_distribution(ids))});
    }
    return out;
}

std::vector<MixturePoint> mixture_tradeoff_scan(const TabularPolicy& teacher,
                                                const TabularPolicy& student,
                                                const std::vector<double>& mix_alphas,
                                                const LabConfig& cfg) {
    check_shared_vocab(teacher, student, "mixture_tradeoff_scan");
    if (cfg.max_length < 1)
        throw std::invalid_argument("mixture_tradeoff_scan: max_length must be >= 1");
    for (double a : mix_alphas)
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("mixture_tradeoff_scan: mixture weight must be in [0, 1]");
    check_guard(teacher.vocabulary().size(), cfg.max_length, cfg.enumeration_guard,
                "mixture_tradeoff_scan");

    int max_len = cfg.max_length;
    double corruption = 0.0;
    std::function<void(std::vector<int>&, int, double)> corr_dfs =
        [&](std::vector<int>& ctx, int depth, double mass) {
            if (mass == 0.0) return;
            corruption += mass * distribution_entropy(teacher.next_distribution(ctx));
            if (depth + 1 >= max_len) return;
            auto ds = student.next_distribution(ctx);
            for (int tok = 0; tok < static_cast<int>(ds.size()); ++tok) {
                if (ds[tok] == 0.0) continue;
                ctx.push_back(tok);
                corr_dfs(ctx, depth + 1, mass * ds[tok]);
                ctx.pop_back();
            }
        };
    auto ctx = to_ids(teacher, cfg.start_context, "mixture_tradeoff_scan");
    corr_dfs(ctx, 0, 1.0);
    double corruption_base = corruption / static_cast<double>(max_len);
    double inference_base =
        tv_growth_curve(teacher, student, max_len, cfg.start_context, cfg.enumeration_guard)
            .values.back();

    std::vector<MixturePoint> points;
    points.reserve(mix_alphas.size());
    for (double a : mix_alphas)
        points.push_back({a, a * corruption_base, (1.0 - a) * inference_base});
    return points;
}

CoverageReport coverage_bound_check(const TabularPolicy& student, const TabularPolicy& teacher,
                                    const LabConfig& cfg) {
    check_shared_vocab(student, teacher, "coverage_bound_check");
    if (cfg.max_length < 1)
        throw std::invalid_argument("coverage_bound_check: max_length must be >= 1");
    check_guard(student.vocabulary().size(), cfg.max_length, cfg.enumeration_guard,
                "coverage_bound_check");

    auto start_ids = to_ids(student, cfg.start_context, "coverage_bound_check");
    std::map<std::string, double> truncated;
    std::map<std::string, double> rewound;
    CoverageReport report;
    report.gamma0 = cfg.gamma0;
    report.alpha = cfg.alpha;

    MonitoredWalker walker{student,
                           teacher,
                           cfg.max_length,
                           cfg.gamma0,
                           cfg.alpha,
                           [&](const std::string& key, double mass) { truncated[key] += mass; },
                           [&](const std::vector<int>&, const std::string& key, int, int safe_point,
                               double mass) {
                               rewound[key.substr(0, static_cast<size_t>(safe_point - 1))] += mass;
                               report.bound += mass;
                               ++report.truncation_events;
                           },
                           start_ids,
                           {},
                           {},
                           {}};
    walker.walk(1.0, 0);

    for (const auto& [prefix, mass] : rewound) {
        std::vector<int> ctx = start_ids;
        std::string key = prefix;
        for (char c : prefix) ctx.push_back(static_cast<int>(c));
        teacher_fill_dfs(teacher, ctx, key, static_cast<int>(prefix.size()), cfg.max_length, mass,
                         truncated);
    }

    auto student_dist = exact_prefix_distribution(student, cfg.max_length, cfg.start_context,
                                                  cfg.enumeration_guard);
    report.empirical_tv = map_tv(student_dist, truncated);
    return report;
}

ValidityReport validity_check(const TabularPolicy& student, const TabularPolicy& teacher,
                              const LabConfig& cfg) {
    check_shared_vocab(student, teacher, "validity_check");
    if (cfg.max_length < 1)
        throw std::invalid_argument("validity_check: max_length must be >= 1");
    check_guard(student.vocabulary().size(), cfg.max_length, cfg.enumeration_guard,
                "validity_check");

    auto start_ids = to_ids(student, cfg.start_context, "validity_check");
    std::vector<std::pair<double, double>> correction_points;
    std::vector<std::pair<double, double>> breach_points;

    MonitoredWalker walker{student,
                           teacher,
                           cfg.max_length,
                           cfg.gamma0,
                           cfg.alpha,
                           [](const std::string&, double) {},
                           [&](const std::vector<int>& ctx, const std::string&, int,
                               int safe_point, double mass) {
                               std::span<const int> rewound(
                                   ctx.data(), start_ids.size() +
                                                   static_cast<size_t>(safe_point - 1));
                               correction_points.emplace_back(
                                   distribution_entropy(teacher.next_distribution(rewound)), mass);
                               breach_points.emplace_back(
                                   distribution_entropy(teacher.next_distribution(ctx)), mass);
                           },
                           start_ids,
                           {},
                           {},
                           {}};
    walker.walk(1.0, 0);

    ValidityReport report;
    report.max_entropy = std::log(static_cast<double>(student.vocabulary().size()));
    report.breach_count = static_cast<long long>(breach_points.size());
    report.empty = breach_points.empty();
    if (!report.empty) {
        report.median_correction_entropy = weighted_median(correction_points);
        report.median_breach_entropy = weighted_median(breach_points);
    }
    return report;
}

std::string run_lab(const LabConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::path dir(out_dir);

    auto absorbing_student = fixtures::fixture("lab-absorbing-student");
    auto absorbing_teacher = fixtures::fixture("lab-absorbing-teacher");
    DivergenceCurve curve;
    try {
        curve = tv_growth_curve(absorbing_teacher, absorbing_student, cfg.max_length,
                                cfg.start_context, cfg.enumeration_guard);
    } catch (const EnumerationError&) {
        curve = mc_divergence_curve(absorbing_teacher, absorbing_student, cfg.max_length,
                                    DivergenceMeasure::tv, cfg.mc_samples,
                                    mix64(cfg.seed, 0x7476ULL), cfg.start_context);
    }
    {
        auto out = open_out(dir / "tv_curve.csv");
        out << "length,tv,std_error,estimator,samples\n";
        for (size_t i = 0; i < curve.lengths.size(); ++i) {
            double se = curve.std_errors.empty() ? 0.0 : curve.std_errors[i];
            out << curve.lengths[i] << ',' << format_double17(curve.values[i]) << ','
                << format_double17(se) << ',' << estimator_name(curve.estimator) << ','
                << curve.sample_count << '\n';
        }
    }

    auto smoothed = fixtures::fixture("smoothed8-teacher");
    std::vector<std::vector<std::string>> indist = {{"q"}, {"a"}, {"b"}, {"c"}, {"d"}};
    std::vector<std::vector<std::string>> ood = {{"e"}, {"f"}, {"g"}};
    auto indist_points = ood_entropy_probe(smoothed, indist);
    auto ood_points = ood_entropy_probe(smoothed, ood);
    {
        auto out = open_out(dir / "entropy_probe.csv");
        out << "prefix,entropy,regime\n";
        auto emit = [&](const std::vector<EntropyProbePoint>& pts, const char* regime) {
            for (const auto& p : pts) {
                std::string joined;
                for (const auto& t : p.prefix) {
                    if (!joined.empty()) joined += ' ';
                    joined += t;
                }
                out << joined << ',' << format_double17(p.entropy) << ',' << regime << '\n';
            }
        };
        emit(indist_points, "in_distribution");
        emit(ood_points, "out_of_distribution");
    }

    auto flawed_student = fixtures::fixture("lab-flawed-student");
    auto flawed_teacher = fixtures::fixture("lab-flawed-teacher");
    std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto mixture = mixture_tradeoff_scan(flawed_teacher, flawed_student, grid, cfg);
    {
        auto out = open_out(dir / "mixture.csv");
        out << "mix_alpha,supervision_corruption,inference_divergence\n";
        for (const auto& p : mixture)
            out << format_double17(p.mix_alpha) << ',' << format_double17(p.supervision_corruption)
                << ',' << format_double17(p.inference_divergence) << '\n';
    }
    bool antagonism = true;
    for (size_t i = 1; i < mixture.size(); ++i) {
        if (mixture[i].supervision_corruption < mixture[i - 1].supervision_corruption)
            antagonism = false;
        if (mixture[i].inference_divergence > mixture[i - 1].inference_divergence)
            antagonism = false;
    }
    if (mixture.size() > 1 && (mixture.front().supervision_corruption ==
                                   mixture.back().supervision_corruption ||
                               mixture.front().inference_divergence ==
                                   mixture.back().inference_divergence))
        antagonism = false;

    auto delayed_student = fixtures::fixture("lab-delayed-student");
    auto delayed_teacher = fixtures::fixture("lab-delayed-teacher");
    std::vector<CoverageReport> coverage;
    for (double g : {0.1, 0.3, 0.5}) {
        LabConfig c = cfg;
        c.gamma0 = g;
        coverage.push_back(coverage_bound_check(delayed_student, delayed_teacher, c));
    }
    {
        auto out = open_out(dir / "coverage.csv");
        out << "gamma0,alpha,empirical_tv,bound,truncation_events\n";
        for (const auto& r : coverage)
            out << format_double17(r.gamma0) << ',' << format_double17(r.alpha) << ','
                << format_double17(r.empirical_tv) << ',' << format_double17(r.bound) << ','
                << r.truncation_events << '\n';
    }

    auto validity = validity_check(delayed_student, delayed_teacher, cfg);
    {
        auto out = open_out(dir / "validity.csv");
        out << "breach_count,median_correction_entropy,median_breach_entropy,max_entropy,empty\n";
        out << validity.breach_count << ',' << format_double17(validity.median_correction_entropy)
            << ',' << format_double17(validity.median_breach_entropy) << ','
            << format_double17(validity.max_entropy) << ',' << (validity.empty ? "true" : "false")
            << '\n';
    }

    std::string summary = "{\"max_length\":" + std::to_string(cfg.max_length) +
                          ",\"seed\":" + std::to_string(cfg.seed) + ",\"tv\":{\"estimator\":\"" +
                          estimator_name(curve.estimator) +
                          "\",\"samples\":" + std::to_string(curve.sample_count) +
                          ",\"final\":" + format_double17(curve.values.back()) + "}" +
                          ",\"mixture_antagonism\":" + (antagonism ? "true" : "false") +
                          ",\"coverage\":[";
    for (size_t i = 0; i < coverage.size(); ++i) {
        const auto& r = coverage[i];
        if (i) summary += ',';
        summary += "{\"gamma0\":" + format_double17(r.gamma0) +
                   ",\"empirical_tv\":" + format_double17(r.empirical_tv) +
                   ",\"bound\":" + format_double17(r.bound) + ",\"holds\":" +
                   (r.empirical_tv <= r.bound + 1e-12 ? "true" : "false") + "}";
    }
    summary += "],\"validity\":{\"empty\":";
    summary += validity.empty ? "true" : "false";
    summary += ",\"breach_count\":" + std::to_string(validity.breach_count) +
               ",\"median_correction_entropy\":" +
               format_double17(validity.median_correction_entropy) +
               ",\"median_breach_entropy\":" + format_double17(validity.median_breach_entropy) +
               ",\"ordered\":";
    summary += (!validity.empty &&
                validity.median_correction_entropy < validity.median_breach_entropy)
                   ? "true"
                   : "false";
    summary += "}}";

    {
        auto out = open_out(dir / "summary.json");
        out << summary << '\n';
    }
    return summary;
}

}  // namespace motab
