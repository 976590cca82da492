#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "motab/tabular.hpp"

namespace motab {

// Raised when an exact enumeration would exceed the state-space guard.
struct EnumerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LabConfig {
    int max_length = 6;             // trajectory length L for enumerations
    double gamma0 = 0.3;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    long long mc_samples = 100000;  // Monte Carlo draws per curve point
    double enumeration_guard = 1e7; // max |V|^L admitted for exact passes
    std::vector<std::string> start_context = {"q"};
};

enum class DivergenceMeasure { tv, kl };
enum class LabEstimator { exact_enumeration, monte_carlo };

struct DivergenceCurve {
    std::vector<int> lengths;
    std::vector<double> values;
    std::vector<double> std_errors;  // empty for exact enumeration
    DivergenceMeasure measure = DivergenceMeasure::tv;
    LabEstimator estimator = LabEstimator::exact_enumeration;
    long long sample_count = 0;      // 0 for exact
};

// Shannon entropy (nats) of a full next-token distribution.
double distribution_entropy(const std::vector<double>& dist);

// Exact marginal over generated prefixes of exactly `length` tokens after
// `start`. Keys encode the generated token ids one byte per id (vocabularies
// are capped at 64, so ids fit). Throws EnumerationError when |V|^length
// exceeds the guard; use the Monte Carlo estimator instead at that size.
std::map<std::string, double> exact_prefix_distribution(
    const TabularPolicy& policy, int length, const std::vector<std::string>& start,
    double enumeration_guard = 1e7);

// Exact TV(p_T(s_L), p_S(s_L)) for L = 1..max_len over prefixes extending
// `start`. Non-decreasing in L because the prefixes are nested. Throws
// EnumerationError past the guard.
DivergenceCurve tv_growth_curve(const TabularPolicy& teacher, const TabularPolicy& student,
                                int max_len, const std::vector<std::string>& start,
                                double enumeration_guard = 1e7);

// Monte Carlo counterpart sampling trajectories from the student. TV uses
// E_{x~p_S}[max(0, 1 - p_T(x)/p_S(x))]; KL uses E_{x~p_S}[ln(p_S/p_T)] and
// reports +inf when the teacher assigns zero mass to a sampled prefix.
// Deterministic for a fixed seed; per-sample streams are keyed by index.
DivergenceCurve mc_divergence_curve(const TabularPolicy& teacher, const TabularPolicy& student,
                                    int max_len, DivergenceMeasure measure, long long samples,
                                    std::uint64_t seed, const std::vector<std::string>& start);

struct EntropyProbePoint {
    std::vector<std::string> prefix;  // context tokens fed to the teacher
    double entropy = 0.0;             // full-distribution entropy, nats
};

// Teacher next-token entropy at each given context.
std::vector<EntropyProbePoint> ood_entropy_probe(
    const TabularPolicy& teacher, const std::vector<std::vector<std::string>>& prefixes);

struct MixturePoint {
    double mix_alpha = 0.0;              // mixture weight (distinct from the
                                         // threshold scaling alpha)
    double supervision_corruption = 0.0; // mix_alpha * E_{s~p_S}[H(teacher | s)]
    double inference_divergence = 0.0;   // (1 - mix_alpha) * TV at max_length
};

// Weighted trade-off terms across a mixture grid. mix_alpha = 0 zeroes the
// corruption term and leaves the inference term equal to the TV curve at L;
// mix_alpha = 1 does the opposite. On a student with OOD mass the two terms
// move in opposite directions, so no single weight minimizes both.
std::vector<MixturePoint> mixture_tradeoff_scan(const TabularPolicy& teacher,
                                                const TabularPolicy& student,
                                                const std::vector<double>& mix_alphas,
                                                const LabConfig& cfg);

struct CoverageReport {
    double gamma0 = 0.0;
    double alpha = 0.0;
    double empirical_tv = 0.0;       // TV(p_S, truncated process) at L
    double bound = 0.0;              // sum of first-breach probability mass
    long long truncation_events = 0; // distinct first-breach prefixes
};

// Enumerates the monitored single-token-step process exactly: each student
// token is valued at the smoothed teacher probability and judged against
// gamma0 * exp(-alpha * H) with the teacher's full-distribution entropy.
// At a first breach the process rewinds to the selected safe point and the
// teacher completes the trajectory from there. The resulting distribution
// over length-L sequences stays within `bound` of the student's in TV.
CoverageReport coverage_bound_check(const TabularPolicy& student, const TabularPolicy& teacher,
                                    const LabConfig& cfg);

struct ValidityReport {
    bool empty = true;  // no breach occurred anywhere in the enumeration
    long long breach_count = 0;
    double median_correction_entropy = 0.0;  // teacher entropy at s_{l*-1}
    double median_breach_entropy = 0.0;      // teacher entropy at s_l
    double max_entropy = 0.0;                // ln |V| for reference
};

// Probability-weighted medians of the teacher's next-token entropy at
// correction contexts versus breached contexts over all first-breach events.
ValidityReport validity_check(const TabularPolicy& student, const TabularPolicy& teacher,
                              const LabConfig& cfg);

// Runs the standard battery on the shipped lab fixtures and writes
// tv_curve.csv, entropy_probe.csv, mixture.csv, coverage.csv, validity.csv
// and summary.json under out_dir. Returns the summary JSON text.
std::string run_lab(const LabConfig& cfg, const std::string& out_dir);

}  // namespace motab
