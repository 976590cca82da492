#pragma once

#include <vector>

#include "motab/core.hpp"

namespace motab {

struct MonitorVerdict {
    double value = 0.0;
    double entropy = 0.0;
    double threshold = 0.0;
    bool safe = false;  // value >= threshold; ties count as safe
};

// Length-normalized likelihood: exp of the mean token logprob, in (0, 1] for
// finite non-positive inputs. Throws std::invalid_argument on an empty list
// or a positive/non-finite logprob.
double step_value(const std::vector<TokenScore>& scores);

// Entropy (nats) of the distribution obtained by renormalizing the given
// top-k logprobs. Invariant under adding a constant to every logprob.
// A single candidate gives 0; fewer than one is the caller's degenerate case.
double renormalized_entropy(const std::vector<TokenScore>& top_k);

// gamma0 * exp(-alpha * entropy): high-entropy (exploratory) states get a
// laxer boundary, low-entropy (constrained) states a stricter one.
double adaptive_threshold(double gamma0, double alpha, double entropy);

// Judges one candidate step. Fewer than 2 top-k candidates is treated as a
// degenerate distribution with entropy 0 (the strictest boundary).
MonitorVerdict judge_step(const std::vector<TokenScore>& step_scores,
                          const std::vector<TokenScore>& top_k, const RunConfig& cfg);

}  // namespace motab
