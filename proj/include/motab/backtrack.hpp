#pragma once

#include <vector>

namespace motab {

struct BacktrackResult {
    int safe_point = 1;               // 1-based index the correction restarts from
    std::vector<double> td_errors;    // aligned with steps 1..breach
    int depth = 0;                    // breach index - safe_point
};

// Temporal-difference drops of the step-value sequence. The question-only
// context is assigned value 1.0, so td[0] = values[0] - 1.0 and
// td[k] = values[k] - values[k-1] for k >= 1. Output length == input length.
std::vector<double> td_errors(const std::vector<double>& values);

// Picks the restart index for a breach at 1-based step `breach_index`:
// the candidate k in [1, breach] minimizing td_errors[k-1], restricted to
// candidates whose preceding step was safe (k == 1 is always legal).
// Ties go to the smallest k. Preconditions: values/thresholds aligned,
// breach_index in range, values[breach-1] < thresholds[breach-1].
int select_safe_point(const std::vector<double>& values, const std::vector<double>& thresholds,
                      int breach_index);

BacktrackResult analyze_breach(const std::vector<double>& values,
                               const std::vector<double>& thresholds, int breach_index);

}  // namespace motab
