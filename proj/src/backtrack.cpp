#include "motab/backtrack.hpp"

#include <stdexcept>

namespace motab {

std::vector<double> td_errors(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("td_errors: empty value list");
    std::vector<double> out(values.size());
    out[0] = values[0] - 1.0;
    for (size_t k = 1; k < values.size(); ++k) out[k] = values[k] - values[k - 1];
    return out;
}

int select_safe_point(const std::vector<double>& values, const std::vector<double>& thresholds,
                      int breach_index) {
    if (values.size() != thresholds.size())
        throw std::invalid_argument("select_safe_point: values/thresholds length mismatch");
    if (breach_index < 1 || breach_index > static_cast<int>(values.size()))
        throw std::invalid_argument("select_safe_point: breach_index out of range");
    if (!(values[breach_index - 1] < thresholds[breach_index - 1]))
        throw std::invalid_argument("select_safe_point: step at breach_index is not a breach");

    const std::vector<double> td = td_errors(values);
    int best = 1;
    double best_td = td[0];
    for (int k = 2; k <= breach_index; ++k) {
        // Legal only if the step before the candidate was itself above its boundary.
        if (values[k - 2] < thresholds[k - 2]) continue;
        if (td[k - 1] < best_td) {
            best_td = td[k - 1];
            best = k;
        }
    }
    return best;
}

BacktrackResult analyze_breach(const std::vector<double>& values,
                               const std::vector<double>& thresholds, int breach_index) {
    BacktrackResult r;
    r.safe_point = select_safe_point(values, thresholds, breach_index);
    r.td_errors = td_errors(values);
    r.td_errors.resize(breach_index);
    r.depth = breach_index - r.safe_point;
    return r;
}

}  // namespace motab
