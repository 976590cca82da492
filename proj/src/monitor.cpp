#include "motab/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motab {

double step_value(const std::vector<TokenScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("step_value: empty token list");
    double sum = 0.0;
    for (const auto& ts : scores) {
        if (!std::isfinite(ts.logprob) || ts.logprob > 0.0)
            throw std::invalid_argument("step_value: logprob must be finite and <= 0");
        sum += ts.logprob;
    }
    return std::exp(sum / static_cast<double>(scores.size()));
}

double renormalized_entropy(const std::vector<TokenScore>& top_k) {
    if (top_k.empty()) throw std::invalid_argument("renormalized_entropy: empty candidate list");
    if (top_k.size() == 1) return 0.0;
    double m = top_k[0].logprob;
    for (const auto& ts : top_k) m = std::max(m, ts.logprob);
    double z = 0.0;
    for (const auto& ts : top_k) z += std::exp(ts.logprob - m);
    double logz = std::log(z);
    // H = -sum w_i ln w_i with w_i = exp(l_i - m) / z, computed in shifted form.
    double acc = 0.0;
    for (const auto& ts : top_k) {
        double w = std::exp(ts.logprob - m) / z;
        if (w > 0.0) acc += w * (ts.logprob - m - logz);
    }
    return std::max(0.0, -acc);
}

double adaptive_threshold(double gamma0, double alpha, double entropy) {
    if (!(gamma0 > 0.0 && gamma0 <= 1.0))
        throw std::invalid_argument("adaptive_threshold: gamma0 must be in (0, 1]");
    if (!(alpha > 0.0)) throw std::invalid_argument("adaptive_threshold: alpha must be > 0");
    if (entropy < 0.0) throw std::invalid_argument("adaptive_threshold: negative entropy");
    return gamma0 * std::exp(-alpha * entropy);
}

MonitorVerdict judge_step(const std::vector<TokenScore>& step_scores,
                          const std::vector<TokenScore>& top_k, const RunConfig& cfg) {
    MonitorVerdict v;
    v.value = step_value(step_scores);
    v.entropy = top_k.size() < 2 ? 0.0 : renormalized_entropy(top_k);
    v.threshold = adaptive_threshold(cfg.gamma0, cfg.alpha, v.entropy);
    v.safe = v.value >= v.threshold;
    return v;
}

}  // namespace motab
