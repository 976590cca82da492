#include "motab/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace motab {

namespace {

std::string key_of(std::span<const int> ids) {
    std::string k;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) k += '\x1f';
        k += std::to_string(ids[i]);
    }
    return k;
}

}  // namespace

TabularPolicy::TabularPolicy(std::vector<std::string> vocabulary, int order,
                             double smoothing_lambda, std::string terminal_token,
                             std::string label)
    : vocab_(std::move(vocabulary)),
      order_(order),
      lambda_(smoothing_lambda),
      terminal_(std::move(terminal_token)),
      label_(std::move(label)) {
    if (vocab_.empty() || static_cast<int>(vocab_.size()) > kMaxVocab)
        throw std::invalid_argument("TabularPolicy: vocabulary size must be in [1, 64]");
    if (order_ < 1 || order_ > kMaxOrder)
        throw std::invalid_argument("TabularPolicy: order must be in [1, 3]");
    if (!(lambda_ >= 0.0 && lambda_ < 1.0))
        throw std::invalid_argument("TabularPolicy: smoothing_lambda must be in [0, 1)");
    for (size_t i = 0; i < vocab_.size(); ++i) {
        if (vocab_[i].empty()) throw std::invalid_argument("TabularPolicy: empty token");
        if (!ids_.emplace(vocab_[i], static_cast<int>(i)).second)
            throw std::invalid_argument("TabularPolicy: duplicate token " + vocab_[i]);
    }
    if (!terminal_.empty() && ids_.find(terminal_) == ids_.end())
        throw std::invalid_argument("TabularPolicy: terminal token not in vocabulary");
}

int TabularPolicy::token_id(std::string_view token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? -1 : it->second;
}

void TabularPolicy::set_rule(const std::vector<std::string>& context_suffix,
                             const std::map<std::string, double>& distribution) {
    if (context_suffix.empty() || static_cast<int>(context_suffix.size()) > order_)
        throw std::invalid_argument("set_rule: suffix length must be in [1, order]");
    std::vector<int> ids;
    for (const auto& t : context_suffix) {
        int id = token_id(t);
        if (id < 0) throw std::invalid_argument("set_rule: unknown context token " + t);
        ids.push_back(id);
    }
    std::vector<double> dist(vocab_.size(), 0.0);
    double sum = 0.0;
    for (const auto& [tok, p] : distribution) {
        int id = token_id(tok);
        if (id < 0) throw std::invalid_argument("set_rule: unknown token " + tok);
        if (p < 0.0) throw std::invalid_argument("set_rule: negative probability");
        dist[id] = p;
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("set_rule: probabilities sum to " + std::to_string(sum));
    rules_[key_of(ids)] = std::move(dist);
}

std::vector<double> TabularPolicy::base_distribution(std::span<const int> context_ids) const {
    int longest = std::min<int>(order_, static_cast<int>(context_ids.size()));
    for (int len = longest; len >= 1; --len) {
        auto it = rules_.find(key_of(context_ids.subspan(context_ids.size() - len, len)));
        if (it != rules_.end()) return it->second;
    }
    return std::vector<double>(vocab_.size(), 1.0 / static_cast<double>(vocab_.size()));
}

std::vector<double> TabularPolicy::next_distribution(std::span<const int> context_ids) const {
    std::vector<double> dist = base_distribution(context_ids);
    const double u = lambda_ / static_cast<double>(vocab_.size());
    for (double& p : dist) p = (1.0 - lambda_) * p + u;
    return dist;
}

std::vector<int> TabularPolicy::tokenize(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& w : split_whitespace(text)) {
        int id = token_id(w);
        if (id < 0) throw std::invalid_argument("TabularPolicy: unknown token " + w);
        ids.push_back(id);
    }
    return ids;
}

int TabularPolicy::sample(const std::vector<double>& dist, double temperature,
                          SplitMix64& rng) const {
    if (temperature <= 0.0) {
        return static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    }
    std::vector<double> w(dist.size());
    double z = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        w[i] = dist[i] > 0.0 ? std::pow(dist[i], 1.0 / temperature) : 0.0;
        z += w[i];
    }
    double u = rng.next_double() * z;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
}

GenerationResult TabularPolicy::generate_step(std::string_view context,
                                              const GenerationRequest& req) {
    if (context.empty()) throw std::invalid_argument("generate_step: empty context");
    if (req.max_tokens < 1) throw std::invalid_argument("generate_step: max_tokens < 1");

    std::vector<int> ctx = tokenize(context);
    const std::string stop_tok{trim(req.stop_sequence)};
    const int stop_id = stop_tok.empty() ? -1 : token_id(stop_tok);
    const int terminal_id = terminal_.empty() ? -1 : token_id(terminal_);

    SplitMix64 rng(req.seed);
    GenerationResult out;
    out.finish_reason = FinishReason::length;
    std::vector<int> emitted;
    while (static_cast<int>(emitted.size()) < req.max_tokens) {
        std::vector<double> dist = next_distribution(ctx);
        int id = sample(dist, req.temperature, rng);
        if (id == stop_id) {
            out.finish_reason = FinishReason::stop;
            break;
        }
        emitted.push_back(id);
        ctx.push_back(id);
        out.token_scores.push_back({vocab_[id], std::log(dist[id])});
        if (id == terminal_id) {
            out.finish_reason = FinishReason::terminal;
            break;
        }
    }
    for (size_t i = 0; i < emitted.size(); ++i) {
        if (i) out.text += ' ';
        out.text += vocab_[emitted[i]];
    }
    return out;
}

std::vector<TokenScore> TabularPolicy::score_tokens(std::string_view context,
                                                    std::string_view step_text) {
    if (context.empty()) throw std::invalid_argument("score_tokens: empty context");
    if (trim(step_text).empty()) throw std::invalid_argument("score_tokens: empty step text");
    std::vector<int> ctx = tokenize(context);
    std::vector<TokenScore> out;
    for (int id : tokenize(step_text)) {
        std::vector<double> dist = next_distribution(ctx);
        out.push_back({vocab_[id], std::log(dist[id])});
        ctx.push_back(id);
    }
    return out;
}

std::vector<TokenScore> TabularPolicy::top_k_next(std::string_view context, int k) {
    if (context.empty()) throw std::invalid_argument("top_k_next: empty context");
    if (k < 1) throw std::invalid_argument("top_k_next: k < 1");
    std::vector<int> ctx = tokenize(context);
    std::vector<double> dist = next_distribution(ctx);
    std::vector<int> idx(dist.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return dist[a] > dist[b]; });
    std::vector<TokenScore> out;
    for (int i : idx) {
        if (static_cast<int>(out.size()) >= k) break;
        if (dist[i] <= 0.0) break;  // zero-probability tail is not a candidate
        out.push_back({vocab_[i], std::log(dist[i])});
    }
    return out;
}

}  // namespace motab
