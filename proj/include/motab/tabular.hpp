#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "motab/policy.hpp"
#include "motab/util.hpp"

namespace motab {

// Bounded-order Markov chain over a small word vocabulary, used as a fully
// inspectable stand-in for a real model. Tokens are whitespace-separated
// words; a context is keyed by its longest defined suffix of at most `order`
// tokens (suffix backoff), and contexts with no defined suffix fall back to
// the uniform distribution. Conditional distributions are smoothed:
//   p~(t | ctx) = (1 - lambda) * p(t | ctx) + lambda / |V|
// so every token keeps probability >= lambda / |V| wherever a rule exists.
class TabularPolicy : public PolicyBackend {
public:
    static constexpr int kMaxOrder = 3;
    static constexpr int kMaxVocab = 64;

    TabularPolicy(std::vector<std::string> vocabulary, int order, double smoothing_lambda,
                  std::string terminal_token, std::string label = "tabular");

    // Distribution over the full vocabulary after a context ending in the
    // given tokens. Probabilities must sum to 1 within 1e-9.
    void set_rule(const std::vector<std::string>& context_suffix,
                  const std::map<std::string, double>& distribution);

    // Exact access for enumeration-based analyses.
    const std::vector<std::string>& vocabulary() const { return vocab_; }
    int order() const { return order_; }
    double smoothing_lambda() const { return lambda_; }
    int token_id(std::string_view token) const;  // -1 when unknown
    const std::string& terminal_token() const { return terminal_; }
    // Smoothed next-token distribution given the trailing context token ids.
    std::vector<double> next_distribution(std::span<const int> context_ids) const;

    std::vector<int> tokenize(std::string_view text) const;  // throws on unknown words

    // PolicyBackend surface. Reported logprobs are those of the smoothed,
    // untempered distribution, so a temperature-0 generation re-scores
    // identically through score_tokens.
    GenerationResult generate_step(std::string_view context,
                                   const GenerationRequest& req) override;
    std::vector<TokenScore> score_tokens(std::string_view context,
                                         std::string_view step_text) override;
    std::vector<TokenScore> top_k_next(std::string_view context, int k) override;
    std::string name() const override { return "tabular:" + label_; }

private:
    std::vector<double> base_distribution(std::span<const int> context_ids) const;
    int sample(const std::vector<double>& dist, double temperature, SplitMix64& rng) const;

    std::vector<std::string> vocab_;
    std::map<std::string, int, std::less<>> ids_;
    int order_;
    double lambda_;
    std::string terminal_;
    std::string label_;
    // Rule key: suffix token ids joined with '\x1f'.
    std::map<std::string, std::vector<double>> rules_;
};

}  // namespace motab
