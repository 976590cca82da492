#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "motab/policy.hpp"

namespace motab {

// Completions-style endpoint. Auth token is resolved from the named
// environment variable at construction; the value never appears in flags,
// configs, manifests or logs.
struct RemoteEndpoint {
    std::string base_url;            // e.g. http://127.0.0.1:8000
    std::string model;
    std::string auth_env;            // name of the env var holding the bearer token
    std::string completions_path = "/v1/completions";
    int max_retries = 3;             // transport failures and 5xx only
    int initial_backoff_ms = 250;    // doubles per attempt
    int timeout_ms = 120000;
};

// HTTP policy speaking the completions wire protocol. Requests carry exactly
// the fields {model, prompt, max_tokens, temperature, stop, logprobs, echo,
// seed}; replies are read from choices[0].{text, finish_reason, logprobs}.
//
// - generate_step: stop handling is accepted either way: servers that strip
//   the stop sequence report finish_reason "stop"; servers that return it
//   verbatim get it cut client-side. finish_reason mapping: "stop" or a
//   client-side cut -> stop, then "length" -> length, anything else ->
//   terminal. A cut wins over "length" because the step did reach a
//   boundary; the server merely failed to recognize the stop sequence.
// - score_tokens: echo mode (echo=true, max_tokens=0, logprobs=1) and slices
//   the trailing tokens covering step_text. When echo is disabled in options,
//   falls back to one request per token: top_logprobs of the next position
//   are matched greedily (longest candidate that prefixes the remaining
//   text); a position with no matching candidate raises CapabilityError.
// - top_k_next: max_tokens=1, logprobs=k, echo=false, temperature 1.0, and
//   reads top_logprobs[0].
class RemotePolicy : public PolicyBackend {
public:
    struct Options {
        bool use_echo_scoring = true;
        double temperature = 0.0;  // scoring/top-k requests; generation uses the request's
    };

    explicit RemotePolicy(RemoteEndpoint endpoint)
        : RemotePolicy(std::move(endpoint), Options()) {}
    RemotePolicy(RemoteEndpoint endpoint, Options options);

    GenerationResult generate_step(std::string_view context,
                                   const GenerationRequest& req) override;
    std::vector<TokenScore> score_tokens(std::string_view context,
                                         std::string_view step_text) override;
    std::vector<TokenScore> top_k_next(std::string_view context, int k) override;
    std::string name() const override { return "remote:" + endpoint_.model + "@" + endpoint_.base_url; }

private:
    std::string post_completions(const std::string& body);

    RemoteEndpoint endpoint_;
    Options options_;
    std::string auth_token_;
};

}  // namespace motab
