#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "motab/core.hpp"

namespace motab {

// Request could not reach the server (after retries were exhausted).
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Server answered but the payload or status makes the reply unusable.
// Client-side (4xx) failures land here and are never retried.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The backend cannot perform the requested operation at all
// (e.g. scoring arbitrary text without echo support).
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FinishReason { stop, length, terminal };

struct GenerationRequest {
    std::string stop_sequence;  // empty disables stop detection
    int max_tokens = 1;
    double temperature = 0.0;
    std::uint64_t seed = 0;
};

struct GenerationResult {
    std::string text;  // stop sequence excluded
    std::vector<TokenScore> token_scores;  // the generating policy's own logprobs
    FinishReason finish_reason = FinishReason::stop;
};

// Capability contract every policy (student or teacher role) implements.
// Token boundaries are whatever the backend reports; there is no shared
// tokenizer, and scoring re-tokenizes text under the scoring policy.
class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;

    // One reasoning step: generate until the stop sequence, the token budget,
    // or a backend-terminal token. Context must be non-empty.
    virtual GenerationResult generate_step(std::string_view context,
                                           const GenerationRequest& req) = 0;

    // Per-token logprobs of step_text continuing context, under this policy's
    // own segmentation. Both arguments must be non-empty.
    virtual std::vector<TokenScore> score_tokens(std::string_view context,
                                                 std::string_view step_text) = 0;

    // Up to k next-token candidates at context, sorted by logprob descending,
    // tokens distinct. May return fewer than k when the support is smaller.
    virtual std::vector<TokenScore> top_k_next(std::string_view context, int k) = 0;

    // Stable identity for manifests and logs.
    virtual std::string name() const = 0;
};

}  // namespace motab
