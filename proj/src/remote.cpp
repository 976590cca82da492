#include "motab/remote.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using json = nlohmann::json;

namespace motab {

namespace {

json build_request(const RemoteEndpoint& ep, std::string_view prompt, int max_tokens,
                   double temperature, const std::string& stop, int logprobs, bool echo,
                   std::uint64_t seed) {
    json stops = json::array();
    if (!stop.empty()) stops.push_back(stop);
    return json{{"model", ep.model},
            {"prompt", std::string(prompt)},
            {"max_tokens", max_tokens},
            {"temperature", temperature},
            {"stop", stops},
            {"logprobs", logprobs},
            {"echo", echo},
            {"seed", seed}};
}

const json& choice0(const json& reply) {
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
        throw ProtocolError("completions reply has no choices");
    return reply["choices"][0];
}

}  // namespace

RemotePolicy::RemotePolicy(RemoteEndpoint endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(options) {
    if (!endpoint_.auth_env.empty()) {
        const char* v = std::getenv(endpoint_.auth_env.c_str());
        if (v == nullptr || *v == '\0')
            throw std::invalid_argument("auth environment variable " + endpoint_.auth_env +
                                        " is not set");
        auth_token_ = v;
    }
}

std::string RemotePolicy::post_completions(const std::string& body) {
    int backoff_ms = endpoint_.initial_backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client cli(endpoint_.base_url);
        cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000LL);
        cli.set_read_timeout(endpoint_.timeout_ms / 1000, (endpoint_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);
        auto res = cli.Post(endpoint_.completions_path, headers, body, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 500) {
            last_error = "server status " + std::to_string(res->status);
            continue;
        }
        // 4xx and other statuses are not retried: the request itself is wrong.
        throw ProtocolError("completions request rejected with status " +
                            std::to_string(res->status) + ": " + res->body);
    }
    throw TransportError("completions request failed after " +
                         std::to_string(endpoint_.max_retries + 1) + " attempts; last: " +
                         last_error);
}

GenerationResult RemotePolicy::generate_step(std::string_view context,
                                             const GenerationRequest& req) {
    if (context.empty()) throw std::invalid_argument("generate_step: empty context");
    if (req.max_tokens < 1) throw std::invalid_argument("generate_step: max_tokens < 1");

    json body = build_request(endpoint_, context, req.max_tokens, req.temperature,
                              req.stop_sequence, 1, false, req.seed);
    json reply;
    try {
        reply = json::parse(post_completions(body.dump()));
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unparseable completions reply: ") + e.what());
    }
    const json& ch = choice0(reply);
    if (!ch.contains("text") || !ch["text"].is_string())
        throw ProtocolError("completions reply missing text");

    GenerationResult out;
    out.text = ch["text"].get<std::string>();
    std::string finish = ch.value("finish_reason", "stop");

    // Some servers hand the stop sequence back verbatim; cut it off here.
    bool cut = false;
    if (!req.stop_sequence.empty()) {
        size_t hit = out.text.find(req.stop_sequence);
        if (hit != std::string::npos) {
            out.text.resize(hit);
            cut = true;
        }
    }
    if (cut || finish == "stop")
        out.finish_reason = FinishReason::stop;
    else if (finish == "length")
        out.finish_reason = FinishReason::length;
    else
        out.finish_reason = FinishReason::terminal;

    if (!ch.contains("logprobs") || ch["logprobs"].is_null())
        throw ProtocolError("completions reply missing logprobs");
    const json& lp = ch["logprobs"];
    if (!lp.contains("tokens") || !lp.contains("token_logprobs"))
        throw ProtocolError("completions logprobs missing tokens/token_logprobs");
    const json& toks = lp["tokens"];
    const json& lps = lp["token_logprobs"];
    size_t covered = 0;
    for (size_t i = 0; i < toks.size() && i < lps.size(); ++i) {
        if (covered >= out.text.size()) break;  // tokens past the stop cut
        if (lps[i].is_null())
            throw ProtocolError("null logprob for a generated token");
        std::string tok = toks[i].get<std::string>();
        // Natural-log convention and the non-positive invariant are enforced
        // at this boundary; tiny positive server round-off gets clamped.
        out.token_scores.push_back({tok, std::min(0.0, lps[i].get<double>())});
        covered += tok.size();
    }
    return out;
}

std::vector<TokenScore> RemotePolicy::score_tokens(std::string_view context,
                                                   std::string_view step_text) {
    if (context.empty()) throw std::invalid_argument("score_tokens: empty context");
    if (step_text.empty()) throw std::invalid_argument("score_tokens: empty step text");

    if (!options_.use_echo_scoring) {
        // Incremental fallback: one request per token position. The next
        // position's top candidates are matched against the remaining text;
        // the longest matching candidate is consumed.
        std::string consumed(context);
        std::string remaining(step_text);
        std::vector<TokenScore> out;
        while (!remaining.empty()) {
            json body = build_request(endpoint_, consumed, 1, options_.temperature, "", 20,
                                      false, 0);
            json reply;
            try {
                reply = json::parse(post_completions(body.dump()));
            } catch (const json::exception& e) {
                throw ProtocolError(std::string("unparseable completions reply: ") + e.what());
            }
            const json& ch = choice0(reply);
            if (!ch.contains("logprobs") || !ch["logprobs"].contains("top_logprobs") ||
                ch["logprobs"]["top_logprobs"].empty())
                throw ProtocolError("incremental scoring reply missing top_logprobs");
            const json& cand = ch["logprobs"]["top_logprobs"][0];
            std::string best;
            double best_lp = 0.0;
            for (auto it = cand.begin(); it != cand.end(); ++it) {
                const std::string& tok = it.key();
                if (tok.empty() || tok.size() > remaining.size()) continue;
                if (remaining.compare(0, tok.size(), tok) != 0) continue;
                if (tok.size() > best.size() ||
                    (tok.size() == best.size() && it.value().get<double>() > best_lp)) {
                    best = tok;
                    best_lp = it.value().get<double>();
                }
            }
            if (best.empty())
                throw CapabilityError(
                    "incremental scoring: no top-k candidate matches the step text");
            out.push_back({best, std::min(0.0, best_lp)});
            consumed += best;
            remaining.erase(0, best.size());
        }
        return out;
    }

    std::string full(context);
    full += step_text;
    json body = build_request(endpoint_, full, 0, options_.temperature, "", 1, true, 0);
    json reply;
    try {
        reply = json::parse(post_completions(body.dump()));
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unparseable completions reply: ") + e.what());
    }
    const json& ch = choice0(reply);
    if (!ch.contains("logprobs") || ch["logprobs"].is_null())
        throw CapabilityError("server did not echo logprobs; scoring unavailable");
    const json& lp = ch["logprobs"];
    if (!lp.contains("tokens") || !lp.contains("token_logprobs"))
        throw ProtocolError("echo reply missing tokens/token_logprobs");
    const json& toks = lp["tokens"];
    const json& lps = lp["token_logprobs"];
    if (toks.size() != lps.size()) throw ProtocolError("echo reply token/logprob length mismatch");

    // Take the minimal trailing run of tokens covering step_text. A token
    // spanning the context/step junction is included whole: the scorer's own
    // segmentation wins at the boundary.
    size_t covered = 0;
    size_t start = toks.size();
    while (start > 0 && covered < step_text.size()) {
        --start;
        covered += toks[start].get<std::string>().size();
    }
    if (covered < step_text.size())
        throw ProtocolError("echo reply does not cover the step text");
    std::vector<TokenScore> out;
    for (size_t i = start; i < toks.size(); ++i) {
        if (lps[i].is_null()) throw ProtocolError("null logprob inside the scored span");
        out.push_back({toks[i].get<std::string>(), std::min(0.0, lps[i].get<double>())});
    }
    return out;
}

std::vector<TokenScore> RemotePolicy::top_k_next(std::string_view context, int k) {
    if (context.empty()) throw std::invalid_argument("top_k_next: empty context");
    if (k < 1) throw std::invalid_argument("top_k_next: k < 1");

    json body = build_request(endpoint_, context, 1, 1.0, "", k, false, 0);
    json reply;
    try {
        reply = json::parse(post_completions(body.dump()));
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unparseable completions reply: ") + e.what());
    }
    const json& ch = choice0(reply);
    if (!ch.contains("logprobs") || !ch["logprobs"].contains("top_logprobs") ||
        ch["logprobs"]["top_logprobs"].empty())
        throw ProtocolError("top-k reply missing top_logprobs");
    const json& cand = ch["logprobs"]["top_logprobs"][0];
    std::vector<TokenScore> out;
    for (auto it = cand.begin(); it != cand.end(); ++it)
        out.push_back({it.key(), std::min(0.0, it.value().get<double>())});
    std::stable_sort(out.begin(), out.end(),
                     [](const TokenScore& a, const TokenScore& b) { return a.logprob > b.logprob; });
    if (static_cast<int>(out.size()) > k) out.resize(k);
    return out;
}

}  // namespace motab
