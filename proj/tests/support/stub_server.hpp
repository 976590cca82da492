#pragma once

// Scripted completions endpoint for exercising the HTTP policy without a
// real model server: replies come from a queue, every request body is
// captured for inspection, and failures (5xx runs, permanent 4xx) can be
// injected ahead of the next request.

#include <httplib.h>
#include <json.hpp>

#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace testsupport {

class StubServer {
public:
    StubServer() {
        server_.Post("/v1/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mu_);
            requests_.push_back(nlohmann::json::parse(req.body));
            auth_headers_.push_back(req.get_header_value("Authorization"));
            if (fail_next_with_500_ > 0) {
                --fail_next_with_500_;
                res.status = 500;
                res.set_content("{\"error\":\"injected server failure\"}", "application/json");
                return;
            }
            if (fail_all_with_400_) {
                res.status = 400;
                res.set_content("{\"error\":\"injected client failure\"}", "application/json");
                return;
            }
            if (responses_.empty()) {
                res.status = 500;
                res.set_content("{\"error\":\"stub has no scripted response\"}",
                                "application/json");
                return;
            }
            std::string body = responses_.front();
            if (responses_.size() > 1) responses_.erase(responses_.begin());
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("stub server could not bind a port");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    // The last scripted response repeats once the queue is down to one entry.
    void script(std::string body) {
        std::lock_guard<std::mutex> lock(mu_);
        responses_.push_back(std::move(body));
    }

    void fail_next_with_500(int n) {
        std::lock_guard<std::mutex> lock(mu_);
        fail_next_with_500_ = n;
    }

    void fail_all_with_400(bool v) {
        std::lock_guard<std::mutex> lock(mu_);
        fail_all_with_400_ = v;
    }

    std::vector<nlohmann::json> requests() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_;
    }

    std::vector<std::string> auth_headers() const {
        std::lock_guard<std::mutex> lock(mu_);
        return auth_headers_;
    }

    size_t request_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_.size();
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.clear();
        auth_headers_.clear();
        responses_.clear();
        fail_next_with_500_ = 0;
        fail_all_with_400_ = false;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mu_;
    std::vector<std::string> responses_;
    std::vector<nlohmann::json> requests_;
    std::vector<std::string> auth_headers_;
    int fail_next_with_500_ = 0;
    bool fail_all_with_400_ = false;
};

// Minimal well-formed completions reply.
inline std::string completion_reply(const std::string& text, const std::string& finish,
                                    const std::vector<std::pair<std::string, double>>& scored) {
    nlohmann::json tokens = nlohmann::json::array();
    nlohmann::json lps = nlohmann::json::array();
    for (const auto& [tok, lp] : scored) {
        tokens.push_back(tok);
        lps.push_back(lp);
    }
    nlohmann::json reply = {
        {"id", "cmpl-stub"},
        {"object", "text_completion"},
        {"choices",
         {{{"index", 0},
           {"text", text},
           {"finish_reason", finish},
           {"logprobs",
            {{"tokens", tokens}, {"token_logprobs", lps}, {"top_logprobs", nlohmann::json::array()}}}}}}};
    return reply.dump();
}

// Reply whose first position carries top-k candidates.
inline std::string topk_reply(const std::vector<std::pair<std::string, double>>& candidates) {
    nlohmann::json top;
    for (const auto& [tok, lp] : candidates) top[tok] = lp;
    nlohmann::json reply = {
        {"choices",
         {{{"index", 0},
           {"text", ""},
           {"finish_reason", "length"},
           {"logprobs",
            {{"tokens", nlohmann::json::array()},
             {"token_logprobs", nlohmann::json::array()},
             {"top_logprobs", nlohmann::json::array({top})}}}}}}};
    return reply.dump();
}

}  // namespace testsupport
