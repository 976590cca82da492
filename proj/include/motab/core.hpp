#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace motab {

struct Question {
    std::string id;
    std::string text;
    std::map<std::string, std::string> metadata;
};

// One scored token as reported by a policy backend. Logprobs are natural-log
// and non-positive; unit conversion happens at the backend boundary.
struct TokenScore {
    std::string token;
    double logprob = 0.0;
};

enum class StepSource { student, teacher };

struct StepRecord {
    int index = 0;  // 1-based position within the trajectory
    std::string text;
    std::vector<TokenScore> token_scores;  // teacher scores for student steps
    double value = 0.0;                    // length-normalized teacher likelihood
    double entropy = 0.0;                  // teacher next-token entropy at the step start
    double threshold = 0.0;                // adaptive boundary the value was judged against
    bool safe = false;
    StepSource source = StepSource::student;
};

struct CallCounters {
    std::int64_t student_gen_tokens = 0;
    std::int64_t teacher_score_calls = 0;
    std::int64_t teacher_gen_tokens = 0;
    std::int64_t teacher_topk_calls = 0;

    CallCounters& operator+=(const CallCounters& o) {
        student_gen_tokens += o.student_gen_tokens;
        teacher_score_calls += o.teacher_score_calls;
        teacher_gen_tokens += o.teacher_gen_tokens;
        teacher_topk_calls += o.teacher_topk_calls;
        return *this;
    }
};

enum class Terminal { completed, revised, truncated_length, failed };

const char* to_string(Terminal t);
std::optional<Terminal> terminal_from_string(const std::string& s);

struct SynthTrajectory {
    std::string question_id;
    std::vector<StepRecord> student_steps;
    bool revised = false;
    std::optional<std::string> rev_token;
    std::optional<std::string> teacher_suffix;
    std::optional<int> unsafe_step;
    std::optional<int> backtrack_point;
    std::optional<std::vector<double>> td_errors;
    Terminal terminal = Terminal::completed;
    CallCounters counters;
    // Set when the teacher correction ran into the trajectory token cap; the
    // record is still emitted (terminal = truncated_length) rather than dropped.
    bool truncated_correction = false;
    std::string failure_reason;
};

struct RunConfig {
    double gamma0 = 0.3;              // boundary scale, (0, 1]
    double alpha = 1.0;               // entropy sensitivity, > 0
    double student_temperature = 0.6;
    double teacher_temperature = 0.6;
    std::string stop_sequence = ".\n\n";
    int max_step_tokens = 8192;
    int max_trajectory_tokens = 32768;
    int samples_per_question = 5;
    int entropy_top_k = 20;
    int concurrency_limit = 4;
    std::uint64_t seed = 0;
    std::string rev_token = "However,";
    std::vector<std::string> answer_markers = {"\\boxed{"};

    // Returns human-readable violations; empty means the config is usable.
    std::vector<std::string> validate() const;
};

// Stable 16-hex-digit digest of every content-shaping field above, recorded
// per dataset row so mixed-config sinks are detectable. concurrency_limit is
// excluded: it affects scheduling only, never record content.
std::string config_fingerprint(const RunConfig& cfg);

// True when the step text carries one of the configured answer markers,
// which ends a trajectory even if the backend kept a generic finish reason.
bool contains_answer_marker(const std::string& text, const RunConfig& cfg);

// Pure structural check; no policy access. Empty result means valid.
std::vector<std::string> validate_trajectory(const SynthTrajectory& t);

}  // namespace motab
