#include "motab/core.hpp"

#include <cmath>
#include <sstream>

#include "motab/util.hpp"

namespace motab {

const char* to_string(Terminal t) {
    switch (t) {
        case Terminal::completed: return "completed";
        case Terminal::revised: return "revised";
        case Terminal::truncated_length: return "truncated_length";
        case Terminal::failed: return "failed";
    }
    return "completed";
}

std::optional<Terminal> terminal_from_string(const std::string& s) {
    if (s == "completed") return Terminal::completed;
    if (s == "revised") return Terminal::revised;
    if (s == "truncated_length") return Terminal::truncated_length;
    if (s == "failed") return Terminal::failed;
    return std::nullopt;
}

std::vector<std::string> RunConfig::validate() const {
    std::vector<std::string> errs;
    if (!(gamma0 > 0.0 && gamma0 <= 1.0)) errs.push_back("gamma0 must be in (0, 1]");
    if (!(alpha > 0.0)) errs.push_back("alpha must be > 0");
    if (student_temperature < 0.0) errs.push_back("student_temperature must be >= 0");
    if (teacher_temperature < 0.0) errs.push_back("teacher_temperature must be >= 0");
    if (max_step_tokens < 1) errs.push_back("max_step_tokens must be >= 1");
    if (max_trajectory_tokens < max_step_tokens)
        errs.push_back("max_trajectory_tokens must be >= max_step_tokens");
    if (samples_per_question < 1) errs.push_back("samples_per_question must be >= 1");
    if (entropy_top_k < 2) errs.push_back("entropy_top_k must be >= 2");
    if (concurrency_limit < 1) errs.push_back("concurrency_limit must be >= 1");
    if (rev_token.empty()) errs.push_back("rev_token must be non-empty");
    return errs;
}

std::string config_fingerprint(const RunConfig& cfg) {
    std::ostringstream os;
    // concurrency_limit is deliberately left out: scheduling cannot change
    // record content, so runs differing only in worker count stay mixable.
    os << cfg.gamma0 << '|' << cfg.alpha << '|' << cfg.student_temperature << '|'
       << cfg.teacher_temperature << '|' << cfg.stop_sequence << '|' << cfg.max_step_tokens
       << '|' << cfg.max_trajectory_tokens << '|' << cfg.samples_per_question << '|'
       << cfg.entropy_top_k << '|' << cfg.seed << '|' << cfg.rev_token;
    for (const auto& m : cfg.answer_markers) os << '|' << m;
    return to_hex16(fnv1a64(os.str()));
}

bool contains_answer_marker(const std::string& text, const RunConfig& cfg) {
    for (const auto& m : cfg.answer_markers) {
        if (!m.empty() && text.find(m) != std::string::npos) return true;
    }
    return false;
}

namespace {

void check_step(const StepRecord& s, std::vector<std::string>& errs) {
    const std::string tag = "step " + std::to_string(s.index) + ": ";
    if (s.text.empty()) errs.push_back(tag + "empty text");
    if (!(s.value >= 0.0 && s.value <= 1.0)) errs.push_back(tag + "value outside [0, 1]");
    if (!(s.threshold > 0.0)) errs.push_back(tag + "threshold not positive");
    if (s.entropy < 0.0) errs.push_back(tag + "negative entropy");
    if (s.safe != (s.value >= s.threshold)) errs.push_back(tag + "safe flag inconsistent");
    if (!s.token_scores.empty()) {
        double sum = 0.0;
        bool bad = false;
        for (const auto& ts : s.token_scores) {
            if (!(ts.logprob <= 0.0) || !std::isfinite(ts.logprob)) bad = true;
            sum += ts.logprob;
        }
        if (bad) {
            errs.push_back(tag + "token logprob positive or non-finite");
        } else {
            double expect = std::exp(sum / static_cast<double>(s.token_scores.size()));
            if (std::fabs(expect - s.value) > 1e-9)
                errs.push_back(tag + "value does not match token scores");
        }
    }
}

}  // namespace

std::vector<std::string> validate_trajectory(const SynthTrajectory& t) {
    std::vector<std::string> errs;
    if (t.question_id.empty()) errs.push_back("empty question_id");
    for (size_t i = 0; i < t.student_steps.size(); ++i) {
        if (t.student_steps[i].index != static_cast<int>(i) + 1) {
            errs.push_back("step indices not contiguous from 1");
            break;
        }
    }
    for (const auto& s : t.student_steps) check_step(s, errs);

    if (t.revised) {
        if (!t.rev_token || t.rev_token->empty()) errs.push_back("revised without rev_token");
        if (!t.teacher_suffix || t.teacher_suffix->empty())
            errs.push_back("revised without teacher_suffix");
        if (!t.unsafe_step) {
            errs.push_back("revised without unsafe_step");
        } else {
            if (*t.unsafe_step < 1 || *t.unsafe_step > static_cast<int>(t.student_steps.size()))
                errs.push_back("unsafe_step out of range");
            else if (t.student_steps[*t.unsafe_step - 1].safe)
                errs.push_back("unsafe_step points at a safe step");
        }
        if (!t.backtrack_point) {
            errs.push_back("revised without backtrack_point");
        } else if (t.unsafe_step && (*t.backtrack_point < 1 || *t.backtrack_point > *t.unsafe_step)) {
            errs.push_back("backtrack_point outside [1, unsafe_step]");
        }
        if (t.td_errors && t.unsafe_step &&
            t.td_errors->size() != static_cast<size_t>(*t.unsafe_step))
            errs.push_back("td_errors length does not match unsafe_step");
    } else {
        for (const auto& s : t.student_steps) {
            if (!s.safe) {
                errs.push_back("unrevised trajectory contains an unsafe step");
                break;
            }
        }
    }
    return errs;
}

}  // namespace motab
