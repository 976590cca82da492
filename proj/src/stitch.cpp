#include "motab/stitch.hpp"

#include <stdexcept>

namespace motab {

std::string correction_context(const std::string& question_text,
                               const std::vector<StepRecord>& steps, int safe_point,
                               const std::string& separator) {
    if (safe_point < 1 || safe_point > static_cast<int>(steps.size()) + 1)
        throw std::invalid_argument("correction_context: safe_point out of range");
    std::string ctx = question_text;
    for (int k = 1; k < safe_point; ++k) {
        ctx += steps[k - 1].text;
        ctx += separator;
    }
    return ctx;
}

std::string render_completion(const SynthTrajectory& t, const StitchSpec& spec) {
    std::string out;
    if (t.revised) {
        for (const auto& s : t.student_steps) {
            out += s.text;
            out += spec.separator;
        }
        out += t.rev_token.value_or(spec.rev_token);
        out += ' ';
        out += t.teacher_suffix.value_or("");
    } else {
        for (size_t i = 0; i < t.student_steps.size(); ++i) {
            if (i) out += spec.separator;
            out += t.student_steps[i].text;
        }
    }
    return out;
}

SynthTrajectory stitch_trajectory(const Question& q, std::vector<StepRecord> steps,
                                  std::string teacher_suffix, const BacktrackResult& bt,
                                  const StitchSpec& spec) {
    if (steps.empty()) throw std::invalid_argument("stitch_trajectory: no steps");
    const int breach = steps.back().index;
    if (bt.safe_point < 1 || bt.safe_point > breach)
        throw std::invalid_argument("stitch_trajectory: safe_point outside [1, breach]");

    SynthTrajectory t;
    t.question_id = q.id;
    if (teacher_suffix.empty()) {
        // Nothing usable came back from the teacher; drop the flawed step so
        // the record stays structurally consistent and mark it failed.
        steps.pop_back();
        t.student_steps = std::move(steps);
        t.terminal = Terminal::failed;
        t.failure_reason = "empty teacher correction";
        return t;
    }
    t.student_steps = std::move(steps);
    t.revised = true;
    t.rev_token = spec.rev_token;
    t.teacher_suffix = std::move(teacher_suffix);
    t.unsafe_step = breach;
    t.backtrack_point = bt.safe_point;
    t.td_errors = bt.td_errors;
    t.terminal = Terminal::revised;
    return t;
}

}  // namespace motab
