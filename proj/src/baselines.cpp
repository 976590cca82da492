#include "motab/baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "motab/monitor.hpp"
#include "motab/util.hpp"

namespace motab {

double geometric_mean_prob(const std::vector<TokenScore>& scores) { return step_value(scores); }

bool skd_accept(double teacher_gm, double student_gm, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("skd_accept: beta must be > 0");
    return teacher_gm > beta * student_gm;
}

StepSource imitkd_choose(double rng_draw, double mix_p) {
    return rng_draw < mix_p ? StepSource::teacher : StepSource::student;
}

namespace {

// Without a monitor there is no boundary; record the step's own likelihood as
// both value and threshold so structural validation still holds.
StepRecord own_step(int index, const GenerationResult& gen, StepSource source) {
    StepRecord s;
    s.index = index;
    s.text = gen.text;
    s.token_scores = gen.token_scores;
    s.value = step_value(gen.token_scores);
    s.entropy = 0.0;
    s.threshold = s.value;
    s.safe = true;
    s.source = source;
    return s;
}

}  // namespace

SynthTrajectory skd_synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                          const Question& q, const RunConfig& cfg,
                                          const BaselineConfig& bl, int sample_index) {
    SynthTrajectory out;
    out.question_id = q.id;
    std::string context = q.text;
    std::int64_t tokens = 0;

    for (int l = 1;; ++l) {
        if (tokens >= cfg.max_trajectory_tokens) {
            out.terminal = Terminal::truncated_length;
            break;
        }
        GenerationRequest req;
        req.stop_sequence = cfg.stop_sequence;
        req.max_tokens = static_cast<int>(
            std::min<std::int64_t>(cfg.max_step_tokens, cfg.max_trajectory_tokens - tokens));
        req.temperature = cfg.student_temperature;
        req.seed = derive_seed(cfg.seed, q.id, sample_index, l);

        GenerationResult gen;
        try {
            gen = student.generate_step(context, req);
        } catch (const std::exception& e) {
            out.terminal = Terminal::failed;
            out.failure_reason = e.what();
            break;
        }
        out.counters.student_gen_tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.text.empty()) {
            out.terminal =
                gen.finish_reason == FinishReason::length ? Terminal::truncated_length
                                                          : Terminal::completed;
            break;
        }

        StepRecord step;
        bool failed = false;
        try {
            double student_gm = geometric_mean_prob(gen.token_scores);
            auto teacher_view = teacher.score_tokens(context, gen.text);
            ++out.counters.teacher_score_calls;
            double teacher_gm = geometric_mean_prob(teacher_view);
            if (skd_accept(teacher_gm, student_gm, bl.beta)) {
                step.index = l;
                step.text = gen.text;
                step.token_scores = std::move(teacher_view);
                step.value = teacher_gm;
                step.threshold = bl.beta * student_gm;
                step.safe = true;
                step.source = StepSource::student;
            } else {
                // Rejected: the teacher regenerates this step from the same
                // context and the replacement is accepted verbatim.
                GenerationRequest treq = req;
                treq.temperature = cfg.teacher_temperature;
                treq.seed = mix64(req.seed, 0x7465616368ULL);
                gen = teacher.generate_step(context, treq);
                out.counters.teacher_gen_tokens +=
                    static_cast<std::int64_t>(gen.token_scores.size());
                if (gen.text.empty()) {
                    out.terminal = gen.finish_reason == FinishReason::length
                                       ? Terminal::truncated_length
                                       : Terminal::completed;
                    break;
                }
                step = own_step(l, gen, StepSource::teacher);
            }
        } catch (const std::exception& e) {
            out.terminal = Terminal::failed;
            out.failure_reason = e.what();
            failed = true;
        }
        if (failed) break;

        out.student_steps.push_back(std::move(step));
        context += gen.text;
        context += cfg.stop_sequence;
        tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.finish_reason == FinishReason::terminal || contains_answer_marker(gen.text, cfg)) {
            out.terminal = Terminal::completed;
            break;
        }
    }
    return out;
}

SynthTrajectory imitkd_synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                             const Question& q, const RunConfig& cfg,
                                             const BaselineConfig& bl, int sample_index) {
    SynthTrajectory out;
    out.question_id = q.id;
    std::string context = q.text;
    std::int64_t tokens = 0;

    for (int l = 1;; ++l) {
        if (tokens >= cfg.max_trajectory_tokens) {
            out.terminal = Terminal::truncated_length;
            break;
        }
        std::uint64_t step_seed = derive_seed(cfg.seed, q.id, sample_index, l);
        SplitMix64 pick(mix64(step_seed, 0x696d6974ULL));
        StepSource source = imitkd_choose(pick.next_double(), bl.mix_p);

        GenerationRequest req;
        req.stop_sequence = cfg.stop_sequence;
        req.max_tokens = static_cast<int>(
            std::min<std::int64_t>(cfg.max_step_tokens, cfg.max_trajectory_tokens - tokens));
        req.temperature = source == StepSource::teacher ? cfg.teacher_temperature
                                                        : cfg.student_temperature;
        req.seed = step_seed;

        GenerationResult gen;
        try {
            gen = source == StepSource::teacher ? teacher.generate_step(context, req)
                                                : student.generate_step(context, req);
        } catch (const std::exception& e) {
            out.terminal = Terminal::failed;
            out.failure_reason = e.what();
            break;
        }
        auto n = static_cast<std::int64_t>(gen.token_scores.size());
        if (source == StepSource::teacher)
            out.counters.teacher_gen_tokens += n;
        else
            out.counters.student_gen_tokens += n;
        if (gen.text.empty()) {
            out.terminal = gen.finish_reason == FinishReason::length ? Terminal::truncated_length
                                                                     : Terminal::completed;
            break;
        }
        out.student_steps.push_back(own_step(l, gen, source));
        context += gen.text;
        context += cfg.stop_sequence;
        tokens += n;
        if (gen.finish_reason == FinishReason::terminal || contains_answer_marker(gen.text, cfg)) {
            out.terminal = Terminal::completed;
            break;
        }
    }
    return out;
}

SynthTrajectory plain_rollout(PolicyBackend& student, const Question& q, const RunConfig& cfg,
                              int sample_index) {
    SynthTrajectory out;
    out.question_id = q.id;
    std::string context = q.text;
    std::int64_t tokens = 0;

    for (int l = 1;; ++l) {
        if (tokens >= cfg.max_trajectory_tokens) {
            out.terminal = Terminal::truncated_length;
            break;
        }
        GenerationRequest req;
        req.stop_sequence = cfg.stop_sequence;
        req.max_tokens = static_cast<int>(
            std::min<std::int64_t>(cfg.max_step_tokens, cfg.max_trajectory_tokens - tokens));
        req.temperature = cfg.student_temperature;
        req.seed = derive_seed(cfg.seed, q.id, sample_index, l);

        GenerationResult gen;
        try {
            gen = student.generate_step(context, req);
        } catch (const std::exception& e) {
            out.terminal = Terminal::failed;
            out.failure_reason = e.what();
            break;
        }
        out.counters.student_gen_tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.text.empty()) {
            out.terminal = gen.finish_reason == FinishReason::length ? Terminal::truncated_length
                                                                     : Terminal::completed;
            break;
        }
        out.student_steps.push_back(own_step(l, gen, StepSource::student));
        context += gen.text;
        context += cfg.stop_sequence;
        tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.finish_reason == FinishReason::terminal || contains_answer_marker(gen.text, cfg)) {
            out.terminal = Terminal::completed;
            break;
        }
    }
    return out;
}

}  // namespace motab
