#include "motab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "motab/backtrack.hpp"
#include "motab/monitor.hpp"
#include "motab/util.hpp"

namespace motab {

namespace {

struct Correction {
    std::string text;
    bool truncated = false;
};

// The teacher finishes the trajectory from the pristine context: step by
// step until a terminal finish, an answer marker, or the trajectory token
// budget. Hitting the budget flags the correction truncated but keeps it.
Correction generate_teacher_suffix(PolicyBackend& teacher, std::string context,
                                   const RunConfig& cfg, const StitchSpec& spec,
                                   const std::string& qid, int sample_index,
                                   std::int64_t tokens_so_far, CallCounters& counters) {
    Correction c;
    std::vector<std::string> parts;
    std::int64_t tokens = tokens_so_far;
    for (int j = 1;; ++j) {
        if (tokens >= cfg.max_trajectory_tokens) {
            c.truncated = true;
            break;
        }
        GenerationRequest req;
        req.stop_sequence = cfg.stop_sequence;
        req.max_tokens = static_cast<int>(
            std::min<std::int64_t>(cfg.max_step_tokens, cfg.max_trajectory_tokens - tokens));
        req.temperature = cfg.teacher_temperature;
        req.seed = mix64(derive_seed(cfg.seed, qid, sample_index, j), 0x636f7272ULL);

        GenerationResult gen = teacher.generate_step(context, req);
        counters.teacher_gen_tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.text.empty()) break;
        parts.push_back(gen.text);
        context += gen.text;
        context += cfg.stop_sequence;
        tokens += static_cast<std::int64_t>(gen.token_scores.size());
        if (gen.finish_reason == FinishReason::terminal || contains_answer_marker(gen.text, cfg))
            break;
    }
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) c.text += spec.separator;
        c.text += parts[i];
    }
    return c;
}

}  // namespace

SynthTrajectory synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                      const Question& q, const RunConfig& cfg,
                                      const StitchSpec& spec, int sample_index) {
    SynthTrajectory out;
    out.question_id = q.id;
    std::string context = q.text;
    std::int64_t tokens = 0;
    std::vector<double> values, thresholds;

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

        MonitorVerdict verdict;
        std::vector<TokenScore> teacher_scores;
        try {
            auto top_k = teacher.top_k_next(context, cfg.entropy_top_k);
            ++out.counters.teacher_topk_calls;
            teacher_scores = teacher.score_tokens(context, gen.text);
            ++out.counters.teacher_score_calls;
            verdict = judge_step(teacher_scores, top_k, cfg);
        } catch (const std::exception& e) {
            out.terminal = Terminal::failed;
            out.failure_reason = e.what();
            break;
        }

        StepRecord step;
        step.index = l;
        step.text = gen.text;
        step.token_scores = std::move(teacher_scores);
        step.value = verdict.value;
        step.entropy = verdict.entropy;
        step.threshold = verdict.threshold;
        step.safe = verdict.safe;
        step.source = StepSource::student;
        values.push_back(verdict.value);
        thresholds.push_back(verdict.threshold);

        if (!verdict.safe) {
            out.student_steps.push_back(std::move(step));
            BacktrackResult bt = analyze_breach(values, thresholds, l);
            Correction corr;
            try {
                std::string corr_ctx =
                    correction_context(q.text, out.student_steps, bt.safe_point, spec.separator);
                corr = generate_teacher_suffix(teacher, std::move(corr_ctx), cfg, spec, q.id,
                                               sample_index, tokens, out.counters);
            } catch (const std::exception& e) {
                out.student_steps.pop_back();  // flawed step cannot stand without a revision
                out.terminal = Terminal::failed;
                out.failure_reason = e.what();
                break;
            }
            CallCounters counters = out.counters;
            SynthTrajectory stitched =
                stitch_trajectory(q, std::move(out.student_steps), std::move(corr.text), bt, spec);
            stitched.counters = counters;
            if (stitched.terminal != Terminal::failed && corr.truncated) {
                stitched.terminal = Terminal::truncated_length;
                stitched.truncated_correction = true;
            }
            out = std::move(stitched);
            break;
        }

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

SftRecord make_sft_record(const SynthTrajectory& t, const Question& q, Method method,
                          int sample_index, const RunConfig& cfg, const StitchSpec& spec) {
    SftRecord r;
    r.question_id = t.question_id.empty() ? q.id : t.question_id;
    r.sample_index = sample_index;
    r.method = method;
    r.prompt = q.text;
    r.completion = render_completion(t, spec);
    r.revised = t.revised;
    r.unsafe_step = t.unsafe_step;
    r.backtrack_point = t.backtrack_point;
    if (t.unsafe_step && t.backtrack_point) r.depth = *t.unsafe_step - *t.backtrack_point;
    r.step_values.reserve(t.student_steps.size());
    r.step_thresholds.reserve(t.student_steps.size());
    for (const auto& s : t.student_steps) {
        r.step_values.push_back(s.value);
        r.step_thresholds.push_back(s.threshold);
    }
    r.terminal = t.terminal;
    r.counters = t.counters;
    r.config_fingerprint = config_fingerprint(cfg);
    return r;
}

RunSummary run_batch(const Synthesizer& synth, const std::vector<Question>& questions,
                     const RunConfig& cfg, Method method, const StitchSpec& spec,
                     const std::string& sink_path, const RunBatchOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    RunSummary summary;

    std::set<CheckpointKey> done;
    const bool checkpointing = !opts.checkpoint_path.empty();
    if (checkpointing && std::filesystem::exists(opts.checkpoint_path)) {
        if (opts.fresh_start) {
            std::filesystem::remove(opts.checkpoint_path);
        } else {
            try {
                done = checkpoint_load(opts.checkpoint_path);
            } catch (const CheckpointError& e) {
                throw CheckpointError(std::string(e.what()) +
                                      " (pass fresh_start to discard it and start over)");
            }
        }
    }

    struct Job {
        const Question* q;
        int sample;
    };
    std::vector<Job> jobs;
    const std::string method_name = to_string(method);
    for (const auto& q : questions) {
        for (int s = 0; s < cfg.samples_per_question; ++s) {
            if (done.count({q.id, s, method_name})) {
                ++summary.skipped_resume;
                continue;
            }
            jobs.push_back({&q, s});
        }
    }
    summary.scheduled = static_cast<std::int64_t>(jobs.size());

    RecordWriter writer(sink_path);
    std::mutex mu;
    std::atomic<size_t> next{0};
    std::atomic<bool> halted{false};
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (!halted.load()) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            SynthTrajectory t;
            try {
                t = synth(*job.q, job.sample);
            } catch (const std::exception& e) {
                t.question_id = job.q->id;
                t.terminal = Terminal::failed;
                t.failure_reason = e.what();
            }
            SftRecord rec = make_sft_record(t, *job.q, method, job.sample, cfg, spec);

            std::lock_guard<std::mutex> lk(mu);
            if (halted.load()) return;  // simulated kill: in-flight work is dropped
            try {
                writer.append(rec);
                done.emplace(job.q->id, job.sample, method_name);
                if (checkpointing) checkpoint_save(opts.checkpoint_path, done);
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
                halted.store(true);
                return;
            }
            switch (t.terminal) {
                case Terminal::completed: ++summary.completed; break;
                case Terminal::revised: ++summary.revised; break;
                case Terminal::truncated_length: ++summary.truncated; break;
                case Terminal::failed: ++summary.failed; break;
            }
            summary.counters += t.counters;
            if (opts.stop_after_records && writer.records_written() >= *opts.stop_after_records)
                halted.store(true);
        }
    };

    const int n_threads =
        std::max(1, std::min<int>(cfg.concurrency_limit, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return summary;
}

namespace {

double negative_log_likelihood(PolicyBackend& scorer, const std::string& context,
                               const std::string& text) {
    double nll = 0.0;
    for (const auto& ts : scorer.score_tokens(context, text)) nll -= ts.logprob;
    return nll;
}

}  // namespace

PiecewiseLoss evaluate_piecewise_loss(const std::vector<SftRecord>& records,
                                      PolicyBackend& scorer, const StitchSpec& spec) {
    PiecewiseLoss loss;
    double on_policy_sum = 0.0, correction_sum = 0.0;
    for (const auto& r : records) {
        if (r.completion.empty()) continue;  // failed rows carry no trainable text
        std::vector<std::string> parts = split_by(r.completion, spec.separator);
        std::string ctx = r.prompt;
        if (r.revised) {
            if (!r.unsafe_step || *r.unsafe_step < 1 ||
                static_cast<size_t>(*r.unsafe_step) >= parts.size())
                throw DataError("revised record with inconsistent unsafe_step: " + r.question_id);
            const size_t flawed = static_cast<size_t>(*r.unsafe_step);
            for (size_t k = 0; k + 1 < flawed; ++k) {
                on_policy_sum += negative_log_likelihood(scorer, ctx, parts[k]);
                ++loss.on_policy_count;
                ctx += parts[k];
                ctx += spec.separator;
            }
            // The flawed step joins the prefix but is not itself a target.
            ctx += parts[flawed - 1];
            ctx += spec.separator;
            std::string target;
            for (size_t k = flawed; k < parts.size(); ++k) {
                if (k > flawed) target += spec.separator;
                target += parts[k];
            }
            correction_sum += negative_log_likelihood(scorer, ctx, target);
            ++loss.correction_count;
        } else {
            for (const auto& part : parts) {
                on_policy_sum += negative_log_likelihood(scorer, ctx, part);
                ++loss.on_policy_count;
                ctx += part;
                ctx += spec.separator;
            }
        }
    }
    if (loss.on_policy_count)
        loss.on_policy_term = on_policy_sum / static_cast<double>(loss.on_policy_count);
    if (loss.correction_count)
        loss.correction_term = correction_sum / static_cast<double>(loss.correction_count);
    return loss;
}

}  // namespace motab
