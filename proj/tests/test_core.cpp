#include <doctest.h>

#include <cmath>

#include "motab/core.hpp"

using namespace motab;

namespace {

StepRecord make_step(int index, std::vector<double> logprobs, double threshold,
                     double entropy = 0.5) {
    StepRecord s;
    s.index = index;
    s.text = "step" + std::to_string(index);
    double sum = 0.0;
    for (double lp : logprobs) {
        s.token_scores.push_back({"t", lp});
        sum += lp;
    }
    s.value = std::exp(sum / static_cast<double>(logprobs.size()));
    s.entropy = entropy;
    s.threshold = threshold;
    s.safe = s.value >= s.threshold;
    return s;
}

SynthTrajectory valid_unrevised() {
    SynthTrajectory t;
    t.question_id = "q1";
    t.student_steps.push_back(make_step(1, {-0.1, -0.2}, 0.05));
    t.student_steps.push_back(make_step(2, {-0.3}, 0.05));
    t.terminal = Terminal::completed;
    return t;
}

SynthTrajectory valid_revised() {
    SynthTrajectory t;
    t.question_id = "q1";
    t.student_steps.push_back(make_step(1, {-0.1}, 0.05));
    t.student_steps.push_back(make_step(2, {-0.4}, 0.05));
    t.student_steps.push_back(make_step(3, {-4.0}, 0.05));  // breached
    t.revised = true;
    t.rev_token = "However,";
    t.teacher_suffix = "corrected tail";
    t.unsafe_step = 3;
    t.backtrack_point = 2;
    t.td_errors = std::vector<double>{-0.095, -0.23, -0.65};
    t.terminal = Terminal::revised;
    return t;
}

}  // namespace

TEST_CASE("terminal strings round trip") {
    for (Terminal t : {Terminal::completed, Terminal::revised, Terminal::truncated_length,
                       Terminal::failed}) {
        auto back = terminal_from_string(to_string(t));
        REQUIRE(back.has_value());
        CHECK(*back == t);
    }
    CHECK(!terminal_from_string("bogus").has_value());
}

TEST_CASE("default run config validates clean") {
    RunConfig cfg;
    CHECK(cfg.validate().empty());
}

TEST_CASE("run config validation flags each violation") {
    auto broken = [](auto mutate) {
        RunConfig cfg;
        mutate(cfg);
        return !cfg.validate().empty();
    };
    CHECK(broken([](RunConfig& c) { c.gamma0 = 0.0; }));
    CHECK(broken([](RunConfig& c) { c.gamma0 = 1.5; }));
    CHECK(broken([](RunConfig& c) { c.alpha = 0.0; }));
    CHECK(broken([](RunConfig& c) { c.student_temperature = -0.1; }));
    CHECK(broken([](RunConfig& c) { c.teacher_temperature = -1.0; }));
    CHECK(broken([](RunConfig& c) { c.max_step_tokens = 0; }));
    CHECK(broken([](RunConfig& c) { c.max_trajectory_tokens = c.max_step_tokens - 1; }));
    CHECK(broken([](RunConfig& c) { c.samples_per_question = 0; }));
    CHECK(broken([](RunConfig& c) { c.entropy_top_k = 1; }));
    CHECK(broken([](RunConfig& c) { c.concurrency_limit = 0; }));
    CHECK(broken([](RunConfig& c) { c.rev_token.clear(); }));
}

TEST_CASE("config fingerprint separates configs and is stable") {
    RunConfig a, b;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    CHECK(config_fingerprint(a).size() == 16);
    b.gamma0 = 0.31;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    b = a;
    b.seed = 1;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    b = a;
    b.answer_markers.push_back("Answer:");
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    b = a;
    b.concurrency_limit = 32;  // scheduling-only knob: same data, same digest
    CHECK(config_fingerprint(a) == config_fingerprint(b));
}

TEST_CASE("answer marker detection") {
    RunConfig cfg;
    CHECK(contains_answer_marker("so \\boxed{42} holds", cfg));
    CHECK(!contains_answer_marker("so boxed 42 holds", cfg));
    cfg.answer_markers = {"Answer:"};
    CHECK(contains_answer_marker("Answer: 42", cfg));
    cfg.answer_markers.clear();
    CHECK(!contains_answer_marker("anything", cfg));
}

TEST_CASE("valid trajectories pass structural validation") {
    CHECK(validate_trajectory(valid_unrevised()).empty());
    CHECK(validate_trajectory(valid_revised()).empty());
}

TEST_CASE("structural validation flags corrupted trajectories") {
    auto broken = [](auto mutate) {
        auto t = valid_revised();
        mutate(t);
        return !validate_trajectory(t).empty();
    };
    CHECK(broken([](SynthTrajectory& t) { t.question_id.clear(); }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[1].index = 7; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].text.clear(); }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].value = 1.5; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].threshold = 0.0; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].entropy = -0.1; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].safe = false; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].value = 0.5; }));
    CHECK(broken([](SynthTrajectory& t) { t.student_steps[0].token_scores[0].logprob = 0.5; }));
    CHECK(broken([](SynthTrajectory& t) { t.rev_token.reset(); }));
    CHECK(broken([](SynthTrajectory& t) { t.teacher_suffix.reset(); }));
    CHECK(broken([](SynthTrajectory& t) { t.unsafe_step.reset(); }));
    CHECK(broken([](SynthTrajectory& t) { t.unsafe_step = 9; }));
    CHECK(broken([](SynthTrajectory& t) { t.unsafe_step = 1; }));  // points at a safe step
    CHECK(broken([](SynthTrajectory& t) { t.backtrack_point = 4; }));
    CHECK(broken([](SynthTrajectory& t) { t.backtrack_point = 0; }));
    CHECK(broken([](SynthTrajectory& t) { t.td_errors = std::vector<double>{-0.1}; }));
}

TEST_CASE("unrevised trajectories must be fully safe") {
    auto t = valid_unrevised();
    t.student_steps[1].threshold = 0.9;
    t.student_steps[1].safe = t.student_steps[1].value >= 0.9;
    CHECK(!t.student_steps[1].safe);
    CHECK(!validate_trajectory(t).empty());
}

TEST_CASE("call counters accumulate") {
    CallCounters a{1, 2, 3, 4}, b{10, 20, 30, 40};
    a += b;
    CHECK(a.student_gen_tokens == 11);
    CHECK(a.teacher_score_calls == 22);
    CHECK(a.teacher_gen_tokens == 33);
    CHECK(a.teacher_topk_calls == 44);
}
