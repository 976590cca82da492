#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "motab/baselines.hpp"
#include "motab/fixtures.hpp"
#include "support/oracles.hpp"

using namespace motab;

namespace {

RunConfig fixture_config() {
    RunConfig cfg;
    cfg.stop_sequence = " %% ";
    cfg.student_temperature = 1.0;
    cfg.teacher_temperature = 0.0;
    cfg.max_step_tokens = 16;
    cfg.max_trajectory_tokens = 64;
    cfg.seed = 41;
    return cfg;
}

}  // namespace

TEST_CASE("geometric_mean_prob shares the monitor's definition") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> lp(-9.0, 0.0);
    for (int i = 0; i < 300; ++i) {
        std::vector<TokenScore> scores;
        int n = 1 + static_cast<int>(rng() % 12);
        std::vector<double> lps;
        for (int j = 0; j < n; ++j) {
            lps.push_back(lp(rng));
            scores.push_back({"t", lps.back()});
        }
        CHECK(std::fabs(geometric_mean_prob(scores) -
                        static_cast<double>(oracles::step_value(lps))) <= 1e-12);
    }
}

TEST_CASE("skd_accept is a strict inequality against the scaled bar") {
    CHECK(skd_accept(0.81, 1.0, 0.8));
    CHECK(!skd_accept(0.8, 1.0, 0.8));   // equality rejects
    CHECK(!skd_accept(0.79, 1.0, 0.8));
    CHECK(skd_accept(0.1, 0.5, 0.1));    // 0.1 > 0.05
    CHECK_THROWS_AS(skd_accept(0.5, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(skd_accept(0.5, 0.5, -1.0), std::invalid_argument);

    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        double t = u(rng), s = u(rng), b = 0.1 + u(rng);
        CHECK(skd_accept(t, s, b) == oracles::skd_accept(t, s, b));
    }
}

TEST_CASE("imitkd_choose picks the teacher below mix_p") {
    CHECK(imitkd_choose(0.0, 0.5) == StepSource::teacher);
    CHECK(imitkd_choose(0.4999, 0.5) == StepSource::teacher);
    CHECK(imitkd_choose(0.5, 0.5) == StepSource::student);  // boundary draw goes student
    CHECK(imitkd_choose(0.9, 0.5) == StepSource::student);
    CHECK(imitkd_choose(0.1, 0.0) == StepSource::student);  // mix_p 0: student only
    CHECK(imitkd_choose(0.999, 1.0) == StepSource::teacher);
}

TEST_CASE("skd rollouts are deterministic and account teacher regeneration") {
    auto student = fixtures::fixture("risky-student");
    auto teacher = fixtures::fixture("risky-teacher");
    RunConfig cfg = fixture_config();
    BaselineConfig bl;
    Question q{"q000001", "q ", {}};

    auto a = skd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
    auto b = skd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
    REQUIRE(a.student_steps.size() == b.student_steps.size());
    for (size_t i = 0; i < a.student_steps.size(); ++i) {
        CHECK(a.student_steps[i].text == b.student_steps[i].text);
        CHECK(a.student_steps[i].value == b.student_steps[i].value);
    }
    CHECK(a.counters.student_gen_tokens == b.counters.student_gen_tokens);
    CHECK(a.counters.teacher_gen_tokens == b.counters.teacher_gen_tokens);

    // Every step was judged once; structure stays valid; nothing is revised.
    CHECK(!a.revised);
    CHECK(a.terminal == Terminal::completed);
    CHECK(validate_trajectory(a).empty());
    CHECK(a.counters.teacher_score_calls >= static_cast<std::int64_t>(a.student_steps.size()));
    CHECK(a.counters.teacher_topk_calls == 0);

    for (const auto& s : a.student_steps) {
        CHECK(s.safe);
        if (s.source == StepSource::student) {
            // Accepted: value is the teacher view, bar is beta * student gm.
            CHECK(s.value > s.threshold - 1e-15);
        } else {
            // Regenerated: the step carries its own likelihood as both.
            CHECK(s.value == s.threshold);
        }
    }
}

TEST_CASE("skd regenerates from the teacher when the student branch is rejected") {
    auto student = fixtures::fixture("risky-student");
    auto teacher = fixtures::fixture("risky-teacher");
    RunConfig cfg = fixture_config();
    BaselineConfig bl;

    bool saw_rejection = false;
    bool saw_acceptance = false;
    for (int i = 1; i <= 40 && !(saw_rejection && saw_acceptance); ++i) {
        Question q{"q" + std::to_string(i), "q ", {}};
        auto t = skd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
        REQUIRE(!t.student_steps.empty());
        const auto& first = t.student_steps.front();
        // The student opens with "a" (70%, teacher 0.95, accepted) or
        // "z" (30%, teacher 0.01 < 0.8 * 1.0, rejected and regenerated).
        if (first.source == StepSource::teacher) {
            saw_rejection = true;
            CHECK(t.counters.teacher_gen_tokens > 0);
            CHECK(first.text == "a");  // teacher argmax at temperature 0
        } else {
            saw_acceptance = true;
            CHECK(first.text == "a");
        }
    }
    CHECK(saw_rejection);
    CHECK(saw_acceptance);
}

TEST_CASE("imitkd mixes step sources according to mix_p") {
    auto student = fixtures::fixture("risky-student");
    auto teacher = fixtures::fixture("risky-teacher");
    RunConfig cfg = fixture_config();
    BaselineConfig bl;
    bl.mix_p = 0.5;

    std::set<StepSource> seen;
    std::int64_t teacher_tokens = 0, student_tokens = 0;
    for (int i = 1; i <= 30; ++i) {
        Question q{"q" + std::to_string(i), "q ", {}};
        auto t = imitkd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
        CHECK(validate_trajectory(t).empty());
        CHECK(!t.revised);
        CHECK(t.counters.teacher_score_calls == 0);
        for (const auto& s : t.student_steps) seen.insert(s.source);
        teacher_tokens += t.counters.teacher_gen_tokens;
        student_tokens += t.counters.student_gen_tokens;
    }
    CHECK(seen.count(StepSource::student) == 1);
    CHECK(seen.count(StepSource::teacher) == 1);
    CHECK(teacher_tokens > 0);
    CHECK(student_tokens > 0);

    // mix_p 0 never touches the teacher.
    bl.mix_p = 0.0;
    Question q{"qz", "q ", {}};
    auto pure = imitkd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
    CHECK(pure.counters.teacher_gen_tokens == 0);
    for (const auto& s : pure.student_steps) CHECK(s.source == StepSource::student);

    bl.mix_p = 1.0;
    auto all_teacher = imitkd_synthesize_trajectory(student, teacher, q, cfg, bl, 0);
    CHECK(all_teacher.counters.student_gen_tokens == 0);
    for (const auto& s : all_teacher.student_steps) CHECK(s.source == StepSource::teacher);
}

TEST_CASE("plain rollouts never call the teacher") {
    auto student = fixtures::fixture("chain");
    RunConfig cfg = fixture_config();
    Question q{"q000001", "q ", {}};
    auto t = plain_rollout(student, q, cfg, 0);
    CHECK(t.terminal == Terminal::completed);
    CHECK(!t.revised);
    CHECK(validate_trajectory(t).empty());
    REQUIRE(t.student_steps.size() == 3);
    CHECK(t.student_steps[0].text == "a");
    CHECK(t.student_steps[1].text == "b");
    CHECK(t.student_steps[2].text == "c <eot>");
    CHECK(t.counters.teacher_score_calls == 0);
    CHECK(t.counters.teacher_gen_tokens == 0);
    CHECK(t.counters.teacher_topk_calls == 0);
    CHECK(t.counters.student_gen_tokens == 4);  // a, b, c, <eot>

    // The trajectory cap truncates and flags rather than dropping.
    cfg.max_trajectory_tokens = 2;
    auto cut = plain_rollout(student, q, cfg, 0);
    CHECK(cut.terminal == Terminal::truncated_length);
}
