#pragma once

#include <vector>

#include "motab/core.hpp"
#include "motab/policy.hpp"

namespace motab {

// Comparison-method knobs. beta scales the student bar for sequence-level
// acceptance; mix_p is the per-step probability of sampling the teacher in
// the mixed rollout.
struct BaselineConfig {
    double beta = 0.8;
    double mix_p = 0.5;
};

// Same quantity the monitor uses as the step value; shared implementation,
// exposed under the name the acceptance rule is usually stated with.
double geometric_mean_prob(const std::vector<TokenScore>& scores);

// Sequence-level filter: keep the student step iff the teacher's geometric
// mean probability strictly exceeds beta times the student's own.
bool skd_accept(double teacher_gm, double student_gm, double beta);

// Per-step source pick for the mixed rollout: teacher iff draw < mix_p.
StepSource imitkd_choose(double rng_draw, double mix_p);

// Rollout synthesizers matching the monitored pipeline's record shape so all
// methods flow through the same batch loop and sink. None of them backtrack
// or stitch; rejected steps (skd) are regenerated by the teacher verbatim.
SynthTrajectory skd_synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                          const Question& q, const RunConfig& cfg,
                                          const BaselineConfig& bl, int sample_index);

SynthTrajectory imitkd_synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                             const Question& q, const RunConfig& cfg,
                                             const BaselineConfig& bl, int sample_index);

// Unmonitored student rollout; the control arm.
SynthTrajectory plain_rollout(PolicyBackend& student, const Question& q, const RunConfig& cfg,
                              int sample_index);

}  // namespace motab
