#pragma once

#include <string>
#include <vector>

#include "motab/backtrack.hpp"
#include "motab/core.hpp"

namespace motab {

struct StitchSpec {
    std::string rev_token = "However,";
    std::string separator = ".\n\n";  // the generation stop sequence
};

// Context the teacher correction is sampled from: the question followed by
// the pristine steps 1..(safe_point-1), each with its trailing separator.
// This matches exactly what the generating policies saw mid-trajectory.
std::string correction_context(const std::string& question_text,
                               const std::vector<StepRecord>& steps, int safe_point,
                               const std::string& separator);

// Canonical rendered completion.
// Unrevised: steps joined by the separator, no trailing separator.
// Revised:   all retained steps (flawed ones included) each followed by the
//            separator, then rev_token, one space, then the teacher suffix.
std::string render_completion(const SynthTrajectory& t, const StitchSpec& spec);

// Assembles a revised trajectory from the retained steps (1..breach, the
// flawed step last) and the teacher suffix. An empty suffix marks the
// trajectory failed instead of revised.
SynthTrajectory stitch_trajectory(const Question& q, std::vector<StepRecord> steps,
                                  std::string teacher_suffix, const BacktrackResult& bt,
                                  const StitchSpec& spec);

}  // namespace motab
