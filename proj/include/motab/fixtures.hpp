#pragma once

#include <string>
#include <vector>

#include "motab/core.hpp"
#include "motab/tabular.hpp"

namespace motab::fixtures {

// Named, fully specified synthetic policies. Two families:
//
// Step-structured chains (order 2) for pipeline runs: vocabulary includes the
// step delimiter token "%%" and the terminal token "<eot>"; runs over them use
// stop_sequence " %% " and question text "q ".
//   chain                  deterministic solver, usable as both roles
//   delayed-error-student  injects a weakly supported token mid-trajectory
//   delayed-error-teacher  scores it; detection only fires two steps later
//   risky-student          takes a poorly supported branch ~30% of the time
//   risky-teacher          scores it; that branch breaches immediately
//
// Single-token-step chains (order 1) for exact enumeration:
//   lab-absorbing-student / lab-absorbing-teacher   error token absorbs
//   lab-flawed-student   / lab-flawed-teacher       student has OOD mass
//   lab-delayed-student  / lab-delayed-teacher      drop at 3, breach at 5
//   smoothed8-teacher                               8 tokens, lambda 0.01
TabularPolicy fixture(const std::string& name);

std::vector<std::string> fixture_names();

// Question stream for pipeline fixture runs (ids q000001, q000002, ...;
// text "q " so concatenated steps stay token-separated).
std::vector<Question> fixture_questions(int count);

// Start context for the enumeration lab.
inline std::vector<std::string> lab_start() { return {"q"}; }

// Per-step error probability of lab-absorbing-student, exposed so callers
// can state expectations against it.
inline constexpr double kAbsorbingErrorRate = 0.05;

}  // namespace motab::fixtures
