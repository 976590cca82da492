#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "motab/core.hpp"
#include "motab/dataio.hpp"
#include "motab/policy.hpp"
#include "motab/stitch.hpp"

namespace motab {

// Monitored synthesis of one trajectory:
//   sample a student step, judge it against the adaptive boundary, keep safe
//   steps, and on the first breach backtrack along the value drops to the
//   last reliable step, then let the teacher finish from that pristine
//   context. The flawed steps stay in the record; the correction is joined
//   after the revision token.
SynthTrajectory synthesize_trajectory(PolicyBackend& student, PolicyBackend& teacher,
                                      const Question& q, const RunConfig& cfg,
                                      const StitchSpec& spec, int sample_index = 0);

SftRecord make_sft_record(const SynthTrajectory& t, const Question& q, Method method,
                          int sample_index, const RunConfig& cfg, const StitchSpec& spec);

// Any (question, sample_index) -> trajectory function; lets the comparison
// methods share the batch loop, sink and checkpoint machinery.
using Synthesizer = std::function<SynthTrajectory(const Question&, int)>;

struct RunBatchOptions {
    std::string checkpoint_path;  // empty disables checkpointing
    bool fresh_start = false;     // overwrite a corrupt/stale checkpoint instead of refusing
    // Test hook: abandon the batch (no finalization) after this many records,
    // simulating a killed process.
    std::optional<std::int64_t> stop_after_records;
};

struct RunSummary {
    std::int64_t scheduled = 0;
    std::int64_t skipped_resume = 0;
    std::int64_t completed = 0;
    std::int64_t revised = 0;
    std::int64_t truncated = 0;
    std::int64_t failed = 0;
    CallCounters counters;
    double wall_seconds = 0.0;
};

// Runs every (question, sample) job not already in the checkpoint through
// `synth` with at most cfg.concurrency_limit workers. Records append to the
// sink as they finish (input order when concurrency_limit is 1); sink and
// checkpoint advance together under one lock, so a kill between records
// never produces duplicates on resume.
RunSummary run_batch(const Synthesizer& synth, const std::vector<Question>& questions,
                     const RunConfig& cfg, Method method, const StitchSpec& spec,
                     const std::string& sink_path, const RunBatchOptions& opts);

struct PiecewiseLoss {
    double on_policy_term = 0.0;   // mean -log pi(step | prefix) over retained safe steps
    double correction_term = 0.0;  // mean -log pi(rev + suffix | flawed prefix) over revisions
    std::int64_t on_policy_count = 0;
    std::int64_t correction_count = 0;
};

// Offline decomposition of the training loss over a dataset: safe steps are
// scored against their running prefix; each revision is scored as one block
// (revision token + teacher suffix) against the full flawed prefix. The two
// expectations are reported separately and zero counts stay flagged as zero.
PiecewiseLoss evaluate_piecewise_loss(const std::vector<SftRecord>& records,
                                      PolicyBackend& scorer, const StitchSpec& spec);

}  // namespace motab
