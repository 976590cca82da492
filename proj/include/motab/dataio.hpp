#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "motab/core.hpp"

namespace motab {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { motab, skd, imitkd, plain };

const char* to_string(Method m);
std::optional<Method> method_from_string(const std::string& s);

// One dataset row. Serialization is canonical: fixed field order, floats with
// 17 significant digits, one object per line, so identical rows are identical
// bytes and distinct rows are distinct bytes.
struct SftRecord {
    std::string question_id;
    int sample_index = 0;
    Method method = Method::motab;
    std::string prompt;
    std::string completion;
    bool revised = false;
    std::optional<int> unsafe_step;
    std::optional<int> backtrack_point;
    std::optional<int> depth;
    std::vector<double> step_values;
    std::vector<double> step_thresholds;
    Terminal terminal = Terminal::completed;
    CallCounters counters;
    std::string config_fingerprint;
};

std::string to_json_line(const SftRecord& r);
SftRecord sft_record_from_json_line(const std::string& line);  // throws DataError

// Lossless per-step persistence (token scores included).
std::string to_json(const StepRecord& s);
StepRecord step_record_from_json(const std::string& text);

// Streaming question reader: one JSON object per line with fields
// {id?, text, metadata?}. Missing ids are assigned the zero-padded ordinal of
// the question. Malformed lines and duplicate ids throw DataError with the
// line number.
void for_each_question(const std::string& path, const std::function<void(Question&&)>& fn);
std::vector<Question> read_questions(const std::string& path);

// Append-only dataset sink. Holds an exclusive lock for its lifetime
// (a second live writer on the same path fails), flushes after every record.
class RecordWriter {
public:
    explicit RecordWriter(const std::string& path);
    ~RecordWriter();
    RecordWriter(const RecordWriter&) = delete;
    RecordWriter& operator=(const RecordWriter&) = delete;

    void append(const SftRecord& r);
    void append_line(const std::string& line);
    std::int64_t records_written() const { return written_; }

private:
    int fd_ = -1;
    std::string path_;
    std::int64_t written_ = 0;
};

struct ReadResult {
    std::vector<SftRecord> records;
    bool skipped_torn_tail = false;  // exactly one trailing malformed line tolerated
};

ReadResult read_records(const std::string& path);

// Completion log for resumable batches: a versioned header, one
// (question_id, sample_index, method) triple per line, and a trailing
// content hash. Saves are atomic (temp file + rename); a missing trailer,
// bad hash or unknown version refuses to load.
using CheckpointKey = std::tuple<std::string, int, std::string>;

void checkpoint_save(const std::string& path, const std::set<CheckpointKey>& done);
std::set<CheckpointKey> checkpoint_load(const std::string& path);

// Aggregate dataset shape, computed in one pass.
struct StatsSummary {
    std::int64_t total = 0;
    std::int64_t revised = 0;
    double backtrack_rate = 0.0;
    std::map<int, std::int64_t> depth_histogram;        // revised records only
    std::map<int, std::int64_t> unsafe_index_histogram;
    std::array<std::int64_t, 10> relative_position_histogram{};  // tenths of trajectory
    std::map<int, double> mean_value_per_step;          // 1-based step index
    double mean_margin_revised = 0.0;                   // mean of value - threshold
    double mean_margin_unrevised = 0.0;
    std::int64_t rev_token_occurrences = 0;             // in completions
    std::map<std::string, std::int64_t> terminal_counts;
    CallCounters counters;
};

StatsSummary trajectory_stats(const std::vector<SftRecord>& records,
                              const std::string& rev_token);

std::string render_stats_text(const StatsSummary& s);
std::string stats_to_json(const StatsSummary& s);

}  // namespace motab
