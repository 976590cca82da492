#include "motab/dataio.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motab/util.hpp"

using json = nlohmann::json;

namespace motab {

const char* to_string(Method m) {
    switch (m) {
        case Method::motab: return "motab";
        case Method::skd: return "skd";
        case Method::imitkd: return "imitkd";
        case Method::plain: return "plain";
    }
    return "motab";
}

std::optional<Method> method_from_string(const std::string& s) {
    if (s == "motab") return Method::motab;
    if (s == "skd") return Method::skd;
    if (s == "imitkd") return Method::imitkd;
    if (s == "plain") return Method::plain;
    return std::nullopt;
}

namespace {

// Canonical emitter: nlohmann would reorder keys and shorten floats, and the
// sink format pins both, so lines are built by hand.
void emit_escaped(std::string& out, std::string_view s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += '"';
}

void emit_double_array(std::string& out, const std::vector<double>& v) {
    out += '[';
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double17(v[i]);
    }
    out += ']';
}

void emit_optional_int(std::string& out, const std::optional<int>& v) {
    if (v)
        out += std::to_string(*v);
    else
        out += "null";
}

std::optional<int> opt_int(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<int>();
}

}  // namespace

std::string to_json_line(const SftRecord& r) {
    std::string out;
    out.reserve(256 + r.prompt.size() + r.completion.size());
    out += "{\"question_id\":";
    emit_escaped(out, r.question_id);
    out += ",\"sample_index\":" + std::to_string(r.sample_index);
    out += ",\"method\":\"";
    out += to_string(r.method);
    out += "\",\"prompt\":";
    emit_escaped(out, r.prompt);
    out += ",\"completion\":";
    emit_escaped(out, r.completion);
    out += ",\"revised\":";
    out += r.revised ? "true" : "false";
    out += ",\"unsafe_step\":";
    emit_optional_int(out, r.unsafe_step);
    out += ",\"backtrack_point\":";
    emit_optional_int(out, r.backtrack_point);
    out += ",\"depth\":";
    emit_optional_int(out, r.depth);
    out += ",\"step_values\":";
    emit_double_array(out, r.step_values);
    out += ",\"step_thresholds\":";
    emit_double_array(out, r.step_thresholds);
    out += ",\"terminal\":\"";
    out += to_string(r.terminal);
    out += "\",\"counters\":{\"student_gen_tokens\":" +
           std::to_string(r.counters.student_gen_tokens) +
           ",\"teacher_score_calls\":" + std::to_string(r.counters.teacher_score_calls) +
           ",\"teacher_gen_tokens\":" + std::to_string(r.counters.teacher_gen_tokens) +
           ",\"teacher_topk_calls\":" + std::to_string(r.counters.teacher_topk_calls) + "}";
    out += ",\"config_fingerprint\":";
    emit_escaped(out, r.config_fingerprint);
    out += '}';
    return out;
}

SftRecord sft_record_from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed record line: ") + e.what());
    }
    try {
        SftRecord r;
        r.question_id = j.at("question_id").get<std::string>();
        r.sample_index = j.at("sample_index").get<int>();
        auto m = method_from_string(j.at("method").get<std::string>());
        if (!m) throw DataError("unknown method " + j["method"].get<std::string>());
        r.method = *m;
        r.prompt = j.at("prompt").get<std::string>();
        r.completion = j.at("completion").get<std::string>();
        r.revised = j.at("revised").get<bool>();
        r.unsafe_step = opt_int(j, "unsafe_step");
        r.backtrack_point = opt_int(j, "backtrack_point");
        r.depth = opt_int(j, "depth");
        r.step_values = j.at("step_values").get<std::vector<double>>();
        r.step_thresholds = j.at("step_thresholds").get<std::vector<double>>();
        auto t = terminal_from_string(j.at("terminal").get<std::string>());
        if (!t) throw DataError("unknown terminal " + j["terminal"].get<std::string>());
        r.terminal = *t;
        const json& c = j.at("counters");
        r.counters.student_gen_tokens = c.at("student_gen_tokens").get<std::int64_t>();
        r.counters.teacher_score_calls = c.at("teacher_score_calls").get<std::int64_t>();
        r.counters.teacher_gen_tokens = c.at("teacher_gen_tokens").get<std::int64_t>();
        r.counters.teacher_topk_calls = c.at("teacher_topk_calls").get<std::int64_t>();
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("record missing required field: ") + e.what());
    }
}

std::string to_json(const StepRecord& s) {
    std::string out = "{\"index\":" + std::to_string(s.index) + ",\"text\":";
    emit_escaped(out, s.text);
    out += ",\"token_scores\":[";
    for (size_t i = 0; i < s.token_scores.size(); ++i) {
        if (i) out += ',';
        out += '[';
        emit_escaped(out, s.token_scores[i].token);
        out += ',' + format_double17(s.token_scores[i].logprob) + ']';
    }
    out += "],\"value\":" + format_double17(s.value);
    out += ",\"entropy\":" + format_double17(s.entropy);
    out += ",\"threshold\":" + format_double17(s.threshold);
    out += ",\"safe\":";
    out += s.safe ? "true" : "false";
    out += ",\"source\":\"";
    out += s.source == StepSource::student ? "student" : "teacher";
    out += "\"}";
    return out;
}

StepRecord step_record_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        StepRecord s;
        s.index = j.at("index").get<int>();
        s.text = j.at("text").get<std::string>();
        for (const auto& pair : j.at("token_scores"))
            s.token_scores.push_back({pair.at(0).get<std::string>(), pair.at(1).get<double>()});
        s.value = j.at("value").get<double>();
        s.entropy = j.at("entropy").get<double>();
        s.threshold = j.at("threshold").get<double>();
        s.safe = j.at("safe").get<bool>();
        s.source = j.at("source").get<std::string>() == "teacher" ? StepSource::teacher
                                                                  : StepSource::student;
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed step record: ") + e.what());
    }
}

void for_each_question(const std::string& path, const std::function<void(Question&&)>& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open questions file " + path);
    std::string line;
    std::set<std::string> seen;
    std::int64_t lineno = 0;
    std::int64_t ordinal = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("questions line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string() ||
            j["text"].get<std::string>().empty())
            throw DataError("questions line " + std::to_string(lineno) +
                            ": object with non-empty text required");
        Question q;
        q.text = j["text"].get<std::string>();
        if (j.contains("id") && !j["id"].is_null()) {
            if (!j["id"].is_string() || j["id"].get<std::string>().empty())
                throw DataError("questions line " + std::to_string(lineno) +
                                ": id must be a non-empty string");
            q.id = j["id"].get<std::string>();
        } else {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(ordinal));
            q.id = buf;
        }
        if (!seen.insert(q.id).second)
            throw DataError("questions line " + std::to_string(lineno) + ": duplicate id " +
                            q.id);
        if (j.contains("metadata")) {
            if (!j["metadata"].is_object())
                throw DataError("questions line " + std::to_string(lineno) +
                                ": metadata must be an object");
            for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
                q.metadata[it.key()] =
                    it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        }
        ++ordinal;
        fn(std::move(q));
    }
}

std::vector<Question> read_questions(const std::string& path) {
    std::vector<Question> out;
    for_each_question(path, [&](Question&& q) { out.push_back(std::move(q)); });
    return out;
}

RecordWriter::RecordWriter(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw DataError("cannot open sink " + path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw DataError("sink " + path + " is locked by another writer");
    }
}

RecordWriter::~RecordWriter() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

void RecordWriter::append_line(const std::string& line) {
    std::string buf = line;
    buf += '\n';
    size_t off = 0;
    while (off < buf.size()) {
        ssize_t n = ::write(fd_, buf.data() + off, buf.size() - off);
        if (n < 0) throw DataError("write failed on sink " + path_);
        off += static_cast<size_t>(n);
    }
    ++written_;
}

void RecordWriter::append(const SftRecord& r) { append_line(to_json_line(r)); }

ReadResult read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    ReadResult out;
    for (size_t i = 0; i < lines.size(); ++i) {
        try {
            out.records.push_back(sft_record_from_json_line(lines[i]));
        } catch (const DataError& e) {
            if (i + 1 == lines.size()) {
                // Torn tail from an interrupted writer: tolerated, flagged.
                out.skipped_torn_tail = true;
                break;
            }
            throw DataError("dataset line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

namespace {
constexpr const char* kCheckpointHeader = "motab-checkpoint v1";
}

void checkpoint_save(const std::string& path, const std::set<CheckpointKey>& done) {
    std::string body = kCheckpointHeader;
    body += '\n';
    for (const auto& [qid, sample, method] : done) {
        std::string line = "[";
        emit_escaped(line, qid);
        line += ',' + std::to_string(sample) + ',';
        emit_escaped(line, method);
        line += ']';
        body += line;
        body += '\n';
    }
    body += "hash:" + to_hex16(fnv1a64(body)) + "\n";

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + tmp);
        out << body;
        out.flush();
        if (!out) throw CheckpointError("short write on checkpoint " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw CheckpointError("cannot rename checkpoint into place: " + path);
}

std::set<CheckpointKey> checkpoint_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.size() < 2 || lines.front() != kCheckpointHeader)
        throw CheckpointError("checkpoint " + path + ": missing or unknown header");
    const std::string& trailer = lines.back();
    if (trailer.rfind("hash:", 0) != 0)
        throw CheckpointError("checkpoint " + path + ": missing content hash");
    std::string body;
    for (size_t i = 0; i + 1 < lines.size(); ++i) {
        body += lines[i];
        body += '\n';
    }
    if ("hash:" + to_hex16(fnv1a64(body)) != trailer)
        throw CheckpointError("checkpoint " + path + ": content hash mismatch");

    std::set<CheckpointKey> done;
    for (size_t i = 1; i + 1 < lines.size(); ++i) {
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw CheckpointError("checkpoint " + path + " line " + std::to_string(i + 1) +
                                  ": " + e.what());
        }
        if (!j.is_array() || j.size() != 3 || !j[0].is_string() || !j[1].is_number_integer() ||
            !j[2].is_string())
            throw CheckpointError("checkpoint " + path + " line " + std::to_string(i + 1) +
                                  ": expected [question_id, sample_index, method]");
        done.emplace(j[0].get<std::string>(), j[1].get<int>(), j[2].get<std::string>());
    }
    return done;
}

StatsSummary trajectory_stats(const std::vector<SftRecord>& records,
                              const std::string& rev_token) {
    StatsSummary s;
    std::map<int, std::pair<double, std::int64_t>> value_acc;
    double margin_rev = 0.0, margin_unrev = 0.0;
    std::int64_t n_margin_rev = 0, n_margin_unrev = 0;

    for (const auto& r : records) {
        ++s.total;
        ++s.terminal_counts[to_string(r.terminal)];
        s.counters += r.counters;
        s.rev_token_occurrences +=
            static_cast<std::int64_t>(count_occurrences(r.completion, rev_token));
        if (r.revised) {
            ++s.revised;
            if (r.depth) ++s.depth_histogram[*r.depth];
            if (r.unsafe_step) {
                ++s.unsafe_index_histogram[*r.unsafe_step];
                if (!r.step_values.empty()) {
                    double rel = static_cast<double>(*r.unsafe_step) /
                                 static_cast<double>(r.step_values.size());
                    int bin = std::min(9, static_cast<int>(rel * 10.0));
                    ++s.relative_position_histogram[static_cast<size_t>(std::max(0, bin))];
                }
            }
        }
        for (size_t i = 0; i < r.step_values.size(); ++i) {
            auto& [sum, n] = value_acc[static_cast<int>(i) + 1];
            sum += r.step_values[i];
            ++n;
            if (i < r.step_thresholds.size()) {
                double m = r.step_values[i] - r.step_thresholds[i];
                if (r.revised) {
                    margin_rev += m;
                    ++n_margin_rev;
                } else {
                    margin_unrev += m;
                    ++n_margin_unrev;
                }
            }
        }
    }
    s.backtrack_rate = s.total ? static_cast<double>(s.revised) / static_cast<double>(s.total) : 0.0;
    for (const auto& [idx, acc] : value_acc)
        s.mean_value_per_step[idx] = acc.first / static_cast<double>(acc.second);
    s.mean_margin_revised = n_margin_rev ? margin_rev / static_cast<double>(n_margin_rev) : 0.0;
    s.mean_margin_unrevised =
        n_margin_unrev ? margin_unrev / static_cast<double>(n_margin_unrev) : 0.0;
    return s;
}

std::string render_stats_text(const StatsSummary& s) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "records: %lld  revised: %lld  backtrack_rate: %.4f\n",
                  static_cast<long long>(s.total), static_cast<long long>(s.revised),
                  s.backtrack_rate);
    os << buf;
    os << "terminal counts:\n";
    for (const auto& [k, v] : s.terminal_counts) os << "  " << k << ": " << v << "\n";
    os << "backtrack depth histogram (revised only):\n";
    for (const auto& [d, n] : s.depth_histogram) os << "  depth " << d << ": " << n << "\n";
    os << "unsafe step index histogram:\n";
    for (const auto& [i, n] : s.unsafe_index_histogram) os << "  step " << i << ": " << n << "\n";
    os << "unsafe relative position (tenths):\n";
    for (size_t b = 0; b < s.relative_position_histogram.size(); ++b) {
        if (s.relative_position_histogram[b] == 0) continue;
        std::snprintf(buf, sizeof(buf), "  [%.1f, %.1f): %lld\n", b / 10.0, (b + 1) / 10.0,
                      static_cast<long long>(s.relative_position_histogram[b]));
        os << buf;
    }
    os << "mean step value by index:\n";
    for (const auto& [i, v] : s.mean_value_per_step) {
        std::snprintf(buf, sizeof(buf), "  step %d: %.6f\n", i, v);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "mean safety margin: revised %.6f, unrevised %.6f\nrev token occurrences: %lld\n",
                  s.mean_margin_revised, s.mean_margin_unrevised,
                  static_cast<long long>(s.rev_token_occurrences));
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "counters: student_gen_tokens %lld, teacher_score_calls %lld, "
                  "teacher_gen_tokens %lld, teacher_topk_calls %lld\n",
                  static_cast<long long>(s.counters.student_gen_tokens),
                  static_cast<long long>(s.counters.teacher_score_calls),
                  static_cast<long long>(s.counters.teacher_gen_tokens),
                  static_cast<long long>(s.counters.teacher_topk_calls));
    os << buf;
    return os.str();
}

std::string stats_to_json(const StatsSummary& s) {
    std::string out = "{\"total\":" + std::to_string(s.total);
    out += ",\"revised\":" + std::to_string(s.revised);
    out += ",\"backtrack_rate\":" + format_double17(s.backtrack_rate);
    out += ",\"depth_histogram\":{";
    bool first = true;
    for (const auto& [d, n] : s.depth_histogram) {
        if (!first) out += ',';
        first = false;
        out += '"' + std::to_string(d) + "\":" + std::to_string(n);
    }
    out += "},\"unsafe_index_histogram\":{";
    first = true;
    for (const auto& [i, n] : s.unsafe_index_histogram) {
        if (!first) out += ',';
        first = false;
        out += '"' + std::to_string(i) + "\":" + std::to_string(n);
    }
    out += "},\"relative_position_histogram\":[";
    for (size_t b = 0; b < s.relative_position_histogram.size(); ++b) {
        if (b) out += ',';
        out += std::to_string(s.relative_position_histogram[b]);
    }
    out += "],\"mean_value_per_step\":{";
    first = true;
    for (const auto& [i, v] : s.mean_value_per_step) {
        if (!first) out += ',';
        first = false;
        out += '"' + std::to_string(i) + "\":" + format_double17(v);
    }
    out += "},\"mean_margin_revised\":" + format_double17(s.mean_margin_revised);
    out += ",\"mean_margin_unrevised\":" + format_double17(s.mean_margin_unrevised);
    out += ",\"rev_token_occurrences\":" + std::to_string(s.rev_token_occurrences);
    out += ",\"terminal_counts\":{";
    first = true;
    for (const auto& [k, v] : s.terminal_counts) {
        if (!first) out += ',';
        first = false;
        out += '"' + k + "\":" + std::to_string(v);
    }
    out += "},\"counters\":{\"student_gen_tokens\":" +
           std::to_string(s.counters.student_gen_tokens) +
           ",\"teacher_score_calls\":" + std::to_string(s.counters.teacher_score_calls) +
           ",\"teacher_gen_tokens\":" + std::to_string(s.counters.teacher_gen_tokens) +
           ",\"teacher_topk_calls\":" + std::to_string(s.counters.teacher_topk_calls) + "}}";
    return out;
}

}  // namespace motab
