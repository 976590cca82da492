#include "motab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "motab/util.hpp"

namespace motab {

namespace {

std::string unescape(std::string_view raw, int line_no) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '\\') {
            out.push_back(raw[i]);
            continue;
        }
        if (i + 1 == raw.size())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": dangling escape at end of value");
        char c = raw[++i];
        switch (c) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '\\': out.push_back('\\'); break;
            default:
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unsupported escape '\\" + std::string(1, c) + "'");
        }
    }
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected a number, got '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key " + key + ": trailing characters in '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an integer, got '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key " + key + ": trailing characters in '" + value + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + value +
                          "'");
    }
    if (pos != value.size())
        throw ConfigError("config key " + key + ": trailing characters in '" + value + "'");
    return v;
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        std::string_view body(line);
        if (hash != std::string::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        size_t eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key(trim(body.substr(0, eq)));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (out.count(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        out[key] = unescape(trim(body.substr(eq + 1)), line_no);
    }
    return out;
}

std::map<std::string, std::string> load_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_flat_config(buf.str());
}

void apply_config(const std::map<std::string, std::string>& kv, RunConfig& cfg) {
    for (const auto& [key, value] : kv) {
        if (key == "gamma0") {
            cfg.gamma0 = parse_real(key, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_real(key, value);
        } else if (key == "student_temperature") {
            cfg.student_temperature = parse_real(key, value);
        } else if (key == "teacher_temperature") {
            cfg.teacher_temperature = parse_real(key, value);
        } else if (key == "stop_sequence") {
            cfg.stop_sequence = value;
        } else if (key == "max_step_tokens") {
            cfg.max_step_tokens = static_cast<int>(parse_int(key, value));
        } else if (key == "max_trajectory_tokens") {
            cfg.max_trajectory_tokens = static_cast<int>(parse_int(key, value));
        } else if (key == "samples_per_question") {
            cfg.samples_per_question = static_cast<int>(parse_int(key, value));
        } else if (key == "entropy_top_k") {
            cfg.entropy_top_k = static_cast<int>(parse_int(key, value));
        } else if (key == "concurrency_limit") {
            cfg.concurrency_limit = static_cast<int>(parse_int(key, value));
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, value);
        } else if (key == "rev_token") {
            cfg.rev_token = value;
        } else if (key == "answer_markers") {
            cfg.answer_markers.clear();
            for (const auto& part : split_by(value, "|"))
                if (!part.empty()) cfg.answer_markers.push_back(part);
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
}

}  // namespace motab
