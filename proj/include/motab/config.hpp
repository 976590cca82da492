#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "motab/core.hpp"

namespace motab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value text: one pair per line, '#' starts a comment, blank lines
// skipped. Keys and values are trimmed; values support the escapes \n, \t,
// \r and \\ so multi-line strings like the stop sequence stay on one line.
std::map<std::string, std::string> parse_flat_config(const std::string& text);

// parse_flat_config over a file's contents. Throws ConfigError when the
// file cannot be read or a line is malformed (line number included).
std::map<std::string, std::string> load_flat_config(const std::string& path);

// Applies recognized keys (named after RunConfig fields; answer_markers is
// a '|'-separated list) onto cfg. Unknown keys and unparseable values throw
// ConfigError; range checking stays with RunConfig::validate.
void apply_config(const std::map<std::string, std::string>& kv, RunConfig& cfg);

}  // namespace motab
