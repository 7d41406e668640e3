#pragma once
// Small file helpers shared by the CLI and dataset code.

#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgqa::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse a line-delimited JSON file; blank lines are skipped and parse
// errors cite the 1-based line number.
std::vector<nlohmann::ordered_json> read_jsonl(const std::string& path);

// Non-empty lines of a text file, trimmed of surrounding whitespace.
std::vector<std::string> read_lines(const std::string& path);

// Write through a temp file in the same directory and rename it over the
// target, so a crash mid-write never leaves a partial file behind.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& fill);

}  // namespace kgqa::io
