#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpl/env.hpp"

namespace cpl {

using Json = nlohmann::json;

/// Problem <-> {id, env, spec, ground_truth}.
Json problem_to_json(const Problem& p);
Problem problem_from_json(const Json& j);

/// One problem per line. Returns the number written.
std::size_t save_problems(const std::vector<Problem>& problems, const std::filesystem::path& path);
/// Throws ParseError naming the offending line.
std::vector<Problem> load_problems(const std::filesystem::path& path);

/// Calls `fn(object, line_number)` for each non-empty line. Lines that are
/// not valid JSON raise ParseError with the line number; exceptions thrown by
/// `fn` other than ParseError are rewrapped with the line number too.
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn);

/// Writes each object on its own line, compact form, '\n' terminated.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace cpl
