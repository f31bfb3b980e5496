#include "cpl/env.hpp"
#include "cpl/error.hpp"

namespace cpl {

std::string_view to_string(StepKind kind) { return kind == StepKind::Plan ? "plan" : "solution"; }

std::string_view to_string(Phase phase) { return phase == Phase::Planning ? "planning" : "solved"; }

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy:
      return "easy";
    case Difficulty::Medium:
      return "medium";
    case Difficulty::Hard:
      return "hard";
    case Difficulty::Expert:
      return "expert";
  }
  return "unknown";
}

StepKind parse_step_kind(std::string_view s) {
  if (s == "plan") return StepKind::Plan;
  if (s == "solution") return StepKind::Solution;
  throw ParseError("unknown step kind '" + std::string(s) + "'");
}

Difficulty parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "medium") return Difficulty::Medium;
  if (s == "hard") return Difficulty::Hard;
  if (s == "expert") return Difficulty::Expert;
  throw ConfigError("unknown difficulty '" + std::string(s) + "' (expected easy|medium|hard|expert)");
}

std::string state_key(const State& s) {
  std::string key = s.problem_id;
  for (const auto& a : s.trace) {
    key += '|';
    key += a.display;
  }
  return key;
}

std::pair<std::string, std::vector<std::string>> split_state_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t bar = key.find('|', start);
    if (bar == std::string_view::npos) {
      parts.emplace_back(key.substr(start));
      break;
    }
    parts.emplace_back(key.substr(start, bar - start));
    start = bar + 1;
  }
  std::string id = std::move(parts.front());
  parts.erase(parts.begin());
  return {std::move(id), std::move(parts)};
}

State initial_state(const Problem& p) {
  State s;
  s.problem_id = p.id;
  return s;
}

}  // namespace cpl
