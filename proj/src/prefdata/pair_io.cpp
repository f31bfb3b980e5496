#include "cpl/error.hpp"
#include "cpl/prefdata.hpp"

namespace cpl {

namespace {

void check_version(const Json& j) {
  const int v = j.at("format_version").get<int>();
  if (v != kDataFormatVersion) throw ParseError("unsupported format_version " + std::to_string(v));
}

void check_index(std::size_t idx, std::size_t n, const char* field) {
  if (idx >= n) throw ParseError(std::string(field) + " out of range");
}

Json step_to_json(const SftStep& s) {
  return Json{{"state_key", s.state_key}, {"candidates", s.candidates}, {"chosen_idx", s.chosen_idx}};
}

SftStep step_from_json(const Json& j) {
  SftStep s{j.at("state_key").get<std::string>(), j.at("candidates").get<std::vector<std::string>>(),
            j.at("chosen_idx").get<std::size_t>()};
  check_index(s.chosen_idx, s.candidates.size(), "chosen_idx");
  return s;
}

Json steps_to_json(const std::vector<SftStep>& steps) {
  Json arr = Json::array();
  for (const auto& s : steps) arr.push_back(step_to_json(s));
  return arr;
}

std::vector<SftStep> steps_from_json(const Json& j) {
  std::vector<SftStep> out;
  for (const auto& s : j) out.push_back(step_from_json(s));
  return out;
}

template <typename T, typename Fn>
std::vector<T> load_rows(const std::filesystem::path& path, Fn&& from_json) {
  std::vector<T> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    check_version(j);
    out.push_back(from_json(j));
  });
  return out;
}

}  // namespace

Json pair_to_json(const PreferencePair& p) {
  return Json{{"format_version", kDataFormatVersion},
              {"problem_id", p.problem_id},
              {"state_key", p.state_key},
              {"candidates", p.candidates},
              {"chosen_idx", p.chosen_idx},
              {"rejected_idx", p.rejected_idx},
              {"v_chosen", p.v_chosen},
              {"v_rejected", p.v_rejected},
              {"kind", std::string(to_string(p.kind))}};
}

PreferencePair pair_from_json(const Json& j) {
  check_version(j);
  PreferencePair p;
  p.problem_id = j.at("problem_id").get<std::string>();
  p.state_key = j.at("state_key").get<std::string>();
  p.candidates = j.at("candidates").get<std::vector<std::string>>();
  p.chosen_idx = j.at("chosen_idx").get<std::size_t>();
  p.rejected_idx = j.at("rejected_idx").get<std::size_t>();
  p.v_chosen = j.at("v_chosen").get<double>();
  p.v_rejected = j.at("v_rejected").get<double>();
  try {
    p.kind = parse_step_kind(j.at("kind").get<std::string>());
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  check_index(p.chosen_idx, p.candidates.size(), "chosen_idx");
  check_index(p.rejected_idx, p.candidates.size(), "rejected_idx");
  if (p.chosen_idx == p.rejected_idx) throw ParseError("chosen_idx equals rejected_idx");
  return p;
}

std::size_t save_pairs(std::span<const PreferencePair> pairs, const std::filesystem::path& path) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(pair_to_json(p));
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<PreferencePair> load_pairs(const std::filesystem::path& path) {
  return load_rows<PreferencePair>(path, pair_from_json);
}

std::size_t save_sft(std::span<const SftTrajectory> trajs, const std::filesystem::path& path) {
  std::vector<Json> rows;
  for (const auto& t : trajs) {
    rows.push_back(Json{{"format_version", kDataFormatVersion}, {"problem_id", t.problem_id},
                        {"steps", steps_to_json(t.steps)}});
  }
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<SftTrajectory> load_sft(const std::filesystem::path& path) {
  return load_rows<SftTrajectory>(path, [](const Json& j) {
    return SftTrajectory{j.at("problem_id").get<std::string>(), steps_from_json(j.at("steps"))};
  });
}

std::size_t save_response_pairs(std::span<const ResponsePair> pairs, const std::filesystem::path& path) {
  std::vector<Json> rows;
  for (const auto& p : pairs) {
    rows.push_back(Json{{"format_version", kDataFormatVersion}, {"problem_id", p.problem_id},
                        {"chosen", steps_to_json(p.chosen)}, {"rejected", steps_to_json(p.rejected)}});
  }
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<ResponsePair> load_response_pairs(const std::filesystem::path& path) {
  return load_rows<ResponsePair>(path, [](const Json& j) {
    return ResponsePair{j.at("problem_id").get<std::string>(), steps_from_json(j.at("chosen")),
                        steps_from_json(j.at("rejected"))};
  });
}

std::size_t save_value_labels(std::span<const ValueLabel> labels, const std::filesystem::path& path) {
  std::vector<Json> rows;
  for (const auto& l : labels) {
    rows.push_back(Json{{"format_version", kDataFormatVersion}, {"state_key", state_key(l.state)},
                        {"target", l.target}});
  }
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<ValueLabel> load_value_labels(const std::filesystem::path& path, const ExampleResolver& resolver) {
  return load_rows<ValueLabel>(path, [&](const Json& j) {
    const double t = j.at("target").get<double>();
    if (!(t >= -1.0 && t <= 1.0)) throw ParseError("target outside [-1, 1]");
    return ValueLabel{resolver.state(j.at("state_key").get<std::string>()), t};
  });
}

}  // namespace cpl
