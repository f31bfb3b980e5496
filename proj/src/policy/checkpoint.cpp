#include "cpl/error.hpp"
#include "cpl/json_io.hpp"
#include "cpl/policy.hpp"

namespace cpl {

void save_policy(const PolicyParams& p, const std::filesystem::path& path) {
  const Json j{{"kind", "policy"}, {"feature_dim", p.feature_dim}, {"version", p.version}, {"weights", p.weights}};
  write_file(path, j.dump() + "\n");
}

PolicyParams load_policy(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (j.value("kind", std::string("policy")) != "policy") throw ParseError(path.string() + ": not a policy checkpoint");
  PolicyParams p;
  try {
    p.feature_dim = j.at("feature_dim").get<std::size_t>();
    p.version = j.at("version").get<std::uint64_t>();
    p.weights = j.at("weights").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (p.weights.size() != p.feature_dim) throw ParseError(path.string() + ": weights length != feature_dim");
  return p;
}

}  // namespace cpl
