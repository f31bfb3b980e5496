#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpl/error.hpp"
#include "cpl/genadapter.hpp"

namespace cpl {

AdapterProposer::AdapterProposer(const Environment& env, const GenClient& client, const std::string& answer_pattern)
    : env_(env), client_(client) {
  try {
    answer_ = std::regex(answer_pattern);
  } catch (const std::regex_error& e) {
    throw ConfigError("invalid answer pattern: " + std::string(e.what()));
  }
  if (answer_.mark_count() < 1) throw ConfigError("answer pattern needs a capture group");
}

std::optional<StepAction> AdapterProposer::parse_answer(const std::string& text) const {
  std::smatch m;
  if (!std::regex_search(text, m, answer_)) return std::nullopt;
  try {
    return StepAction{StepKind::Solution, std::stoll(m[1].str()), text, {}};
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

Expansion AdapterProposer::propose(const Problem& p, const State& s, std::size_t k, double temperature,
                                   Rng& /*rng*/) const {
  GenRequest req;
  req.state = env_.render(p, s);
  req.k = static_cast<int>(k);
  req.temperature = temperature;
  req.kind = s.depth + 1 >= env_.max_depth() ? StepKind::Solution : StepKind::Plan;
  const GenResponse res = client_.propose(req);

  Expansion e;
  e.enumerated = false;
  for (std::size_t i = 0; i < res.proposals.size(); ++i) {
    const auto& text = res.proposals[i];
    auto answer = parse_answer(text);
    e.candidates.push_back(answer ? *answer : StepAction{StepKind::Plan, static_cast<std::int64_t>(i), text, {}});
    e.chosen.push_back(i);
  }
  const std::size_t n = e.candidates.size();
  if (res.logprobs) {
    const double mx = *std::max_element(res.logprobs->begin(), res.logprobs->end());
    for (double lp : *res.logprobs) e.priors.push_back(std::exp(lp - mx));
    const double z = std::accumulate(e.priors.begin(), e.priors.end(), 0.0);
    if (!std::isfinite(z) || z <= 0.0) throw ProtocolError("log-probabilities do not normalize");
    for (double& q : e.priors) q /= z;
  } else {
    e.priors.assign(n, 1.0 / static_cast<double>(n));
  }
  return e;
}

}  // namespace cpl
