#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cpl/prefdata.hpp"

namespace cpl {

namespace {

struct Tally {
  double depth_sum = 0.0;
  std::size_t terminals = 0;
  std::size_t pos = 0;
  std::size_t neg = 0;

  void add(int depth, bool correct) {
    depth_sum += depth;
    ++terminals;
    ++(correct ? pos : neg);
  }
};

DatasetStats finish(const Tally& t, std::span<const PreferencePair> pairs) {
  DatasetStats s;
  s.avg_depth = t.terminals ? t.depth_sum / static_cast<double>(t.terminals) : 0.0;
  s.positives = t.pos;
  s.negatives = t.neg;
  if (t.neg > 0) {
    s.pos_neg_ratio = static_cast<double>(t.pos) / static_cast<double>(t.neg);
  } else {
    s.pos_neg_ratio = t.pos > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  for (const auto& p : pairs) ++(p.kind == StepKind::Plan ? s.plan_pair_count : s.solution_pair_count);
  return s;
}

}  // namespace

DatasetStats compute_stats(std::span<const PlanTree> trees, std::span<const PreferencePair> pairs) {
  Tally t;
  for (const auto& tree : trees) {
    for (const auto& n : tree.nodes) {
      if (n.N >= 1 && n.terminal_verdict) t.add(n.state.depth, n.terminal_verdict->correct);
    }
  }
  return finish(t, pairs);
}

DatasetStats compute_stats(std::span<const DumpedTree> trees, std::span<const PreferencePair> pairs) {
  Tally t;
  for (const auto& tree : trees) {
    std::vector<int> depth(tree.nodes.size(), 0);
    std::vector<int> index_of_id;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      if (n.id >= static_cast<int>(index_of_id.size())) index_of_id.resize(static_cast<std::size_t>(n.id) + 1, -1);
      index_of_id[static_cast<std::size_t>(n.id)] = static_cast<int>(i);
      // Pre-order guarantees the parent was seen first.
      if (n.parent_id >= 0) {
        depth[i] = depth[static_cast<std::size_t>(index_of_id[static_cast<std::size_t>(n.parent_id)])] + 1;
      }
      if (n.terminal && n.N >= 1 && n.correct) t.add(depth[i], *n.correct);
    }
  }
  return finish(t, pairs);
}

std::string format_pos_neg(const DatasetStats& s) {
  if (s.positives == 0) return s.negatives ? "0:" + std::to_string(s.negatives) : "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "1:%.2f", static_cast<double>(s.negatives) / static_cast<double>(s.positives));
  return buf;
}

std::string render_stats_table(const std::map<int, DatasetStats>& rounds) {
  std::ostringstream os;
  os << "| Round | Avg Depth | Pos:Neg | Plan Pairs | Solution Pairs |\n";
  os << "|------:|----------:|--------:|-----------:|---------------:|\n";
  for (const auto& [round, s] : rounds) {
    char depth[32];
    std::snprintf(depth, sizeof depth, "%.2f", s.avg_depth);
    os << "| " << round << " | " << depth << " | " << format_pos_neg(s) << " | " << s.plan_pair_count << " | "
       << s.solution_pair_count << " |\n";
  }
  return os.str();
}

}  // namespace cpl
