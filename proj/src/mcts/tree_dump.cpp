#include "cpl/mcts.hpp"

namespace cpl {

namespace {

void dump_node(const PlanTree& tree, int id, Json& out) {
  const auto& n = tree.nodes[static_cast<std::size_t>(id)];
  const bool terminal = n.state.phase == Phase::Solved || n.state.depth >= tree.config.max_depth;
  Json j{{"id", id},
         {"parent_id", n.parent < 0 ? Json(nullptr) : Json(n.parent)},
         {"action_display", n.incoming_action ? Json(n.incoming_action->display) : Json(nullptr)},
         {"action_kind", n.incoming_action ? Json(std::string(to_string(n.incoming_action->kind))) : Json(nullptr)},
         {"N", n.N},
         {"V", n.V},
         {"Q_edge", n.Q_edge},
         {"terminal", terminal}};
  if (n.terminal_verdict) j["correct"] = n.terminal_verdict->correct;
  out.push_back(std::move(j));
  for (const int c : n.children) dump_node(tree, c, out);
}

}  // namespace

Json tree_to_json(const PlanTree& tree) {
  Json nodes = Json::array();
  if (!tree.nodes.empty()) dump_node(tree, 0, nodes);
  return {{"problem_id", tree.problem.id}, {"nodes", std::move(nodes)}};
}

std::string dump_tree(const PlanTree& tree) { return tree_to_json(tree).dump(); }

DumpedTree parse_tree_dump(const Json& j) {
  DumpedTree t;
  t.problem_id = j.at("problem_id").get<std::string>();
  for (const auto& n : j.at("nodes")) {
    DumpedNode d;
    d.id = n.at("id").get<int>();
    d.parent_id = n.at("parent_id").is_null() ? -1 : n.at("parent_id").get<int>();
    if (!n.at("action_display").is_null()) d.action_display = n.at("action_display").get<std::string>();
    if (!n.at("action_kind").is_null()) d.action_kind = n.at("action_kind").get<std::string>();
    d.N = n.at("N").get<int>();
    d.V = n.at("V").get<double>();
    d.Q_edge = n.at("Q_edge").get<double>();
    d.terminal = n.at("terminal").get<bool>();
    if (n.contains("correct")) d.correct = n.at("correct").get<bool>();
    t.nodes.push_back(std::move(d));
  }
  return t;
}

}  // namespace cpl
