#include <fstream>
#include <sstream>

#include "cpl/error.hpp"
#include "cpl/json_io.hpp"

namespace cpl {

namespace {

Json operand_to_json(const ArithOperand& o) {
  if (o.is_ref()) return "q" + std::to_string(o.ref + 1);
  return o.constant;
}

ArithOperand operand_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s.size() < 2 || s[0] != 'q') throw ParseError("bad quantity reference '" + s + "'");
    return ArithOperand{std::stoi(s.substr(1)) - 1, 0};
  }
  return ArithOperand{-1, j.get<std::int64_t>()};
}

std::string op_to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add:
      return "+";
    case ArithOp::Sub:
      return "-";
    case ArithOp::Mul:
      return "*";
  }
  return "?";
}

ArithOp op_from_string(const std::string& s) {
  if (s == "+") return ArithOp::Add;
  if (s == "-") return ArithOp::Sub;
  if (s == "*") return ArithOp::Mul;
  throw ParseError("unknown op '" + s + "'");
}

Json cell_to_json(Cell c) { return Json::array({c.row, c.col}); }
Cell cell_from_json(const Json& j) { return Cell{j.at(0).get<int>(), j.at(1).get<int>()}; }

Json spec_to_json(const ArithSpec& s) {
  Json qs = Json::array();
  for (std::size_t i = 0; i < s.quantities.size(); ++i) {
    const auto& q = s.quantities[i];
    qs.push_back({{"name", "q" + std::to_string(i + 1)},
                  {"op", op_to_string(q.op)},
                  {"lhs", operand_to_json(q.lhs)},
                  {"rhs", operand_to_json(q.rhs)}});
  }
  return {{"quantities", qs}, {"target", "q" + std::to_string(s.target + 1)}};
}

Json spec_to_json(const GridSpec& g) {
  Json rows = Json::array();
  for (int r = 0; r < g.rows; ++r) {
    std::string line;
    for (int c = 0; c < g.cols; ++c) line += g.blocked[static_cast<std::size_t>(r * g.cols + c)] ? '#' : '.';
    rows.push_back(line);
  }
  Json wps = Json::array();
  for (const auto& w : g.waypoints) wps.push_back(cell_to_json(w));
  return {{"rows", g.rows},
          {"cols", g.cols},
          {"blocked", rows},
          {"start", cell_to_json(g.start)},
          {"goal", cell_to_json(g.goal)},
          {"waypoints", wps}};
}

ArithSpec arith_from_json(const Json& j) {
  ArithSpec s;
  for (const auto& q : j.at("quantities")) {
    s.quantities.push_back(ArithQuantity{op_from_string(q.at("op").get<std::string>()), operand_from_json(q.at("lhs")),
                                         operand_from_json(q.at("rhs"))});
  }
  s.target = operand_from_json(j.at("target")).ref;
  return s;
}

GridSpec grid_from_json(const Json& j) {
  GridSpec g;
  g.rows = j.at("rows").get<int>();
  g.cols = j.at("cols").get<int>();
  for (const auto& row : j.at("blocked")) {
    for (char ch : row.get<std::string>()) g.blocked.push_back(ch == '#' ? 1 : 0);
  }
  if (g.blocked.size() != static_cast<std::size_t>(g.rows * g.cols)) throw ParseError("grid size mismatch");
  g.start = cell_from_json(j.at("start"));
  g.goal = cell_from_json(j.at("goal"));
  for (const auto& w : j.at("waypoints")) g.waypoints.push_back(cell_from_json(w));
  return g;
}

}  // namespace

Json problem_to_json(const Problem& p) {
  Json spec = std::visit([](const auto& s) { return spec_to_json(s); }, p.spec);
  return {{"id", p.id}, {"env", p.env}, {"spec", spec}, {"ground_truth", p.ground_truth}};
}

Problem problem_from_json(const Json& j) {
  Problem p;
  p.id = j.at("id").get<std::string>();
  p.env = j.at("env").get<std::string>();
  if (p.env == "arith") {
    p.spec = arith_from_json(j.at("spec"));
  } else if (p.env == "grid") {
    p.spec = grid_from_json(j.at("spec"));
  } else {
    throw ParseError("unknown env '" + p.env + "'");
  }
  p.ground_truth = j.at("ground_truth").get<std::int64_t>();
  return p;
}

std::size_t save_problems(const std::vector<Problem>& problems, const std::filesystem::path& path) {
  std::vector<Json> rows;
  rows.reserve(problems.size());
  for (const auto& p : problems) rows.push_back(problem_to_json(p));
  write_jsonl(path, rows);
  return rows.size();
}

std::vector<Problem> load_problems(const std::filesystem::path& path) {
  std::vector<Problem> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) { out.push_back(problem_from_json(j)); });
  return out;
}

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
    try {
      fn(j, lineno);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(path.string() + ": " + e.what(), lineno);
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
  }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) os << r.dump() << '\n';
  write_file(path, os.str());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace cpl
