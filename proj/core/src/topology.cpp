#include "xtalk/topology.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace {

Edge make_edge(int a, int b, EdgeTag tag) {
  return a < b ? Edge{a, b, tag} : Edge{b, a, tag};
}

void append_unit_internal(std::vector<Edge>& edges, UnitKind unit, int first) {
  switch (unit) {
    case UnitKind::kNode:
      break;
    case UnitKind::kStick:
      edges.push_back(make_edge(first, first + 1, EdgeTag::kInternal));
      break;
    case UnitKind::kTriangle:
      edges.push_back(make_edge(first, first + 1, EdgeTag::kInternal));
      edges.push_back(make_edge(first + 1, first + 2, EdgeTag::kInternal));
      edges.push_back(make_edge(first, first + 2, EdgeTag::kInternal));
      break;
  }
}

QubitGraph build_shared_strip(ConfigKind config, int num_qubits) {
  if (num_qubits < 3) {
    throw ConfigError("shared-strip triangle composition requires at least 3 qubits, got " +
                      std::to_string(num_qubits));
  }
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b, EdgeTag tag) {
    Edge e = make_edge(a, b, tag);
    if (e.i != e.j && seen.emplace(e.i, e.j).second) edges.push_back(e);
  };
  for (int i = 0; i + 1 < num_qubits; ++i) {
    add(i, i + 1, EdgeTag::kInternal);
    if (i + 2 < num_qubits) add(i, i + 2, EdgeTag::kInternal);
  }
  if (config == ConfigKind::kRing) {
    // Close both rails modulo L.
    add(num_qubits - 1, 0, EdgeTag::kLink);
    add(num_qubits - 2, 0, EdgeTag::kLink);
    add(num_qubits - 1, 1, EdgeTag::kLink);
  }
  return QubitGraph(num_qubits, std::move(edges), UnitKind::kTriangle, config);
}

}  // namespace

QubitGraph::QubitGraph(int num_qubits, std::vector<Edge> edges, UnitKind unit,
                       ConfigKind config)
    : num_qubits_(num_qubits), edges_(std::move(edges)), unit_(unit), config_(config) {
  if (num_qubits_ < 1) throw ConfigError("graph must contain at least one qubit");
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j >= num_qubits_ || e.i >= e.j) {
      throw ConfigError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                        ") violates 0 <= i < j < L");
    }
    if (!seen.emplace(e.i, e.j).second) {
      throw ConfigError("duplicate edge (" + std::to_string(e.i) + ", " +
                        std::to_string(e.j) + ")");
    }
  }
}

bool QubitGraph::is_connected() const {
  std::vector<std::vector<int>> adj(num_qubits_);
  for (const Edge& e : edges_) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(num_qubits_, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == num_qubits_;
}

double QubitGraph::average_degree() const {
  return 2.0 * static_cast<double>(edges_.size()) / num_qubits_;
}

int qubits_per_unit(UnitKind unit) {
  switch (unit) {
    case UnitKind::kNode: return 1;
    case UnitKind::kStick: return 2;
    case UnitKind::kTriangle: return 3;
  }
  return 1;
}

int internal_edges_per_unit(UnitKind unit) {
  switch (unit) {
    case UnitKind::kNode: return 0;
    case UnitKind::kStick: return 1;
    case UnitKind::kTriangle: return 3;
  }
  return 0;
}

QubitGraph build_graph(UnitKind unit, ConfigKind config, int n_units, CompositionRule rule) {
  if (n_units < 1) {
    throw ConfigError("n_units must be positive, got " + std::to_string(n_units));
  }
  if (config == ConfigKind::kTree && unit != UnitKind::kNode) {
    throw ConfigError("tree configuration is only defined for node units");
  }
  if (unit == UnitKind::kTriangle && rule == CompositionRule::kSharedStrip) {
    if (config == ConfigKind::kRing && n_units < 3) {
      throw ConfigError("ring requires ≥ 3 units");
    }
    return build_shared_strip(config, n_units);
  }
  if (config == ConfigKind::kRing && n_units < 3) {
    throw ConfigError("ring requires ≥ 3 units, got " + std::to_string(n_units));
  }

  const int per_unit = qubits_per_unit(unit);
  const int num_qubits = per_unit * n_units;
  std::vector<Edge> edges;

  if (config == ConfigKind::kTree) {
    // Balanced binary tree filled in level order: vertex v hangs off (v-1)/2.
    for (int v = 1; v < n_units; ++v) {
      edges.push_back(make_edge((v - 1) / 2, v, EdgeTag::kLink));
    }
    return QubitGraph(num_qubits, std::move(edges), unit, config);
  }

  for (int k = 0; k < n_units; ++k) {
    const int first = k * per_unit;
    append_unit_internal(edges, unit, first);
    if (k + 1 < n_units) {
      edges.push_back(make_edge(first + per_unit - 1, first + per_unit, EdgeTag::kLink));
    }
  }
  if (config == ConfigKind::kRing) {
    edges.push_back(make_edge(0, num_qubits - 1, EdgeTag::kLink));
  }
  return QubitGraph(num_qubits, std::move(edges), unit, config);
}

std::uint64_t neel_basis_index(const QubitGraph& graph) {
  std::uint64_t index = 0;
  for (int i = 1; i < graph.num_qubits(); i += 2) index |= std::uint64_t{1} << i;
  return index;
}

std::string export_dot(const QubitGraph& graph) {
  std::ostringstream out;
  out << "graph qubits {\n";
  out << "  // unit=" << to_string(graph.unit()) << " config=" << to_string(graph.config())
      << " L=" << graph.num_qubits() << "\n";
  out << "  node [shape=circle];\n";
  for (int v = 0; v < graph.num_qubits(); ++v) {
    out << "  " << v << " [label=\"" << v << "\"];\n";
  }
  for (const Edge& e : graph.edges()) {
    out << "  " << e.i << " -- " << e.j;
    if (e.tag == EdgeTag::kInternal) {
      out << " [color=gray, style=solid];\n";
    } else {
      out << " [color=red];\n";
    }
  }
  out << "}\n";
  return out.str();
}

nlohmann::json graph_to_json(const QubitGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : graph.edges()) {
    edges.push_back({e.i, e.j, std::string(to_string(e.tag))});
  }
  return {
      {"L", graph.num_qubits()},
      {"unit", std::string(to_string(graph.unit()))},
      {"config", std::string(to_string(graph.config()))},
      {"edges", std::move(edges)},
  };
}

QubitGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& row : j.at("edges")) {
      if (!row.is_array() || row.size() != 3) throw ConfigError("edge entries must be [i, j, tag]");
      const std::string tag = row.at(2).get<std::string>();
      EdgeTag parsed;
      if (tag == "internal") {
        parsed = EdgeTag::kInternal;
      } else if (tag == "link") {
        parsed = EdgeTag::kLink;
      } else {
        throw ConfigError("unknown edge tag '" + tag + "'");
      }
      edges.push_back(Edge{row.at(0).get<int>(), row.at(1).get<int>(), parsed});
    }
    return QubitGraph(j.at("L").get<int>(), std::move(edges),
                      parse_unit(j.at("unit").get<std::string>()),
                      parse_config(j.at("config").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed graph JSON: ") + e.what());
  }
}

std::string_view to_string(UnitKind unit) {
  switch (unit) {
    case UnitKind::kNode: return "node";
    case UnitKind::kStick: return "stick";
    case UnitKind::kTriangle: return "triangle";
  }
  return "?";
}

std::string_view to_string(ConfigKind config) {
  switch (config) {
    case ConfigKind::kChain: return "chain";
    case ConfigKind::kRing: return "ring";
    case ConfigKind::kTree: return "tree";
  }
  return "?";
}

std::string_view to_string(CompositionRule rule) {
  return rule == CompositionRule::kLinked ? "linked" : "shared_strip";
}

std::string_view to_string(EdgeTag tag) {
  return tag == EdgeTag::kInternal ? "internal" : "link";
}

UnitKind parse_unit(std::string_view text) {
  if (text == "node") return UnitKind::kNode;
  if (text == "stick") return UnitKind::kStick;
  if (text == "triangle") return UnitKind::kTriangle;
  throw ConfigError("unknown unit '" + std::string(text) + "' (expected node|stick|triangle)");
}

ConfigKind parse_config(std::string_view text) {
  if (text == "chain") return ConfigKind::kChain;
  if (text == "ring") return ConfigKind::kRing;
  if (text == "tree") return ConfigKind::kTree;
  throw ConfigError("unknown configuration '" + std::string(text) +
                    "' (expected chain|ring|tree)");
}

CompositionRule parse_composition(std::string_view text) {
  if (text == "linked") return CompositionRule::kLinked;
  if (text == "shared_strip") return CompositionRule::kSharedStrip;
  throw ConfigError("unknown composition rule '" + std::string(text) +
                    "' (expected linked|shared_strip)");
}

}  // namespace xtalk
