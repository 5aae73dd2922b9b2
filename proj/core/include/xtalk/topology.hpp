#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace xtalk {

enum class UnitKind { kNode, kStick, kTriangle };
enum class ConfigKind { kChain, kRing, kTree };

// How triangle units are joined. kLinked uses one link edge between
// consecutive 3-qubit units (L = 3n). kSharedStrip builds a triangle strip on
// L qubits: edges (i, i+1) and (i, i+2), which admits any L >= 3.
enum class CompositionRule { kLinked, kSharedStrip };

enum class EdgeTag { kInternal, kLink };

struct Edge {
  int i = 0;
  int j = 0;
  EdgeTag tag = EdgeTag::kLink;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Immutable connectivity graph. Qubit indices run 0..num_qubits-1 and edges
// always satisfy i < j.
class QubitGraph {
 public:
  QubitGraph(int num_qubits, std::vector<Edge> edges, UnitKind unit,
             ConfigKind config);

  int num_qubits() const { return num_qubits_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_edges() const { return edges_.size(); }
  UnitKind unit() const { return unit_; }
  ConfigKind config() const { return config_; }

  bool is_connected() const;
  double average_degree() const;

 private:
  int num_qubits_;
  std::vector<Edge> edges_;
  UnitKind unit_;
  ConfigKind config_;
};

int qubits_per_unit(UnitKind unit);
int internal_edges_per_unit(UnitKind unit);

// For kSharedStrip the count argument is the qubit count L, not a unit count.
QubitGraph build_graph(UnitKind unit, ConfigKind config, int n_units,
                       CompositionRule rule = CompositionRule::kLinked);

// Computational-basis index of the alternating up/down product state. Qubit i
// is up for even i and down for odd i; a set bit marks a down spin.
std::uint64_t neel_basis_index(const QubitGraph& graph);

std::string export_dot(const QubitGraph& graph);

nlohmann::json graph_to_json(const QubitGraph& graph);
QubitGraph graph_from_json(const nlohmann::json& j);

std::string_view to_string(UnitKind unit);
std::string_view to_string(ConfigKind config);
std::string_view to_string(CompositionRule rule);
std::string_view to_string(EdgeTag tag);

UnitKind parse_unit(std::string_view text);
ConfigKind parse_config(std::string_view text);
CompositionRule parse_composition(std::string_view text);

}  // namespace xtalk
