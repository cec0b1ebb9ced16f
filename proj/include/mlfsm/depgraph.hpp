#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlfsm/errors.hpp"
#include "mlfsm/model.hpp"

namespace mlfsm {

/// Clause-level dependency graph. An edge (x, y) means clause x waits on the
/// completion of clause y.
struct DependencyGraph {
  /// Automaton ids in declaration order.
  std::vector<std::string> nodes;
  /// (dependent, dependency) pairs.
  std::set<std::pair<std::string, std::string>> edges;

  std::vector<std::string> dependencies_of(const std::string& node) const;
  std::vector<std::string> dependents_of(const std::string& node) const;
};

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> witness);
  /// Closed walk, first id repeated at the end: [a0, a1, a0].
  const std::vector<std::string>& witness() const { return witness_; }

 private:
  std::vector<std::string> witness_;
};

class UnknownFocus : public Error {
 public:
  using Error::Error;
};

/// Edges from every `automata__<y>_iscompleted` guard. References to unknown
/// automata and self references are skipped; the validator reports them.
DependencyGraph build_graph(const ContractSpec& spec);

/// Dependencies first; ties broken by declaration order.
std::vector<std::string> topo_order(const DependencyGraph& graph);

/// Graphviz digraph with arrows drawn dependency -> dependent. A focused clause
/// is expanded into a cluster of its states and transitions.
std::string to_dot(const DependencyGraph& graph, const ContractSpec& spec,
                   const std::optional<std::string>& focus = std::nullopt);

std::string format_witness(const std::vector<std::string>& witness);

}  // namespace mlfsm
