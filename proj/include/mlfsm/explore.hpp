#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlfsm/errors.hpp"
#include "mlfsm/exec.hpp"
#include "mlfsm/interpreter.hpp"

namespace mlfsm {

class DomainMissing : public Error {
 public:
  using Error::Error;
};

/// One point of the product state space: a state index per clause plus one
/// value per explored package variable.
struct ProductState {
  std::vector<std::uint32_t> clause_states;
  std::vector<Value> vars;

  friend bool operator==(const ProductState&, const ProductState&) = default;
  friend auto operator<=>(const ProductState&, const ProductState&) = default;
};

struct ProductStateHash {
  std::size_t operator()(const ProductState& s) const noexcept;
};

struct ReachabilitySet {
  std::vector<std::string> clause_ids;
  /// (package id, variable name) for each entry of ProductState::vars.
  std::vector<std::pair<std::string, std::string>> variables;
  std::set<ProductState> states;
  /// Per clause: some reachable state has it in a final state.
  std::vector<bool> completable;
  ProductState initial;

  bool contains(const ProductState& s) const { return states.contains(s); }
  /// Shortest event sequence (set/fire steps) from the initial state to `s`.
  std::vector<ScriptStep> witness(const ProductState& s) const;
  std::string describe(const ProductState& s, const ContractSpec& spec) const;

  struct Parent {
    ProductState from;
    ScriptStep step;
  };
  std::unordered_map<ProductState, Parent, ProductStateHash> parents;
};

/// Exhaustive breadth-first search over all fire events (every clause, every
/// trigger) and all set events (every explored variable, every domain value),
/// up to `max_depth` events. Explored variables are those of packages the spec
/// references; int variables need a `test_domain`, bool variables default to
/// {false, true}.
///
/// Exec::parallel expands each BFS level with OpenMP and merges successors in
/// frontier order, so both paths return identical sets and witnesses.
ReachabilitySet explore(const ContractSpec& spec, const PackageSet& packages, std::size_t max_depth,
                        Exec exec = Exec::parallel);

}  // namespace mlfsm
