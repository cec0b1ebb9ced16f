#include "mlfsm/depgraph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>

namespace mlfsm {

std::vector<std::string> DependencyGraph::dependencies_of(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (from == node) out.push_back(to);
  return out;
}

std::vector<std::string> DependencyGraph::dependents_of(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (to == node) out.push_back(from);
  return out;
}

std::string format_witness(const std::vector<std::string>& witness) {
  std::string out;
  for (std::size_t i = 0; i < witness.size(); ++i) {
    if (i) out += " -> ";
    out += witness[i];
  }
  return out;
}

CycleError::CycleError(std::vector<std::string> witness)
    : Error("dependency cycle: " + format_witness(witness)), witness_(std::move(witness)) {}

DependencyGraph build_graph(const ContractSpec& spec) {
  DependencyGraph g;
  for (const auto& c : spec.clauses) g.nodes.push_back(c.id);
  for (const auto& c : spec.clauses) {
    for (const auto& t : c.transitions) {
      for (const auto& cond : t.conditions) {
        if (!cond.ref) continue;
        const auto* dep = std::get_if<AutomatonCompleted>(&*cond.ref);
        if (!dep || dep->automaton == c.id || !spec.find(dep->automaton)) continue;
        g.edges.emplace(c.id, dep->automaton);
      }
    }
  }
  return g;
}

std::vector<std::string> topo_order(const DependencyGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(graph.nodes[i], i);

  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<std::size_t>> dependents(n);
  std::vector<std::vector<std::size_t>> dependencies(n);
  for (const auto& [from, to] : graph.edges) {
    auto fi = index.find(from);
    auto ti = index.find(to);
    if (fi == index.end() || ti == index.end()) continue;
    ++pending[fi->second];
    dependents[ti->second].push_back(fi->second);
    dependencies[fi->second].push_back(ti->second);
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] == 0) ready.push(i);

  std::vector<std::string> order;
  std::vector<bool> done(n, false);
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    done[i] = true;
    order.push_back(graph.nodes[i]);
    for (std::size_t d : dependents[i])
      if (--pending[d] == 0) ready.push(d);
  }
  if (order.size() == n) return order;

  // Every remaining node still waits on a remaining dependency, so following the
  // lowest-index remaining dependency from the lowest-index remaining node must
  // revisit a node.
  std::size_t cur = 0;
  while (done[cur]) ++cur;
  std::vector<std::size_t> walk;
  std::vector<std::size_t> seen_at(n, n);
  while (seen_at[cur] == n) {
    seen_at[cur] = walk.size();
    walk.push_back(cur);
    std::size_t next = n;
    for (std::size_t d : dependencies[cur])
      if (!done[d]) next = std::min(next, d);
    cur = next;
  }
  std::vector<std::string> witness;
  for (std::size_t k = seen_at[cur]; k < walk.size(); ++k) witness.push_back(graph.nodes[walk[k]]);
  witness.push_back(graph.nodes[cur]);
  throw CycleError(std::move(witness));
}

namespace {

std::string quoted(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string state_node(const ClauseAutomaton& clause, const std::string& state) {
  return quoted(clause.id + "/" + state);
}

}  // namespace

std::string to_dot(const DependencyGraph& graph, const ContractSpec& spec, const std::optional<std::string>& focus) {
  const ClauseAutomaton* focused = nullptr;
  if (focus) {
    focused = spec.find(*focus);
    if (!focused || std::find(graph.nodes.begin(), graph.nodes.end(), *focus) == graph.nodes.end())
      throw UnknownFocus("unknown focus clause '" + *focus + "'");
  }

  const std::string ind = "    ";
  std::ostringstream out;
  out << "digraph " << quoted(spec.name) << " {\n";
  out << ind << "rankdir=LR;\n";
  if (focused) out << ind << "compound=true;\n";
  out << ind << "node [shape=box];\n";

  for (const auto& id : graph.nodes) {
    const auto* clause = spec.find(id);
    if (clause == focused) {
      out << ind << "subgraph " << quoted("cluster_" + id) << " {\n";
      out << ind << ind << "label=" << quoted(clause->name + " (" + id + ")") << ";\n";
      out << ind << ind << "node [shape=ellipse];\n";
      for (const auto& s : clause->states) {
        out << ind << ind << state_node(*clause, s) << " [label=" << quoted(s);
        if (s == clause->initial) out << ", style=bold";
        if (clause->is_final(s)) out << ", peripheries=2";
        out << "];\n";
      }
      for (const auto& t : clause->transitions) {
        std::string label = t.trigger;
        if (!t.conditions.empty()) {
          label += "\n[";
          for (std::size_t k = 0; k < t.conditions.size(); ++k) {
            if (k) label += ", ";
            label += t.conditions[k].token;
          }
          label += "]";
        }
        out << ind << ind << state_node(*clause, t.source) << " -> " << state_node(*clause, t.destination)
            << " [label=" << quoted(label) << "];\n";
      }
      out << ind << "}\n";
    } else {
      out << ind << quoted(id) << " [label=" << quoted(clause ? clause->name : id) << "];\n";
    }
  }

  // Edges in dependency -> dependent direction, ordered by (dependency, dependent) declaration index.
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) index.emplace(graph.nodes[i], i);
  std::vector<std::pair<std::string, std::string>> edges(graph.edges.begin(), graph.edges.end());
  std::sort(edges.begin(), edges.end(), [&](const auto& a, const auto& b) {
    return std::pair(index[a.second], index[a.first]) < std::pair(index[b.second], index[b.first]);
  });
  for (const auto& [dependent, dependency] : edges) {
    std::string from = quoted(dependency);
    std::string to = quoted(dependent);
    std::string attrs;
    if (focused && dependency == focused->id) {
      from = state_node(*focused, focused->initial);
      attrs = " [ltail=" + quoted("cluster_" + dependency) + "]";
    }
    if (focused && dependent == focused->id) {
      to = state_node(*focused, focused->initial);
      attrs = " [lhead=" + quoted("cluster_" + dependent) + "]";
    }
    out << ind << from << " -> " << to << attrs << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace mlfsm
