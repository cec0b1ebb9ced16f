#include "mlfsm/explore.hpp"

#include <algorithm>
#include <unordered_set>

namespace mlfsm {

std::size_t ProductStateHash::operator()(const ProductState& s) const noexcept {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (auto c : s.clause_states) mix(c);
  for (const auto& v : s.vars) mix(v.is_bool() ? (v.as_bool() ? 0x51ull : 0x50ull) : static_cast<std::uint64_t>(v.as_int()));
  return h;
}

std::vector<ScriptStep> ReachabilitySet::witness(const ProductState& s) const {
  std::vector<ScriptStep> steps;
  ProductState cur = s;
  while (cur != initial) {
    auto it = parents.find(cur);
    if (it == parents.end()) return {};
    steps.push_back(it->second.step);
    cur = it->second.from;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::string ReachabilitySet::describe(const ProductState& s, const ContractSpec& spec) const {
  std::string out = "(";
  for (std::size_t i = 0; i < s.clause_states.size(); ++i) {
    if (i) out += ", ";
    out += clause_ids[i] + ":" + spec.clauses[i].states[s.clause_states[i]];
  }
  for (std::size_t k = 0; k < s.vars.size(); ++k)
    out += ", " + variables[k].first + "." + variables[k].second + "=" + s.vars[k].to_string();
  return out + ")";
}

namespace {

// Guards compiled against clause and variable indices.
struct CompiledGuard {
  bool completion = false;
  std::size_t clause = 0;
  const PackageFunction* fn = nullptr;
  std::vector<std::pair<std::string, std::size_t>> reads;  // variable name -> slot
};

struct CompiledTransition {
  std::uint32_t source;
  std::uint32_t destination;
  std::vector<CompiledGuard> guards;
};

struct FireEvent {
  std::size_t clause;
  std::string trigger;
  std::vector<CompiledTransition> transitions;
};

struct SetEvent {
  std::size_t slot;
  Value value;
};

class Model {
 public:
  Model(const ContractSpec& spec, const PackageSet& packages, ReachabilitySet& out) : spec_(spec) {
    std::set<std::string> used;
    for (const auto& c : spec.clauses)
      for (const auto& t : c.transitions)
        for (const auto& cond : t.conditions)
          if (cond.ref)
            if (const auto* call = std::get_if<PackageCall>(&*cond.ref)) used.insert(call->package);

    for (const auto& pkg_id : used) {
      const auto& pkg = packages.at(pkg_id);
      for (const auto& v : pkg.variables) {
        const std::size_t slot = out.variables.size();
        slots_[{pkg_id, v.name}] = slot;
        out.variables.emplace_back(pkg_id, v.name);
        out.initial.vars.push_back(v.initial);
        std::vector<Value> domain;
        if (v.test_domain) domain = *v.test_domain;
        else if (v.type == ValueType::Bool) domain = {Value::boolean(false), Value::boolean(true)};
        else throw DomainMissing("variable '" + pkg_id + "." + v.name + "' has no test_domain");
        for (const auto& value : domain) sets_.push_back({slot, value});
      }
    }

    for (std::size_t ci = 0; ci < spec.clauses.size(); ++ci) {
      const auto& c = spec.clauses[ci];
      out.clause_ids.push_back(c.id);
      out.initial.clause_states.push_back(static_cast<std::uint32_t>(*c.state_index(c.initial)));
      std::vector<bool> final_flags;
      for (const auto& s : c.states) final_flags.push_back(c.is_final(s));
      finals_.push_back(std::move(final_flags));
      for (const auto& trig : c.triggers()) {
        FireEvent ev{ci, trig, {}};
        for (const auto& t : c.transitions) {
          if (t.trigger != trig) continue;
          CompiledTransition ct{static_cast<std::uint32_t>(*c.state_index(t.source)),
                                static_cast<std::uint32_t>(*c.state_index(t.destination)),
                                {}};
          for (const auto& cond : t.conditions) {
            CompiledGuard g;
            if (const auto* dep = std::get_if<AutomatonCompleted>(&*cond.ref)) {
              g.completion = true;
              g.clause = *spec.index_of(dep->automaton);
            } else {
              const auto& call = std::get<PackageCall>(*cond.ref);
              g.fn = packages.at(call.package).find_function(call.function);
              for (const auto& name : referenced_variables(*g.fn->body))
                g.reads.emplace_back(name, slots_.at({call.package, name}));
            }
            ct.guards.push_back(std::move(g));
          }
          ev.transitions.push_back(std::move(ct));
        }
        fires_.push_back(std::move(ev));
      }
    }
  }

  bool is_final(std::size_t clause, std::uint32_t state) const { return finals_[clause][state]; }

  /// Appends every distinct successor different from `s`, in event order.
  void successors(const ProductState& s, std::vector<std::pair<ProductState, ScriptStep>>& out) const {
    for (const auto& ev : fires_) {
      const std::uint32_t cur = s.clause_states[ev.clause];
      for (const auto& t : ev.transitions) {
        if (t.source != cur) continue;
        if (std::all_of(t.guards.begin(), t.guards.end(), [&](const CompiledGuard& g) { return holds(g, s); })) {
          ProductState next = s;
          next.clause_states[ev.clause] = t.destination;
          if (next != s) out.emplace_back(std::move(next), ScriptStep::fire(spec_.clauses[ev.clause].id, ev.trigger));
        }
        break;
      }
    }
    for (const auto& set : sets_) {
      if (s.vars[set.slot] == set.value) continue;
      ProductState next = s;
      next.vars[set.slot] = set.value;
      out.emplace_back(std::move(next), ScriptStep::set(var_names_[set.slot].first, var_names_[set.slot].second, set.value));
    }
  }

  void set_var_names(std::vector<std::pair<std::string, std::string>> names) { var_names_ = std::move(names); }

 private:
  bool holds(const CompiledGuard& g, const ProductState& s) const {
    if (g.completion) return is_final(g.clause, s.clause_states[g.clause]);
    Bindings store;
    for (const auto& [name, slot] : g.reads) store.emplace(name, s.vars[slot]);
    return package_guard_holds(*g.fn, store);
  }

  const ContractSpec& spec_;
  std::map<std::pair<std::string, std::string>, std::size_t> slots_;
  std::vector<std::pair<std::string, std::string>> var_names_;
  std::vector<std::vector<bool>> finals_;
  std::vector<FireEvent> fires_;
  std::vector<SetEvent> sets_;
};

}  // namespace

ReachabilitySet explore(const ContractSpec& spec, const PackageSet& packages, std::size_t max_depth, Exec exec) {
  auto diags = validate(spec, packages, Exec::serial);
  if (has_errors(diags)) throw SpecNotValidated(std::move(diags));

  ReachabilitySet out;
  Model model(spec, packages, out);
  model.set_var_names(out.variables);

  std::unordered_set<ProductState, ProductStateHash> visited{out.initial};
  std::vector<ProductState> frontier{out.initial};

  for (std::size_t depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<std::vector<std::pair<ProductState, ScriptStep>>> expanded(frontier.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(frontier.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
      for (std::ptrdiff_t i = 0; i < n; ++i) model.successors(frontier[i], expanded[i]);
    } else {
      for (std::ptrdiff_t i = 0; i < n; ++i) model.successors(frontier[i], expanded[i]);
    }

    std::vector<ProductState> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      for (auto& [succ, step] : expanded[i]) {
        if (!visited.insert(succ).second) continue;
        out.parents.emplace(succ, ReachabilitySet::Parent{frontier[i], std::move(step)});
        next.push_back(std::move(succ));
      }
    }
    frontier = std::move(next);
  }

  out.states.insert(visited.begin(), visited.end());
  out.completable.assign(spec.clauses.size(), false);
  for (const auto& s : out.states)
    for (std::size_t ci = 0; ci < s.clause_states.size(); ++ci)
      if (model.is_final(ci, s.clause_states[ci])) out.completable[ci] = true;
  return out;
}

}  // namespace mlfsm
