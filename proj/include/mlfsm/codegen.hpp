#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsm/errors.hpp"
#include "mlfsm/model.hpp"
#include "mlfsm/package.hpp"
#include "mlfsm/validator.hpp"

namespace mlfsm {

enum class UnitKind { Package, Clause, Orchestrator };

std::string_view to_string(UnitKind kind);

struct GeneratedUnit {
  UnitKind kind = UnitKind::Clause;
  /// Contract name: `Package_<id>`, `Clause_<id>` or `Orchestrator`.
  std::string id;
  std::string file_name;
  std::string source;
  /// Units whose addresses the constructor takes, in parameter order.
  std::vector<std::string> dependencies;
};

/// Units in emission order: referenced packages by id, clauses in dependency
/// order, then the orchestrator. Deployment order equals emission order.
struct GeneratedBundle {
  std::vector<GeneratedUnit> units;

  const GeneratedUnit* find(std::string_view id) const;
  std::vector<std::string> deployment_order() const;
  /// {"order": [...], "units": {id: {"file", "constructor_args"}}}
  std::string manifest_json() const;
};

class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, std::vector<Diagnostic> diagnostics = {});
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Validates, then emits and formats every unit. Throws GenerationError with
/// the validator's diagnostics when any error-severity diagnostic exists, or
/// when a spec name cannot be used as a target identifier.
GeneratedBundle generate(const ContractSpec& spec, const PackageSet& packages);

/// Re-indents by brace depth (4 spaces), strips trailing whitespace, collapses
/// blank runs, separates block members with one blank line and ends with a
/// single newline. Idempotent.
std::string format_source(std::string_view source);

/// Writes every unit plus manifest.json. Files are staged next to `out_dir`
/// and moved in only once all of them were written.
void write_bundle(const GeneratedBundle& bundle, const std::filesystem::path& out_dir);

/// Tokens the generator must never emit.
std::span<const std::string_view> forbidden_tokens();

/// Target-language keywords and globals that cannot name states, triggers or members.
bool is_reserved_word(std::string_view word);

}  // namespace mlfsm
