#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsm/codegen.hpp"
#include "mlfsm/exec.hpp"
#include "mlfsm/model.hpp"
#include "mlfsm/package.hpp"

namespace mlfsm {

enum class AuditSeverity { Info, Warn, Fail };

std::string_view to_string(AuditSeverity s);

/// Rule ids: S1..S3 look at the spec, A1..A7 at generated source.
struct AuditFinding {
  std::string rule;
  AuditSeverity severity = AuditSeverity::Info;
  std::string subject;  // clause id or unit id
  std::string detail;
  std::optional<std::size_t> line;  // 1-based, code rules only

  friend bool operator==(const AuditFinding&, const AuditFinding&) = default;
};

/// One source file to audit. `id` is the contract name or file stem.
struct SourceUnit {
  std::string id;
  std::string source;
};

/// S1 warn: no final state reachable from initial.
/// S2 warn: a guard function that reads no variable.
/// S3 info: a clause with neither dependencies nor dependents (only when
/// the spec has more than one clause).
std::vector<AuditFinding> audit_spec(const ContractSpec& spec, const PackageSet& packages);

/// A1..A7 over every unit; findings are grouped by unit in input order, then
/// by line. Exec::parallel audits units concurrently.
std::vector<AuditFinding> audit_sources(const std::vector<SourceUnit>& units, Exec exec = Exec::parallel);
std::vector<AuditFinding> audit_generated(const GeneratedBundle& bundle, Exec exec = Exec::parallel);

/// Every `*.sol` file directly inside `dir`, sorted by file name.
std::vector<SourceUnit> load_source_dir(const std::filesystem::path& dir);

bool has_failures(const std::vector<AuditFinding>& findings);
std::string findings_to_json(const std::vector<AuditFinding>& findings);
std::string format_finding(const AuditFinding& f);

/// Replaces comments and string literals by spaces, keeping newlines so line
/// numbers survive.
std::string strip_comments_and_strings(std::string_view source);

}  // namespace mlfsm
