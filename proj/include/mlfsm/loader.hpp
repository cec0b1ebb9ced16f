#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mlfsm/errors.hpp"
#include "mlfsm/model.hpp"
#include "mlfsm/package.hpp"

namespace mlfsm {

/// Document is not well-formed JSON.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, SourceLocation location)
      : Error(location.to_string() + ": " + message), location_(std::move(location)) {}
  const SourceLocation& location() const { return location_; }

 private:
  SourceLocation location_;
};

/// Well-formed JSON with the wrong shape: missing or unknown keys, wrong element kinds.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, SourceLocation location)
      : Error(location.to_string() + ": " + message), location_(std::move(location)) {}
  const SourceLocation& location() const { return location_; }

 private:
  SourceLocation location_;
};

class DuplicateClause : public Error {
 public:
  using Error::Error;
};

class DuplicatePackageId : public Error {
 public:
  using Error::Error;
};

/// Top-level object of clause name -> {states, transitions[, id, initial, finals]}.
/// Clause order follows the document. Only the shape is checked here.
ContractSpec load_contract_spec(std::string_view document, const std::string& origin);

PackageLibrary load_package(std::string_view document, const std::string& origin);

/// Loads every `*.pkg.json` in `dir`, in sorted file-name order.
PackageSet load_package_dir(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mlfsm
