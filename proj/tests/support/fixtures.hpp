#pragma once

#include <filesystem>
#include <string>

#include "mlfsm/loader.hpp"

#ifndef MLFSM_FIXTURES_DIR
#error "MLFSM_FIXTURES_DIR must point at tests/fixtures"
#endif

namespace mlfsm::testing {

inline std::filesystem::path fixtures_dir() { return MLFSM_FIXTURES_DIR; }
inline std::filesystem::path fixture(const std::string& relative) { return fixtures_dir() / relative; }

inline ContractSpec load_spec_file(const std::filesystem::path& path) {
  return load_contract_spec(read_text_file(path), path.string());
}

inline ContractSpec two_clause() { return load_spec_file(fixture("specs/two_clause.json")); }
inline PackageSet fixture_packages() { return load_package_dir(fixture("packages")); }

}  // namespace mlfsm::testing
