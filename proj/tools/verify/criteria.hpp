#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace pcsnn::verify {

struct Options {
  std::uint64_t seed = 20240601;
  /// Shrinks corpus sizes and timing repeats (CLI smoke runs); tolerances are unchanged.
  bool quick = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct CriterionInfo {
  int id;
  const char* name;
  CriterionResult (*run)(const Options&);
};

/// Acceptance criteria 1..10 in order.
std::span<const CriterionInfo> criteria();

/// Runs one criterion, timing it; exceptions become a failing result.
CriterionResult run_criterion(const CriterionInfo& info, const Options& options);

/// "PASS [3] sorting-property: ..." style summary line.
std::string format_line(const CriterionResult& r);

}  // namespace pcsnn::verify
