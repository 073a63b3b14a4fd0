#pragma once

#include <string>
#include <vector>

#include "ptrac/boundary_series.hpp"

namespace ptrac {

/// Everything a verification run needs; the seed fully determines the
/// random fields and sample points.
struct RunConfig {
  std::string model = "de_sitter";
  int d = 3;                 // de Sitter sphere dimension / cone n-1
  int points = 12;           // sample points per identity
  int weights = 3;           // random complex weights per degree
  std::uint64_t seed = 1;
  std::vector<std::string> suites;  // empty = all applicable
  int threads = 0;           // 0 = PTRAC_THREADS or 1
};

struct SuiteResult {
  std::string name;
  std::string identity;
  double max_residual = 0;
  double tolerance = 0;
  bool pass = false;
  std::string note;
};

/// All identity suites applicable to the configured model.
std::vector<SuiteResult> run_suites(const RunConfig& cfg);
std::vector<std::string> suite_names(const std::string& model);

/// The acceptance matrix: one entry per acceptance criterion, model choices
/// fixed by the criteria themselves.
std::vector<SuiteResult> run_acceptance(std::uint64_t seed);

/// Formula-to-code concordance table (identity, symbol, suite).
std::string concordance_text();

}  // namespace ptrac
