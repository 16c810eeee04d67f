#pragma once

// The `theory` subcommand: one seeded system (net, M, z0), every certificate
// in the theory module run against it, reported as text and CSV.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "genrec/experiment.hpp"
#include "genrec/theory.hpp"

namespace genrec {

struct TheoryConfig {
  NetSpec net = [] {
    NetSpec s;
    s.dims = {2, 6, 10};
    return s;
  }();
  Index m = 8;
  Index l = 2;
  Seed seed = 0;
  std::size_t candidates_per_radius = 334;  // about 10^3 candidates over three radii
  std::size_t grid_size = 1000;
  std::size_t beta_samples = 1'000'000;
  int adversarial = 3;
  int restarts = 3;
  std::filesystem::path out_dir = "theory_out";
};

/// Same key=value vocabulary as the run configuration where it overlaps, plus
/// candidates, grid, beta-samples, adversarial. m and outliers take one value.
void apply_theory_setting(TheoryConfig& cfg, std::string_view key, std::string_view value);

enum class CheckStatus { pass, fail, info, skip };
std::string_view to_string(CheckStatus status);

struct CheckRow {
  std::string check;
  CheckStatus status = CheckStatus::info;
  std::size_t instances = 0;
  std::size_t violations = 0;
  std::string detail;
};

struct TheoryReport {
  std::vector<std::string> header;  // description of the system under test
  std::vector<CheckRow> rows;

  bool violations_found() const;
};

TheoryReport run_theory(const TheoryConfig& cfg);

void write_theory_text(std::ostream& os, const TheoryReport& report);
void write_theory_csv(std::ostream& os, const TheoryReport& report);

/// Writes theory_report.txt and theory_report.csv; outputs are opened before
/// any computation.
TheoryReport run_theory_to_dir(const TheoryConfig& cfg);

}  // namespace genrec
