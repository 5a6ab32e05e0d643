#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "examkit/analysis.hpp"
#include "examkit/sampler.hpp"
#include "examkit/types.hpp"

namespace examkit {

struct ReportOptions {
  ThetaGrid grid;
  double ci_level = 0.95;
  std::uint64_t ppc_seed = 0;
  int ppc_max_draws = 0;       // 0: use every retained draw
  bool full_posterior_curves = false;
};

// Writes the full analysis artifact set into out_dir:
//   item_summary.csv        per-item posterior summaries and bins
//   contrasts.csv           AI vs standardized mean-alpha/mean-beta deltas
//   discrimination_bins.csv bin counts and proportions per exam kind
//   ppc_summary.csv         observed vs replicated proportion correct
//   ppc_replicates.csv      per-draw replicated proportions
//   information_curves.csv  per-class test information and reliability
//   information_peaks.csv   peak location/height and endpoint values
//   report.txt              human-readable digest of all of the above
// Every CSV is re-read and schema-checked after writing.
void write_report(const PosteriorDraws& draws, const ResponseMatrix& matrix,
                  const ReportOptions& options,
                  const std::filesystem::path& out_dir);

// Re-reads one written CSV and verifies header and row shape.
void check_csv_schema(const std::filesystem::path& file,
                      const std::string& expected_header,
                      const std::vector<bool>& numeric_columns);

}  // namespace examkit
