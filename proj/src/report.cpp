#include "examkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "examkit/errors.hpp"
#include "examkit/storage.hpp"

namespace examkit {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  require(bool(os), ErrorCode::Io, "cannot open " + path.string());
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  require(bool(os), ErrorCode::Io, "write failed for " + path.string());
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

const std::vector<ExamKind> kAllKinds = {
    ExamKind::PreTest, ExamKind::AiGenerated, ExamKind::Standardized};

const std::vector<DiscriminationBin> kAllBins = {
    DiscriminationBin::BelowScale, DiscriminationBin::Low,
    DiscriminationBin::Moderate, DiscriminationBin::High,
    DiscriminationBin::VeryHigh};

}  // namespace

void check_csv_schema(const std::filesystem::path& file,
                      const std::string& expected_header,
                      const std::vector<bool>& numeric_columns) {
  std::ifstream is(file);
  require(bool(is), ErrorCode::Io, "cannot reopen " + file.string());
  std::string line;
  require(bool(std::getline(is, line)), ErrorCode::Io,
          "empty artifact " + file.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == expected_header, ErrorCode::DataIntegrity,
          "schema drift in " + file.string() + ": header '" + line + "'");
  std::size_t n_cols = split_line(expected_header).size();
  require(numeric_columns.size() == n_cols, ErrorCode::Internal,
          "numeric_columns mask does not match header");
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    auto fields = split_line(line);
    require(fields.size() == n_cols, ErrorCode::DataIntegrity,
            "row " + std::to_string(row) + " of " + file.string() + " has " +
                std::to_string(fields.size()) + " fields, want " +
                std::to_string(n_cols));
    for (std::size_t i = 0; i < n_cols; ++i) {
      if (!numeric_columns[i]) continue;
      char* end = nullptr;
      std::strtod(fields[i].c_str(), &end);
      require(end && *end == '\0' && end != fields[i].c_str(),
              ErrorCode::DataIntegrity,
              "non-numeric value '" + fields[i] + "' in " + file.string());
    }
  }
}

void write_report(const PosteriorDraws& draws, const ResponseMatrix& matrix,
                  const ReportOptions& options,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + out_dir.string());

  std::ostringstream digest;

  // Per-item summaries.
  auto items = summarize_items(draws, matrix, options.ci_level);
  {
    auto path = out_dir / "item_summary.csv";
    auto os = open_out(path);
    const std::string header =
        "item_id,exam_kind,alpha_mean,alpha_lo,alpha_hi,beta_mean,beta_lo,"
        "beta_hi,discrimination_bin";
    os << header << '\n';
    for (const auto& s : items) {
      os << s.item_id << ',' << to_string(s.exam_kind) << ','
         << fmt(s.alpha_mean) << ',' << fmt(s.alpha_lo) << ','
         << fmt(s.alpha_hi) << ',' << fmt(s.beta_mean) << ',' << fmt(s.beta_lo)
         << ',' << fmt(s.beta_hi) << ',' << to_string(s.bin) << '\n';
    }
    finish(os, path);
    check_csv_schema(path, header,
                     {false, false, true, true, true, true, true, true, false});
  }
  digest << "items: " << items.size() << " summarized\n";

  // Group contrasts over every kind pair present, both quantities.
  {
    auto path = out_dir / "contrasts.csv";
    auto os = open_out(path);
    const std::string header =
        "quantity,group_a,group_b,delta_mean,ci_lo,ci_hi,prob_positive,"
        "prob_negative";
    os << header << '\n';
    for (auto qty : {ContrastQuantity::MeanAlpha, ContrastQuantity::MeanBeta}) {
      for (std::size_t a = 0; a < kAllKinds.size(); ++a) {
        for (std::size_t b = a + 1; b < kAllKinds.size(); ++b) {
          if (matrix.items_of_kind(kAllKinds[a]).empty() ||
              matrix.items_of_kind(kAllKinds[b]).empty())
            continue;
          auto c = group_contrast(draws, matrix, qty, kAllKinds[a],
                                  kAllKinds[b], options.ci_level);
          os << to_string(qty) << ',' << to_string(c.group_a) << ','
             << to_string(c.group_b) << ',' << fmt(c.delta_mean) << ','
             << fmt(c.ci_lo) << ',' << fmt(c.ci_hi) << ','
             << fmt(c.prob_positive) << ',' << fmt(c.prob_negative) << '\n';
          digest << "contrast " << to_string(qty) << " "
                 << to_string(c.group_a) << "-" << to_string(c.group_b)
                 << ": " << fmt(c.delta_mean) << " [" << fmt(c.ci_lo) << ", "
                 << fmt(c.ci_hi) << "] P(>=0)=" << fmt(c.prob_positive)
                 << '\n';
        }
      }
    }
    finish(os, path);
    check_csv_schema(path, header,
                     {false, false, false, true, true, true, true, true});
  }

  // Discrimination bin occupancy per exam kind.
  {
    auto path = out_dir / "discrimination_bins.csv";
    auto os = open_out(path);
    const std::string header = "exam_kind,bin,count,proportion";
    os << header << '\n';
    for (auto kind : kAllKinds) {
      int total = 0;
      std::map<DiscriminationBin, int> counts;
      for (const auto& s : items)
        if (s.exam_kind == kind) {
          ++total;
          ++counts[s.bin];
        }
      if (total == 0) continue;
      for (auto bin : kAllBins) {
        int n = counts.count(bin) ? counts[bin] : 0;
        os << to_string(kind) << ',' << to_string(bin) << ',' << n << ','
           << fmt(static_cast<double>(n) / total) << '\n';
      }
    }
    finish(os, path);
    check_csv_schema(path, header, {false, false, true, true});
  }

  // Posterior predictive checks per kind.
  {
    auto sum_path = out_dir / "ppc_summary.csv";
    auto rep_path = out_dir / "ppc_replicates.csv";
    auto sum_os = open_out(sum_path);
    auto rep_os = open_out(rep_path);
    const std::string sum_header =
        "exam_kind,observed_proportion,ci_lo,ci_hi,observed_inside,n_draws";
    const std::string rep_header = "exam_kind,draw,proportion";
    sum_os << sum_header << '\n';
    rep_os << rep_header << '\n';
    for (auto kind : kAllKinds) {
      bool any = false;
      for (const auto& r : matrix.responses)
        if (matrix.item_kind[r.item] == kind) any = true;
      if (!any) continue;
      auto ppc = posterior_predictive_proportion(draws, matrix, kind,
                                                 options.ppc_seed,
                                                 options.ci_level,
                                                 options.ppc_max_draws);
      sum_os << to_string(kind) << ',' << fmt(ppc.observed_proportion) << ','
             << fmt(ppc.ci_lo) << ',' << fmt(ppc.ci_hi) << ','
             << (ppc.observed_inside ? 1 : 0) << ','
             << ppc.replicate_proportions.size() << '\n';
      for (std::size_t d = 0; d < ppc.replicate_proportions.size(); ++d)
        rep_os << to_string(kind) << ',' << d << ','
               << fmt(ppc.replicate_proportions[d]) << '\n';
      digest << "ppc " << to_string(kind) << ": observed "
             << fmt(ppc.observed_proportion) << " in [" << fmt(ppc.ci_lo)
             << ", " << fmt(ppc.ci_hi) << "] -> "
             << (ppc.observed_inside ? "inside" : "OUTSIDE") << '\n';
    }
    finish(sum_os, sum_path);
    finish(rep_os, rep_path);
    check_csv_schema(sum_path, sum_header,
                     {false, true, true, true, true, true});
    check_csv_schema(rep_path, rep_header, {false, true, true});
  }

  // Information and reliability curves per class.
  {
    auto curve_path = out_dir / "information_curves.csv";
    auto peak_path = out_dir / "information_peaks.csv";
    auto curve_os = open_out(curve_path);
    auto peak_os = open_out(peak_path);
    const std::string curve_header = "class_id,theta,information,reliability";
    const std::string peak_header =
        "class_id,exam_kind,n_items,peak_theta,peak_information,"
        "reliability_at_peak,information_at_zero";
    curve_os << curve_header << '\n';
    peak_os << peak_header << '\n';
    for (const auto& [class_id, item_idx] : matrix.class_items) {
      auto curve = class_information_curve(draws, matrix, class_id,
                                           options.grid,
                                           options.full_posterior_curves);
      for (std::size_t k = 0; k < curve.grid.size(); ++k)
        curve_os << class_id << ',' << fmt(curve.grid[k]) << ','
                 << fmt(curve.information[k]) << ','
                 << fmt(curve.reliability[k]) << '\n';
      double info_zero = 0.0;
      double best = std::fabs(curve.grid.front());
      for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        if (std::fabs(curve.grid[k]) <= best) {
          best = std::fabs(curve.grid[k]);
          info_zero = curve.information[k];
        }
      }
      peak_os << class_id << ','
              << to_string(matrix.class_kind.at(class_id)) << ','
              << item_idx.size() << ',' << fmt(curve.peak_theta) << ','
              << fmt(curve.peak_information) << ','
              << fmt(conditional_reliability(curve.peak_information)) << ','
              << fmt(info_zero) << '\n';
      digest << "curve " << class_id << ": peak " << fmt(curve.peak_information)
             << " at theta " << fmt(curve.peak_theta) << ", R(peak) "
             << fmt(conditional_reliability(curve.peak_information)) << '\n';
    }
    finish(curve_os, curve_path);
    finish(peak_os, peak_path);
    check_csv_schema(curve_path, curve_header, {false, true, true, true});
    check_csv_schema(peak_path, peak_header,
                     {false, false, true, true, true, true, true});
  }

  {
    auto path = out_dir / "report.txt";
    auto os = open_out(path);
    os << "draws: " << draws.n_chains() << " chains x " << draws.n_iterations()
       << " iterations, " << draws.n_parameters() << " parameters\n";
    os << "matrix: " << matrix.n_students() << " students x "
       << matrix.n_items() << " items, " << matrix.responses.size()
       << " responses\n";
    for (const auto& w : draws.warnings) os << "warning: " << w << '\n';
    os << digest.str();
    finish(os, path);
  }
}

}  // namespace examkit
