#include "examkit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "examkit/errors.hpp"
#include "examkit/irt_model.hpp"
#include "examkit/rng.hpp"

namespace examkit {
namespace {

// Stream tags keep the ability, cell, and prior draws independent.
constexpr std::uint64_t kThetaStream = 0x7468657461;  // "theta"
constexpr std::uint64_t kCellStream = 0x63656c6c;     // "cell"
constexpr std::uint64_t kPriorStream = 0x7072696f72;  // "prior"

std::vector<std::string> distinct_classes(const std::vector<SimItem>& items) {
  std::set<std::string> classes;
  for (const auto& it : items)
    if (it.kind != ExamKind::PreTest) classes.insert(it.class_id);
  return {classes.begin(), classes.end()};
}

}  // namespace

void SimulationSpec::validate() const {
  require(n_students > 0, ErrorCode::InvalidArgument,
          "n_students must be positive");
  require(!items.empty(), ErrorCode::InvalidArgument, "no items to simulate");
  std::set<std::string> ids;
  for (const auto& it : items) {
    require(!it.item_id.empty(), ErrorCode::InvalidArgument, "empty item_id");
    require(ids.insert(it.item_id).second, ErrorCode::InvalidArgument,
            "duplicate item_id '" + it.item_id + "'");
    require(std::isfinite(it.alpha) && it.alpha > 0.0,
            ErrorCode::InvalidArgument,
            "alpha must be positive and finite for '" + it.item_id + "'");
    require(std::isfinite(it.beta), ErrorCode::InvalidArgument,
            "beta must be finite for '" + it.item_id + "'");
    require(it.kind == ExamKind::PreTest || !it.class_id.empty(),
            ErrorCode::InvalidArgument,
            "semester-end item '" + it.item_id + "' needs a class_id");
  }
  if (!fixed_theta.empty())
    require(fixed_theta.size() == static_cast<std::size_t>(n_students),
            ErrorCode::InvalidArgument,
            "fixed_theta size must equal n_students");
  if (!assignment.empty()) {
    require(assignment.size() == static_cast<std::size_t>(n_students),
            ErrorCode::InvalidArgument,
            "assignment size must equal n_students");
    for (const auto& a : assignment) {
      require(!a.empty(), ErrorCode::InvalidArgument,
              "every student needs at least one assigned item");
      std::set<int> uniq;
      for (int j : a) {
        require(j >= 0 && j < static_cast<int>(items.size()),
                ErrorCode::InvalidArgument, "assigned item index out of range");
        require(uniq.insert(j).second, ErrorCode::InvalidArgument,
                "duplicate assigned item index");
      }
    }
  }
}

SimulationResult simulate_responses(const SimulationSpec& spec) {
  spec.validate();
  SimulationResult out;

  int n = spec.n_students;
  int j_count = static_cast<int>(spec.items.size());

  out.truth.theta.resize(n);
  if (spec.fixed_theta.empty()) {
    PhiloxRng rng(spec.seed, kThetaStream);
    for (int i = 0; i < n; ++i) {
      rng.set_block(static_cast<std::uint64_t>(i));
      out.truth.theta[i] = rng.normal();
    }
  } else {
    out.truth.theta = spec.fixed_theta;
  }
  out.truth.log_alpha.resize(j_count);
  out.truth.beta.resize(j_count);
  for (int j = 0; j < j_count; ++j) {
    out.truth.log_alpha[j] = std::log(spec.items[j].alpha);
    out.truth.beta[j] = spec.items[j].beta;
  }

  // Default assignment: every pre-test item plus the items of one class,
  // rotating students over classes in order.
  auto classes = distinct_classes(spec.items);
  std::vector<std::vector<int>> assignment = spec.assignment;
  out.student_class.assign(n, classes.empty() ? "all" : "");
  if (assignment.empty()) {
    std::vector<int> pretest;
    std::map<std::string, std::vector<int>> per_class;
    for (int j = 0; j < j_count; ++j) {
      if (spec.items[j].kind == ExamKind::PreTest)
        pretest.push_back(j);
      else
        per_class[spec.items[j].class_id].push_back(j);
    }
    assignment.resize(n);
    for (int i = 0; i < n; ++i) {
      assignment[i] = pretest;
      if (!classes.empty()) {
        const auto& cls = classes[i % classes.size()];
        out.student_class[i] = cls;
        const auto& extra = per_class[cls];
        assignment[i].insert(assignment[i].end(), extra.begin(), extra.end());
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j : assignment[i])
        if (spec.items[j].kind != ExamKind::PreTest) {
          out.student_class[i] = spec.items[j].class_id;
          break;
        }
      if (out.student_class[i].empty())
        out.student_class[i] = classes.empty() ? "all" : classes.front();
    }
  }

  PhiloxRng cell_rng(spec.seed, kCellStream);
  out.attempts.reserve(static_cast<std::size_t>(n) * 4);
  for (int i = 0; i < n; ++i) {
    for (int j : assignment[i]) {
      // One uniform per (student, item) cell, independent of iteration
      // order and of the ability values.
      cell_rng.set_block(mix64(static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(j)));
      double u = cell_rng.uniform();
      double p = response_probability(out.truth.theta[i], spec.items[j].alpha,
                                      spec.items[j].beta);
      RawAttempt row;
      char sid[16];
      std::snprintf(sid, sizeof(sid), "s%05d", i + 1);
      row.student_id = sid;
      row.item_id = spec.items[j].item_id;
      row.correct = u < p ? 1 : 0;
      row.attempt_index = 0;
      row.exam_kind = spec.items[j].kind;
      row.class_id = spec.items[j].kind == ExamKind::PreTest
                         ? out.student_class[i]
                         : spec.items[j].class_id;
      out.attempts.push_back(std::move(row));
    }
  }
  return out;
}

SimulationSpec draw_spec_from_priors(const PriorDrawConfig& cfg) {
  require(cfg.n_pretest >= 0 && cfg.n_classes >= 0 && cfg.items_per_class >= 0,
          ErrorCode::InvalidArgument, "negative item counts");
  require(cfg.n_pretest + cfg.n_classes * cfg.items_per_class > 0,
          ErrorCode::InvalidArgument, "no items requested");
  require(cfg.n_students > 0, ErrorCode::InvalidArgument,
          "n_students must be positive");
  if (!cfg.class_kinds.empty())
    require(cfg.class_kinds.size() == static_cast<std::size_t>(cfg.n_classes),
            ErrorCode::InvalidArgument,
            "class_kinds size must equal n_classes");

  PhiloxRng rng(cfg.seed, kPriorStream);
  rng.set_block(0);
  auto half_cauchy = [&]() { return std::tan(rng.uniform() * 1.5707963267948966); };
  double mu_alpha = rng.normal();
  double mu_beta = rng.normal();
  double sigma_alpha = half_cauchy();
  double sigma_beta = half_cauchy();
  // A heavy-tailed scale draw occasionally produces a degenerate design;
  // cap at a value that keeps simulated exams informative.
  sigma_alpha = std::min(sigma_alpha, 1.5);
  sigma_beta = std::min(sigma_beta, 2.0);

  SimulationSpec spec;
  spec.n_students = cfg.n_students;
  spec.seed = cfg.seed;

  auto draw_item = [&](std::uint64_t idx, const std::string& id, ExamKind kind,
                       const std::string& cls) {
    rng.set_block(idx + 1);
    SimItem it;
    it.item_id = id;
    it.alpha = std::exp(mu_alpha + sigma_alpha * rng.normal());
    it.beta = mu_beta + sigma_beta * rng.normal();
    it.kind = kind;
    it.class_id = cls;
    spec.items.push_back(std::move(it));
  };

  std::uint64_t idx = 0;
  char buf[48];
  for (int j = 0; j < cfg.n_pretest; ++j) {
    std::snprintf(buf, sizeof(buf), "pre_%02d", j + 1);
    draw_item(idx++, buf, ExamKind::PreTest, "");
  }
  for (int c = 0; c < cfg.n_classes; ++c) {
    ExamKind kind = cfg.class_kinds.empty()
                        ? (c % 2 == 0 ? ExamKind::AiGenerated
                                      : ExamKind::Standardized)
                        : cfg.class_kinds[c];
    char cls[32];
    std::snprintf(cls, sizeof(cls), "class_%02d", c + 1);
    for (int j = 0; j < cfg.items_per_class; ++j) {
      std::snprintf(buf, sizeof(buf), "%s_q%02d", cls, j + 1);
      draw_item(idx++, buf, kind, cls);
    }
  }
  return spec;
}

}  // namespace examkit
