#include "examkit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "examkit/errors.hpp"

namespace examkit {
namespace {

using Chains = std::vector<std::vector<double>>;

void check_shape(const Chains& chains) {
  require(chains.size() >= 2, ErrorCode::InvalidArgument,
          "diagnostics need at least 2 chains");
  for (const auto& c : chains) {
    require(c.size() == chains.front().size(), ErrorCode::InvalidArgument,
            "diagnostics need equal-length chains");
    require(c.size() >= 4, ErrorCode::InvalidArgument,
            "diagnostics need at least 4 draws per chain");
  }
}

// Halves each chain; the middle draw of an odd chain is dropped.
Chains split_halves(const Chains& chains) {
  Chains out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    std::size_t h = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + h);
    out.emplace_back(c.end() - h, c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

double sample_variance(const std::vector<double>& x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / (x.size() - 1);
}

bool all_equal(const Chains& chains) {
  double first = chains.front().front();
  for (const auto& c : chains)
    for (double v : c)
      if (v != first) return false;
  return true;
}

// Split R-hat on pre-split chains.
double rhat_of_split(const Chains& sc) {
  std::size_t m = sc.size();
  std::size_t n = sc.front().size();
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(sc[j]);
    vars[j] = sample_variance(sc[j], means[j]);
  }
  double w = mean_of(vars);
  if (w == 0.0) return 1.0;
  double grand = mean_of(means);
  double b = n * sample_variance(means, grand);
  double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Lag-t autocovariance of one chain, normalized by n (biased form).
double autocovariance(const std::vector<double>& x, double mean, std::size_t t) {
  std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + t < n; ++i)
    s += (x[i] - mean) * (x[i + t] - mean);
  return s / n;
}

// Effective sample size of pre-split chains via Geyer's initial monotone
// sequence over the multi-chain autocorrelation estimate.
double ess_of_split(const Chains& sc) {
  std::size_t m = sc.size();
  std::size_t n = sc.front().size();
  double total = static_cast<double>(m) * n;

  std::vector<double> means(m);
  std::vector<double> c0(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(sc[j]);
    c0[j] = autocovariance(sc[j], means[j], 0);
  }
  double mean_var = mean_of(c0) * n / (n - 1.0);
  double var_plus = mean_var * (n - 1.0) / n;
  if (m > 1) var_plus += sample_variance(means, mean_of(means));
  if (var_plus == 0.0) return total;

  auto mean_acov = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += autocovariance(sc[j], means[j], t);
    return s / m;
  };

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;

  // Accumulate paired lags while the pair sum stays positive.
  std::size_t lag_bound = n > 4 ? n - 4 : 0;
  std::size_t t = 1;
  while (t < lag_bound && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  std::size_t max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho[max_t + 1] = rho_even;

  // Enforce monotone decrease of the pair sums.
  for (std::size_t s = 1; s + 3 <= max_t; s += 2) {
    if (rho[s + 1] + rho[s + 2] > rho[s - 1] + rho[s]) {
      rho[s + 1] = (rho[s - 1] + rho[s]) / 2.0;
      rho[s + 2] = rho[s + 1];
    }
  }

  double tau = -1.0;
  for (std::size_t s = 0; s < max_t; ++s) tau += 2.0 * rho[s];
  if (max_t + 1 < n) tau += rho[max_t + 1];
  if (!(tau > 0.0)) return total * std::log10(total);
  return std::min(total / tau, total * std::log10(total));
}

// Pooled fractional ranks mapped through the normal quantile function.
Chains rank_normalize(const Chains& chains) {
  std::size_t m = chains.size();
  std::size_t n = chains.front().size();
  std::size_t total = m * n;
  std::vector<std::pair<double, std::size_t>> order(total);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i)
      order[j * n + i] = {chains[j][i], j * n + i};
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<double> rank(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && order[j + 1].first == order[i].first) ++j;
    double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;  // 1-based midrank
    for (std::size_t k = i; k <= j; ++k) rank[order[k].second] = avg;
    i = j + 1;
  }

  Chains out(m, std::vector<double>(n));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n; ++k)
      out[j][k] =
          inverse_normal_cdf((rank[j * n + k] - 0.375) / (total + 0.25));
  return out;
}

std::vector<double> pool(const Chains& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

Chains extract_param(const PosteriorDraws& draws, const std::string& parameter) {
  int idx = draws.parameter_index(parameter);
  require(idx >= 0, ErrorCode::InvalidArgument,
          "unknown parameter: " + parameter);
  Chains chains;
  chains.reserve(draws.n_chains());
  for (std::size_t c = 0; c < draws.n_chains(); ++c)
    chains.push_back(draws.chain_column(c, static_cast<std::size_t>(idx)));
  return chains;
}

}  // namespace

double split_rhat_chains(const Chains& chains) {
  check_shape(chains);
  return rhat_of_split(split_halves(chains));
}

EssResult ess_bulk_chains(const Chains& chains) {
  check_shape(chains);
  double total = static_cast<double>(chains.size()) * chains.front().size();
  if (all_equal(chains)) return {total, true};
  return {ess_of_split(split_halves(rank_normalize(chains))), false};
}

EssResult ess_tail_chains(const Chains& chains) {
  check_shape(chains);
  double total = static_cast<double>(chains.size()) * chains.front().size();
  if (all_equal(chains)) return {total, true};

  auto indicator_ess = [&](double q) {
    Chains ind(chains.size());
    bool constant = true;
    double first = chains.front().front() <= q ? 1.0 : 0.0;
    for (std::size_t j = 0; j < chains.size(); ++j) {
      ind[j].resize(chains[j].size());
      for (std::size_t i = 0; i < chains[j].size(); ++i) {
        ind[j][i] = chains[j][i] <= q ? 1.0 : 0.0;
        if (ind[j][i] != first) constant = false;
      }
    }
    if (constant) return total;
    return ess_of_split(split_halves(ind));
  };

  auto pooled = pool(chains);
  double lo = indicator_ess(quantile(pooled, 0.05));
  double hi = indicator_ess(quantile(pooled, 0.95));
  return {std::min(lo, hi), false};
}

double split_rhat(const PosteriorDraws& draws, const std::string& parameter) {
  return split_rhat_chains(extract_param(draws, parameter));
}

EssResult ess_bulk(const PosteriorDraws& draws, const std::string& parameter) {
  return ess_bulk_chains(extract_param(draws, parameter));
}

EssResult ess_tail(const PosteriorDraws& draws, const std::string& parameter) {
  return ess_tail_chains(extract_param(draws, parameter));
}

DiagnosticsSummary diagnose(const PosteriorDraws& draws) {
  require(draws.n_parameters() > 0 && draws.n_chains() > 0,
          ErrorCode::InvalidArgument, "empty draws object");
  DiagnosticsSummary out;
  out.warnings = draws.warnings;
  out.max_rhat = 0.0;
  out.min_ess_bulk = std::numeric_limits<double>::infinity();
  out.min_ess_tail = std::numeric_limits<double>::infinity();
  for (const auto& s : draws.chain_stats) out.total_divergences += s.divergences;

  for (std::size_t p = 0; p < draws.n_parameters(); ++p) {
    Chains chains;
    chains.reserve(draws.n_chains());
    for (std::size_t c = 0; c < draws.n_chains(); ++c)
      chains.push_back(draws.chain_column(c, p));

    ParameterDiagnostics d;
    d.name = draws.parameter_names[p];
    auto pooled = pool(chains);
    d.mean = mean_of(pooled);
    d.sd = pooled.size() > 1 ? std::sqrt(sample_variance(pooled, d.mean)) : 0.0;
    d.rhat = split_rhat_chains(chains);
    auto bulk = ess_bulk_chains(chains);
    auto tail = ess_tail_chains(chains);
    d.ess_bulk = bulk.ess;
    d.ess_tail = tail.ess;
    d.degenerate = bulk.degenerate;
    out.max_rhat = std::max(out.max_rhat, d.rhat);
    if (!d.degenerate) {
      out.min_ess_bulk = std::min(out.min_ess_bulk, d.ess_bulk);
      out.min_ess_tail = std::min(out.min_ess_tail, d.ess_tail);
    }
    out.parameters.push_back(std::move(d));
  }
  if (!std::isfinite(out.min_ess_bulk)) out.min_ess_bulk = 0.0;
  if (!std::isfinite(out.min_ess_tail)) out.min_ess_tail = 0.0;
  return out;
}

double inverse_normal_cdf(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::InvalidArgument,
          "inverse_normal_cdf needs p in (0, 1)");
  // Wichura (1988), algorithm AS 241, PPND16.
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), ErrorCode::InvalidArgument,
          "quantile of empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument,
          "quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  double h = p * (values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  double frac = h - lo;
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace examkit
