#include "examkit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <thread>
#include <utility>

#include "examkit/errors.hpp"
#include "examkit/rng.hpp"

namespace examkit {
namespace {

constexpr double kDivergenceThreshold = 1000.0;
constexpr std::uint64_t kAuxBlockBase = std::uint64_t(1) << 62;

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Phase point along a trajectory.
struct Phase {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> g;  // gradient of logp at q
  double logp = 0.0;
};

struct Subtree {
  Phase minus;   // earliest state in trajectory order
  Phase plus;    // latest state in trajectory order
  Phase sample;  // multinomial pick within the subtree
  double log_sum_w = -std::numeric_limits<double>::infinity();
  bool valid = false;
  bool divergent = false;
};

// Nesterov dual averaging of log step size (Hoffman & Gelman 2014, sec 3.2).
class DualAveraging {
 public:
  void restart(double eps0) {
    mu_ = std::log(10.0 * eps0);
    log_eps_ = std::log(eps0);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    count_ = 0;
  }

  double update(double accept_prob, double target) {
    ++count_;
    double eta = 1.0 / (count_ + t0_);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target - accept_prob);
    log_eps_ = mu_ - std::sqrt(static_cast<double>(count_)) / gamma_ * h_bar_;
    double w = std::pow(static_cast<double>(count_), -kappa_);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
    return std::exp(log_eps_);
  }

  double final_step_size() const { return std::exp(log_eps_bar_); }

 private:
  double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0;
  double gamma_ = 0.05, t0_ = 10.0, kappa_ = 0.75;
  long count_ = 0;
};

// Running mean/variance for the diagonal metric windows.
class Welford {
 public:
  void reset(std::size_t dim) {
    n_ = 0;
    mean_.assign(dim, 0.0);
    m2_.assign(dim, 0.0);
  }
  void add(const std::vector<double>& x) {
    ++n_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - mean_[i];
      mean_[i] += d / n_;
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
  long count() const { return n_; }
  // Regularized variance estimate, shrunk toward a small diagonal.
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean_.size(), 1.0);
    if (n_ < 2) return v;
    double w = n_ / (n_ + 5.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      double var = m2_[i] / (n_ - 1);
      v[i] = w * var + (1.0 - w) * 1e-3;
      if (!(v[i] > 1e-10)) v[i] = 1e-10;
    }
    return v;
  }

 private:
  long n_ = 0;
  std::vector<double> mean_, m2_;
};

struct ChainResult {
  std::vector<double> draws;  // row-major constrained
  ChainStats stats;
  std::string error;  // non-empty if the chain aborted
  ErrorCode error_code = ErrorCode::Internal;
};

class NutsChain {
 public:
  NutsChain(const PosteriorTarget& target, const SamplerConfig& cfg, int chain)
      : target_(target),
        cfg_(cfg),
        dim_(target.dim()),
        rng_(cfg.seed, static_cast<std::uint64_t>(chain)),
        inv_metric_(target.dim(), 1.0) {
    max_depth_ = 0;
    // Allow doublings while the full tree stays within the leapfrog budget.
    while (((std::int64_t(1) << (max_depth_ + 1)) - 1) <= cfg.max_leapfrog_steps &&
           max_depth_ < 16)
      ++max_depth_;
  }

  ChainResult run() {
    ChainResult out;
    try {
      initialize();
      adapt_and_sample(out);
    } catch (const Error& e) {
      out.error = e.what();
      out.error_code = e.code();
    } catch (const std::exception& e) {
      out.error = e.what();
      out.error_code = ErrorCode::Internal;
    }
    return out;
  }

 private:
  void initialize() {
    q_.assign(dim_, 0.0);
    g_.assign(dim_, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      rng_.set_block(kAuxBlockBase + attempt);
      for (std::size_t i = 0; i < dim_; ++i) q_[i] = rng_.uniform(-2.0, 2.0);
      logp_ = target_.logp_grad(q_, g_);
      bool ok = std::isfinite(logp_);
      for (std::size_t i = 0; ok && i < dim_; ++i) ok = std::isfinite(g_[i]);
      if (ok) return;
    }
    throw_error(ErrorCode::SamplerInit,
                "no finite starting point found after 100 jittered attempts");
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) k += inv_metric_[i] * p[i] * p[i];
    return 0.5 * k;
  }

  // One leapfrog step in place; returns false when the state went non-finite.
  bool leapfrog(Phase& z, double eps) {
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.g[i];
    for (std::size_t i = 0; i < dim_; ++i) z.q[i] += eps * inv_metric_[i] * z.p[i];
    z.logp = target_.logp_grad(z.q, z.g);
    if (!std::isfinite(z.logp)) return false;
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(z.g[i])) return false;
    for (std::size_t i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.g[i];
    return true;
  }

  bool uturn(const Phase& minus, const Phase& plus) const {
    double dot_minus = 0.0, dot_plus = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      double dq = plus.q[i] - minus.q[i];
      dot_minus += dq * inv_metric_[i] * minus.p[i];
      dot_plus += dq * inv_metric_[i] * plus.p[i];
    }
    return dot_minus < 0.0 || dot_plus < 0.0;
  }

  // Extends the trajectory by 2^depth steps from z (advanced in place).
  Subtree build_tree(Phase& z, int depth, double dir, double h0) {
    if (depth == 0) {
      bool finite = leapfrog(z, dir * eps_);
      ++n_leapfrog_;
      double h = finite ? -z.logp + kinetic(z.p)
                        : std::numeric_limits<double>::infinity();
      double log_w = h0 - h;
      Subtree leaf;
      leaf.divergent = !(log_w > -kDivergenceThreshold);
      leaf.valid = !leaf.divergent;
      leaf.log_sum_w = log_w;
      leaf.minus = z;
      leaf.plus = z;
      leaf.sample = z;
      sum_accept_ += std::isfinite(log_w) ? std::min(1.0, std::exp(log_w)) : 0.0;
      ++n_accept_;
      return leaf;
    }
    Subtree first = build_tree(z, depth - 1, dir, h0);
    if (!first.valid) return first;
    Subtree second = build_tree(z, depth - 1, dir, h0);
    Subtree merged;
    merged.log_sum_w = log_sum_exp(first.log_sum_w, second.log_sum_w);
    merged.divergent = second.divergent;
    if (!second.valid) return merged;
    // Multinomial pick between subtree samples, biased by total weight.
    double p_second = std::exp(second.log_sum_w - merged.log_sum_w);
    merged.sample = (rng_.uniform() < p_second) ? std::move(second.sample)
                                                : std::move(first.sample);
    if (dir > 0) {
      merged.minus = std::move(first.minus);
      merged.plus = std::move(second.plus);
    } else {
      merged.minus = std::move(second.minus);
      merged.plus = std::move(first.plus);
    }
    merged.valid = !uturn(merged.minus, merged.plus);
    return merged;
  }

  // One NUTS transition from the current state; returns accept statistic.
  double transition(bool* divergent_out) {
    Phase init;
    init.q = q_;
    init.g = g_;
    init.logp = logp_;
    init.p.assign(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i)
      init.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
    double h0 = -init.logp + kinetic(init.p);

    Phase traj_minus = init;
    Phase traj_plus = init;
    Phase sample = init;
    double log_sum_w = 0.0;  // weight of the initial point
    sum_accept_ = 0.0;
    n_accept_ = 0;
    n_leapfrog_ = 0;
    *divergent_out = false;

    int depth = 0;
    for (; depth < max_depth_; ++depth) {
      double dir = (rng_.next_u32() & 1u) ? 1.0 : -1.0;
      Phase& end = dir > 0 ? traj_plus : traj_minus;
      Subtree sub = build_tree(end, depth, dir, h0);
      if (sub.divergent) *divergent_out = true;
      if (!sub.valid) break;
      double p_new = std::exp(std::min(0.0, sub.log_sum_w - log_sum_w));
      if (rng_.uniform() < p_new) sample = std::move(sub.sample);
      log_sum_w = log_sum_exp(log_sum_w, sub.log_sum_w);
      if (dir > 0)
        traj_plus = std::move(sub.plus);
      else
        traj_minus = std::move(sub.minus);
      if (uturn(traj_minus, traj_plus)) break;
    }
    if (depth == max_depth_) ++max_depth_hits_;

    q_ = std::move(sample.q);
    g_ = std::move(sample.g);
    logp_ = sample.logp;
    return n_accept_ > 0 ? sum_accept_ / n_accept_ : 0.0;
  }

  // Crude bisection to a step size whose one-step accept ratio straddles 1/2.
  void find_reasonable_step_size(std::uint64_t aux_block) {
    rng_.set_block(kAuxBlockBase + 0x1000 + aux_block);
    Phase z;
    z.q = q_;
    z.g = g_;
    z.logp = logp_;
    z.p.assign(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i)
      z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
    double h0 = -z.logp + kinetic(z.p);
    eps_ = std::min(eps_, 1.0);

    auto ratio = [&](double eps) {
      Phase trial = z;
      bool finite = leapfrog(trial, eps);
      if (!finite) return -std::numeric_limits<double>::infinity();
      return h0 - (-trial.logp + kinetic(trial.p));
    };

    double log_half = std::log(0.5);
    double r = ratio(eps_);
    double direction = r > log_half ? 1.0 : -1.0;
    for (int it = 0; it < 64; ++it) {
      r = ratio(eps_);
      if (direction > 0 ? (r <= log_half) : (r > log_half)) break;
      eps_ *= direction > 0 ? 2.0 : 0.5;
      if (eps_ > 1e7 || eps_ < 1e-10) break;
    }
    eps_ = std::clamp(eps_, 1e-10, 1e7);
  }

  void adapt_and_sample(ChainResult& out) {
    int n_warmup = cfg_.n_warmup;
    int n_samples = cfg_.n_samples;

    // Three-phase schedule: fast start, expanding metric windows, fast tail.
    int init_phase = std::max(1, static_cast<int>(0.15 * n_warmup));
    int term_phase = std::max(1, static_cast<int>(0.10 * n_warmup));
    int window_phase = n_warmup - init_phase - term_phase;
    if (window_phase < 0) {
      init_phase = n_warmup;
      term_phase = 0;
      window_phase = 0;
    }

    // Window boundaries within [init_phase, init_phase + window_phase).
    std::vector<int> window_ends;
    {
      int pos = init_phase;
      int size = 25;
      while (window_phase > 0 && pos < init_phase + window_phase) {
        int end = pos + size;
        // Absorb a remainder too small to double again.
        if (end + 2 * size > init_phase + window_phase)
          end = init_phase + window_phase;
        window_ends.push_back(std::min(end, init_phase + window_phase));
        pos = window_ends.back();
        size *= 2;
      }
    }

    eps_ = 1.0;
    find_reasonable_step_size(0);
    DualAveraging da;
    da.restart(eps_);
    Welford metric_acc;
    metric_acc.reset(dim_);
    std::size_t next_window = 0;

    int divergences_sampling = 0;
    double sum_accept_sampling = 0.0;
    int total = n_warmup + n_samples;
    std::vector<double> constrained(target_.constrained_dim());
    out.draws.reserve(static_cast<std::size_t>(n_samples) *
                      target_.constrained_dim());

    for (int it = 0; it < total; ++it) {
      rng_.set_block(static_cast<std::uint64_t>(it));
      bool divergent = false;
      double accept = transition(&divergent);

      if (it < n_warmup) {
        eps_ = da.update(accept, cfg_.target_accept);
        bool in_window = next_window < window_ends.size();
        if (in_window) metric_acc.add(q_);
        if (in_window && it + 1 == window_ends[next_window]) {
          inv_metric_ = metric_acc.regularized_variance();
          metric_acc.reset(dim_);
          ++next_window;
          find_reasonable_step_size(static_cast<std::uint64_t>(it) + 1);
          da.restart(eps_);
        }
        if (it + 1 == n_warmup) eps_ = da.final_step_size();
      } else {
        if (divergent) ++divergences_sampling;
        sum_accept_sampling += accept;
        target_.to_constrained(q_, constrained);
        out.draws.insert(out.draws.end(), constrained.begin(), constrained.end());
      }
    }

    out.stats.divergences = divergences_sampling;
    out.stats.divergence_rate =
        n_samples > 0 ? static_cast<double>(divergences_sampling) / n_samples : 0.0;
    out.stats.mean_accept = n_samples > 0 ? sum_accept_sampling / n_samples : 0.0;
    out.stats.step_size = eps_;
    out.stats.max_depth_hits = max_depth_hits_;
  }

  const PosteriorTarget& target_;
  const SamplerConfig& cfg_;
  std::size_t dim_;
  PhiloxRng rng_;
  std::vector<double> inv_metric_;
  std::vector<double> q_, g_;
  double logp_ = 0.0;
  double eps_ = 1.0;
  int max_depth_ = 10;
  double sum_accept_ = 0.0;
  long n_accept_ = 0;
  long n_leapfrog_ = 0;
  int max_depth_hits_ = 0;
};

// Gaussian random-walk Metropolis with the same adaptation windows; kept as
// a slow but dependable fallback.
class RandomWalkChain {
 public:
  RandomWalkChain(const PosteriorTarget& target, const SamplerConfig& cfg, int chain)
      : target_(target),
        cfg_(cfg),
        dim_(target.dim()),
        rng_(cfg.seed, static_cast<std::uint64_t>(chain)),
        scale_vec_(target.dim(), 1.0) {}

  ChainResult run() {
    ChainResult out;
    try {
      initialize();
      iterate(out);
    } catch (const Error& e) {
      out.error = e.what();
      out.error_code = e.code();
    } catch (const std::exception& e) {
      out.error = e.what();
      out.error_code = ErrorCode::Internal;
    }
    return out;
  }

 private:
  void initialize() {
    q_.assign(dim_, 0.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      rng_.set_block(kAuxBlockBase + attempt);
      for (std::size_t i = 0; i < dim_; ++i) q_[i] = rng_.uniform(-2.0, 2.0);
      logp_ = target_.logp(q_);
      if (std::isfinite(logp_)) return;
    }
    throw_error(ErrorCode::SamplerInit,
                "no finite starting point found after 100 jittered attempts");
  }

  void iterate(ChainResult& out) {
    int n_warmup = cfg_.n_warmup;
    int n_samples = cfg_.n_samples;
    double scale = 2.38 / std::sqrt(static_cast<double>(dim_));
    Welford acc;
    acc.reset(dim_);
    std::vector<double> prop(dim_);
    std::vector<double> constrained(target_.constrained_dim());
    int accepted_window = 0, window_len = 0;
    double sum_accept_sampling = 0.0;
    out.draws.reserve(static_cast<std::size_t>(n_samples) *
                      target_.constrained_dim());

    for (int it = 0; it < n_warmup + n_samples; ++it) {
      rng_.set_block(static_cast<std::uint64_t>(it));
      for (std::size_t i = 0; i < dim_; ++i)
        prop[i] = q_[i] + scale * scale_vec_[i] * rng_.normal();
      double lp = target_.logp(prop);
      bool accept = std::isfinite(lp) &&
                    std::log(rng_.uniform()) < lp - logp_;
      if (accept) {
        q_ = prop;
        logp_ = lp;
      }
      if (it < n_warmup) {
        ++window_len;
        accepted_window += accept ? 1 : 0;
        acc.add(q_);
        if (window_len == 50) {
          double rate = accepted_window / 50.0;
          scale *= std::exp(rate - 0.234);
          scale = std::clamp(scale, 1e-8, 1e4);
          if (acc.count() >= 100) {
            auto var = acc.regularized_variance();
            for (std::size_t i = 0; i < dim_; ++i) scale_vec_[i] = std::sqrt(var[i]);
          }
          accepted_window = 0;
          window_len = 0;
        }
      } else {
        sum_accept_sampling += accept ? 1.0 : 0.0;
        target_.to_constrained(q_, constrained);
        out.draws.insert(out.draws.end(), constrained.begin(), constrained.end());
      }
    }
    out.stats.mean_accept = n_samples > 0 ? sum_accept_sampling / n_samples : 0.0;
    out.stats.step_size = scale;
  }

  const PosteriorTarget& target_;
  const SamplerConfig& cfg_;
  std::size_t dim_;
  PhiloxRng rng_;
  std::vector<double> scale_vec_;
  std::vector<double> q_;
  double logp_ = 0.0;
};

ChainResult run_chain(const PosteriorTarget& target, const SamplerConfig& cfg,
                      int chain) {
  if (cfg.algorithm == SamplerConfig::Algorithm::RandomWalk)
    return RandomWalkChain(target, cfg, chain).run();
  return NutsChain(target, cfg, chain).run();
}

}  // namespace

void SamplerConfig::validate() const {
  require(n_chains >= 2, ErrorCode::InvalidArgument, "n_chains must be >= 2");
  require(n_warmup >= 20, ErrorCode::InvalidArgument, "n_warmup must be >= 20");
  require(n_samples >= 100, ErrorCode::InvalidArgument, "n_samples must be >= 100");
  require(target_accept > 0.0 && target_accept < 1.0, ErrorCode::InvalidArgument,
          "target_accept must lie in (0, 1)");
  require(max_leapfrog_steps >= 1, ErrorCode::InvalidArgument,
          "max_leapfrog_steps must be >= 1");
}

int PosteriorDraws::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < parameter_names.size(); ++i)
    if (parameter_names[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> PosteriorDraws::chain_column(std::size_t chain,
                                                 std::size_t param) const {
  std::size_t n = n_iterations();
  std::vector<double> col(n);
  for (std::size_t it = 0; it < n; ++it) col[it] = value(chain, it, param);
  return col;
}

std::vector<double> PosteriorDraws::pooled_column(std::size_t param) const {
  std::vector<double> col;
  col.reserve(n_chains() * n_iterations());
  for (std::size_t c = 0; c < n_chains(); ++c) {
    auto part = chain_column(c, param);
    col.insert(col.end(), part.begin(), part.end());
  }
  return col;
}

PosteriorDraws sample_target(const PosteriorTarget& target,
                             const SamplerConfig& config) {
  config.validate();
  require(target.dim() >= 1, ErrorCode::InvalidArgument,
          "target has no free parameters");

  std::vector<ChainResult> results(config.n_chains);
  std::vector<std::thread> workers;
  workers.reserve(config.n_chains);
  for (int c = 0; c < config.n_chains; ++c)
    workers.emplace_back(
        [&, c] { results[c] = run_chain(target, config, c); });
  for (auto& w : workers) w.join();

  for (const auto& r : results)
    if (!r.error.empty()) throw_error(r.error_code, r.error);

  PosteriorDraws out;
  out.parameter_names = target.constrained_names();
  out.config = config;
  out.draws.reserve(results.size());
  out.chain_stats.reserve(results.size());
  for (auto& r : results) {
    out.draws.push_back(std::move(r.draws));
    out.chain_stats.push_back(r.stats);
  }

  int total_div = 0;
  for (const auto& s : out.chain_stats) total_div += s.divergences;
  double div_rate =
      static_cast<double>(total_div) /
      (static_cast<double>(config.n_chains) * config.n_samples);
  if (div_rate > 0.10) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%.1f%% divergent transitions after warmup; estimates are "
                  "unreliable, consider raising target_accept",
                  100.0 * div_rate);
    out.warnings.push_back(buf);
  }
  return out;
}

PosteriorDraws sample(const ResponseMatrix& data, const SamplerConfig& config) {
  std::unique_ptr<PosteriorTarget> target =
      config.parameterization == SamplerConfig::Parameterization::Centered
          ? make_centered_target(data)
          : make_noncentered_target(data);
  return sample_target(*target, config);
}

}  // namespace examkit
