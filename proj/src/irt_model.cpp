#include "examkit/irt_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "examkit/errors.hpp"

namespace examkit {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727417803297364056176;  // 0.5*log(2*pi)
constexpr double kLogTwoOverPi = -0.4515827052894548647261952298948821;  // log(2/pi)

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_normal_density(double x, double mu, double sigma, double log_sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - log_sigma - kHalfLog2Pi;
}

// Half-Cauchy(0,1) on sigma = exp(t), including the d(sigma)/dt Jacobian:
// log p(t) = log(2/pi) + t - log(1 + exp(2t)).
inline double log_half_cauchy_on_log_scale(double t) {
  return kLogTwoOverPi + t - log1p_exp(2.0 * t);
}

// d/dt of the above: 1 - 2 sigma^2 / (1 + sigma^2).
inline double log_half_cauchy_grad(double sigma_sq) {
  return 1.0 - 2.0 * sigma_sq / (1.0 + sigma_sq);
}

void check_dimensions(const ModelParameters& params, const ResponseMatrix& data) {
  require(params.theta.size() == data.n_students(), ErrorCode::InvalidArgument,
          "theta length does not match student count");
  require(params.log_alpha.size() == data.n_items(), ErrorCode::InvalidArgument,
          "log_alpha length does not match item count");
  require(params.beta.size() == data.n_items(), ErrorCode::InvalidArgument,
          "beta length does not match item count");
}

}  // namespace

double log1p_exp(double x) {
  if (x > 37.0) return x + std::exp(-x);
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double response_probability(double theta, double alpha, double beta) {
  require(std::isfinite(theta) && std::isfinite(alpha) && std::isfinite(beta),
          ErrorCode::InvalidArgument, "response_probability: non-finite input");
  require(alpha > 0.0, ErrorCode::InvalidArgument,
          "response_probability: alpha must be positive");
  return sigmoid(alpha * (theta - beta));
}

double log_posterior(const ModelParameters& params, const ResponseMatrix& data) {
  check_dimensions(params, data);

  const double sigma_alpha = std::exp(params.log_sigma_alpha);
  const double sigma_beta = std::exp(params.log_sigma_beta);

  double lp = 0.0;

  // Bernoulli likelihood over observed cells. log P = -log1p_exp(-eta),
  // log(1-P) = -log1p_exp(eta); finite for any finite eta, so probability
  // saturation never produces -inf.
  for (const Response& r : data.responses) {
    const double alpha = std::exp(params.log_alpha[r.item]);
    const double eta = alpha * (params.theta[r.student] - params.beta[r.item]);
    lp -= r.correct ? log1p_exp(-eta) : log1p_exp(eta);
  }

  for (std::size_t j = 0; j < params.n_items(); ++j) {
    lp += log_normal_density(params.log_alpha[j], params.mu_alpha, sigma_alpha,
                             params.log_sigma_alpha);
    lp += log_normal_density(params.beta[j], params.mu_beta, sigma_beta,
                             params.log_sigma_beta);
  }
  for (double t : params.theta) {
    lp += -0.5 * t * t - kHalfLog2Pi;
  }
  lp += -0.5 * params.mu_alpha * params.mu_alpha - kHalfLog2Pi;
  lp += -0.5 * params.mu_beta * params.mu_beta - kHalfLog2Pi;
  lp += log_half_cauchy_on_log_scale(params.log_sigma_alpha);
  lp += log_half_cauchy_on_log_scale(params.log_sigma_beta);
  return lp;
}

double log_posterior_gradient(const ModelParameters& params,
                              const ResponseMatrix& data,
                              std::span<double> grad) {
  check_dimensions(params, data);
  require(grad.size() == params.dim(), ErrorCode::InvalidArgument,
          "gradient buffer has wrong length");

  const std::size_t n = params.n_students();
  const std::size_t j_count = params.n_items();
  const double sigma_alpha = std::exp(params.log_sigma_alpha);
  const double sigma_beta = std::exp(params.log_sigma_beta);
  const double inv_var_alpha = 1.0 / (sigma_alpha * sigma_alpha);
  const double inv_var_beta = 1.0 / (sigma_beta * sigma_beta);

  std::fill(grad.begin(), grad.end(), 0.0);
  auto g_theta = grad.subspan(0, n);
  auto g_log_alpha = grad.subspan(n, j_count);
  auto g_beta = grad.subspan(n + j_count, j_count);
  double& g_mu_alpha = grad[n + 2 * j_count];
  double& g_mu_beta = grad[n + 2 * j_count + 1];
  double& g_ls_alpha = grad[n + 2 * j_count + 2];
  double& g_ls_beta = grad[n + 2 * j_count + 3];

  double lp = 0.0;
  for (const Response& r : data.responses) {
    const double alpha = std::exp(params.log_alpha[r.item]);
    const double diff = params.theta[r.student] - params.beta[r.item];
    const double eta = alpha * diff;
    lp -= r.correct ? log1p_exp(-eta) : log1p_exp(eta);
    const double resid = static_cast<double>(r.correct) - sigmoid(eta);
    g_theta[r.student] += resid * alpha;
    g_log_alpha[r.item] += resid * eta;
    g_beta[r.item] -= resid * alpha;
  }

  double sum_alpha_dev = 0.0;   // sum (log_alpha_j - mu_alpha) / sigma_alpha^2
  double sum_beta_dev = 0.0;
  double sum_alpha_dev_sq = 0.0;  // sum ((log_alpha_j - mu_alpha)/sigma_alpha)^2
  double sum_beta_dev_sq = 0.0;
  for (std::size_t j = 0; j < j_count; ++j) {
    const double da = params.log_alpha[j] - params.mu_alpha;
    const double db = params.beta[j] - params.mu_beta;
    lp += log_normal_density(params.log_alpha[j], params.mu_alpha, sigma_alpha,
                             params.log_sigma_alpha);
    lp += log_normal_density(params.beta[j], params.mu_beta, sigma_beta,
                             params.log_sigma_beta);
    g_log_alpha[j] -= da * inv_var_alpha;
    g_beta[j] -= db * inv_var_beta;
    sum_alpha_dev += da * inv_var_alpha;
    sum_beta_dev += db * inv_var_beta;
    sum_alpha_dev_sq += da * da * inv_var_alpha;
    sum_beta_dev_sq += db * db * inv_var_beta;
  }

  for (std::size_t i = 0; i < n; ++i) {
    lp += -0.5 * params.theta[i] * params.theta[i] - kHalfLog2Pi;
    g_theta[i] -= params.theta[i];
  }

  lp += -0.5 * params.mu_alpha * params.mu_alpha - kHalfLog2Pi;
  lp += -0.5 * params.mu_beta * params.mu_beta - kHalfLog2Pi;
  g_mu_alpha = sum_alpha_dev - params.mu_alpha;
  g_mu_beta = sum_beta_dev - params.mu_beta;

  lp += log_half_cauchy_on_log_scale(params.log_sigma_alpha);
  lp += log_half_cauchy_on_log_scale(params.log_sigma_beta);
  g_ls_alpha = sum_alpha_dev_sq - static_cast<double>(j_count) +
               log_half_cauchy_grad(sigma_alpha * sigma_alpha);
  g_ls_beta = sum_beta_dev_sq - static_cast<double>(j_count) +
              log_half_cauchy_grad(sigma_beta * sigma_beta);
  return lp;
}

ModelParameters unpack_centered(std::span<const double> u, std::size_t n_students,
                                std::size_t n_items) {
  require(u.size() == n_students + 2 * n_items + 4, ErrorCode::InvalidArgument,
          "unpack_centered: wrong vector length");
  ModelParameters p;
  p.theta.assign(u.begin(), u.begin() + n_students);
  p.log_alpha.assign(u.begin() + n_students, u.begin() + n_students + n_items);
  p.beta.assign(u.begin() + n_students + n_items,
                u.begin() + n_students + 2 * n_items);
  p.mu_alpha = u[n_students + 2 * n_items];
  p.mu_beta = u[n_students + 2 * n_items + 1];
  p.log_sigma_alpha = u[n_students + 2 * n_items + 2];
  p.log_sigma_beta = u[n_students + 2 * n_items + 3];
  return p;
}

void pack_centered(const ModelParameters& params, std::span<double> u) {
  require(u.size() == params.dim(), ErrorCode::InvalidArgument,
          "pack_centered: wrong vector length");
  std::size_t k = 0;
  for (double v : params.theta) u[k++] = v;
  for (double v : params.log_alpha) u[k++] = v;
  for (double v : params.beta) u[k++] = v;
  u[k++] = params.mu_alpha;
  u[k++] = params.mu_beta;
  u[k++] = params.log_sigma_alpha;
  u[k++] = params.log_sigma_beta;
}

std::vector<std::string> constrained_parameter_names(std::size_t n_students,
                                                     std::size_t n_items) {
  std::vector<std::string> names;
  names.reserve(n_students + 2 * n_items + 4);
  for (std::size_t i = 0; i < n_students; ++i)
    names.push_back("theta[" + std::to_string(i + 1) + "]");
  for (std::size_t j = 0; j < n_items; ++j)
    names.push_back("alpha[" + std::to_string(j + 1) + "]");
  for (std::size_t j = 0; j < n_items; ++j)
    names.push_back("beta[" + std::to_string(j + 1) + "]");
  names.push_back("mu_alpha");
  names.push_back("mu_beta");
  names.push_back("sigma_alpha");
  names.push_back("sigma_beta");
  return names;
}

namespace {

class CenteredTarget final : public PosteriorTarget {
 public:
  explicit CenteredTarget(const ResponseMatrix& data) : data_(data) {
    data_.validate();
  }

  std::size_t dim() const override {
    return data_.n_students() + 2 * data_.n_items() + 4;
  }

  double logp_grad(std::span<const double> u, std::span<double> grad) const override {
    const ModelParameters p = unpack_centered(u, data_.n_students(), data_.n_items());
    return log_posterior_gradient(p, data_, grad);
  }

  double logp(std::span<const double> u) const override {
    const ModelParameters p = unpack_centered(u, data_.n_students(), data_.n_items());
    return log_posterior(p, data_);
  }

  void to_constrained(std::span<const double> u, std::span<double> out) const override {
    const std::size_t n = data_.n_students();
    const std::size_t j = data_.n_items();
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i];
    for (std::size_t k = 0; k < j; ++k) out[n + k] = std::exp(u[n + k]);
    for (std::size_t k = 0; k < j; ++k) out[n + j + k] = u[n + j + k];
    out[n + 2 * j] = u[n + 2 * j];
    out[n + 2 * j + 1] = u[n + 2 * j + 1];
    out[n + 2 * j + 2] = std::exp(u[n + 2 * j + 2]);
    out[n + 2 * j + 3] = std::exp(u[n + 2 * j + 3]);
  }

  std::vector<std::string> constrained_names() const override {
    return constrained_parameter_names(data_.n_students(), data_.n_items());
  }

 private:
  ResponseMatrix data_;
};

// Unconstrained layout: [theta(N), z_alpha(J), z_beta(J), mu_alpha, mu_beta,
// log_sigma_alpha, log_sigma_beta] with log alpha_j = mu_a + sigma_a z_j.
class NonCenteredTarget final : public PosteriorTarget {
 public:
  explicit NonCenteredTarget(const ResponseMatrix& data) : data_(data) {
    data_.validate();
  }

  std::size_t dim() const override {
    return data_.n_students() + 2 * data_.n_items() + 4;
  }

  double logp_grad(std::span<const double> u, std::span<double> grad) const override {
    return eval(u, &grad);
  }

  double logp(std::span<const double> u) const override { return eval(u, nullptr); }

  void to_constrained(std::span<const double> u, std::span<double> out) const override {
    const std::size_t n = data_.n_students();
    const std::size_t j = data_.n_items();
    const double mu_a = u[n + 2 * j];
    const double mu_b = u[n + 2 * j + 1];
    const double sa = std::exp(u[n + 2 * j + 2]);
    const double sb = std::exp(u[n + 2 * j + 3]);
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i];
    for (std::size_t k = 0; k < j; ++k) out[n + k] = std::exp(mu_a + sa * u[n + k]);
    for (std::size_t k = 0; k < j; ++k) out[n + j + k] = mu_b + sb * u[n + j + k];
    out[n + 2 * j] = mu_a;
    out[n + 2 * j + 1] = mu_b;
    out[n + 2 * j + 2] = sa;
    out[n + 2 * j + 3] = sb;
  }

  std::vector<std::string> constrained_names() const override {
    return constrained_parameter_names(data_.n_students(), data_.n_items());
  }

 private:
  double eval(std::span<const double> u, std::span<double>* grad_out) const {
    const std::size_t n = data_.n_students();
    const std::size_t jc = data_.n_items();
    require(u.size() == dim(), ErrorCode::InvalidArgument,
            "non-centered target: wrong vector length");

    const double mu_a = u[n + 2 * jc];
    const double mu_b = u[n + 2 * jc + 1];
    const double ls_a = u[n + 2 * jc + 2];
    const double ls_b = u[n + 2 * jc + 3];
    const double sa = std::exp(ls_a);
    const double sb = std::exp(ls_b);

    // Per-call scratch keeps concurrent evaluation safe.
    std::vector<double> alpha_(jc), beta_(jc);
    std::vector<double> g_like_la_(jc, 0.0), g_like_b_(jc, 0.0);
    for (std::size_t k = 0; k < jc; ++k) {
      alpha_[k] = std::exp(mu_a + sa * u[n + k]);
      beta_[k] = mu_b + sb * u[n + jc + k];
    }

    if (grad_out) std::fill(grad_out->begin(), grad_out->end(), 0.0);

    double lp = 0.0;
    for (const Response& r : data_.responses) {
      const double alpha = alpha_[r.item];
      const double diff = u[r.student] - beta_[r.item];
      const double eta = alpha * diff;
      lp -= r.correct ? log1p_exp(-eta) : log1p_exp(eta);
      if (grad_out) {
        const double resid = static_cast<double>(r.correct) - sigmoid(eta);
        (*grad_out)[r.student] += resid * alpha;
        g_like_la_[r.item] += resid * eta;   // d loglik / d log_alpha_j
        g_like_b_[r.item] -= resid * alpha;  // d loglik / d beta_j
      }
    }

    double sum_gla = 0.0, sum_gb = 0.0, sum_gla_z = 0.0, sum_gb_z = 0.0;
    for (std::size_t k = 0; k < jc; ++k) {
      const double za = u[n + k];
      const double zb = u[n + jc + k];
      lp += -0.5 * za * za - kHalfLog2Pi;
      lp += -0.5 * zb * zb - kHalfLog2Pi;
      if (grad_out) {
        (*grad_out)[n + k] = g_like_la_[k] * sa - za;
        (*grad_out)[n + jc + k] = g_like_b_[k] * sb - zb;
        sum_gla += g_like_la_[k];
        sum_gb += g_like_b_[k];
        sum_gla_z += g_like_la_[k] * za;
        sum_gb_z += g_like_b_[k] * zb;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      lp += -0.5 * u[i] * u[i] - kHalfLog2Pi;
      if (grad_out) (*grad_out)[i] -= u[i];
    }

    lp += -0.5 * mu_a * mu_a - kHalfLog2Pi;
    lp += -0.5 * mu_b * mu_b - kHalfLog2Pi;
    lp += log_half_cauchy_on_log_scale(ls_a);
    lp += log_half_cauchy_on_log_scale(ls_b);
    if (grad_out) {
      (*grad_out)[n + 2 * jc] = sum_gla - mu_a;
      (*grad_out)[n + 2 * jc + 1] = sum_gb - mu_b;
      (*grad_out)[n + 2 * jc + 2] = sum_gla_z * sa + log_half_cauchy_grad(sa * sa);
      (*grad_out)[n + 2 * jc + 3] = sum_gb_z * sb + log_half_cauchy_grad(sb * sb);
    }
    return lp;
  }

  ResponseMatrix data_;
};

}  // namespace

std::unique_ptr<PosteriorTarget> make_centered_target(const ResponseMatrix& data) {
  return std::make_unique<CenteredTarget>(data);
}

std::unique_ptr<PosteriorTarget> make_noncentered_target(const ResponseMatrix& data) {
  return std::make_unique<NonCenteredTarget>(data);
}

}  // namespace examkit
