#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "examkit/types.hpp"

namespace examkit {

// P(correct | theta, alpha, beta) = logit^-1(alpha * (theta - beta)).
// Stable two-branch logistic; finite for |alpha*(theta-beta)| well past 500.
// Throws Error(InvalidArgument) on non-finite input or alpha <= 0.
double response_probability(double theta, double alpha, double beta);

// log(1 + exp(x)) without overflow.
double log1p_exp(double x);

// Joint log-posterior of the hierarchical 2PL model:
//   Y_ij ~ Bernoulli(logit^-1(alpha_j (theta_i - beta_j)))   observed cells only
//   log alpha_j ~ N(mu_alpha, sigma_alpha^2)
//   beta_j      ~ N(mu_beta,  sigma_beta^2)
//   theta_i     ~ N(0, 1)
//   mu_alpha, mu_beta ~ N(0, 1)
//   sigma_alpha, sigma_beta ~ half-Cauchy(0, 1)
// Evaluated on the unconstrained scale (log alpha, log sigma), including the
// +log(sigma) Jacobian for each log-transformed scale. Normalizing constants
// are included. Records may be empty, in which case only the priors apply.
double log_posterior(const ModelParameters& params, const ResponseMatrix& data);

// Analytic gradient of log_posterior with respect to the unconstrained
// parameter vector, ordered [theta(N), log_alpha(J), beta(J), mu_alpha,
// mu_beta, log_sigma_alpha, log_sigma_beta]. Returns the log-posterior value.
double log_posterior_gradient(const ModelParameters& params,
                              const ResponseMatrix& data,
                              std::span<double> grad);

ModelParameters unpack_centered(std::span<const double> u, std::size_t n_students,
                                std::size_t n_items);
void pack_centered(const ModelParameters& params, std::span<double> u);

// Differentiable unconstrained target the sampler drives. Both provided
// parameterizations expose the same constrained quantities.
class PosteriorTarget {
 public:
  virtual ~PosteriorTarget() = default;
  virtual std::size_t dim() const = 0;
  // Writes the gradient and returns the log-density at u.
  virtual double logp_grad(std::span<const double> u, std::span<double> grad) const = 0;
  virtual double logp(std::span<const double> u) const = 0;
  // Maps an unconstrained point to the constrained reporting scale
  // [theta(N), alpha(J), beta(J), mu_alpha, mu_beta, sigma_alpha, sigma_beta].
  virtual void to_constrained(std::span<const double> u, std::span<double> out) const = 0;
  virtual std::vector<std::string> constrained_names() const = 0;
  std::size_t constrained_dim() const { return dim(); }
};

// Samples theta, log alpha, beta directly.
std::unique_ptr<PosteriorTarget> make_centered_target(const ResponseMatrix& data);

// Samples standardized item offsets z with log alpha_j = mu_a + sigma_a z_j
// (and likewise beta). Equivalent posterior, better geometry when the
// hierarchy scales are small.
std::unique_ptr<PosteriorTarget> make_noncentered_target(const ResponseMatrix& data);

std::vector<std::string> constrained_parameter_names(std::size_t n_students,
                                                     std::size_t n_items);

}  // namespace examkit
