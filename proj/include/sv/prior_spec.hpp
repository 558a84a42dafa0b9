#ifndef SV_PRIOR_SPEC_HPP
#define SV_PRIOR_SPEC_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sv/distribution.hpp"

namespace sv {

enum class ModelKind { sv, svt, svl, svtl };

inline bool has_t_errors(ModelKind k) { return k == ModelKind::svt || k == ModelKind::svtl; }
inline bool has_leverage(ModelKind k) { return k == ModelKind::svl || k == ModelKind::svtl; }

std::string to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

/// Variance of h0: the stationary AR(1) variance, or a fixed constant B_h.
struct Latent0Variance {
  bool stationary = true;
  double value = 0.0;

  static Latent0Variance make_stationary() { return {}; }
  static Latent0Variance constant(double v) { return {false, v}; }
  bool operator==(const Latent0Variance&) const = default;
};

/// One prior slot per model parameter. `nu` is the law of nu - 2 when it is
/// an Exponential; a Constant nu holds nu itself.
struct PriorSpec {
  Distribution mu = dist::Normal{0.0, 100.0};
  Distribution phi = dist::TranslatedBeta{5.0, 1.5};
  Distribution sigma2 = dist::Gamma{0.5, 0.5};
  Distribution nu = dist::Infinity{};
  Distribution rho = dist::Constant{0.0};
  dist::MultivariateNormal beta = dist::MultivariateNormal::isotropic(0.0, 10000.0);
  Latent0Variance latent0_variance;

  bool operator==(const PriorSpec&) const = default;
};

PriorSpec default_priors(ModelKind kind);

/// Returns the spec unchanged when it is consistent with the model kind;
/// throws InconsistentSpec naming the offending field otherwise.
const PriorSpec& validate(const PriorSpec& spec, ModelKind kind);

/// Half-normal prior on sigma expressed as the law of sigma^2.
inline Distribution sigma2_from_half_normal(double b_sigma) { return dist::Gamma{0.5, 0.5 / b_sigma}; }

/// Log prior density of nu under the `nu` slot (exponential on nu - 2).
double nu_log_prior(const PriorSpec& spec, double nu);

/// Prior means used as start values.
double prior_mean_sigma(const Distribution& sigma2);
double prior_mean_nu(const Distribution& nu);

/// Applies one `prior.<field> = <value>` override. Beta laws given for phi or
/// rho are read as laws of (x + 1) / 2. `sigma` takes the half-normal scale B_sigma.
void apply_prior_override(PriorSpec& spec, std::string_view field, std::string_view value);

/// Config-file form of every slot, in declaration order.
std::vector<std::pair<std::string, std::string>> prior_entries(const PriorSpec& spec);

/// Lines in the style "mu        ~ Normal(mean = 0, sd = 100)".
std::vector<std::string> describe_priors(const PriorSpec& spec);

}  // namespace sv

#endif  // SV_PRIOR_SPEC_HPP
