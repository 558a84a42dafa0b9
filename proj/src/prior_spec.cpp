#include "sv/prior_spec.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "sv/errors.hpp"
#include "sv/format.hpp"

namespace sv {

namespace {

template <class... Allowed>
bool holds_any(const Distribution& d) {
  return (std::holds_alternative<Allowed>(d) || ...);
}

[[noreturn]] void inconsistent(const std::string& field, const std::string& why) {
  throw InconsistentSpec("prior '" + field + "': " + why);
}

void check_valid(const Distribution& d, const std::string& field) {
  try {
    validate(d);
  } catch (const InvalidParameter& e) {
    inconsistent(field, e.what());
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

Distribution as_translated(Distribution d) {
  if (const auto* b = std::get_if<dist::Beta>(&d)) return dist::TranslatedBeta{b->shape1, b->shape2};
  return d;
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::sv: return "sv";
    case ModelKind::svt: return "svt";
    case ModelKind::svl: return "svl";
    case ModelKind::svtl: return "svtl";
  }
  return "sv";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "sv") return ModelKind::sv;
  if (s == "svt") return ModelKind::svt;
  if (s == "svl") return ModelKind::svl;
  if (s == "svtl") return ModelKind::svtl;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

PriorSpec default_priors(ModelKind kind) {
  PriorSpec spec;
  if (has_t_errors(kind)) spec.nu = dist::Exponential{0.1};
  if (has_leverage(kind)) spec.rho = dist::TranslatedBeta{4.0, 4.0};
  return spec;
}

const PriorSpec& validate(const PriorSpec& spec, ModelKind kind) {
  check_valid(spec.mu, "mu");
  if (!holds_any<dist::Normal, dist::Constant>(spec.mu)) inconsistent("mu", "must be Normal or Constant");

  check_valid(spec.phi, "phi");
  if (!holds_any<dist::TranslatedBeta, dist::Normal, dist::Constant>(spec.phi)) {
    inconsistent("phi", "must be a Beta on (-1, 1), Normal or Constant");
  }
  if (is_constant(spec.phi) && spec.latent0_variance.stationary && std::abs(constant_value(spec.phi)) >= 1.0) {
    inconsistent("phi", "a stationary h0 requires |phi| < 1");
  }

  check_valid(spec.sigma2, "sigma2");
  if (!holds_any<dist::Gamma, dist::InverseGamma, dist::Constant>(spec.sigma2)) {
    inconsistent("sigma2", "must be Gamma, InverseGamma or Constant");
  }
  if (is_constant(spec.sigma2) && !(constant_value(spec.sigma2) > 0.0)) inconsistent("sigma2", "must be positive");

  check_valid(spec.nu, "nu");
  if (!holds_any<dist::Exponential, dist::Infinity, dist::Constant>(spec.nu)) {
    inconsistent("nu", "must be Exponential (on nu - 2), Infinity or Constant");
  }
  if (is_constant(spec.nu) && !(constant_value(spec.nu) > 2.0)) inconsistent("nu", "nu must exceed 2");
  if (!has_t_errors(kind) && !is_infinity(spec.nu)) {
    inconsistent("nu", "model '" + to_string(kind) + "' has Gaussian errors; nu must be Infinity");
  }

  check_valid(spec.rho, "rho");
  if (!holds_any<dist::TranslatedBeta, dist::Constant>(spec.rho)) {
    inconsistent("rho", "must be a Beta on (-1, 1) or Constant");
  }
  if (is_constant(spec.rho) && std::abs(constant_value(spec.rho)) >= 1.0) inconsistent("rho", "|rho| must be < 1");
  if (!has_leverage(kind) && !(is_constant(spec.rho) && constant_value(spec.rho) == 0.0)) {
    inconsistent("rho", "model '" + to_string(kind) + "' has no leverage; rho must be Constant(0)");
  }

  try {
    validate(Distribution(spec.beta));
  } catch (const Error& e) {
    inconsistent("beta", e.what());
  }

  if (!spec.latent0_variance.stationary &&
      !(spec.latent0_variance.value > 0.0 && std::isfinite(spec.latent0_variance.value))) {
    inconsistent("latent0_variance", "constant variance must be positive");
  }
  return spec;
}

double nu_log_prior(const PriorSpec& spec, double nu) {
  if (const auto* e = std::get_if<dist::Exponential>(&spec.nu)) {
    return nu > 2.0 ? std::log(e->rate) - e->rate * (nu - 2.0) : -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double prior_mean_sigma(const Distribution& sigma2) {
  if (const auto* g = std::get_if<dist::Gamma>(&sigma2)) {
    return std::exp(boost::math::lgamma(g->shape + 0.5) - boost::math::lgamma(g->shape)) / std::sqrt(g->rate);
  }
  if (const auto* ig = std::get_if<dist::InverseGamma>(&sigma2)) {
    if (ig->shape > 0.5) {
      return std::exp(boost::math::lgamma(ig->shape - 0.5) - boost::math::lgamma(ig->shape)) * std::sqrt(ig->scale);
    }
    return std::sqrt(ig->scale / ig->shape);
  }
  return std::sqrt(constant_value(sigma2));
}

double prior_mean_nu(const Distribution& nu) {
  if (const auto* e = std::get_if<dist::Exponential>(&nu)) return 2.0 + 1.0 / e->rate;
  return constant_value(nu);
}

void apply_prior_override(PriorSpec& spec, std::string_view field, std::string_view value) {
  const std::string v = trim(value);
  if (field == "mu") {
    spec.mu = parse_distribution(v);
  } else if (field == "phi") {
    spec.phi = as_translated(parse_distribution(v));
  } else if (field == "sigma2") {
    spec.sigma2 = parse_distribution(v);
  } else if (field == "sigma") {
    double b = 0.0;
    try {
      b = std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError("prior.sigma expects a positive number, got '" + v + "'");
    }
    if (!(b > 0.0)) throw ConfigError("prior.sigma must be positive");
    spec.sigma2 = sigma2_from_half_normal(b);
  } else if (field == "nu") {
    spec.nu = parse_distribution(v);
  } else if (field == "rho") {
    spec.rho = as_translated(parse_distribution(v));
  } else if (field == "beta") {
    auto d = parse_distribution(v);
    if (const auto* mvn = std::get_if<dist::MultivariateNormal>(&d)) {
      spec.beta = *mvn;
    } else if (const auto* n = std::get_if<dist::Normal>(&d)) {
      spec.beta = dist::MultivariateNormal::isotropic(n->mean, n->sd);
    } else {
      throw ConfigError("prior.beta must be multinormal(mean, sd)");
    }
  } else if (field == "latent0_variance") {
    if (v == "stationary") {
      spec.latent0_variance = Latent0Variance::make_stationary();
    } else {
      auto d = parse_distribution(v);
      if (!is_constant(d)) throw ConfigError("prior.latent0_variance must be 'stationary' or constant(B)");
      spec.latent0_variance = Latent0Variance::constant(constant_value(d));
    }
  } else {
    throw ConfigError("unknown prior field '" + std::string(field) + "'");
  }
}

std::vector<std::pair<std::string, std::string>> prior_entries(const PriorSpec& spec) {
  const auto translated = [](const Distribution& d) {
    if (const auto* t = std::get_if<dist::TranslatedBeta>(&d)) {
      return "beta(" + format_double(t->shape1) + ", " + format_double(t->shape2) + ")";
    }
    return to_config_string(d);
  };
  return {
      {"mu", to_config_string(spec.mu)},
      {"phi", translated(spec.phi)},
      {"sigma2", to_config_string(spec.sigma2)},
      {"nu", to_config_string(spec.nu)},
      {"rho", translated(spec.rho)},
      {"beta", to_config_string(Distribution(spec.beta))},
      {"latent0_variance", spec.latent0_variance.stationary
                               ? std::string("stationary")
                               : "constant(" + format_double(spec.latent0_variance.value) + ")"},
  };
}

std::vector<std::string> describe_priors(const PriorSpec& spec) {
  const auto line = [](const std::string& name, const Distribution& d) {
    std::string label = name;
    std::string text = describe(d);
    if (std::holds_alternative<dist::TranslatedBeta>(d)) {
      label = "(" + name + "+1)/2";
      text = text.substr(0, text.find(" on ("));
    }
    label.resize(std::max<std::size_t>(label.size(), 9), ' ');
    return label + " ~ " + text;
  };
  std::vector<std::string> out{line("mu", spec.mu), line("phi", spec.phi), line("sigma^2", spec.sigma2)};
  if (std::holds_alternative<dist::Exponential>(spec.nu)) {
    out.push_back(line("nu-2", spec.nu));
  } else {
    out.push_back(line("nu", spec.nu));
  }
  out.push_back(line("rho", spec.rho));
  out.push_back(line("beta", Distribution(spec.beta)));
  out.push_back(std::string("h0 var    ~ ") +
                (spec.latent0_variance.stationary ? std::string("stationary")
                                                  : "Constant(value = " + format_significant(spec.latent0_variance.value, 6) + ")"));
  return out;
}

}  // namespace sv
