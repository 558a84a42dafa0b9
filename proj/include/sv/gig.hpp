#ifndef SV_GIG_HPP
#define SV_GIG_HPP

#include "sv/rng.hpp"

namespace sv {

/// Generalized inverse Gaussian law with density proportional to
/// x^(lambda-1) exp(-(chi/x + psi*x)/2) on x > 0.
struct Gig {
  double lambda = 0.0;
  double chi = 1.0;
  double psi = 1.0;
};

/// Throws InvalidParameter unless chi, psi >= 0 with chi > 0 when lambda <= 0
/// and psi > 0 when lambda >= 0.
void validate(const Gig& g);

/// Ratio-of-uniforms / piecewise-hat rejection sampler; the boundary cases
/// chi = 0 and psi = 0 reduce to gamma and inverse gamma draws.
double draw(const Gig& g, RngStream& rng);

double log_density(const Gig& g, double x);
double mean(const Gig& g);

}  // namespace sv

#endif  // SV_GIG_HPP
