#ifndef SV_SV_TYPES_HPP
#define SV_SV_TYPES_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sv/design.hpp"
#include "sv/prior_spec.hpp"

namespace sv {

struct SvParams {
  double mu = 0.0;
  double phi = 0.0;
  double sigma = 1.0;
  double nu = std::numeric_limits<double>::infinity();
  double rho = 0.0;
  Eigen::VectorXd beta;
};

/// Log-variance path: h0 plus h_1..h_n.
struct LatentPath {
  double h0 = 0.0;
  Eigen::VectorXd h;
};

enum class KeepTime { all, last };

std::string to_string(KeepTime k);
KeepTime parse_keeptime(std::string_view s);

struct SamplerConfig {
  int draws = 10000;
  int burnin = 1000;
  int thinpara = 1;
  int thinlatent = 1;
  KeepTime keeptime = KeepTime::all;
  int chains = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Added inside log((y - x beta)^2 + offset).
  double offset = 1e-8;
  /// Interweaving passes per sweep in the leverage parameter update.
  int asis_passes = 1;

  static SamplerConfig defaults(ModelKind kind);
};

/// Lets tests switch individual Gibbs steps off.
struct StepMask {
  bool latent = true;
  bool mu = true;
  bool phi = true;
  bool sigma = true;
  bool rho = true;
  bool tau = true;
  bool nu = true;
  bool beta = true;
};

/// Column order of ChainDraws::para.
enum ParamColumn : int { kMu = 0, kPhi = 1, kSigma = 2, kNu = 3, kRho = 4, kParamColumns = 5 };
inline const char* param_name(int col) {
  static const char* names[] = {"mu", "phi", "sigma", "nu", "rho"};
  return names[col];
}

struct AcceptanceStats {
  long proposals = 0;
  long accepted = 0;
  double rate() const { return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0; }
};

struct ChainDraws {
  Eigen::MatrixXd para;      // kept x kParamColumns
  Eigen::MatrixXd beta;      // kept x K
  Eigen::VectorXd h_last;    // h_n at each kept parameter draw
  Eigen::VectorXd eps_last;  // standardized residual at n, same rows as para
  Eigen::MatrixXd latent;    // kept_latent x n (or x 1 when keeptime = last)
  Eigen::VectorXd latent0;   // kept_latent
  AcceptanceStats centered;
  AcceptanceStats noncentered;
  AcceptanceStats nu;
};

struct SvDraws {
  ModelKind kind = ModelKind::sv;
  PriorSpec priors;
  SamplerConfig config;
  Design design;
  std::vector<ChainDraws> chains;

  Eigen::Index kept_para() const { return chains.empty() ? 0 : chains.front().para.rows(); }
  Eigen::Index total_kept() const;
  /// All chains stacked in chain order.
  Eigen::MatrixXd para() const;
  Eigen::MatrixXd beta() const;
  Eigen::VectorXd h_last() const;
  Eigen::VectorXd eps_last() const;
  Eigen::MatrixXd latent() const;
};

/// ceil(draws / thin).
inline int stored_count(int draws, int thin) { return draws <= 0 ? 0 : (draws + thin - 1) / thin; }

}  // namespace sv

#endif  // SV_SV_TYPES_HPP
