#ifndef SV_FACTOR_SV_HPP
#define SV_FACTOR_SV_HPP

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/CXX11/Tensor>

#include "sv/distribution.hpp"
#include "sv/gig.hpp"
#include "sv/rng.hpp"
#include "sv/static_factor.hpp"
#include "sv/sv_sampler.hpp"
#include "sv/sv_types.hpp"

namespace sv {

enum class RestrictKind { none, upper, automatic, matrix };
enum class FacloadPrior { normal, rowwise_ng, colwise_ng };

std::string to_string(RestrictKind k);
RestrictKind parse_restrict(std::string_view s);
std::string to_string(FacloadPrior k);
FacloadPrior parse_facload_prior(std::string_view s);

struct FsvPriors {
  Distribution mu = dist::Normal{0.0, 10.0};
  Distribution phi_idi = dist::TranslatedBeta{10.0, 3.0};
  Distribution phi_fac = dist::TranslatedBeta{10.0, 3.0};
  Distribution sigma2_idi = dist::Gamma{0.5, 0.5};
  Distribution sigma2_fac = dist::Gamma{0.5, 0.5};
  /// Common N(mean, sd) prior of each beta_i.
  dist::Normal beta{0.0, 10000.0};
  FacloadPrior facload_type = FacloadPrior::rowwise_ng;
  /// Fixed prior variances (normal) or the shrinkage parameter a (NG): 1 x 1
  /// (recycled) or m x r.
  Eigen::MatrixXd facload = Eigen::MatrixXd::Constant(1, 1, 0.1);
  double ng_c = 1.0;
  double ng_d = 1.0;
};

struct FsvConfig {
  int factors = 1;
  int draws = 1000;
  int burnin = 1000;
  int thin = 1;
  bool zeromean = true;
  KeepTime keeptime = KeepTime::last;
  RestrictKind restrict = RestrictKind::none;
  /// Used when restrict == matrix; true fixes the loading at zero.
  BoolMatrix restrict_matrix;
  /// With samplefac = false the factors are held at `observed_factors` (r x n).
  bool samplefac = true;
  Eigen::MatrixXd observed_factors;
  /// Cumulative levels: 1 log-variances, 2 factors, 3 volatilities,
  /// 4 covariances, 5 correlations, 6 communalities.
  int runningstore = 6;
  int runningstorethin = 10;
  int runningstoremoments = 2;
  int interweaving_passes = 1;
  std::uint64_t seed = 0;
  double offset = 1e-8;
};

/// Throws ConfigError / DimensionError on an invalid configuration for m series.
void validate(const FsvConfig& config, Eigen::Index m, Eigen::Index n);

/// Online first and second moments of one quantity block (rows = components,
/// cols = time).
struct MomentBlock {
  Eigen::MatrixXd sum;
  Eigen::MatrixXd sum_sq;

  void resize(Eigen::Index rows, Eigen::Index cols);
  void add(const Eigen::Ref<const Eigen::MatrixXd>& x, bool second);
  bool empty() const { return sum.size() == 0; }
};

struct RunningMoments {
  long count = 0;
  int moments = 2;
  MomentBlock logvar;       // (m + r) x n, idiosyncratic rows first
  MomentBlock factors;      // r x n
  MomentBlock volatility;   // (m + r) x n, exp(h / 2)
  MomentBlock covariance;   // m*m x n, column-major m x m per column
  MomentBlock correlation;  // m*m x n
  MomentBlock communality;  // m x n

  Eigen::MatrixXd mean(const MomentBlock& b) const;
  /// Population sd over the accumulated draws; needs second moments.
  Eigen::MatrixXd sd(const MomentBlock& b) const;
};

struct FsvDraws {
  Eigen::Index m = 0;
  Eigen::Index r = 0;
  Eigen::Index n = 0;
  FsvConfig config;
  FsvPriors priors;
  BoolMatrix restriction;

  std::vector<Eigen::MatrixXd> loadings;  // m x r per kept draw
  std::vector<Eigen::MatrixXd> factors;   // r x T per kept draw, T = n or 1
  std::vector<Eigen::MatrixXd> logvar;    // (m + r) x T per kept draw
  Eigen::MatrixXd logvar_last;            // kept x (m + r), always at t = n
  Eigen::MatrixXd logvar0;                // kept x (m + r), h0
  Eigen::MatrixXd mu;                     // kept x (m + r); factor columns are 0
  Eigen::MatrixXd phi;                    // kept x (m + r)
  Eigen::MatrixXd sigma;                  // kept x (m + r)
  Eigen::MatrixXd beta;                   // kept x m
  Eigen::MatrixXd tau2;                   // kept x m*r (column-major), NG priors only
  Eigen::MatrixXd lambda2;                // kept x (m or r), NG priors only
  RunningMoments running;

  Eigen::Index kept() const { return static_cast<Eigen::Index>(loadings.size()); }
  /// 1-based time indices held in `logvar` / `factors`.
  std::vector<Eigen::Index> stored_times() const;
};

/// Shrinkage latents given the loadings. Restricted entries draw tau^2 from its
/// prior Gamma(a, a lambda^2 / 2); the others from the GIG conditional.
/// lambda2 has m entries (row-wise) or r entries (column-wise).
void draw_shrinkage_latents(const Eigen::Ref<const Eigen::MatrixXd>& loadings, const BoolMatrix& restriction,
                            FacloadPrior type, const Eigen::Ref<const Eigen::MatrixXd>& a, double c, double d,
                            Eigen::MatrixXd& tau2, Eigen::VectorXd& lambda2, RngStream& rng);

/// Single-chain sampler. Each idiosyncratic and factor log-variance process is
/// updated through its own univariate SvSampler.
class FsvSampler {
 public:
  FsvSampler(Eigen::MatrixXd Y, const FsvConfig& config, FsvPriors priors);

  /// Skips the 1 <= r < m and restriction-pattern checks; for reduction tests
  /// such as m = r = 1 with the single loading fixed at zero.
  struct Unchecked {};
  FsvSampler(Eigen::MatrixXd Y, const FsvConfig& config, FsvPriors priors, Unchecked);

  void initialize(RngStream& rng);
  void sweep(RngStream& rng);
  /// Replaces the data, keeping the state.
  void set_data(const Eigen::MatrixXd& Y);

  Eigen::Index m() const { return Y_.cols(); }
  Eigen::Index r() const { return r_; }
  Eigen::Index n() const { return Y_.rows(); }
  const BoolMatrix& restriction() const { return restriction_; }
  const Eigen::MatrixXd& loadings() const { return lambda_; }
  const Eigen::MatrixXd& factors() const { return f_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::MatrixXd& tau2() const { return tau2_; }
  const Eigen::VectorXd& lambda2() const { return lambda2_; }
  /// Univariate state of process k (idiosyncratic 0..m-1, then factors).
  const SvParams& process_params(Eigen::Index k) const;
  const LatentPath& process_path(Eigen::Index k) const;
  /// (m + r) x n log-variances.
  Eigen::MatrixXd logvar() const;

  /// Simulates Y given the current state (Geweke harness).
  Eigen::MatrixXd simulate_data(RngStream& rng) const;

 private:
  void setup(const FsvConfig& config, bool checked);
  void draw_factors(RngStream& rng);
  void draw_loadings(RngStream& rng);
  void update_processes(RngStream& rng);
  void draw_beta(RngStream& rng);
  void interweave(RngStream& rng);
  Eigen::MatrixXd prior_variances() const;

  Eigen::MatrixXd Y_;
  FsvPriors priors_;
  FsvConfig config_;
  Eigen::Index r_ = 0;
  BoolMatrix restriction_;
  Eigen::MatrixXd a_;  // m x r shrinkage parameter or fixed variance
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd f_;  // r x n
  Eigen::VectorXd beta_;
  Eigen::MatrixXd tau2_;
  Eigen::VectorXd lambda2_;
  std::vector<std::unique_ptr<SvSampler>> processes_;
};

struct FsvTruth {
  Eigen::MatrixXd loadings;  // m x r
  Eigen::VectorXd mu;        // m + r; factor entries are ignored (level 0)
  Eigen::VectorXd phi;       // m + r
  Eigen::VectorXd sigma;     // m + r
  Eigen::VectorXd beta;      // m, empty = zero
};

struct FsvSimulation {
  Eigen::MatrixXd y;       // n x m
  Eigen::MatrixXd factors; // r x n
  Eigen::MatrixXd logvar;  // (m + r) x n
};

/// Draws n observations with h0 from the stationary law of each process.
FsvSimulation simulate_fsv(const FsvTruth& truth, Eigen::Index n, RngStream& rng);

/// Runs burnin + draws sweeps and stores every thin-th draw plus running moments.
FsvDraws fsv_sample(const Eigen::MatrixXd& Y, const FsvConfig& config, const FsvPriors& priors = {});

/// Sigma_t = Lambda diag(exp(hfac_t)) Lambda' + diag(exp(hidi_t)).
Eigen::MatrixXd assemble_covariance(const Eigen::Ref<const Eigen::MatrixXd>& loadings,
                                    const Eigen::Ref<const Eigen::VectorXd>& logvar, Eigen::Index m);
Eigen::MatrixXd covariance_to_correlation(const Eigen::Ref<const Eigen::MatrixXd>& cov);

/// m x m x kept x |times| covariance draws; `times` are 1-based and must have
/// been stored (empty = all stored times).
Eigen::Tensor<double, 4> covmat(const FsvDraws& draws, const std::vector<Eigen::Index>& times = {});

/// Mean over draws of the eigenvalues of Lambda' Lambda, sorted descending.
Eigen::VectorXd evdiag(const FsvDraws& draws);

/// Free elements of an m-dimensional covariance matrix, optionally with r factors.
long long free_elements(long long m, std::optional<long long> r = std::nullopt);

/// Predictive covariance / correlation draws: m x m x (kept * each) x |ahead|.
Eigen::Tensor<double, 4> predcov(const FsvDraws& draws, const std::vector<int>& ahead, int each, RngStream& rng);
Eigen::Tensor<double, 4> predcor(const FsvDraws& draws, const std::vector<int>& ahead, int each, RngStream& rng);

/// Log predictive score per entry of `ahead`; row k of ynew is the observation
/// at horizon ahead[k].
Eigen::VectorXd predloglik(const FsvDraws& draws, const Eigen::MatrixXd& ynew, const std::vector<int>& ahead,
                           int each, RngStream& rng);

}  // namespace sv

#endif  // SV_FACTOR_SV_HPP
