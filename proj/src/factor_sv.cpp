#include "sv/factor_sv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sv/errors.hpp"

namespace sv {

namespace {

constexpr double kMinChi = 1e-12;

/// mean + L^{-T} z for precision P = L L' and mean P^{-1} b.
Eigen::VectorXd draw_from_precision(const Eigen::MatrixXd& P, const Eigen::VectorXd& b, RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw NumericError("posterior precision is not positive definite");
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return llt.solve(b) + llt.matrixU().solve(z);
}

PriorSpec process_spec(const Distribution& mu, const Distribution& phi, const Distribution& sigma2) {
  PriorSpec spec;
  spec.mu = mu;
  spec.phi = phi;
  spec.sigma2 = sigma2;
  return spec;
}

/// One slice-sampling update (stepping out, shrinkage) of a univariate log density.
template <typename LogDensity>
double slice_step(double x0, double width, LogDensity&& logf, RngStream& rng) {
  const double level = logf(x0) - rng.exponential(1.0);
  double lo = x0 - width * rng.uniform();
  double hi = lo + width;
  for (int i = 0; i < 100 && logf(lo) > level; ++i) lo -= width;
  for (int i = 0; i < 100 && logf(hi) > level; ++i) hi += width;
  for (int i = 0; i < 200; ++i) {
    const double x = lo + (hi - lo) * rng.uniform();
    if (logf(x) >= level) return x;
    (x < x0 ? lo : hi) = x;
  }
  return x0;
}

}  // namespace

std::string to_string(RestrictKind k) {
  switch (k) {
    case RestrictKind::none: return "none";
    case RestrictKind::upper: return "upper";
    case RestrictKind::automatic: return "auto";
    case RestrictKind::matrix: return "file";
  }
  return "none";
}

RestrictKind parse_restrict(std::string_view s) {
  if (s == "none") return RestrictKind::none;
  if (s == "upper") return RestrictKind::upper;
  if (s == "auto") return RestrictKind::automatic;
  if (s == "file" || s == "matrix") return RestrictKind::matrix;
  throw ConfigError("restrict must be none, upper, auto or file, got '" + std::string(s) + "'");
}

std::string to_string(FacloadPrior k) {
  switch (k) {
    case FacloadPrior::normal: return "normal";
    case FacloadPrior::rowwise_ng: return "rowwiseng";
    case FacloadPrior::colwise_ng: return "colwiseng";
  }
  return "normal";
}

FacloadPrior parse_facload_prior(std::string_view s) {
  if (s == "normal") return FacloadPrior::normal;
  if (s == "rowwiseng") return FacloadPrior::rowwise_ng;
  if (s == "colwiseng") return FacloadPrior::colwise_ng;
  throw ConfigError("priorfacloadtype must be normal, rowwiseng or colwiseng, got '" + std::string(s) + "'");
}

void validate(const FsvConfig& c, Eigen::Index m, Eigen::Index n) {
  if (c.factors < 1 || c.factors >= m) {
    throw ConfigError("factors must satisfy 1 <= r < m (r = " + std::to_string(c.factors) + ", m = " +
                      std::to_string(m) + ")");
  }
  if (c.draws < 1 || c.burnin < 0 || c.thin < 1) throw ConfigError("invalid draws, burnin or thin");
  if (c.runningstore < 0 || c.runningstore > 6) throw ConfigError("runningstore must lie in 0..6");
  if (c.runningstorethin < 1) throw ConfigError("runningstorethin must be positive");
  if (c.runningstoremoments < 1 || c.runningstoremoments > 2) throw ConfigError("runningstoremoments must be 1 or 2");
  if (c.interweaving_passes < 0) throw ConfigError("interweaving passes must be nonnegative");
  if (c.restrict == RestrictKind::matrix) {
    if (c.restrict_matrix.rows() != m || c.restrict_matrix.cols() != c.factors) {
      throw DimensionError("restriction matrix must be m x r");
    }
    for (Eigen::Index j = 0; j < c.factors; ++j) {
      if (c.restrict_matrix.col(j).all()) {
        throw ConfigError("restriction matrix column " + std::to_string(j + 1) + " fixes every loading at zero");
      }
    }
  }
  if (!c.samplefac && (c.observed_factors.rows() != c.factors || c.observed_factors.cols() != n)) {
    throw DimensionError("observed factors must be r x n");
  }
}

void MomentBlock::resize(Eigen::Index rows, Eigen::Index cols) {
  sum = Eigen::MatrixXd::Zero(rows, cols);
  sum_sq = Eigen::MatrixXd::Zero(rows, cols);
}

void MomentBlock::add(const Eigen::Ref<const Eigen::MatrixXd>& x, bool second) {
  sum += x;
  if (second) sum_sq += x.cwiseAbs2();
}

Eigen::MatrixXd RunningMoments::mean(const MomentBlock& b) const {
  if (count == 0 || b.empty()) throw DataError("no running moments were accumulated");
  return b.sum / static_cast<double>(count);
}

Eigen::MatrixXd RunningMoments::sd(const MomentBlock& b) const {
  if (moments < 2) throw DataError("second moments were not accumulated");
  const Eigen::MatrixXd mu = mean(b);
  return (b.sum_sq / static_cast<double>(count) - mu.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
}

std::vector<Eigen::Index> FsvDraws::stored_times() const {
  if (config.keeptime == KeepTime::last) return {n};
  std::vector<Eigen::Index> t(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = i + 1;
  return t;
}

void draw_shrinkage_latents(const Eigen::Ref<const Eigen::MatrixXd>& loadings, const BoolMatrix& restriction,
                            FacloadPrior type, const Eigen::Ref<const Eigen::MatrixXd>& a, double c, double d,
                            Eigen::MatrixXd& tau2, Eigen::VectorXd& lambda2, RngStream& rng) {
  if (type == FacloadPrior::normal) throw InvalidParameter("shrinkage latents need a normal-gamma prior");
  const Eigen::Index m = loadings.rows(), r = loadings.cols();
  const bool rowwise = type == FacloadPrior::rowwise_ng;
  if (lambda2.size() != (rowwise ? m : r)) throw DimensionError("lambda2 has the wrong length");
  tau2.resize(m, r);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      const double aij = a(i, j);
      const double l2 = rowwise ? lambda2(i) : lambda2(j);
      if (restriction.size() > 0 && restriction(i, j)) {
        tau2(i, j) = rng.gamma(aij, 0.5 * aij * l2);
      } else {
        const double chi = std::max(loadings(i, j) * loadings(i, j), kMinChi);
        tau2(i, j) = draw(Gig{aij - 0.5, chi, aij * l2}, rng);
      }
    }
  }
  if (rowwise) {
    for (Eigen::Index i = 0; i < m; ++i) {
      lambda2(i) = rng.gamma(c + a.row(i).sum(), d + 0.5 * a.row(i).dot(tau2.row(i)));
    }
  } else {
    for (Eigen::Index j = 0; j < r; ++j) {
      lambda2(j) = rng.gamma(c + a.col(j).sum(), d + 0.5 * a.col(j).dot(tau2.col(j)));
    }
  }
}

FsvSampler::FsvSampler(Eigen::MatrixXd Y, const FsvConfig& config, FsvPriors priors)
    : Y_(std::move(Y)), priors_(std::move(priors)) {
  setup(config, true);
}

FsvSampler::FsvSampler(Eigen::MatrixXd Y, const FsvConfig& config, FsvPriors priors, Unchecked)
    : Y_(std::move(Y)), priors_(std::move(priors)) {
  setup(config, false);
}

void FsvSampler::setup(const FsvConfig& config, bool checked) {
  config_ = config;
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  if (n < 2) throw DataError("at least two observations are required");
  if (!Y_.allFinite()) throw DataError("data must be finite");
  if (checked) validate(config_, m, n);
  r_ = config_.factors;

  switch (config_.restrict) {
    case RestrictKind::none: restriction_ = BoolMatrix::Constant(m, r_, false); break;
    case RestrictKind::upper:
      restriction_ = BoolMatrix::Constant(m, r_, false);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < r_; ++j) restriction_(i, j) = true;
      }
      break;
    case RestrictKind::automatic: restriction_ = find_restrict(Y_, static_cast<int>(r_)); break;
    case RestrictKind::matrix: restriction_ = config_.restrict_matrix; break;
  }
  if (restriction_.rows() != m || restriction_.cols() != r_) throw DimensionError("restriction matrix must be m x r");

  const Eigen::MatrixXd& fl = priors_.facload;
  if (fl.rows() == 1 && fl.cols() == 1) {
    a_ = Eigen::MatrixXd::Constant(m, r_, fl(0, 0));
  } else if (fl.rows() == m && fl.cols() == r_) {
    a_ = fl;
  } else {
    throw DimensionError("priorfacload must be a scalar or an m x r matrix");
  }
  if (!(a_.minCoeff() > 0.0)) throw InvalidParameter("priorfacload entries must be positive");
  if (priors_.facload_type != FacloadPrior::normal && !(priors_.ng_c > 0.0 && priors_.ng_d > 0.0)) {
    throw InvalidParameter("normal-gamma hyperparameters c and d must be positive");
  }
  if (!(priors_.beta.sd > 0.0)) throw InvalidParameter("beta prior sd must be positive");

  const PriorSpec idi = process_spec(priors_.mu, priors_.phi_idi, priors_.sigma2_idi);
  const PriorSpec fac = process_spec(dist::Constant{0.0}, priors_.phi_fac, priors_.sigma2_fac);
  validate(idi, ModelKind::sv);
  validate(fac, ModelKind::sv);
  processes_.clear();
  for (Eigen::Index i = 0; i < m; ++i) {
    processes_.push_back(
        std::make_unique<SvSampler>(Y_.col(i), Eigen::MatrixXd(n, 0), ModelKind::sv, idi, config_.offset));
  }
  for (Eigen::Index j = 0; j < r_; ++j) {
    processes_.push_back(
        std::make_unique<SvSampler>(Eigen::VectorXd::Zero(n), Eigen::MatrixXd(n, 0), ModelKind::sv, fac,
                                    config_.offset));
  }
}

void FsvSampler::initialize(RngStream& rng) {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  beta_ = Eigen::VectorXd::Zero(m);
  if (!config_.zeromean) beta_ = Y_.colwise().mean().transpose();
  lambda_ = Eigen::MatrixXd::Zero(m, r_);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < r_; ++j) {
      if (!restriction_(i, j)) lambda_(i, j) = rng.normal(0.0, 0.1);
    }
  }
  f_ = config_.samplefac ? Eigen::MatrixXd::Zero(r_, n) : config_.observed_factors;
  if (priors_.facload_type == FacloadPrior::normal) {
    tau2_.resize(0, 0);
    lambda2_.resize(0);
  } else {
    tau2_ = Eigen::MatrixXd::Ones(m, r_);
    lambda2_ = Eigen::VectorXd::Constant(priors_.facload_type == FacloadPrior::rowwise_ng ? m : r_,
                                         priors_.ng_c / priors_.ng_d);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    processes_[static_cast<std::size_t>(i)]->set_response(Y_.col(i) - Eigen::VectorXd::Constant(n, beta_(i)));
    processes_[static_cast<std::size_t>(i)]->initialize();
  }
  for (Eigen::Index j = 0; j < r_; ++j) {
    auto& p = *processes_[static_cast<std::size_t>(m + j)];
    p.initialize();
    SvParams start = p.params();
    LatentPath path = p.latent();
    path.h0 = 0.0;
    path.h.setZero();
    p.set_state(start, path, Eigen::VectorXd::Ones(n));
  }
}

void FsvSampler::set_data(const Eigen::MatrixXd& Y) {
  if (Y.rows() != Y_.rows() || Y.cols() != Y_.cols()) throw DimensionError("data shape mismatch");
  Y_ = Y;
}

const SvParams& FsvSampler::process_params(Eigen::Index k) const {
  return processes_.at(static_cast<std::size_t>(k))->params();
}

const LatentPath& FsvSampler::process_path(Eigen::Index k) const {
  return processes_.at(static_cast<std::size_t>(k))->latent();
}

Eigen::MatrixXd FsvSampler::logvar() const {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  Eigen::MatrixXd out(m + r_, n);
  for (Eigen::Index k = 0; k < m + r_; ++k) out.row(k) = process_path(k).h.transpose();
  return out;
}

Eigen::MatrixXd FsvSampler::prior_variances() const {
  return priors_.facload_type == FacloadPrior::normal ? a_ : tau2_;
}

void FsvSampler::draw_factors(RngStream& rng) {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  const Eigen::MatrixXd h = logvar();
  Eigen::MatrixXd P(r_, r_);
  Eigen::VectorXd b(r_);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::VectorXd w = (-h.col(t).head(m)).array().exp();
    const Eigen::VectorXd resid = Y_.row(t).transpose() - beta_;
    P.noalias() = lambda_.transpose() * w.asDiagonal() * lambda_;
    P.diagonal() += (-h.col(t).tail(r_)).array().exp().matrix();
    b.noalias() = lambda_.transpose() * w.cwiseProduct(resid);
    f_.col(t) = draw_from_precision(P, b, rng);
  }
}

void FsvSampler::draw_loadings(RngStream& rng) {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  const Eigen::MatrixXd V = prior_variances();
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < r_; ++j) {
      if (!restriction_(i, j)) free.push_back(j);
    }
    if (free.empty()) continue;
    const auto k = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd F(n, k);
    for (Eigen::Index c = 0; c < k; ++c) F.col(c) = f_.row(free[static_cast<std::size_t>(c)]).transpose();
    const Eigen::VectorXd w = (-process_path(i).h).array().exp();
    const Eigen::VectorXd resid = Y_.col(i).array() - beta_(i);
    Eigen::MatrixXd P = F.transpose() * w.asDiagonal() * F;
    for (Eigen::Index c = 0; c < k; ++c) P(c, c) += 1.0 / V(i, free[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd b = F.transpose() * w.cwiseProduct(resid);
    const Eigen::VectorXd draw = draw_from_precision(P, b, rng);
    for (Eigen::Index c = 0; c < k; ++c) lambda_(i, free[static_cast<std::size_t>(c)]) = draw(c);
  }
}

void FsvSampler::update_processes(RngStream& rng) {
  const Eigen::Index m = Y_.cols();
  const Eigen::MatrixXd fitted = (lambda_ * f_).transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& p = *processes_[static_cast<std::size_t>(i)];
    p.set_response(Y_.col(i) - fitted.col(i) - Eigen::VectorXd::Constant(Y_.rows(), beta_(i)));
    p.sweep(rng, false);
  }
  for (Eigen::Index j = 0; j < r_; ++j) {
    auto& p = *processes_[static_cast<std::size_t>(m + j)];
    p.set_response(f_.row(j).transpose());
    p.sweep(rng, false);
  }
}

void FsvSampler::draw_beta(RngStream& rng) {
  const Eigen::Index m = Y_.cols();
  const Eigen::MatrixXd fitted = (lambda_ * f_).transpose();
  const double prior_prec = 1.0 / (priors_.beta.sd * priors_.beta.sd);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd w = (-process_path(i).h).array().exp();
    const double prec = w.sum() + prior_prec;
    const double lin = w.dot(Y_.col(i) - fitted.col(i)) + priors_.beta.mean * prior_prec;
    beta_(i) = lin / prec + rng.normal() / std::sqrt(prec);
  }
}

// Moves along the scale group of factor j: loadings times exp(s/2), factor
// times exp(-s/2), log-variance path minus s. The factor likelihood and the
// fit are invariant; s is drawn from its exact conditional by slice sampling.
void FsvSampler::interweave(RngStream& rng) {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  const Eigen::MatrixXd V = prior_variances();
  for (Eigen::Index j = 0; j < r_; ++j) {
    double c = 0.0;
    int free = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (restriction_(i, j)) continue;
      c += 0.5 * lambda_(i, j) * lambda_(i, j) / V(i, j);
      ++free;
    }
    if (free == 0) continue;

    auto& proc = *processes_[static_cast<std::size_t>(m + j)];
    SvParams p = proc.params();
    LatentPath path = proc.latent();
    const double s2 = p.sigma * p.sigma;
    const double phi = p.phi;
    // log p(h | mu = s) = -A s^2 / 2 + B s + const
    double a_coef = n * (1.0 - phi) * (1.0 - phi) / s2;
    double b_coef = 0.0;
    double prev = path.h0;
    for (Eigen::Index t = 0; t < n; ++t) {
      b_coef += (1.0 - phi) * (path.h(t) - phi * prev) / s2;
      prev = path.h(t);
    }
    a_coef += (1.0 - phi * phi) / s2;
    b_coef += (1.0 - phi * phi) * path.h0 / s2;

    auto logf = [&](double s) { return 0.5 * free * s - c * std::exp(s) - 0.5 * a_coef * s * s + b_coef * s; };
    const double width = 1.0 / std::sqrt(a_coef + c + 1e-12);
    const double s = slice_step(0.0, 2.0 * width, logf, rng);

    const double g = std::exp(0.5 * s);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!restriction_(i, j)) lambda_(i, j) *= g;
    }
    f_.row(j) /= g;
    path.h0 -= s;
    path.h.array() -= s;
    proc.set_response(f_.row(j).transpose());
    proc.set_state(p, path, proc.tau());
  }
}

void FsvSampler::sweep(RngStream& rng) {
  if (config_.samplefac) draw_factors(rng);
  draw_loadings(rng);
  if (priors_.facload_type != FacloadPrior::normal) {
    draw_shrinkage_latents(lambda_, restriction_, priors_.facload_type, a_, priors_.ng_c, priors_.ng_d, tau2_,
                           lambda2_, rng);
  }
  update_processes(rng);
  if (!config_.zeromean) draw_beta(rng);
  if (config_.samplefac) {
    for (int pass = 0; pass < config_.interweaving_passes; ++pass) interweave(rng);
  }
}

Eigen::MatrixXd FsvSampler::simulate_data(RngStream& rng) const {
  const Eigen::Index m = Y_.cols(), n = Y_.rows();
  Eigen::MatrixXd Y = (lambda_ * f_).transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd& h = process_path(i).h;
    for (Eigen::Index t = 0; t < n; ++t) Y(t, i) += beta_(i) + std::exp(0.5 * h(t)) * rng.normal();
  }
  return Y;
}

FsvSimulation simulate_fsv(const FsvTruth& truth, Eigen::Index n, RngStream& rng) {
  const Eigen::Index m = truth.loadings.rows(), r = truth.loadings.cols(), p = m + r;
  if (truth.mu.size() != p || truth.phi.size() != p || truth.sigma.size() != p) {
    throw DimensionError("process parameters must have m + r entries");
  }
  if (truth.beta.size() != 0 && truth.beta.size() != m) throw DimensionError("beta must have m entries");
  if (n < 1) throw InvalidParameter("n must be positive");
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(std::abs(truth.phi(k)) < 1.0) || !(truth.sigma(k) > 0.0)) {
      throw InvalidParameter("each process needs |phi| < 1 and sigma > 0");
    }
  }
  FsvSimulation sim;
  sim.logvar.resize(p, n);
  sim.factors.resize(r, n);
  sim.y.resize(n, m);
  Eigen::VectorXd level(p), h(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    level(k) = k < m ? truth.mu(k) : 0.0;
    h(k) = level(k) + truth.sigma(k) / std::sqrt(1.0 - truth.phi(k) * truth.phi(k)) * rng.normal();
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index k = 0; k < p; ++k) {
      h(k) = level(k) + truth.phi(k) * (h(k) - level(k)) + truth.sigma(k) * rng.normal();
    }
    sim.logvar.col(t) = h;
    for (Eigen::Index j = 0; j < r; ++j) sim.factors(j, t) = std::exp(0.5 * h(m + j)) * rng.normal();
    for (Eigen::Index i = 0; i < m; ++i) {
      sim.y(t, i) = truth.loadings.row(i).dot(sim.factors.col(t)) + std::exp(0.5 * h(i)) * rng.normal();
      if (truth.beta.size() == m) sim.y(t, i) += truth.beta(i);
    }
  }
  return sim;
}

Eigen::MatrixXd assemble_covariance(const Eigen::Ref<const Eigen::MatrixXd>& loadings,
                                    const Eigen::Ref<const Eigen::VectorXd>& logvar, Eigen::Index m) {
  const Eigen::Index r = loadings.cols();
  const Eigen::VectorXd fac = logvar.tail(r).array().exp();
  Eigen::MatrixXd cov = loadings * fac.asDiagonal() * loadings.transpose();
  cov.diagonal() += logvar.head(m).array().exp().matrix();
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd covariance_to_correlation(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd cor = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  cor.diagonal().setOnes();
  return cor;
}

FsvDraws fsv_sample(const Eigen::MatrixXd& Y, const FsvConfig& config, const FsvPriors& priors) {
  FsvSampler sampler(Y, config, priors);
  RngStream rng(config.seed, 0);
  sampler.initialize(rng);

  const Eigen::Index m = Y.cols(), r = config.factors, n = Y.rows();
  const bool ng = priors.facload_type != FacloadPrior::normal;
  const int kept = stored_count(config.draws, config.thin);

  FsvDraws out;
  out.m = m;
  out.r = r;
  out.n = n;
  out.config = config;
  out.priors = priors;
  out.restriction = sampler.restriction();
  out.logvar_last.resize(kept, m + r);
  out.logvar0.resize(kept, m + r);
  out.mu.resize(kept, m + r);
  out.phi.resize(kept, m + r);
  out.sigma.resize(kept, m + r);
  out.beta.resize(kept, m);
  if (ng) {
    out.tau2.resize(kept, m * r);
    out.lambda2.resize(kept, priors.facload_type == FacloadPrior::rowwise_ng ? m : r);
  }

  RunningMoments& rm = out.running;
  rm.moments = config.runningstoremoments;
  const int level = config.runningstore;
  if (level >= 1) rm.logvar.resize(m + r, n);
  if (level >= 2) rm.factors.resize(r, n);
  if (level >= 3) rm.volatility.resize(m + r, n);
  if (level >= 4) rm.covariance.resize(m * m, n);
  if (level >= 5) rm.correlation.resize(m * m, n);
  if (level >= 6) rm.communality.resize(m, n);
  const bool second = rm.moments >= 2;

  const int total = config.burnin + config.draws;
  int k = 0;
  for (int it = 0; it < total; ++it) {
    try {
      sampler.sweep(rng);
    } catch (const Error& e) {
      rethrow_with_context(e, "sweep " + std::to_string(it));
    }
    if (it < config.burnin || (it - config.burnin) % config.thin != 0) continue;

    const Eigen::MatrixXd h = sampler.logvar();
    out.loadings.push_back(sampler.loadings());
    if (config.keeptime == KeepTime::all) {
      out.factors.push_back(sampler.factors());
      out.logvar.push_back(h);
    } else {
      out.factors.push_back(sampler.factors().rightCols(1));
      out.logvar.push_back(h.rightCols(1));
    }
    out.logvar_last.row(k) = h.col(n - 1).transpose();
    for (Eigen::Index p = 0; p < m + r; ++p) {
      const SvParams& sp = sampler.process_params(p);
      out.logvar0(k, p) = sampler.process_path(p).h0;
      out.mu(k, p) = p < m ? sp.mu : 0.0;
      out.phi(k, p) = sp.phi;
      out.sigma(k, p) = sp.sigma;
    }
    out.beta.row(k) = sampler.beta().transpose();
    if (ng) {
      out.tau2.row(k) = sampler.tau2().reshaped().transpose();
      out.lambda2.row(k) = sampler.lambda2().transpose();
    }

    if (level >= 1 && k % config.runningstorethin == 0) {
      ++rm.count;
      rm.logvar.add(h, second);
      if (level >= 2) rm.factors.add(sampler.factors(), second);
      if (level >= 3) rm.volatility.add((0.5 * h.array()).exp().matrix(), second);
      if (level >= 4) {
        Eigen::MatrixXd cov_t(m * m, n), cor_t(m * m, n), com_t(m, n);
        for (Eigen::Index t = 0; t < n; ++t) {
          const Eigen::MatrixXd cov = assemble_covariance(sampler.loadings(), h.col(t), m);
          cov_t.col(t) = cov.reshaped();
          if (level >= 5) cor_t.col(t) = covariance_to_correlation(cov).reshaped();
          if (level >= 6) {
            const Eigen::VectorXd common = cov.diagonal() - h.col(t).head(m).array().exp().matrix();
            com_t.col(t) = common.cwiseQuotient(cov.diagonal()).cwiseMax(0.0).cwiseMin(1.0);
          }
        }
        rm.covariance.add(cov_t, second);
        if (level >= 5) rm.correlation.add(cor_t, second);
        if (level >= 6) rm.communality.add(com_t, second);
      }
    }
    ++k;
  }
  return out;
}

Eigen::Tensor<double, 4> covmat(const FsvDraws& draws, const std::vector<Eigen::Index>& times) {
  const std::vector<Eigen::Index> stored = draws.stored_times();
  std::vector<Eigen::Index> cols;
  const std::vector<Eigen::Index>& wanted = times.empty() ? stored : times;
  for (Eigen::Index t : wanted) {
    const auto it = std::find(stored.begin(), stored.end(), t);
    if (it == stored.end()) {
      throw DataError("time point " + std::to_string(t) + " was not stored (keeptime = " +
                      to_string(draws.config.keeptime) + ")");
    }
    cols.push_back(static_cast<Eigen::Index>(it - stored.begin()));
  }
  const Eigen::Index m = draws.m, kept = draws.kept();
  Eigen::Tensor<double, 4> out(m, m, kept, static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index k = 0; k < kept; ++k) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Eigen::MatrixXd cov =
          assemble_covariance(draws.loadings[static_cast<std::size_t>(k)], draws.logvar[static_cast<std::size_t>(k)].col(cols[c]), m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) out(a, b, k, static_cast<Eigen::Index>(c)) = cov(a, b);
      }
    }
  }
  return out;
}

Eigen::VectorXd evdiag(const FsvDraws& draws) {
  const Eigen::Index kept = draws.kept();
  if (kept == 0) throw DataError("no stored draws");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(draws.r);
  for (const auto& L : draws.loadings) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L.transpose() * L, Eigen::EigenvaluesOnly);
    acc += eig.eigenvalues().reverse();
  }
  return acc / static_cast<double>(kept);
}

long long free_elements(long long m, std::optional<long long> r) {
  if (m < 1) throw InvalidParameter("m must be positive");
  if (!r) return m * (m + 1) / 2;
  if (*r < 0 || *r >= m) throw InvalidParameter("r must satisfy 0 <= r < m");
  return m * (*r + 1) - *r * (*r - 1) / 2;
}

}  // namespace sv
