#include "sv/sv_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sv/errors.hpp"
#include "sv/parallel.hpp"

namespace sv {

std::string to_string(KeepTime k) { return k == KeepTime::all ? "all" : "last"; }

KeepTime parse_keeptime(std::string_view s) {
  if (s == "all") return KeepTime::all;
  if (s == "last") return KeepTime::last;
  throw ConfigError("keeptime must be 'all' or 'last', got '" + std::string(s) + "'");
}

SamplerConfig SamplerConfig::defaults(ModelKind kind) {
  SamplerConfig c;
  if (has_leverage(kind)) {
    c.draws = 20000;
    c.burnin = 2000;
  }
  return c;
}

void validate(const SamplerConfig& c) {
  if (c.draws < 1) throw ConfigError("draws must be at least 1");
  if (c.burnin < 0) throw ConfigError("burnin must be nonnegative");
  if (c.thinpara < 1 || c.thinlatent < 1) throw ConfigError("thinning factors must be at least 1");
  if (c.chains < 1) throw ConfigError("chains must be at least 1");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (!(c.offset >= 0.0)) throw ConfigError("offset must be nonnegative");
  if (c.asis_passes < 1) throw ConfigError("asis_passes must be at least 1");
}

Eigen::Index SvDraws::total_kept() const {
  Eigen::Index n = 0;
  for (const auto& c : chains) n += c.para.rows();
  return n;
}

namespace {

template <class Get>
Eigen::MatrixXd stack_rows(const std::vector<ChainDraws>& chains, Get get) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& c : chains) {
    rows += get(c).rows();
    cols = get(c).cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    const auto& m = get(c);
    out.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd SvDraws::para() const {
  return stack_rows(chains, [](const ChainDraws& c) -> const Eigen::MatrixXd& { return c.para; });
}
Eigen::MatrixXd SvDraws::beta() const {
  return stack_rows(chains, [](const ChainDraws& c) -> const Eigen::MatrixXd& { return c.beta; });
}
Eigen::MatrixXd SvDraws::latent() const {
  return stack_rows(chains, [](const ChainDraws& c) -> const Eigen::MatrixXd& { return c.latent; });
}
Eigen::VectorXd SvDraws::h_last() const {
  return stack_rows(chains, [](const ChainDraws& c) { return Eigen::MatrixXd(c.h_last); });
}
Eigen::VectorXd SvDraws::eps_last() const {
  return stack_rows(chains, [](const ChainDraws& c) { return Eigen::MatrixXd(c.eps_last); });
}

SvSampler::SvSampler(Eigen::VectorXd y, Eigen::MatrixXd X, ModelKind kind, PriorSpec priors, double offset,
                     int asis_passes)
    : y_(std::move(y)),
      X_(std::move(X)),
      kind_(kind),
      priors_(std::move(priors)),
      offset_(offset),
      asis_passes_(asis_passes) {
  validate(priors_, kind_);
  if (X_.cols() > 0 && X_.rows() != y_.size()) throw DimensionError("design matrix rows do not match observations");
  if (X_.cols() == 0) X_.resize(y_.size(), 0);
  t_errors_ = has_t_errors(kind_) && !is_infinity(priors_.nu);
  leverage_ = has_leverage(kind_) && !(is_constant(priors_.rho) && constant_value(priors_.rho) == 0.0);
  updater_ = std::make_unique<LeverageUpdater>(priors_, mask_);
  initialize();
}

void SvSampler::initialize() {
  auto [p, path] = init_start_values(y_, X_, priors_, offset_);
  params_ = p;
  path_ = path;
  tau_ = Eigen::VectorXd::Ones(y_.size());
}

void SvSampler::set_state(const SvParams& p, const LatentPath& path, const Eigen::VectorXd& tau) {
  if (path.h.size() != y_.size() || tau.size() != y_.size()) throw DimensionError("state length mismatch");
  if (p.beta.size() != X_.cols()) throw DimensionError("beta length does not match design");
  params_ = p;
  path_ = path;
  tau_ = tau;
}

void SvSampler::set_response(const Eigen::VectorXd& y) {
  if (y.size() != y_.size()) throw DimensionError("response length mismatch");
  y_ = y;
}

void SvSampler::set_mask(const StepMask& mask) {
  mask_ = mask;
  updater_ = std::make_unique<LeverageUpdater>(priors_, mask_);
}

double SvSampler::eps_last() const {
  const Eigen::Index n = y_.size();
  if (n == 0) return 0.0;
  const double r = y_(n - 1) - (X_.cols() > 0 ? X_.row(n - 1).dot(params_.beta) : 0.0);
  return r * std::exp(-0.5 * path_.h(n - 1)) / std::sqrt(tau_(n - 1));
}

AcceptanceStats SvSampler::centered_stats() const { return updater_->centered_stats(); }
AcceptanceStats SvSampler::noncentered_stats() const { return updater_->noncentered_stats(); }

void SvSampler::sweep(RngStream& rng, bool adapt) {
  const MixtureTable& table = mixture_table(leverage_ ? MixtureKind::leverage : MixtureKind::no_leverage);
  const Eigen::VectorXd resid = X_.cols() > 0 ? Eigen::VectorXd(y_ - X_ * params_.beta) : y_;
  const Eigen::VectorXd scaled = (resid.array() / tau_.array().sqrt()).matrix();
  const Eigen::VectorXd ystar = linearize(scaled, offset_);

  if (leverage_) {
    const Eigen::VectorXd sign = scaled.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
    if (mask_.latent) {
      const Eigen::VectorXi s = draw_indicators_leverage(ystar, sign, path_, params_, table, rng);
      path_ = draw_latent_leverage(ystar, s, sign, params_, priors_.latent0_variance, table, rng);
    }
    updater_->update(path_, resid, tau_, params_, rng, adapt, asis_passes_);
    if (t_errors_ && mask_.tau) tau_ = draw_tail_latents_leverage(resid, path_, tau_, params_, rng);
  } else {
    const Eigen::VectorXi s = draw_indicators(ystar, path_.h, table, rng);
    if (mask_.latent) path_ = draw_latent_awol(ystar, s, params_, priors_.latent0_variance, table, rng);
    draw_sv_params_asis(path_, ystar, s, params_, priors_, table, rng, mask_);
    if (t_errors_ && mask_.tau) tau_ = draw_tail_latents(resid, path_.h, params_, rng);
  }

  if (t_errors_ && mask_.nu && !is_constant(priors_.nu)) {
    bool accepted = false;
    params_.nu = draw_nu(tau_, params_.nu, priors_, nu_step_, rng, &accepted);
    ++nu_stats_.proposals;
    nu_stats_.accepted += accepted;
    if (adapt) {
      ++nu_window_.proposals;
      nu_window_.accepted += accepted;
      if (nu_window_.proposals == 50) {
        const double rate = nu_window_.rate();
        if (rate < 0.2) nu_step_ *= 0.8;
        if (rate > 0.5) nu_step_ *= 1.25;
        nu_window_ = {};
      }
    }
  }

  if (X_.cols() > 0 && mask_.beta) {
    params_.beta = draw_beta(y_, X_, path_, tau_, params_, priors_.beta, rng);
  }
}

namespace {

ChainDraws run_chain(const Design& design, ModelKind kind, const PriorSpec& priors, const SamplerConfig& config,
                     int chain) {
  RngStream rng(config.seed, static_cast<std::uint64_t>(chain));
  SvSampler sampler(design.y, design.X, kind, priors, config.offset, config.asis_passes);
  const Eigen::Index n = design.n();
  const int kept_para = stored_count(config.draws, config.thinpara);
  const int kept_latent = stored_count(config.draws, config.thinlatent);
  ChainDraws out;
  out.para.resize(kept_para, kParamColumns);
  out.beta.resize(kept_para, design.k());
  out.h_last.resize(kept_para);
  out.eps_last.resize(kept_para);
  out.latent.resize(kept_latent, config.keeptime == KeepTime::all ? n : 1);
  out.latent0.resize(kept_latent);

  const int total = config.burnin + config.draws;
  int ip = 0, il = 0;
  for (int i = 0; i < total; ++i) {
    try {
      sampler.sweep(rng, i < config.burnin);
    } catch (const Error& e) {
      rethrow_with_context(e, "chain " + std::to_string(chain) + ", sweep " + std::to_string(i));
    }
    if (i < config.burnin) continue;
    const int k = i - config.burnin;
    const auto& p = sampler.params();
    if (k % config.thinpara == 0) {
      out.para.row(ip) << p.mu, p.phi, p.sigma, p.nu, p.rho;
      if (design.k() > 0) out.beta.row(ip) = p.beta.transpose();
      out.h_last(ip) = sampler.latent().h(n - 1);
      out.eps_last(ip) = sampler.eps_last();
      ++ip;
    }
    if (k % config.thinlatent == 0) {
      if (config.keeptime == KeepTime::all) {
        out.latent.row(il) = sampler.latent().h.transpose();
      } else {
        out.latent(il, 0) = sampler.latent().h(n - 1);
      }
      out.latent0(il) = sampler.latent().h0;
      ++il;
    }
  }
  out.centered = sampler.centered_stats();
  out.noncentered = sampler.noncentered_stats();
  out.nu = sampler.nu_stats();
  return out;
}

}  // namespace

SvDraws run_sampler(const Design& design, ModelKind kind, const PriorSpec& priors, const SamplerConfig& config) {
  validate(config);
  validate(priors, kind);
  if (design.n() < 2) throw DataError("at least two observations are required");
  if (!design.y.allFinite()) throw DataError("observations must be finite");

  SvDraws draws;
  draws.kind = kind;
  draws.priors = priors;
  draws.config = config;
  draws.design = design;
  draws.chains.resize(config.chains);

  parallel_for(config.chains, config.threads,
               [&](int c) { draws.chains[c] = run_chain(design, kind, priors, config, c); });
  return draws;
}

}  // namespace sv
