#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include "sv/design.hpp"
#include "sv/diagnostics.hpp"
#include "sv/empirical.hpp"
#include "sv/errors.hpp"
#include "sv/factor_sv.hpp"
#include "sv/forecast.hpp"
#include "sv/format.hpp"
#include "sv/geweke.hpp"
#include "sv/io.hpp"
#include "sv/prior_spec.hpp"
#include "sv/simulate.hpp"
#include "sv/static_factor.hpp"
#include "sv/sv_sampler.hpp"

#ifndef SVTOOL_VERSION
#define SVTOOL_VERSION "0.0.0"
#endif

namespace sv::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

const std::vector<std::string> kKnownKeys{
    "input", "columns", "date_column", "logret", "scale", "model", "designmatrix", "out", "quantiles",
    "sampler.draws", "sampler.burnin", "sampler.thinpara", "sampler.thinlatent", "sampler.keeptime",
    "sampler.chains", "sampler.threads", "sampler.seed", "sampler.offset",
    "forecast.n_ahead", "forecast.holdout", "forecast.newdata", "forecast.length", "forecast.refit_window",
    "factor.factors", "factor.restrict", "factor.restrict_file", "factor.priorfacloadtype", "factor.priorfacload",
    "factor.priorng", "factor.zeromean", "factor.runningstore", "factor.runningstorethin",
    "factor.runningstoremoments", "factor.interweaving", "factor.preorder",
    "validate.n_data", "validate.kept", "validate.thin", "validate.alpha",
    "simulate.n", "simulate.mu", "simulate.phi", "simulate.sigma", "simulate.nu", "simulate.rho"};

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::vector<std::pair<CLI::Option*, std::string>> bound;
  std::vector<std::pair<CLI::Option*, std::pair<std::string, std::string>>> bound_flags;
  std::vector<std::string> priors;
  std::string config_path;
};

void bind(Command& c, const std::string& flag, const std::string& key, const std::string& help) {
  c.bound.emplace_back(c.app->add_option(flag, c.values[key], help), key);
}

void bind_flag(Command& c, const std::string& flag, const std::string& key, const std::string& value,
               const std::string& help) {
  const std::string slot = key + "=" + value;
  c.bound_flags.emplace_back(c.app->add_flag(flag, c.flags[slot], help), std::make_pair(key, value));
}

void bind_data(Command& c) {
  bind(c, "--input", "input", "CSV file with a header row");
  bind(c, "--columns", "columns", "comma-separated column names or 1-based indices");
  bind(c, "--date-column", "date_column", "ISO-8601 date column");
  bind_flag(c, "--logret", "logret", "true", "transform prices to log returns");
  bind(c, "--scale", "scale", "multiplier for the data (default 100 with --logret, else 1)");
}

void bind_model(Command& c) {
  bind(c, "--model", "model", "sv, svt, svl or svtl");
  c.app->add_option("--prior", c.priors, "prior override field=distribution, e.g. mu=normal(0,10)");
}

void bind_sampler(Command& c, bool latent) {
  bind(c, "--draws", "sampler.draws", "kept iterations before thinning");
  bind(c, "--burnin", "sampler.burnin", "burn-in iterations");
  bind(c, "--thinpara", "sampler.thinpara", "thinning of parameter draws");
  if (latent) bind(c, "--thinlatent", "sampler.thinlatent", "thinning of latent draws");
  bind(c, "--keeptime", "sampler.keeptime", "all or last");
  if (latent) {
    bind(c, "--chains", "sampler.chains", "independent chains");
    bind(c, "--threads", "sampler.threads", "worker threads (default $SV_THREADS or 1)");
  }
}

void bind_common(Command& c) {
  bind(c, "--seed", "sampler.seed", "random seed (required)");
  bind(c, "--out", "out", "output directory");
  c.app->add_option("--config", c.config_path, "key = value config file or a manifest.json");
}

// ---------------------------------------------------------------------------
// Settings

struct Run {
  std::string command;
  KeyValueConfig kv;
  fs::path out;
  std::vector<std::string> outputs;
  Json extra = Json::object();
};

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(key + " expects an integer, got '" + v + "'");
  return out;
}

int get_int(const KeyValueConfig& kv, const std::string& key, int fallback) {
  return kv.get_int(key).value_or(fallback);
}

double get_double(const KeyValueConfig& kv, const std::string& key, double fallback) {
  return kv.get_double(key).value_or(fallback);
}

std::uint64_t require_seed(const KeyValueConfig& kv) {
  const auto v = kv.get("sampler.seed");
  if (!v) throw ConfigError("a seed is required (--seed or sampler.seed)");
  return parse_integer<std::uint64_t>("sampler.seed", *v);
}

int default_threads() {
  if (const char* env = std::getenv("SV_THREADS")) {
    const int t = parse_integer<int>("SV_THREADS", env);
    if (t < 1) throw ConfigError("SV_THREADS must be positive");
    return t;
  }
  return 1;
}

ModelKind model_kind(const KeyValueConfig& kv) { return parse_model_kind(kv.get("model").value_or("sv")); }

std::vector<double> quantile_levels(const KeyValueConfig& kv, std::vector<double> fallback) {
  std::vector<double> qs = kv.has("quantiles") ? parse_double_list(*kv.get("quantiles")) : std::move(fallback);
  if (qs.empty()) throw ConfigError("quantiles must not be empty");
  for (double q : qs) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
  }
  return qs;
}

SamplerConfig sampler_config(const KeyValueConfig& kv, ModelKind kind) {
  SamplerConfig c = SamplerConfig::defaults(kind);
  c.draws = get_int(kv, "sampler.draws", c.draws);
  c.burnin = get_int(kv, "sampler.burnin", c.burnin);
  c.thinpara = get_int(kv, "sampler.thinpara", c.thinpara);
  c.thinlatent = get_int(kv, "sampler.thinlatent", c.thinlatent);
  if (const auto k = kv.get("sampler.keeptime")) c.keeptime = parse_keeptime(*k);
  c.chains = get_int(kv, "sampler.chains", c.chains);
  c.threads = kv.has("sampler.threads") ? *kv.get_int("sampler.threads") : default_threads();
  c.offset = get_double(kv, "sampler.offset", c.offset);
  c.seed = require_seed(kv);
  validate(c);
  return c;
}

PriorSpec prior_spec(const KeyValueConfig& kv, ModelKind kind) {
  PriorSpec spec = default_priors(kind);
  for (const auto& [field, value] : kv.section("prior")) {
    try {
      apply_prior_override(spec, field, value);
    } catch (const Error& e) {
      rethrow_with_context(e, "prior." + field);
    }
  }
  return validate(spec, kind);
}

// ---------------------------------------------------------------------------
// Data

struct DesignChoice {
  DesignSpec spec;
  std::vector<std::string> covariates;
};

DesignChoice design_choice(const KeyValueConfig& kv) {
  const std::string text = kv.get("designmatrix").value_or("none");
  if (text == "none" || (text.rfind("ar", 0) == 0 && text.size() > 2 &&
                         std::all_of(text.begin() + 2, text.end(), [](char c) { return std::isdigit(c); }))) {
    return {parse_design(text), {}};
  }
  DesignChoice d{DesignSpec::covariates(), split_list(text)};
  if (d.covariates.empty()) throw ConfigError("designmatrix must be none, ar<p> or a list of covariate columns");
  return d;
}

fs::path input_path(const KeyValueConfig& kv) {
  const auto p = kv.get("input");
  if (!p || p->empty()) throw ConfigError("an input file is required (--input)");
  return *p;
}

DataTable load_table(const KeyValueConfig& kv, const std::vector<std::string>& columns, bool transform) {
  IngestOptions opts;
  opts.columns = columns;
  if (const auto d = kv.get("date_column"); d && !d->empty()) opts.date_column = *d;
  DataTable t = ingest_csv(input_path(kv), opts);
  const bool logret = kv.get_bool("logret").value_or(false);
  if (logret) {
    if (transform) t.values = log_returns(t.values, get_double(kv, "scale", 100.0));
    else t.values = Eigen::MatrixXd(t.values.bottomRows(t.values.rows() - 1));
    if (!t.dates.empty()) t.dates.erase(t.dates.begin());
  } else if (transform) {
    t.values *= get_double(kv, "scale", 1.0);
  }
  return t;
}

struct Series {
  std::string name;
  Eigen::VectorXd y;
  Eigen::MatrixXd covariates;
  std::vector<std::string> covariate_names;
  std::vector<std::string> dates;
};

Series load_series(const KeyValueConfig& kv, const DesignChoice& design) {
  const DataTable t = load_table(kv, split_list(kv.get("columns").value_or("")), true);
  if (t.values.cols() != 1) {
    throw DataError("univariate commands need exactly one response column (found " +
                    std::to_string(t.values.cols()) + "); select it with --columns");
  }
  Series s{t.names.front(), t.values.col(0), {}, {}, t.dates};
  if (!design.covariates.empty()) {
    const DataTable c = load_table(kv, design.covariates, false);
    s.covariates = c.values;
    s.covariate_names = c.names;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output

fs::path prepare_out(const KeyValueConfig& kv) {
  const fs::path out = kv.get("out").value_or("svtool-out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory '" + out.string() + "': " + ec.message());
  return out;
}

std::vector<std::string> fmt_row(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(format_double(v(i)));
  return out;
}

template <typename Fill>
void write_csv(Run& run, const std::string& name, const std::vector<std::string>& header, Fill&& fill) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row(header);
  fill(w);
  write_text_file(run.out / name, os.str());
  run.outputs.push_back(name);
}

void write_json(Run& run, const std::string& name, const Json& j) {
  write_text_file(run.out / name, j.dump(2) + "\n");
  run.outputs.push_back(name);
}

void write_manifest(Run& run) {
  Json m;
  m["tool"] = "svtool";
  m["version"] = SVTOOL_VERSION;
  m["command"] = run.command;
  Json cfg = Json::object();
  for (const auto& [k, v] : run.kv.entries()) cfg[k] = v;
  m["config"] = cfg;
  m["seed"] = run.kv.get("sampler.seed").value_or("");
  m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"boost", BOOST_LIB_VERSION}};
  for (auto& [k, v] : run.extra.items()) m[k] = v;
  m["outputs"] = run.outputs;
  write_text_file(run.out / "manifest.json", m.dump(2) + "\n");
}

std::string quantile_label(double q) { return "q" + format_double(q); }

std::vector<std::string> para_columns(ModelKind kind) {
  std::vector<std::string> cols{"mu", "phi", "sigma"};
  if (has_t_errors(kind)) cols.emplace_back("nu");
  if (has_leverage(kind)) cols.emplace_back("rho");
  return cols;
}

std::vector<int> para_indices(ModelKind kind) {
  std::vector<int> idx{kMu, kPhi, kSigma};
  if (has_t_errors(kind)) idx.push_back(kNu);
  if (has_leverage(kind)) idx.push_back(kRho);
  return idx;
}

std::vector<std::string> beta_names(const Design& d) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < d.k(); ++j) {
    names.push_back(j < static_cast<Eigen::Index>(d.names.size()) ? d.names[static_cast<std::size_t>(j)]
                                                                   : "beta_" + std::to_string(j));
  }
  return names;
}

void write_estimate_outputs(Run& run, const SvDraws& draws, const Series& series, const std::vector<double>& qs) {
  const Design& d = draws.design;
  const std::vector<int> idx = para_indices(draws.kind);
  const std::vector<std::string> betas = beta_names(d);

  std::vector<std::string> header{"chain", "draw"};
  for (const auto& c : para_columns(draws.kind)) header.push_back(c);
  header.insert(header.end(), betas.begin(), betas.end());
  write_csv(run, "draws.csv", header, [&](CsvWriter& w) {
    for (std::size_t c = 0; c < draws.chains.size(); ++c) {
      const ChainDraws& ch = draws.chains[c];
      for (Eigen::Index k = 0; k < ch.para.rows(); ++k) {
        std::vector<std::string> row{std::to_string(c + 1), std::to_string(k + 1)};
        for (int j : idx) row.push_back(format_double(ch.para(k, j)));
        for (Eigen::Index j = 0; j < ch.beta.cols(); ++j) row.push_back(format_double(ch.beta(k, j)));
        w.row(row);
      }
    }
  });

  // Latent columns refer to 1-based positions in the (transformed) input series.
  const Eigen::Index offset = series.y.size() - d.n();
  const Eigen::Index cols = draws.chains.front().latent.cols();
  std::vector<Eigen::Index> times;
  for (Eigen::Index i = 0; i < cols; ++i) times.push_back(cols == d.n() ? offset + i + 1 : offset + d.n());
  std::vector<std::string> lheader{"chain", "draw"};
  for (Eigen::Index t : times) lheader.push_back("h_" + std::to_string(t));
  write_csv(run, "latent.csv", lheader, [&](CsvWriter& w) {
    for (std::size_t c = 0; c < draws.chains.size(); ++c) {
      const Eigen::MatrixXd& lat = draws.chains[c].latent;
      for (Eigen::Index k = 0; k < lat.rows(); ++k) {
        std::vector<std::string> row{std::to_string(c + 1), std::to_string(k + 1)};
        const auto vals = fmt_row(lat.row(k));
        row.insert(row.end(), vals.begin(), vals.end());
        w.row(row);
      }
    }
  });

  const std::vector<double> bands{0.05, 0.5, 0.95};
  const bool dated = !series.dates.empty();
  std::vector<std::string> vheader{"t"};
  if (dated) vheader.emplace_back("date");
  for (double q : bands) vheader.push_back(quantile_label(q));
  write_csv(run, "volatility.csv", vheader, [&](CsvWriter& w) {
    Eigen::Index total = 0;
    for (const auto& ch : draws.chains) total += ch.latent.rows();
    Eigen::VectorXd pooled(total);
    for (Eigen::Index i = 0; i < cols; ++i) {
      Eigen::Index pos = 0;
      for (const auto& ch : draws.chains) {
        pooled.segment(pos, ch.latent.rows()) = (0.5 * ch.latent.col(i).array()).exp() * 100.0;
        pos += ch.latent.rows();
      }
      const Eigen::VectorXd qv = quantiles(pooled, bands);
      std::vector<std::string> row{std::to_string(times[static_cast<std::size_t>(i)])};
      if (dated) row.push_back(series.dates[static_cast<std::size_t>(times[static_cast<std::size_t>(i)] - 1)]);
      for (Eigen::Index j = 0; j < qv.size(); ++j) row.push_back(format_double(qv(j)));
      w.row(row);
    }
  });

  const SummaryTable table = summarize(draws, qs, false);
  write_json(run, "summary.json", to_json(table));
  write_text_file(run.out / "summary.txt", to_text(table));
  run.outputs.emplace_back("summary.txt");
}

// ---------------------------------------------------------------------------
// Commands

int cmd_simulate(Run& run, std::ostream& out) {
  const ModelKind kind = model_kind(run.kv);
  SvParams p;
  p.mu = get_double(run.kv, "simulate.mu", -10.0);
  p.phi = get_double(run.kv, "simulate.phi", 0.97);
  p.sigma = get_double(run.kv, "simulate.sigma", 0.3);
  if (has_t_errors(kind)) p.nu = get_double(run.kv, "simulate.nu", 8.0);
  if (has_leverage(kind)) p.rho = get_double(run.kv, "simulate.rho", -0.4);
  p.beta = Eigen::VectorXd(0);
  const int n = get_int(run.kv, "simulate.n", 1000);
  if (n < 1) throw ConfigError("simulate.n must be positive");
  RngStream rng(require_seed(run.kv), 0);
  const SimulatedSeries sim = simulate_sv(p, n, Eigen::MatrixXd(n, 0), Latent0Variance::make_stationary(), rng);
  std::vector<std::string> header{"t", "y", "h"};
  if (has_t_errors(kind)) header.emplace_back("tau");
  write_csv(run, "simulated.csv", header, [&](CsvWriter& w) {
    for (Eigen::Index t = 0; t < n; ++t) {
      std::vector<std::string> row{std::to_string(t + 1), format_double(sim.y(t)), format_double(sim.latent.h(t))};
      if (has_t_errors(kind)) row.push_back(format_double(sim.tau(t)));
      w.row(row);
    }
  });
  run.extra["truth"] = {{"mu", p.mu}, {"phi", p.phi}, {"sigma", p.sigma}};
  if (has_t_errors(kind)) run.extra["truth"]["nu"] = p.nu;
  if (has_leverage(kind)) run.extra["truth"]["rho"] = p.rho;
  out << "wrote " << n << " observations to " << (run.out / "simulated.csv").string() << "\n";
  return 0;
}

int cmd_estimate(Run& run, std::ostream& out) {
  const ModelKind kind = model_kind(run.kv);
  const SamplerConfig config = sampler_config(run.kv, kind);
  const PriorSpec priors = prior_spec(run.kv, kind);
  const DesignChoice dc = design_choice(run.kv);
  const Series s = load_series(run.kv, dc);
  const std::vector<double> qs = quantile_levels(run.kv, default_summary_quantiles());
  const Design design = make_design(s.y, dc.spec, s.covariates, s.covariate_names);
  const SvDraws draws = run_sampler(design, kind, priors, config);
  write_estimate_outputs(run, draws, s, qs);
  out << to_text(summarize(draws, qs, false));
  return 0;
}

Eigen::MatrixXd load_newdata(const KeyValueConfig& kv, const std::vector<std::string>& names, int rows) {
  const auto path = kv.get("forecast.newdata");
  if (!path) throw DataError("covariate designs need --newdata with one row per forecast horizon");
  IngestOptions opts;
  opts.columns = names;
  const DataTable t = ingest_csv(*path, opts);
  if (t.values.rows() < rows) {
    throw DimensionError("newdata has " + std::to_string(t.values.rows()) + " rows, need " + std::to_string(rows));
  }
  return t.values.topRows(rows);
}

int cmd_forecast(Run& run, std::ostream& out) {
  const ModelKind kind = model_kind(run.kv);
  const SamplerConfig config = sampler_config(run.kv, kind);
  const PriorSpec priors = prior_spec(run.kv, kind);
  const DesignChoice dc = design_choice(run.kv);
  Series s = load_series(run.kv, dc);
  const std::vector<double> qs = quantile_levels(run.kv, default_summary_quantiles());
  const int holdout = get_int(run.kv, "forecast.holdout", 0);
  if (holdout < 0 || holdout >= s.y.size()) throw ConfigError("holdout must lie in [0, n)");
  const int n_ahead = get_int(run.kv, "forecast.n_ahead", holdout > 0 ? holdout : 1);
  if (n_ahead < 1) throw ConfigError("n_ahead must be positive");

  const Eigen::Index train = s.y.size() - holdout;
  const Eigen::VectorXd future = s.y.tail(holdout);
  Eigen::MatrixXd newdata;
  if (dc.spec.kind == DesignSpec::Kind::covariates) {
    if (run.kv.has("forecast.newdata") || holdout < n_ahead) {
      newdata = load_newdata(run.kv, dc.covariates, n_ahead);
    } else {
      newdata = s.covariates.middleRows(train, n_ahead);
    }
    s.covariates = Eigen::MatrixXd(s.covariates.topRows(train));
  }
  s.y = Eigen::VectorXd(s.y.head(train));
  if (!s.dates.empty()) s.dates.resize(static_cast<std::size_t>(train));

  const Design design = make_design(s.y, dc.spec, s.covariates, s.covariate_names);
  const SvDraws draws = run_sampler(design, kind, priors, config);
  write_estimate_outputs(run, draws, s, qs);

  RngStream rng(config.seed, static_cast<std::uint64_t>(config.chains));
  const PredictiveDraws pd = predict(draws, n_ahead, newdata, rng);
  std::vector<std::string> header{"horizon", "t", "mean"};
  for (double q : qs) header.push_back(quantile_label(q));
  header.emplace_back("observed");
  header.emplace_back("log_predlik");
  double total = 0.0;
  int scored = 0;
  write_csv(run, "forecast.csv", header, [&](CsvWriter& w) {
    for (int h = 1; h <= n_ahead; ++h) {
      const Eigen::VectorXd qv = predictive_quantile(pd, qs, h);
      std::vector<std::string> row{std::to_string(h), std::to_string(train + h),
                                   format_double(pd.y_future.col(h - 1).mean())};
      for (Eigen::Index j = 0; j < qv.size(); ++j) row.push_back(format_double(qv(j)));
      if (h <= holdout) {
        const double x = future(h - 1);
        const double lp = predictive_likelihood(pd, x, h).log_value;
        total += lp;
        ++scored;
        row.push_back(format_double(x));
        row.push_back(format_double(lp));
      } else {
        row.emplace_back("");
        row.emplace_back("");
      }
      w.row(row);
    }
  });
  run.extra["forecast"] = {{"n_ahead", n_ahead}, {"holdout", holdout}, {"train_length", train}};
  out << "forecast for " << n_ahead << " horizons written to " << (run.out / "forecast.csv").string() << "\n";
  if (scored > 0) out << "sum of log predictive likelihoods: " << format_significant(total, 6) << "\n";
  return 0;
}

int cmd_roll(Run& run, std::ostream& out) {
  const ModelKind kind = model_kind(run.kv);
  const SamplerConfig config = sampler_config(run.kv, kind);
  const PriorSpec priors = prior_spec(run.kv, kind);
  const DesignChoice dc = design_choice(run.kv);
  const Series s = load_series(run.kv, dc);
  RollingConfig rc;
  rc.n_ahead = get_int(run.kv, "forecast.n_ahead", rc.n_ahead);
  rc.forecast_length = get_int(run.kv, "forecast.length", rc.forecast_length);
  if (const auto w = run.kv.get("forecast.refit_window")) rc.refit_window = parse_refit_window(*w);
  rc.quantiles = quantile_levels(run.kv, rc.quantiles);
  rc.design = dc.spec;
  const RollingResult result = rolling_estimate(s.y, s.covariates, kind, priors, rc, config);

  const bool dated = !s.dates.empty();
  std::vector<std::string> header{"window", "start", "end", "target"};
  if (dated) header.emplace_back("date");
  header.emplace_back("observed");
  header.emplace_back("log_predlik");
  for (double q : rc.quantiles) header.push_back(quantile_label(q));
  const std::vector<int> idx = para_indices(kind);
  for (const auto& c : para_columns(kind)) header.push_back(c + "_mean");

  double total = 0.0;
  write_csv(run, "rolling.csv", header, [&](CsvWriter& w) {
    for (const WindowRecord& rec : result.windows) {
      std::vector<std::string> row{std::to_string(rec.index), std::to_string(rec.bounds.start),
                                   std::to_string(rec.bounds.end), std::to_string(rec.bounds.target)};
      if (dated) row.push_back(s.dates[static_cast<std::size_t>(rec.bounds.target - 1)]);
      row.push_back(format_double(rec.observed));
      row.push_back(format_double(rec.log_predlik));
      total += rec.log_predlik;
      for (Eigen::Index j = 0; j < rec.quantiles.size(); ++j) row.push_back(format_double(rec.quantiles(j)));
      for (int j : idx) row.push_back(format_double(rec.para.col(j).mean()));
      w.row(row);
    }
  });
  const auto count = static_cast<double>(result.windows.size());
  Json summary;
  summary["refit_window"] = to_string(rc.refit_window);
  summary["n_ahead"] = rc.n_ahead;
  summary["forecast_length"] = rc.forecast_length;
  summary["first_window_width"] = result.first_width;
  summary["sum_log_predlik"] = round_significant(total, 8);
  summary["mean_log_predlik"] = round_significant(total / count, 8);
  write_json(run, "rolling_summary.json", summary);
  out << result.windows.size() << " windows, mean log predictive likelihood "
      << format_significant(total / count, 6) << "\n";
  return 0;
}

BoolMatrix load_restriction(const fs::path& path, Eigen::Index m, Eigen::Index r) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open restriction file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto records = parse_csv(ss.str());
  auto parse_bool = [](std::string v, bool& out) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::toupper(c); });
    v.erase(std::remove_if(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c); }), v.end());
    if (v == "TRUE" || v == "T" || v == "1") return out = true, true;
    if (v == "FALSE" || v == "F" || v == "0") return out = false, true;
    return false;
  };
  bool dummy = false;
  if (!records.empty() && !records.front().empty() && !parse_bool(records.front().back(), dummy)) {
    records.erase(records.begin());
  }
  if (static_cast<Eigen::Index>(records.size()) != m) {
    throw DimensionError("restriction file needs " + std::to_string(m) + " rows");
  }
  BoolMatrix out(m, r);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(rec.size()) < r) throw DimensionError("restriction file needs " + std::to_string(r) + " columns");
    const std::size_t skip = rec.size() - static_cast<std::size_t>(r);
    for (Eigen::Index j = 0; j < r; ++j) {
      bool v = false;
      if (!parse_bool(rec[skip + static_cast<std::size_t>(j)], v)) {
        throw DataError("restriction file row " + std::to_string(i + 1) + ": expected TRUE or FALSE");
      }
      out(i, j) = v;
    }
  }
  return out;
}

FsvPriors factor_priors(const KeyValueConfig& kv) {
  FsvPriors p;
  for (const auto& [field, value] : kv.section("factor.prior")) {
    try {
      const Distribution d = parse_distribution(value);
      if (field == "mu") p.mu = d;
      else if (field == "phiidi") p.phi_idi = d;
      else if (field == "phifac") p.phi_fac = d;
      else if (field == "sigma2idi") p.sigma2_idi = d;
      else if (field == "sigma2fac") p.sigma2_fac = d;
      else if (field == "beta") {
        const auto* n = std::get_if<dist::Normal>(&d);
        if (!n) throw ConfigError("expects normal(mean, sd)");
        p.beta = *n;
      } else {
        throw ConfigError("unknown factor prior field");
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "factor.prior." + field);
    }
  }
  if (const auto t = kv.get("factor.priorfacloadtype")) p.facload_type = parse_facload_prior(*t);
  if (kv.has("factor.priorfacload")) p.facload = Eigen::MatrixXd::Constant(1, 1, *kv.get_double("factor.priorfacload"));
  if (const auto ng = kv.get("factor.priorng")) {
    const auto v = parse_double_list(*ng);
    if (v.size() != 2) throw ConfigError("factor.priorng expects c,d");
    p.ng_c = v[0];
    p.ng_d = v[1];
  }
  return p;
}

std::vector<std::string> moment_columns(const std::string& block, const std::vector<std::string>& series, int r) {
  std::vector<std::string> fac;
  for (int j = 1; j <= r; ++j) fac.push_back("F" + std::to_string(j));
  std::vector<std::string> out;
  if (block == "logvar" || block == "volatility") {
    out = series;
    out.insert(out.end(), fac.begin(), fac.end());
  } else if (block == "factors") {
    out = fac;
  } else if (block == "communality") {
    out = series;
  } else {
    const std::string tag = block == "covariance" ? "cov_" : "cor_";
    for (std::size_t b = 0; b < series.size(); ++b) {
      for (std::size_t a = 0; a < series.size(); ++a) out.push_back(tag + series[a] + "_" + series[b]);
    }
  }
  return out;
}

int cmd_factor(Run& run, std::ostream& out) {
  const KeyValueConfig& kv = run.kv;
  DataTable t = load_table(kv, split_list(kv.get("columns").value_or("")), true);
  FsvConfig c;
  c.factors = get_int(kv, "factor.factors", c.factors);
  c.draws = get_int(kv, "sampler.draws", c.draws);
  c.burnin = get_int(kv, "sampler.burnin", c.burnin);
  c.thin = get_int(kv, "sampler.thinpara", c.thin);
  if (const auto k = kv.get("sampler.keeptime")) c.keeptime = parse_keeptime(*k);
  c.zeromean = kv.get_bool("factor.zeromean").value_or(c.zeromean);
  if (const auto r = kv.get("factor.restrict")) c.restrict = parse_restrict(*r);
  c.runningstore = get_int(kv, "factor.runningstore", c.runningstore);
  c.runningstorethin = get_int(kv, "factor.runningstorethin", c.runningstorethin);
  c.runningstoremoments = get_int(kv, "factor.runningstoremoments", c.runningstoremoments);
  c.interweaving_passes = get_int(kv, "factor.interweaving", c.interweaving_passes);
  c.offset = get_double(kv, "sampler.offset", c.offset);
  c.seed = require_seed(kv);
  const FsvPriors priors = factor_priors(kv);
  const Eigen::Index m = t.values.cols();

  if (kv.get_bool("factor.preorder").value_or(false)) {
    const std::vector<int> perm = preorder(t.values, c.factors);
    Eigen::MatrixXd Y(t.values.rows(), m);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < m; ++j) {
      Y.col(j) = t.values.col(perm[static_cast<std::size_t>(j)] - 1);
      names.push_back(t.names[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)] - 1)]);
    }
    t.values = Y;
    t.names = names;
    run.extra["preorder"] = perm;
  }
  if (c.restrict == RestrictKind::matrix) {
    const auto path = kv.get("factor.restrict_file");
    if (!path) throw ConfigError("restrict = file needs --restrict-file");
    c.restrict_matrix = load_restriction(*path, m, c.factors);
  }

  const FsvDraws d = fsv_sample(t.values, c, priors);
  const Eigen::Index r = d.r, n = d.n;
  const std::vector<std::string>& names = t.names;
  std::vector<std::string> fac;
  for (Eigen::Index j = 1; j <= r; ++j) fac.push_back("F" + std::to_string(j));

  std::vector<std::string> header{"draw"};
  std::vector<std::function<double(Eigen::Index)>> getters;
  auto add = [&](std::string name, std::function<double(Eigen::Index)> g) {
    header.push_back(std::move(name));
    getters.push_back(std::move(g));
  };
  for (Eigen::Index i = 0; i < m; ++i) add("mu_" + names[static_cast<std::size_t>(i)], [&, i](Eigen::Index k) { return d.mu(k, i); });
  for (Eigen::Index i = 0; i < m; ++i) add("phi_" + names[static_cast<std::size_t>(i)], [&, i](Eigen::Index k) { return d.phi(k, i); });
  for (Eigen::Index i = 0; i < m; ++i) add("sigma_" + names[static_cast<std::size_t>(i)], [&, i](Eigen::Index k) { return d.sigma(k, i); });
  for (Eigen::Index j = 0; j < r; ++j) add("phi_" + fac[static_cast<std::size_t>(j)], [&, j, m](Eigen::Index k) { return d.phi(k, m + j); });
  for (Eigen::Index j = 0; j < r; ++j) add("sigma_" + fac[static_cast<std::size_t>(j)], [&, j, m](Eigen::Index k) { return d.sigma(k, m + j); });
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      add("lambda_" + names[static_cast<std::size_t>(i)] + "_" + fac[static_cast<std::size_t>(j)],
          [&, i, j](Eigen::Index k) { return d.loadings[static_cast<std::size_t>(k)](i, j); });
    }
  }
  if (!c.zeromean) {
    for (Eigen::Index i = 0; i < m; ++i) add("beta_" + names[static_cast<std::size_t>(i)], [&, i](Eigen::Index k) { return d.beta(k, i); });
  }
  write_csv(run, "factor_draws.csv", header, [&](CsvWriter& w) {
    for (Eigen::Index k = 0; k < d.kept(); ++k) {
      std::vector<std::string> row{std::to_string(k + 1)};
      for (const auto& g : getters) row.push_back(format_double(g(k)));
      w.row(row);
    }
  });

  const std::vector<Eigen::Index> times = d.stored_times();
  std::vector<std::string> theader{"draw", "process"};
  for (Eigen::Index tt : times) theader.push_back("t" + std::to_string(tt));
  write_csv(run, "factor_latent.csv", theader, [&](CsvWriter& w) {
    for (Eigen::Index k = 0; k < d.kept(); ++k) {
      const auto& h = d.logvar[static_cast<std::size_t>(k)];
      const auto& f = d.factors[static_cast<std::size_t>(k)];
      for (Eigen::Index p = 0; p < m + r; ++p) {
        const std::string label = p < m ? names[static_cast<std::size_t>(p)] : fac[static_cast<std::size_t>(p - m)];
        std::vector<std::string> row{std::to_string(k + 1), "h_" + label};
        const auto vals = fmt_row(h.row(p));
        row.insert(row.end(), vals.begin(), vals.end());
        w.row(row);
      }
      for (Eigen::Index j = 0; j < r; ++j) {
        std::vector<std::string> row{std::to_string(k + 1), "f_" + fac[static_cast<std::size_t>(j)]};
        const auto vals = fmt_row(f.row(j));
        row.insert(row.end(), vals.begin(), vals.end());
        w.row(row);
      }
    }
  });

  const RunningMoments& rm = d.running;
  const bool dated = !t.dates.empty();
  const std::vector<std::pair<std::string, const MomentBlock*>> blocks{
      {"logvar", &rm.logvar},           {"factors", &rm.factors},         {"volatility", &rm.volatility},
      {"covariance", &rm.covariance},   {"correlation", &rm.correlation}, {"communality", &rm.communality}};
  for (const auto& [label, block] : blocks) {
    if (block->empty() || rm.count == 0) continue;
    std::vector<std::string> mh{"t"};
    if (dated) mh.emplace_back("date");
    const auto cols = moment_columns(label, names, static_cast<int>(r));
    mh.insert(mh.end(), cols.begin(), cols.end());
    auto emit = [&](const std::string& file, const Eigen::MatrixXd& values) {
      write_csv(run, file, mh, [&](CsvWriter& w) {
        for (Eigen::Index tt = 0; tt < n; ++tt) {
          std::vector<std::string> row{std::to_string(tt + 1)};
          if (dated) row.push_back(t.dates[static_cast<std::size_t>(tt)]);
          const auto vals = fmt_row(values.col(tt).transpose());
          row.insert(row.end(), vals.begin(), vals.end());
          w.row(row);
        }
      });
    };
    emit("runmean_" + label + ".csv", rm.mean(*block));
    if (rm.moments >= 2) emit("runsd_" + label + ".csv", rm.sd(*block));
  }

  const Eigen::VectorXd ev = evdiag(d);
  write_csv(run, "evdiag.csv", {"component", "eigenvalue"}, [&](CsvWriter& w) {
    for (Eigen::Index j = 0; j < ev.size(); ++j) w.row({std::to_string(j + 1), format_double(ev(j))});
  });
  std::vector<std::string> rh{"series"};
  rh.insert(rh.end(), fac.begin(), fac.end());
  write_csv(run, "restriction.csv", rh, [&](CsvWriter& w) {
    for (Eigen::Index i = 0; i < m; ++i) {
      std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
      for (Eigen::Index j = 0; j < r; ++j) row.emplace_back(d.restriction(i, j) ? "TRUE" : "FALSE");
      w.row(row);
    }
  });

  const std::vector<double> qs = quantile_levels(kv, default_summary_quantiles());
  SummaryTable table;
  table.quantiles = qs;
  std::sort(table.quantiles.begin(), table.quantiles.end());
  for (std::size_t g = 0; g < getters.size(); ++g) {
    Eigen::VectorXd v(d.kept());
    for (Eigen::Index k = 0; k < d.kept(); ++k) v(k) = getters[g](k);
    table.rows.push_back(summarize_values(header[g + 1], {v}, table.quantiles));
  }
  write_json(run, "summary.json", to_json(table));
  write_text_file(run.out / "summary.txt", to_text(table));
  run.outputs.emplace_back("summary.txt");
  run.extra["factor"] = {{"m", m}, {"r", r}, {"n", n}, {"kept", d.kept()}};
  out << "factor model with " << r << " factor(s) on " << m << " series; eigenvalues";
  for (Eigen::Index j = 0; j < ev.size(); ++j) out << ' ' << format_significant(ev(j));
  out << "\n";
  return 0;
}

int cmd_validate(Run& run, std::ostream& out) {
  const ModelKind kind = model_kind(run.kv);
  KeyValueConfig kv = run.kv;
  if (!kv.has("prior.mu")) kv.set("prior.mu", "normal(0, 1)");
  const PriorSpec priors = prior_spec(kv, kind);
  GewekeConfig g;
  g.n_data = get_int(kv, "validate.n_data", g.n_data);
  g.kept = get_int(kv, "validate.kept", g.kept);
  g.thin = get_int(kv, "validate.thin", g.thin);
  g.burnin = get_int(kv, "sampler.burnin", g.burnin);
  g.alpha = get_double(kv, "validate.alpha", g.alpha);
  g.seed = require_seed(kv);
  const GewekeReport report = geweke_validate(kind, priors, g);
  write_json(run, "geweke.json", to_json(report));
  for (const auto& p : report.parameters) {
    out << p.name << ": " << p.test.method << " p = " << format_significant(p.test.p_value) << (p.pass ? "" : "  FAIL")
        << "\n";
  }
  out << (report.pass ? "PASS" : "FAIL") << "\n";
  run.extra["pass"] = report.pass;
  return report.pass ? 0 : 1;
}

Json error_json(const std::string& kind, const std::string& message, const std::string& command) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  if (!command.empty()) j["error"]["command"] = command;
  return j;
}

KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("manifest '" + path + "' has no config object");
    KeyValueConfig kv;
    for (auto& [k, v] : j["config"].items()) kv.set(k, v.is_string() ? v.get<std::string>() : v.dump());
    return kv;
  }
  return KeyValueConfig::parse(text);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian stochastic volatility estimation, forecasting and factor models", "svtool"};
  app.set_version_flag("--version", SVTOOL_VERSION);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    commands.back()->app = app.add_subcommand(name, help);
    return *commands.back();
  };

  Command& sim = make("simulate", "simulate a univariate SV series");
  bind_model(sim);
  bind(sim, "--n", "simulate.n", "number of observations");
  bind(sim, "--mu", "simulate.mu", "level of the log-variance");
  bind(sim, "--phi", "simulate.phi", "persistence");
  bind(sim, "--sigma", "simulate.sigma", "volatility of the log-variance");
  bind(sim, "--nu", "simulate.nu", "degrees of freedom (t models)");
  bind(sim, "--rho", "simulate.rho", "leverage correlation (leverage models)");
  bind_common(sim);

  Command& est = make("estimate", "fit a univariate SV model");
  bind_data(est);
  bind_model(est);
  bind(est, "--designmatrix", "designmatrix", "none, ar<p> or covariate columns");
  bind_sampler(est, true);
  bind(est, "--quantiles", "quantiles", "summary quantile levels");
  bind_common(est);

  Command& fc = make("forecast", "fit and simulate the predictive distribution");
  bind_data(fc);
  bind_model(fc);
  bind(fc, "--designmatrix", "designmatrix", "none, ar<p> or covariate columns");
  bind_sampler(fc, true);
  bind(fc, "--quantiles", "quantiles", "predictive quantile levels");
  bind(fc, "--n-ahead", "forecast.n_ahead", "forecast horizon");
  bind(fc, "--holdout", "forecast.holdout", "hold out the last observations and score them");
  bind(fc, "--newdata", "forecast.newdata", "CSV with future covariate rows");
  bind_common(fc);

  Command& roll = make("roll", "rolling-window out-of-sample evaluation");
  bind_data(roll);
  bind_model(roll);
  bind(roll, "--designmatrix", "designmatrix", "none, ar<p> or covariate columns");
  bind_sampler(roll, true);
  bind(roll, "--quantiles", "quantiles", "predictive quantile levels");
  bind(roll, "--n-ahead", "forecast.n_ahead", "forecast horizon");
  bind(roll, "--forecast-length", "forecast.length", "number of windows");
  bind(roll, "--refit-window", "forecast.refit_window", "moving or expanding");
  bind_common(roll);

  Command& fac = make("factor", "fit a factor stochastic volatility model");
  bind_data(fac);
  bind_sampler(fac, false);
  bind(fac, "--quantiles", "quantiles", "summary quantile levels");
  bind(fac, "--factors", "factor.factors", "number of latent factors");
  bind(fac, "--restrict", "factor.restrict", "none, upper, auto or file");
  bind(fac, "--restrict-file", "factor.restrict_file", "m x r CSV of TRUE/FALSE (TRUE fixes the loading at 0)");
  bind(fac, "--priorfacloadtype", "factor.priorfacloadtype", "normal, rowwiseng or colwiseng");
  bind(fac, "--priorfacload", "factor.priorfacload", "prior variance (normal) or shrinkage a (NG)");
  bind(fac, "--priorng", "factor.priorng", "normal-gamma hyperparameters c,d");
  bind(fac, "--runningstore", "factor.runningstore", "running-moment level 0..6");
  bind(fac, "--runningstorethin", "factor.runningstorethin", "thinning of running moments");
  bind_flag(fac, "--no-zeromean", "factor.zeromean", "false", "estimate a mean per series");
  bind_flag(fac, "--preorder", "factor.preorder", "true", "reorder series by a static factor fit");
  bind_common(fac);

  Command& val = make("validate", "Geweke joint-distribution test of the sampler");
  bind_model(val);
  bind(val, "--n-data", "validate.n_data", "length of the simulated series");
  bind(val, "--kept", "validate.kept", "kept draws");
  bind(val, "--thin", "validate.thin", "thinning");
  bind(val, "--burnin", "sampler.burnin", "burn-in sweeps");
  bind(val, "--alpha", "validate.alpha", "significance level");
  bind_common(val);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  std::string command;
  std::optional<fs::path> out_dir;
  try {
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << error_json("usage", e.what(), "").dump() << "\n";
      return 2;
    }

    Command* chosen = nullptr;
    for (auto& c : commands) {
      if (c->app->parsed()) chosen = c.get();
    }
    command = chosen->app->get_name();

    Run run;
    run.command = command;
    run.kv = load_config(chosen->config_path);
    for (const auto& [opt, key] : chosen->bound) {
      if (opt->count() > 0) run.kv.set(key, chosen->values[key]);
    }
    for (const auto& [opt, kv] : chosen->bound_flags) {
      if (opt->count() > 0) run.kv.set(kv.first, kv.second);
    }
    for (const auto& p : chosen->priors) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ConfigError("--prior expects field=distribution, got '" + p + "'");
      run.kv.set("prior." + p.substr(0, eq), p.substr(eq + 1));
    }
    run.kv.check_keys(kKnownKeys, {"prior", "factor.prior"});
    run.out = prepare_out(run.kv);
    out_dir = run.out;

    int code = 0;
    if (command == "simulate") code = cmd_simulate(run, out);
    else if (command == "estimate") code = cmd_estimate(run, out);
    else if (command == "forecast") code = cmd_forecast(run, out);
    else if (command == "roll") code = cmd_roll(run, out);
    else if (command == "factor") code = cmd_factor(run, out);
    else code = cmd_validate(run, out);
    write_manifest(run);
    return code;
  } catch (const std::exception& e) {
    const auto* sve = dynamic_cast<const Error*>(&e);
    const Json j = error_json(sve ? sve->kind() : "internal", e.what(), command);
    err << j.dump() << "\n";
    if (out_dir) {
      std::ofstream f(*out_dir / "error.json", std::ios::binary);
      f << j.dump(2) << "\n";
    }
    return 2;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace sv::cli
