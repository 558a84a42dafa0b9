#include "sv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "sv/empirical.hpp"
#include "sv/errors.hpp"
#include "sv/format.hpp"

namespace sv {

Eigen::VectorXd autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& chain, Eigen::Index max_lag) {
  const Eigen::Index m = chain.size();
  max_lag = std::min(max_lag, m - 1);
  Eigen::Index len = 1;
  while (len < 2 * m) len <<= 1;

  std::vector<double> padded(static_cast<std::size_t>(len), 0.0);
  const double mean = chain.mean();
  for (Eigen::Index i = 0; i < m; ++i) padded[static_cast<std::size_t>(i)] = chain(i) - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> acov;
  fft.inv(acov, freq);

  Eigen::VectorXd rho(max_lag + 1);
  const double c0 = acov[0];
  for (Eigen::Index k = 0; k <= max_lag; ++k) rho(k) = c0 > 0.0 ? acov[static_cast<std::size_t>(k)] / c0 : 0.0;
  return rho;
}

EssResult effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain) {
  const Eigen::Index m = chain.size();
  if (m < 2) throw InvalidParameter("ESS needs at least two draws");
  if (!chain.allFinite()) throw DataError("ESS needs finite draws");
  const double range = chain.maxCoeff() - chain.minCoeff();
  if (!(range > 1e-14 * std::max(1.0, chain.cwiseAbs().maxCoeff()))) return {0.0, true};

  const Eigen::VectorXd rho = autocorrelation(chain, m - 1);
  // Sums of adjacent pairs, kept while positive and forced non-increasing.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < rho.size(); k += 2) {
    double pair = rho(k) + rho(k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m) + 10.0));
  return {static_cast<double>(m) / tau, false};
}

const SummaryRow* SummaryTable::find(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

SummaryRow summarize_values(const std::string& name, const std::vector<Eigen::VectorXd>& chains,
                            const std::vector<double>& qs) {
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.size();
  if (total == 0) throw DataError("no draws to summarize");
  Eigen::VectorXd all(total);
  Eigen::Index pos = 0;
  for (const auto& c : chains) {
    all.segment(pos, c.size()) = c;
    pos += c.size();
  }

  SummaryRow row;
  row.name = name;
  row.mean = all.mean();
  row.sd = total > 1 ? std::sqrt((all.array() - row.mean).square().sum() / static_cast<double>(total - 1)) : 0.0;
  row.quantiles = quantiles(all, qs);
  row.ess_degenerate = true;
  for (const auto& c : chains) {
    if (c.size() < 2) continue;
    const EssResult e = effective_sample_size(c);
    row.ess += e.ess;
    row.ess_degenerate = row.ess_degenerate && e.degenerate;
  }
  return row;
}

SummaryTable summarize(const SvDraws& draws, const std::vector<double>& qs, bool showlatent) {
  if (draws.total_kept() == 0) throw DataError("no draws to summarize");
  for (double q : qs) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("quantile levels must lie in (0, 1)");
  }
  SummaryTable table;
  table.quantiles = qs;
  std::sort(table.quantiles.begin(), table.quantiles.end());

  auto per_chain = [&](auto&& extract) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& c : draws.chains) out.push_back(extract(c));
    return out;
  };
  auto add = [&](const std::string& name, auto&& extract) {
    table.rows.push_back(summarize_values(name, per_chain(extract), table.quantiles));
  };

  std::vector<int> cols{kMu, kPhi, kSigma};
  if (has_t_errors(draws.kind)) cols.push_back(kNu);
  if (has_leverage(draws.kind)) cols.push_back(kRho);
  for (int col : cols) {
    add(param_name(col), [col](const ChainDraws& c) { return Eigen::VectorXd(c.para.col(col)); });
  }
  add("exp(mu/2)", [](const ChainDraws& c) { return Eigen::VectorXd((0.5 * c.para.col(kMu).array()).exp()); });
  add("sigma^2", [](const ChainDraws& c) { return Eigen::VectorXd(c.para.col(kSigma).array().square()); });

  const Design& d = draws.design;
  for (Eigen::Index j = 0; j < d.k(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(d.names.size()) ? d.names[static_cast<std::size_t>(j)]
                                                                           : "beta_" + std::to_string(j);
    add(name, [j](const ChainDraws& c) { return Eigen::VectorXd(c.beta.col(j)); });
  }

  if (showlatent) {
    const Eigen::Index cols_latent = draws.chains.front().latent.cols();
    const Eigen::Index n = d.n();
    for (Eigen::Index t = 0; t < cols_latent; ++t) {
      const Eigen::Index index = cols_latent == n ? t + 1 : n;
      add("h_" + std::to_string(index), [t](const ChainDraws& c) { return Eigen::VectorXd(c.latent.col(t)); });
    }
  }
  return table;
}

nlohmann::ordered_json to_json(const SummaryTable& table) {
  nlohmann::ordered_json out;
  out["quantiles"] = table.quantiles;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    row["mean"] = round_significant(r.mean);
    row["sd"] = round_significant(r.sd);
    nlohmann::ordered_json q = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < table.quantiles.size(); ++i) {
      q[format_double(table.quantiles[i])] = round_significant(r.quantiles(static_cast<Eigen::Index>(i)));
    }
    row["quantiles"] = q;
    row["ess"] = round_significant(r.ess);
    if (r.ess_degenerate) row["ess_degenerate"] = true;
    rows.push_back(row);
  }
  out["rows"] = rows;
  return out;
}

std::string to_text(const SummaryTable& table) {
  std::vector<std::string> header{"", "mean", "sd"};
  for (double q : table.quantiles) header.push_back(format_double(100.0 * q) + "%");
  header.push_back("ESS");

  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : table.rows) {
    std::vector<std::string> line{r.name, format_significant(r.mean), format_significant(r.sd)};
    for (Eigen::Index i = 0; i < r.quantiles.size(); ++i) line.push_back(format_significant(r.quantiles(i)));
    line.push_back(format_significant(r.ess));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::ostringstream os;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const std::string pad(width[i] - line[i].size(), ' ');
      if (i == 0) {
        os << line[i] << pad;
      } else {
        os << "  " << pad << line[i];
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace sv
