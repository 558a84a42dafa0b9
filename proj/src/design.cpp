#include "sv/design.hpp"

#include <string>

#include "sv/errors.hpp"

namespace sv {

DesignSpec parse_design(std::string_view text) {
  if (text.empty() || text == "none") return DesignSpec::none();
  if (text == "covariates") return DesignSpec::covariates();
  if (text.size() > 2 && text.substr(0, 2) == "ar") {
    const std::string digits(text.substr(2));
    if (digits.find_first_not_of("0123456789") == std::string::npos) return DesignSpec::ar(std::stoi(digits));
  }
  throw ConfigError("unknown design matrix '" + std::string(text) + "' (expected none, arP or covariates)");
}

std::string to_string(const DesignSpec& spec) {
  switch (spec.kind) {
    case DesignSpec::Kind::none: return "none";
    case DesignSpec::Kind::ar: return "ar" + std::to_string(spec.order);
    case DesignSpec::Kind::covariates: return "covariates";
  }
  return "none";
}

Design make_design(const Eigen::Ref<const Eigen::VectorXd>& y, const DesignSpec& spec,
                   const Eigen::MatrixXd& covariates, std::vector<std::string> names) {
  if (y.size() == 0) throw DataError("no observations");
  if (!y.allFinite()) throw DataError("observations must be finite");
  Design d;
  d.spec = spec;
  switch (spec.kind) {
    case DesignSpec::Kind::none:
      d.y = y;
      d.X.resize(y.size(), 0);
      break;
    case DesignSpec::Kind::ar: {
      const int p = spec.order;
      if (p < 0) throw ConfigError("AR order must be nonnegative");
      if (y.size() < 2 * p + 2) {
        throw DataError("ar" + std::to_string(p) + " needs at least " + std::to_string(2 * p + 2) + " observations");
      }
      const Eigen::Index n = y.size() - p;
      d.y = y.tail(n);
      d.X.resize(n, p + 1);
      d.X.col(0).setOnes();
      for (int lag = 1; lag <= p; ++lag) d.X.col(lag) = y.segment(p - lag, n);
      for (int j = 0; j <= p; ++j) d.names.push_back("beta_" + std::to_string(j));
      break;
    }
    case DesignSpec::Kind::covariates:
      if (covariates.rows() != y.size()) {
        throw DimensionError("covariate matrix has " + std::to_string(covariates.rows()) + " rows but there are " +
                             std::to_string(y.size()) + " observations");
      }
      if (!covariates.allFinite()) throw DataError("covariates must be finite");
      d.y = y;
      d.X = covariates;
      if (names.empty()) {
        for (Eigen::Index j = 0; j < covariates.cols(); ++j) names.push_back("beta_" + std::to_string(j));
      }
      if (static_cast<Eigen::Index>(names.size()) != covariates.cols()) {
        throw DimensionError("covariate names do not match the number of columns");
      }
      d.names = std::move(names);
      break;
  }
  return d;
}

Eigen::RowVectorXd ar_row(const Eigen::Ref<const Eigen::VectorXd>& recent, int order) {
  if (recent.size() < order) throw DimensionError("not enough history for the AR design");
  Eigen::RowVectorXd row(order + 1);
  row(0) = 1.0;
  for (int lag = 1; lag <= order; ++lag) row(lag) = recent(lag - 1);
  return row;
}

}  // namespace sv
