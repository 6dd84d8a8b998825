#include "hydride/pcr.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "hydride/errors.hpp"

namespace hydride::pcr {

namespace {

Eigen::MatrixXd standardized(const PcrModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.means.size())
    throw ValidationError("feature count does not match the fitted model");
  return (x.rowwise() - model.means.transpose()).array().rowwise() /
         model.scales.transpose().array();
}

double feature_value(const dataset::MaterialRecord& rec, const std::string& name) {
  if (name == "e_form") return rec.e_form;
  if (name == "density") return rec.density;
  if (name == "band_gap") return rec.band_gap;
  if (name == "w_h2") return rec.w_h2;
  if (name == "energy_above_hull") return rec.energy_above_hull;
  if (name == "f_character") {
    if (!rec.f_character)
      throw ValidationError("record '" + rec.id + "' has no f_character value");
    return *rec.f_character;
  }
  auto it = rec.extra.find(name);
  if (it == rec.extra.end())
    throw ValidationError("unknown feature name '" + name + "'");
  return it->second;
}

}  // namespace

PcrModel pcr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KPolicy& policy,
                 std::vector<std::string> feature_names) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (p < 1) throw ValidationError("pcr_fit requires at least one feature");
  if (n <= p) throw ValidationError("pcr_fit requires more rows than features");
  if (y.size() != n) throw ValidationError("target length does not match row count");

  PcrModel model;
  model.feature_names = std::move(feature_names);
  model.means = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - model.means.transpose();
  model.scales = (centered.array().square().colwise().sum() / static_cast<double>(n - 1))
                     .sqrt()
                     .matrix()
                     .transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(model.scales(j) > 1e-12))
      throw ValidationError("constant feature column at index " + std::to_string(j));

  Eigen::MatrixXd xs = centered.array().rowwise() / model.scales.transpose().array();
  Eigen::MatrixXd cov = xs.transpose() * xs / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw ValidationError("eigendecomposition of the covariance failed");

  // Descending eigenvalue order; fix each axis's sign so that its
  // largest-magnitude entry is positive.
  Eigen::VectorXd values = eig.eigenvalues().reverse();
  Eigen::MatrixXd axes = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::Index arg_max = 0;
    axes.col(j).cwiseAbs().maxCoeff(&arg_max);
    if (axes(arg_max, j) < 0) axes.col(j) = -axes.col(j);
    model.eigenvalues.push_back(values(j));
  }

  int rank = 0;
  const double tol = 1e-12 * std::max(values(0), 0.0);
  for (Eigen::Index j = 0; j < p; ++j)
    if (values(j) > tol && values(j) > 0) ++rank;

  int k = 0;
  if (policy.kind == KPolicy::Kind::fixed) {
    if (policy.k < 1 || policy.k > p)
      throw ValidationError("fixed k must lie in [1, p]");
    k = policy.k;
  } else {
    double total = values.sum();
    double cum = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      cum += values(j);
      ++k;
      if (cum >= policy.threshold * total) break;
    }
  }
  if (k > rank) {
    model.warnings.push_back("rank-deficient features: k reduced from " +
                             std::to_string(k) + " to " + std::to_string(rank));
    k = std::max(rank, 1);
  }
  model.k = k;
  model.components = axes.leftCols(k);

  Eigen::MatrixXd scores = xs * model.components;  // n x k, zero column means
  model.intercept = y.mean();
  Eigen::VectorXd centered_y = y.array() - model.intercept;
  model.coefficients = scores.colPivHouseholderQr().solve(centered_y);
  return model;
}

Eigen::VectorXd pcr_predict(const PcrModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd scores = standardized(model, x) * model.components;
  return (scores * model.coefficients).array() + model.intercept;
}

double pcr_eval(const PcrModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() != x.rows()) throw ValidationError("target length does not match row count");
  Eigen::VectorXd pred = pcr_predict(model, x);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

std::vector<SubsetResult> subset_experiment(std::span<const dataset::MaterialRecord> records,
                                            const std::vector<std::vector<std::string>>& subsets,
                                            const dataset::SplitSpec& split_spec,
                                            const KPolicy& policy) {
  dataset::Split parts = dataset::split(records, split_spec);

  auto matrix_for = [](const std::vector<dataset::MaterialRecord>& recs,
                       const std::vector<std::string>& features) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(recs.size()),
                      static_cast<Eigen::Index>(features.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(recs.size()));
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!recs[i].score)
        throw ValidationError("record '" + recs[i].id + "' has no score");
      y(static_cast<Eigen::Index>(i)) = *recs[i].score;
      for (std::size_t j = 0; j < features.size(); ++j)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            feature_value(recs[i], features[j]);
    }
    return std::pair{x, y};
  };

  std::vector<SubsetResult> results;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw ValidationError("empty feature subset");
    auto [x_train, y_train] = matrix_for(parts.train, subset);
    auto [x_test, y_test] = matrix_for(parts.test, subset);
    PcrModel model = pcr_fit(x_train, y_train, policy, subset);
    results.push_back({subset, model.k, pcr_eval(model, x_train, y_train),
                       pcr_eval(model, x_test, y_test)});
  }
  return results;
}

}  // namespace hydride::pcr
