#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydride/dataset.hpp"

namespace hydride::pcr {

/// Principal component regression: least squares of the target on the top-k
/// scores of the standardized feature matrix.
struct PcrModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd means;        // per-feature standardization
  Eigen::VectorXd scales;
  Eigen::MatrixXd components;   // p x k orthonormal loadings, descending eigenvalue
  int k = 0;
  Eigen::VectorXd coefficients; // k regression weights in component space
  double intercept = 0;
  std::vector<double> eigenvalues;  // all p, descending
  std::vector<std::string> warnings;
};

struct KPolicy {
  enum class Kind { fixed, variance_threshold };
  Kind kind = Kind::variance_threshold;
  int k = 0;
  double threshold = 0.95;

  static KPolicy fixed(int k) { return {Kind::fixed, k, 0}; }
  static KPolicy variance(double threshold = 0.95) {
    return {Kind::variance_threshold, 0, threshold};
  }
};

/// Requires n > p >= 1 and non-constant columns. Principal axes come from
/// the covariance spectrum in descending eigenvalue order with each vector's
/// largest-magnitude entry made positive; a rank-deficient spectrum reduces
/// k with a warning.
PcrModel pcr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KPolicy& policy,
                 std::vector<std::string> feature_names = {});

Eigen::VectorXd pcr_predict(const PcrModel& model, const Eigen::MatrixXd& x);

/// Mean squared prediction error.
double pcr_eval(const PcrModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct SubsetResult {
  std::vector<std::string> subset;
  int k = 0;
  double train_mse = 0;
  double test_mse = 0;
};

/// Fits one model per feature subset on the training partition of a
/// deterministic split and evaluates on the test partition. The target is
/// each record's score, which must be present. Feature names refer to the
/// record fields e_form, density, band_gap, w_h2, f_character or any
/// `extra` column.
std::vector<SubsetResult> subset_experiment(std::span<const dataset::MaterialRecord> records,
                                            const std::vector<std::vector<std::string>>& subsets,
                                            const dataset::SplitSpec& split_spec,
                                            const KPolicy& policy);

}  // namespace hydride::pcr
