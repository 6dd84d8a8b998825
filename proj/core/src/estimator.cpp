#include "hydride/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hydride/errors.hpp"

namespace hydride::vae {

KnnEnergyEstimator::KnnEnergyEstimator(Eigen::MatrixXd features, Eigen::VectorXd targets,
                                       int k)
    : features_(std::move(features)), targets_(std::move(targets)), k_(k) {
  if (features_.rows() != targets_.size())
    throw ValidationError("feature rows must match target count");
  if (features_.rows() == 0) throw ValidationError("empty training set");
  if (k_ < 1) throw ValidationError("k must be positive");
  k_ = std::min<int>(k_, static_cast<int>(features_.rows()));
}

double KnnEnergyEstimator::predict(const CandidateVector& candidate) const {
  if (candidate.values.size() != features_.cols())
    throw ValidationError("candidate dimension does not match the estimator");
  const auto n = features_.rows();
  Eigen::VectorXd dist(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dist(i) = (features_.row(i).transpose() - candidate.values).norm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&dist](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b); });

  constexpr double k_exact = 1e-12;
  // Exact hits dominate: inverse-distance weights are singular there.
  if (dist(order[0]) < k_exact) return targets_(order[0]);

  double weight_sum = 0, acc = 0;
  for (int i = 0; i < k_; ++i) {
    double w = 1.0 / dist(order[static_cast<std::size_t>(i)]);
    weight_sum += w;
    acc += w * targets_(order[static_cast<std::size_t>(i)]);
  }
  return acc / weight_sum;
}

TableEnergyEstimator::TableEnergyEstimator(std::map<std::string, double> by_formula,
                                           Vocab vocab, Eigen::VectorXd feature_scale,
                                           std::shared_ptr<const EnergyEstimator> fallback)
    : by_formula_(std::move(by_formula)),
      vocab_(std::move(vocab)),
      feature_scale_(std::move(feature_scale)),
      fallback_(std::move(fallback)) {}

double TableEnergyEstimator::predict(const CandidateVector& candidate) const {
  if (candidate.values.size() != feature_scale_.size())
    throw ValidationError("candidate dimension does not match the estimator");
  Eigen::VectorXd denorm = candidate.values.cwiseProduct(feature_scale_);
  chem::Composition comp;
  for (int i = 0; i < vocab_.size(); ++i) {
    int count = static_cast<int>(std::llround(denorm(i)));
    if (count > 0) comp.add(vocab_.symbols[static_cast<std::size_t>(i)], count);
  }
  if (!comp.empty()) {
    auto it = by_formula_.find(chem::format_formula(comp));
    if (it != by_formula_.end()) return it->second;
  }
  if (fallback_) return fallback_->predict(candidate);
  throw ValidationError("no tabulated energy for candidate and no fallback estimator");
}

std::shared_ptr<KnnEnergyEstimator> fit_knn_estimator(
    std::span<const dataset::MaterialRecord> records, const Vocab& vocab,
    const Eigen::VectorXd& feature_scale, int k) {
  if (static_cast<int>(records.size()) < k)
    throw ValidationError("estimator requires at least k training records");
  Eigen::MatrixXd features(static_cast<Eigen::Index>(records.size()), feature_scale.size());
  Eigen::VectorXd targets(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) =
        featurize(records[i], vocab, feature_scale).values.transpose();
    targets(static_cast<Eigen::Index>(i)) = records[i].e_form;
  }
  return std::make_shared<KnnEnergyEstimator>(std::move(features), std::move(targets), k);
}

}  // namespace hydride::vae
