#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Core>

#include "hydride/dataset.hpp"
#include "hydride/vae.hpp"

namespace hydride::vae {

/// Formation-energy predictor over normalized candidate descriptors. The
/// interface is the substitution point for external structure-relaxation
/// models; predictions are eV/atom.
class EnergyEstimator {
 public:
  virtual ~EnergyEstimator() = default;
  virtual double predict(const CandidateVector& candidate) const = 0;
  virtual std::string id() const = 0;
};

/// Distance-weighted k-nearest-neighbor regression. A query coinciding with
/// a training point returns that point's value exactly.
class KnnEnergyEstimator final : public EnergyEstimator {
 public:
  KnnEnergyEstimator(Eigen::MatrixXd features, Eigen::VectorXd targets, int k = 5);

  double predict(const CandidateVector& candidate) const override;
  std::string id() const override { return "knn"; }
  int k() const { return k_; }

 private:
  Eigen::MatrixXd features_;  // rows are training samples
  Eigen::VectorXd targets_;
  int k_;
};

/// Lookup of externally computed formation energies keyed by canonical
/// formula, with an optional fallback estimator for misses.
class TableEnergyEstimator final : public EnergyEstimator {
 public:
  TableEnergyEstimator(std::map<std::string, double> by_formula, Vocab vocab,
                       Eigen::VectorXd feature_scale,
                       std::shared_ptr<const EnergyEstimator> fallback = nullptr);

  double predict(const CandidateVector& candidate) const override;
  std::string id() const override { return "table"; }

 private:
  std::map<std::string, double> by_formula_;
  Vocab vocab_;
  Eigen::VectorXd feature_scale_;
  std::shared_ptr<const EnergyEstimator> fallback_;
};

/// Featurizes the records and fits the KNN baseline on their formation
/// energies. Requires at least k records.
std::shared_ptr<KnnEnergyEstimator> fit_knn_estimator(
    std::span<const dataset::MaterialRecord> records, const Vocab& vocab,
    const Eigen::VectorXd& feature_scale, int k = 5);

}  // namespace hydride::vae
