#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydride/chem.hpp"
#include "hydride/cif.hpp"
#include "hydride/dataset.hpp"

namespace hydride::vae {

/// Element vocabulary of the training set; the order is fixed and persisted
/// with the model.
struct Vocab {
  std::vector<std::string> symbols;

  int index(std::string_view symbol) const;  // -1 when absent
  int size() const { return static_cast<int>(symbols.size()); }

  static Vocab from_records(std::span<const dataset::MaterialRecord> records);
};

enum class Activation { tanh_act, identity };

struct VaeConfig {
  int input_dim = 0;  // count_dims + 6 lattice descriptors
  int count_dims = 0;
  int hidden = 64;
  int latent = 8;
  int property_hidden = 16;
  Activation activation = Activation::tanh_act;
  bool softplus_counts = true;  // non-negative count block on decode
  double beta = 1.0;            // KL weight
  double prop_weight = 1.0;     // score-head weight in the training objective
};

/// All learnable weights. One hidden layer each for encoder, decoder and the
/// score head; the encoder emits mean and log-variance heads.
struct ParamSet {
  Eigen::MatrixXd w1, w2, w3, w4, w5, w6;
  Eigen::VectorXd b1, b2, b3, b4, b5, b6, w7, b7;  // b7 has size 1

  static ParamSet shaped(const VaeConfig& cfg);

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(w1); fn(b1); fn(w2); fn(b2); fn(w3); fn(b3);
    fn(w4); fn(b4); fn(w5); fn(b5); fn(w6); fn(b6); fn(w7); fn(b7);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    fn(w1); fn(b1); fn(w2); fn(b2); fn(w3); fn(b3);
    fn(w4); fn(b4); fn(w5); fn(b5); fn(w6); fn(b6); fn(w7); fn(b7);
  }

  std::size_t count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& theta);
  void setZero();
};

struct VaeModel {
  VaeConfig cfg;
  ParamSet params;
  Vocab vocab;                     // empty for raw-vector models
  Eigen::VectorXd feature_scale;   // per-dimension positive divisors
  // Score-target standardization fitted by train(); the head regresses the
  // standardized value and predict_score undoes the transform.
  double score_mean = 0.0;
  double score_scale = 1.0;
  std::uint64_t seed = 0;

  /// Random small-weight initialization, deterministic in the seed.
  static VaeModel init(const VaeConfig& cfg, std::uint64_t seed);

  /// Throws ValidationError on NaN/non-finite weights or shape mismatches.
  void validate() const;
};

/// Normalized descriptor vector: element counts over the vocabulary followed
/// by the six lattice parameters, each divided by the persisted scale.
struct CandidateVector {
  Eigen::VectorXd values;
};

/// Per-dimension scale = max absolute value over the training records
/// (floored at 1). Records must carry structures.
Eigen::VectorXd fit_feature_scale(std::span<const dataset::MaterialRecord> records,
                                  const Vocab& vocab);

CandidateVector featurize(const dataset::MaterialRecord& record, const Vocab& vocab,
                          const Eigen::VectorXd& feature_scale);

// ---- forward passes ----------------------------------------------------

struct Encoded {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_var;
};

Encoded encode(const VaeModel& model, const Eigen::VectorXd& x);

/// z = mu + exp(log_var / 2) * noise, elementwise.
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& noise);

Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z);

double predict_score(const VaeModel& model, const Eigen::VectorXd& z);

// ---- loss and gradients --------------------------------------------------

struct LossParts {
  double total = 0;      // mse + beta * kl (+ prop_weight * score_mse)
  double mse = 0;        // mean squared reconstruction error
  double kl = 0;         // closed-form diagonal-Gaussian KL to N(0, I)
  double score_mse = 0;  // property-head term on the standardized scale
};

/// Columns of `batch` are samples; `noise` matches (latent x batch).
/// `scores` may be empty, disabling the property term.
LossParts loss(const VaeModel& model, const Eigen::MatrixXd& batch,
               const Eigen::VectorXd& scores, const Eigen::MatrixXd& noise);

struct Gradients {
  LossParts parts;
  ParamSet grads;
};

/// Manually derived backward pass for the full training objective.
Gradients backward(const VaeModel& model, const Eigen::MatrixXd& batch,
                   const Eigen::VectorXd& scores, const Eigen::MatrixXd& noise);

/// Max mixed relative error between the analytic gradient and central finite
/// differences over every weight: |ga - gn| / max(1, |ga|, |gn|).
double gradient_check(const VaeModel& model, const Eigen::MatrixXd& batch,
                      const Eigen::VectorXd& scores, double epsilon);

// ---- training ------------------------------------------------------------

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.0;
};

struct TrainResult {
  std::vector<std::pair<double, double>> history;  // (train, val) loss per epoch
  int best_epoch = -1;  // epoch whose weights were retained
  bool aborted = false;  // loss went non-finite; last finite state restored
};

/// Minibatch gradient descent on the combined objective. The recorded
/// per-epoch losses are evaluated with zero noise so that they are
/// deterministic; best-validation weights are retained. Bitwise reproducible
/// for a fixed seed.
TrainResult train(VaeModel& model, const Eigen::MatrixXd& train_x,
                  const Eigen::VectorXd& train_scores, const Eigen::MatrixXd& val_x,
                  const Eigen::VectorXd& val_scores, const TrainConfig& cfg,
                  std::uint64_t seed);

// ---- latent-space search ---------------------------------------------------

struct LatentObjective {
  double value = 0;
  Eigen::VectorXd grad;
};
using ObjectiveFn = std::function<LatentObjective(const Eigen::VectorXd&)>;

struct LatentOptConfig {
  int steps = 5000;
  double step_size = 1e-3;
  int trajectory_stride = 500;  // 0 disables trajectory sampling
};

struct LatentOptResult {
  Eigen::VectorXd z;
  double objective = 0;
  std::vector<Eigen::VectorXd> trajectory;
  int steps_taken = 0;
};

/// Plain gradient descent on an arbitrary differentiable objective. Stops at
/// the last finite iterate if the objective turns NaN.
LatentOptResult latent_optimize(const ObjectiveFn& objective, Eigen::VectorXd z0,
                                const LatentOptConfig& cfg);

/// Descends 1 / (predicted score + 1e-6), the inverse-score objective.
LatentOptResult latent_optimize_score(const VaeModel& model, Eigen::VectorXd z0,
                                      const LatentOptConfig& cfg);

// ---- generation ------------------------------------------------------------

struct GeneratedCandidate {
  std::string id;
  chem::Composition composition;
  cif::Lattice lattice;
  Eigen::VectorXd z;
  double predicted_score = 0;
  CandidateVector vector;  // re-normalized decoded descriptor
};

struct GenerateConfig {
  LatentOptConfig latent;
  int max_attempt_factor = 20;  // attempts allowed per requested candidate
};

struct GenerationResult {
  std::vector<GeneratedCandidate> candidates;
  int discarded = 0;  // all-zero or invalid-lattice decodes
};

/// Draws z ~ N(0, I), latent-optimizes each draw, decodes and rounds counts
/// to integers. Produces exactly `n` candidates, retrying past discarded
/// decodes; deterministic per seed with pre-split per-candidate streams.
GenerationResult generate(const VaeModel& model, int n, std::uint64_t seed,
                          const GenerateConfig& cfg = {});

/// Full atomic-coordinate structure for a generated candidate, copying the
/// nearest training structure's fractional sites as a template. Extra sites
/// beyond the template come from a deterministic low-discrepancy sequence.
/// The result's source_id records the template provenance.
cif::Structure template_structure(const GeneratedCandidate& candidate,
                                  std::span<const dataset::MaterialRecord> training,
                                  const Vocab& vocab, const Eigen::VectorXd& feature_scale);

// ---- persistence ------------------------------------------------------------

/// Versioned JSON checkpoint carrying config, vocabulary, normalization,
/// weights and the training seed. Loading validates every invariant.
void save_checkpoint(const VaeModel& model, const std::filesystem::path& path);
VaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hydride::vae
