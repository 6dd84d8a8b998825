#include "hydride/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hydride/errors.hpp"
#include "hydride/rng.hpp"

namespace hydride::vae {

namespace {

using nlohmann::json;

constexpr int k_lattice_dims = 6;
constexpr double k_score_epsilon = 1e-6;

Eigen::ArrayXXd activate(const Eigen::MatrixXd& pre, Activation act) {
  if (act == Activation::identity) return pre.array();
  return pre.array().tanh();
}

Eigen::ArrayXXd activate_grad(const Eigen::ArrayXXd& post, Activation act) {
  if (act == Activation::identity) return Eigen::ArrayXXd::Ones(post.rows(), post.cols());
  return 1.0 - post.square();
}

double softplus(double v) {
  // log(1 + e^v) without overflow
  return v > 30 ? v : std::log1p(std::exp(v));
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct Forward {
  Eigen::MatrixXd x;          // D x B
  Eigen::ArrayXXd h_enc;      // H x B
  Eigen::MatrixXd h_enc_pre;
  Eigen::MatrixXd mu, log_var, z;  // L x B
  Eigen::ArrayXXd h_dec;
  Eigen::MatrixXd h_dec_pre;
  Eigen::MatrixXd raw;        // D x B pre-output
  Eigen::MatrixXd x_hat;
  Eigen::ArrayXXd h_prop;     // P x B
  Eigen::MatrixXd h_prop_pre;
  Eigen::RowVectorXd s_hat;   // 1 x B
};

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& w, const Eigen::MatrixXd& in,
                          const Eigen::VectorXd& b) {
  return (w * in).colwise() + b;
}

Forward run_forward(const VaeModel& m, const Eigen::MatrixXd& batch,
                    const Eigen::MatrixXd& noise) {
  const auto& p = m.params;
  Forward f;
  f.x = batch;
  f.h_enc_pre = with_bias(p.w1, f.x, p.b1);
  f.h_enc = activate(f.h_enc_pre, m.cfg.activation);
  f.mu = with_bias(p.w2, f.h_enc.matrix(), p.b2);
  f.log_var = with_bias(p.w3, f.h_enc.matrix(), p.b3);
  f.z = f.mu + ((f.log_var.array() / 2.0).exp() * noise.array()).matrix();
  f.h_dec_pre = with_bias(p.w4, f.z, p.b4);
  f.h_dec = activate(f.h_dec_pre, m.cfg.activation);
  f.raw = with_bias(p.w5, f.h_dec.matrix(), p.b5);
  f.x_hat = f.raw;
  if (m.cfg.softplus_counts)
    for (int i = 0; i < m.cfg.count_dims; ++i)
      for (int b = 0; b < f.raw.cols(); ++b) f.x_hat(i, b) = softplus(f.raw(i, b));
  f.h_prop_pre = with_bias(p.w6, f.z, p.b6);
  f.h_prop = activate(f.h_prop_pre, m.cfg.activation);
  f.s_hat = p.w7.transpose() * f.h_prop.matrix();
  f.s_hat.array() += p.b7(0);
  return f;
}

LossParts loss_from_forward(const VaeModel& m, const Forward& f,
                            const Eigen::VectorXd& scores) {
  const auto b = static_cast<double>(f.x.cols());
  const auto d = static_cast<double>(f.x.rows());
  LossParts parts;
  parts.mse = (f.x_hat - f.x).squaredNorm() / (b * d);
  parts.kl = -0.5 *
             (1.0 + f.log_var.array() - f.mu.array().square() - f.log_var.array().exp())
                 .sum() /
             b;
  parts.total = parts.mse + m.cfg.beta * parts.kl;
  if (scores.size() > 0) {
    Eigen::VectorXd standardized = (scores.array() - m.score_mean) / m.score_scale;
    parts.score_mse = (f.s_hat.transpose() - standardized).squaredNorm() / b;
    parts.total += m.cfg.prop_weight * parts.score_mse;
  }
  return parts;
}

void check_batch(const VaeModel& m, const Eigen::MatrixXd& batch,
                 const Eigen::VectorXd& scores, const Eigen::MatrixXd& noise) {
  if (batch.cols() < 1) throw ValidationError("empty batch");
  if (batch.rows() != m.cfg.input_dim)
    throw ValidationError("batch dimension does not match the model input");
  if (noise.rows() != m.cfg.latent || noise.cols() != batch.cols())
    throw ValidationError("noise shape must be latent x batch");
  if (scores.size() > 0 && scores.size() != batch.cols())
    throw ValidationError("score targets do not match the batch size");
}

}  // namespace

// ---- Vocab / featurization -------------------------------------------------

int Vocab::index(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] == symbol) return static_cast<int>(i);
  return -1;
}

Vocab Vocab::from_records(std::span<const dataset::MaterialRecord> records) {
  std::set<std::string> seen;
  for (const auto& rec : records)
    for (const auto& [z, n] : rec.formula.counts())
      seen.insert(chem::element_by_z(z).symbol);
  Vocab v;
  v.symbols.assign(seen.begin(), seen.end());
  return v;
}

Eigen::VectorXd fit_feature_scale(std::span<const dataset::MaterialRecord> records,
                                  const Vocab& vocab) {
  const int dim = vocab.size() + k_lattice_dims;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
  for (const auto& rec : records) {
    for (const auto& [z, n] : rec.formula.counts()) {
      int idx = vocab.index(chem::element_by_z(z).symbol);
      if (idx < 0)
        throw ValidationError("record '" + rec.id + "' uses an out-of-vocabulary element");
      scale(idx) = std::max(scale(idx), static_cast<double>(n));
    }
    if (!rec.structure)
      throw ValidationError("record '" + rec.id + "' has no structure to featurize");
    const auto& l = rec.structure->lattice;
    const double lat[k_lattice_dims] = {l.a, l.b, l.c, l.alpha, l.beta, l.gamma};
    for (int i = 0; i < k_lattice_dims; ++i)
      scale(vocab.size() + i) = std::max(scale(vocab.size() + i), std::abs(lat[i]));
  }
  return scale;
}

CandidateVector featurize(const dataset::MaterialRecord& record, const Vocab& vocab,
                          const Eigen::VectorXd& feature_scale) {
  const int dim = vocab.size() + k_lattice_dims;
  if (feature_scale.size() != dim)
    throw ValidationError("feature scale does not match the vocabulary");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  for (const auto& [z, n] : record.formula.counts()) {
    int idx = vocab.index(chem::element_by_z(z).symbol);
    if (idx < 0)
      throw ValidationError("record '" + record.id + "' uses an out-of-vocabulary element");
    x(idx) = n;
  }
  if (!record.structure)
    throw ValidationError("record '" + record.id + "' has no structure to featurize");
  const auto& l = record.structure->lattice;
  x(vocab.size() + 0) = l.a;
  x(vocab.size() + 1) = l.b;
  x(vocab.size() + 2) = l.c;
  x(vocab.size() + 3) = l.alpha;
  x(vocab.size() + 4) = l.beta;
  x(vocab.size() + 5) = l.gamma;
  return {x.cwiseQuotient(feature_scale)};
}

// ---- ParamSet ---------------------------------------------------------------

ParamSet ParamSet::shaped(const VaeConfig& cfg) {
  ParamSet p;
  p.w1.setZero(cfg.hidden, cfg.input_dim);
  p.b1.setZero(cfg.hidden);
  p.w2.setZero(cfg.latent, cfg.hidden);
  p.b2.setZero(cfg.latent);
  p.w3.setZero(cfg.latent, cfg.hidden);
  p.b3.setZero(cfg.latent);
  p.w4.setZero(cfg.hidden, cfg.latent);
  p.b4.setZero(cfg.hidden);
  p.w5.setZero(cfg.input_dim, cfg.hidden);
  p.b5.setZero(cfg.input_dim);
  p.w6.setZero(cfg.property_hidden, cfg.latent);
  p.b6.setZero(cfg.property_hidden);
  p.w7.setZero(cfg.property_hidden);
  p.b7.setZero(1);
  return p;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for_each([&n](const auto& block) { n += static_cast<std::size_t>(block.size()); });
  return n;
}

Eigen::VectorXd ParamSet::flatten() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(count()));
  Eigen::Index at = 0;
  for_each([&](const auto& block) {
    theta.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  });
  return theta;
}

void ParamSet::unflatten(const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(count()))
    throw ValidationError("parameter vector length mismatch");
  Eigen::Index at = 0;
  for_each([&](auto& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) =
        theta.segment(at, block.size());
    at += block.size();
  });
}

void ParamSet::setZero() {
  for_each([](auto& block) { block.setZero(); });
}

// ---- model ------------------------------------------------------------------

VaeModel VaeModel::init(const VaeConfig& cfg, std::uint64_t seed) {
  if (cfg.input_dim < 1 || cfg.hidden < 1 || cfg.latent < 1 || cfg.property_hidden < 1)
    throw ValidationError("model dimensions must be positive");
  if (cfg.count_dims < 0 || cfg.count_dims > cfg.input_dim)
    throw ValidationError("count_dims must lie in [0, input_dim]");
  VaeModel m;
  m.cfg = cfg;
  m.seed = seed;
  m.params = ParamSet::shaped(cfg);
  m.feature_scale = Eigen::VectorXd::Ones(cfg.input_dim);
  Rng rng(seed);
  m.params.for_each([&rng](auto& block) {
    const double fan_in = std::max<double>(1.0, static_cast<double>(block.cols() == 1
                                                                        ? block.size()
                                                                        : block.cols()));
    const double sd = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < block.size(); ++i)
      block.data()[i] = rng.normal(0.0, sd);
  });
  // biases start at zero, except the encoder log-variance head: starting
  // with small latent noise (sigma ~ e^-1) lets the decoder pick up the
  // mean signal before the KL term opens the posterior back up
  m.params.b1.setZero();
  m.params.b2.setZero();
  m.params.b3.setConstant(-2.0);
  m.params.b4.setZero();
  m.params.b5.setZero();
  m.params.b6.setZero();
  m.params.b7.setZero();
  return m;
}

void VaeModel::validate() const {
  if (cfg.input_dim < 1) throw ValidationError("model has no input dimension");
  ParamSet expect = ParamSet::shaped(cfg);
  const ParamSet& have = params;
  bool shape_ok = expect.w1.rows() == have.w1.rows() && expect.w1.cols() == have.w1.cols() &&
                  expect.w5.rows() == have.w5.rows() && expect.w5.cols() == have.w5.cols() &&
                  expect.w6.rows() == have.w6.rows() && expect.w7.size() == have.w7.size() &&
                  expect.b7.size() == have.b7.size();
  if (!shape_ok) throw ValidationError("weight shapes do not match the configuration");
  bool finite = true;
  params.for_each([&finite](const auto& block) {
    if (!block.allFinite()) finite = false;
  });
  if (!finite) throw ValidationError("model weights contain NaN or infinity");
  if (feature_scale.size() != cfg.input_dim)
    throw ValidationError("feature scale length mismatch");
  if (!(feature_scale.array() > 0).all())
    throw ValidationError("feature scales must be positive");
  if (!std::isfinite(score_mean) || !(score_scale > 0) || !std::isfinite(score_scale))
    throw ValidationError("invalid score standardization");
  if (!vocab.symbols.empty() &&
      vocab.size() + k_lattice_dims != cfg.input_dim)
    throw ValidationError("vocabulary size inconsistent with input dimension");
}

// ---- forward API --------------------------------------------------------------

Encoded encode(const VaeModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.cfg.input_dim)
    throw ValidationError("input dimension does not match the model");
  Eigen::ArrayXd h = activate(with_bias(model.params.w1, x, model.params.b1),
                              model.cfg.activation);
  Encoded out;
  out.mu = with_bias(model.params.w2, h.matrix(), model.params.b2);
  out.log_var = with_bias(model.params.w3, h.matrix(), model.params.b3);
  return out;
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& noise) {
  if (mu.size() != log_var.size() || mu.size() != noise.size())
    throw ValidationError("reparameterize arguments must share one dimension");
  return mu.array() + (log_var.array() / 2.0).exp() * noise.array();
}

Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.cfg.latent)
    throw ValidationError("latent dimension does not match the model");
  Eigen::ArrayXd h = activate(with_bias(model.params.w4, z, model.params.b4),
                              model.cfg.activation);
  Eigen::VectorXd raw = with_bias(model.params.w5, h.matrix(), model.params.b5);
  if (model.cfg.softplus_counts)
    for (int i = 0; i < model.cfg.count_dims; ++i) raw(i) = softplus(raw(i));
  return raw;
}

double predict_score(const VaeModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.cfg.latent)
    throw ValidationError("latent dimension does not match the model");
  Eigen::ArrayXd h = activate(with_bias(model.params.w6, z, model.params.b6),
                              model.cfg.activation);
  double raw = model.params.w7.dot(h.matrix()) + model.params.b7(0);
  return model.score_mean + model.score_scale * raw;
}

// ---- loss / backward ------------------------------------------------------------

LossParts loss(const VaeModel& model, const Eigen::MatrixXd& batch,
               const Eigen::VectorXd& scores, const Eigen::MatrixXd& noise) {
  check_batch(model, batch, scores, noise);
  return loss_from_forward(model, run_forward(model, batch, noise), scores);
}

Gradients backward(const VaeModel& model, const Eigen::MatrixXd& batch,
                   const Eigen::VectorXd& scores, const Eigen::MatrixXd& noise) {
  check_batch(model, batch, scores, noise);
  const auto& p = model.params;
  const auto act = model.cfg.activation;
  const double b = static_cast<double>(batch.cols());
  const double d = static_cast<double>(batch.rows());
  const double beta = model.cfg.beta;

  Forward f = run_forward(model, batch, noise);
  Gradients out;
  out.parts = loss_from_forward(model, f, scores);
  out.grads = ParamSet::shaped(model.cfg);
  ParamSet& g = out.grads;

  // reconstruction
  Eigen::MatrixXd d_xhat = 2.0 * (f.x_hat - f.x) / (b * d);
  Eigen::MatrixXd d_raw = d_xhat;
  if (model.cfg.softplus_counts)
    for (int i = 0; i < model.cfg.count_dims; ++i)
      for (int c = 0; c < d_raw.cols(); ++c) d_raw(i, c) *= sigmoid(f.raw(i, c));
  g.w5 = d_raw * f.h_dec.matrix().transpose();
  g.b5 = d_raw.rowwise().sum();
  Eigen::MatrixXd d_hdec = p.w5.transpose() * d_raw;
  Eigen::MatrixXd d_hdec_pre =
      (d_hdec.array() * activate_grad(f.h_dec, act)).matrix();
  g.w4 = d_hdec_pre * f.z.transpose();
  g.b4 = d_hdec_pre.rowwise().sum();
  Eigen::MatrixXd d_z = p.w4.transpose() * d_hdec_pre;

  // property head
  if (scores.size() > 0) {
    Eigen::RowVectorXd standardized =
        ((scores.array() - model.score_mean) / model.score_scale).transpose();
    Eigen::RowVectorXd d_s = (2.0 * model.cfg.prop_weight / b) * (f.s_hat - standardized);
    g.w7 = f.h_prop.matrix() * d_s.transpose();
    g.b7(0) = d_s.sum();
    Eigen::MatrixXd d_hprop = p.w7 * d_s;
    Eigen::MatrixXd d_hprop_pre =
        (d_hprop.array() * activate_grad(f.h_prop, act)).matrix();
    g.w6 = d_hprop_pre * f.z.transpose();
    g.b6 = d_hprop_pre.rowwise().sum();
    d_z += p.w6.transpose() * d_hprop_pre;
  }

  // through the reparameterization, plus the KL terms
  Eigen::MatrixXd d_mu = d_z + (beta / b) * f.mu;
  Eigen::MatrixXd d_logvar =
      (d_z.array() * noise.array() * 0.5 * (f.log_var.array() / 2.0).exp()).matrix() +
      ((beta / (2.0 * b)) * (f.log_var.array().exp() - 1.0)).matrix();
  g.w2 = d_mu * f.h_enc.matrix().transpose();
  g.b2 = d_mu.rowwise().sum();
  g.w3 = d_logvar * f.h_enc.matrix().transpose();
  g.b3 = d_logvar.rowwise().sum();

  Eigen::MatrixXd d_henc = p.w2.transpose() * d_mu + p.w3.transpose() * d_logvar;
  Eigen::MatrixXd d_henc_pre =
      (d_henc.array() * activate_grad(f.h_enc, act)).matrix();
  g.w1 = d_henc_pre * f.x.transpose();
  g.b1 = d_henc_pre.rowwise().sum();
  return out;
}

double gradient_check(const VaeModel& model, const Eigen::MatrixXd& batch,
                      const Eigen::VectorXd& scores, double epsilon) {
  if (!(epsilon > 0) || epsilon > 1e-2)
    throw ValidationError("epsilon must lie in (0, 1e-2]");
  // A fixed noise draw makes the objective a deterministic function of theta.
  Rng rng(model.seed ^ 0x5eedULL);
  Eigen::MatrixXd noise(model.cfg.latent, batch.cols());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();

  Gradients analytic = backward(model, batch, scores, noise);
  Eigen::VectorXd ga = analytic.grads.flatten();

  VaeModel probe = model;
  Eigen::VectorXd theta = model.params.flatten();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t(i) = theta(i) + epsilon;
    probe.params.unflatten(t);
    double up = loss(probe, batch, scores, noise).total;
    t(i) = theta(i) - epsilon;
    probe.params.unflatten(t);
    double down = loss(probe, batch, scores, noise).total;
    double gn = (up - down) / (2.0 * epsilon);
    double rel = std::abs(ga(i) - gn) / std::max({1.0, std::abs(ga(i)), std::abs(gn)});
    worst = std::max(worst, rel);
  }
  return worst;
}

// ---- training --------------------------------------------------------------------

TrainResult train(VaeModel& model, const Eigen::MatrixXd& train_x,
                  const Eigen::VectorXd& train_scores, const Eigen::MatrixXd& val_x,
                  const Eigen::VectorXd& val_scores, const TrainConfig& cfg,
                  std::uint64_t seed) {
  if (train_x.cols() < 1 || val_x.cols() < 1)
    throw ValidationError("training and validation sets must be non-empty");
  if (cfg.epochs < 0 || cfg.batch_size < 1)
    throw ValidationError("invalid training configuration");

  Rng rng(seed);
  TrainResult result;
  if (train_scores.size() > 0) {
    model.score_mean = train_scores.mean();
    double sd = std::sqrt((train_scores.array() - model.score_mean).square().mean());
    model.score_scale = sd > 1e-8 ? sd : 1.0;
  }
  const Eigen::MatrixXd zero_train = Eigen::MatrixXd::Zero(model.cfg.latent, train_x.cols());
  const Eigen::MatrixXd zero_val = Eigen::MatrixXd::Zero(model.cfg.latent, val_x.cols());

  ParamSet velocity = ParamSet::shaped(model.cfg);
  ParamSet best = model.params;
  ParamSet last_finite = model.params;
  double best_val = loss(model, val_x, val_scores, zero_val).total;
  result.best_epoch = -1;  // initial weights unless an epoch improves

  std::vector<int> order(static_cast<std::size_t>(train_x.cols()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t width =
          std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
      Eigen::MatrixXd batch(train_x.rows(), static_cast<Eigen::Index>(width));
      Eigen::VectorXd batch_scores(train_scores.size() > 0 ? static_cast<Eigen::Index>(width) : 0);
      for (std::size_t j = 0; j < width; ++j) {
        batch.col(static_cast<Eigen::Index>(j)) = train_x.col(order[at + j]);
        if (train_scores.size() > 0)
          batch_scores(static_cast<Eigen::Index>(j)) = train_scores(order[at + j]);
      }
      Eigen::MatrixXd noise(model.cfg.latent, static_cast<Eigen::Index>(width));
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();

      Gradients grads = backward(model, batch, batch_scores, noise);
      auto* v = &velocity;
      auto* g = &grads.grads;
      auto* pp = &model.params;
      // v = momentum * v - lr * g; theta += v
      v->w1 = cfg.momentum * v->w1 - cfg.learning_rate * g->w1;
      pp->w1 += v->w1;
      v->b1 = cfg.momentum * v->b1 - cfg.learning_rate * g->b1;
      pp->b1 += v->b1;
      v->w2 = cfg.momentum * v->w2 - cfg.learning_rate * g->w2;
      pp->w2 += v->w2;
      v->b2 = cfg.momentum * v->b2 - cfg.learning_rate * g->b2;
      pp->b2 += v->b2;
      v->w3 = cfg.momentum * v->w3 - cfg.learning_rate * g->w3;
      pp->w3 += v->w3;
      v->b3 = cfg.momentum * v->b3 - cfg.learning_rate * g->b3;
      pp->b3 += v->b3;
      v->w4 = cfg.momentum * v->w4 - cfg.learning_rate * g->w4;
      pp->w4 += v->w4;
      v->b4 = cfg.momentum * v->b4 - cfg.learning_rate * g->b4;
      pp->b4 += v->b4;
      v->w5 = cfg.momentum * v->w5 - cfg.learning_rate * g->w5;
      pp->w5 += v->w5;
      v->b5 = cfg.momentum * v->b5 - cfg.learning_rate * g->b5;
      pp->b5 += v->b5;
      v->w6 = cfg.momentum * v->w6 - cfg.learning_rate * g->w6;
      pp->w6 += v->w6;
      v->b6 = cfg.momentum * v->b6 - cfg.learning_rate * g->b6;
      pp->b6 += v->b6;
      v->w7 = cfg.momentum * v->w7 - cfg.learning_rate * g->w7;
      pp->w7 += v->w7;
      v->b7 = cfg.momentum * v->b7 - cfg.learning_rate * g->b7;
      pp->b7 += v->b7;
    }

    double train_loss = loss(model, train_x, train_scores, zero_train).total;
    double val_loss = loss(model, val_x, val_scores, zero_val).total;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      model.params = last_finite;
      result.aborted = true;
      break;
    }
    last_finite = model.params;
    result.history.emplace_back(train_loss, val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model.params;
      result.best_epoch = epoch;
    }
  }

  if (!result.aborted) model.params = best;
  return result;
}

// ---- latent-space search ------------------------------------------------------------

LatentOptResult latent_optimize(const ObjectiveFn& objective, Eigen::VectorXd z0,
                                const LatentOptConfig& cfg) {
  if (cfg.steps < 0) throw ValidationError("steps must be non-negative");
  LatentOptResult result;
  result.z = std::move(z0);
  LatentObjective cur = objective(result.z);
  result.objective = cur.value;
  for (int step = 0; step < cfg.steps; ++step) {
    if (!std::isfinite(cur.value) || !cur.grad.allFinite()) break;
    Eigen::VectorXd next = result.z - cfg.step_size * cur.grad;
    LatentObjective eval = objective(next);
    if (!std::isfinite(eval.value)) break;  // keep the last finite iterate
    result.z = std::move(next);
    cur = std::move(eval);
    result.objective = cur.value;
    result.steps_taken = step + 1;
    if (cfg.trajectory_stride > 0 && (step + 1) % cfg.trajectory_stride == 0)
      result.trajectory.push_back(result.z);
  }
  return result;
}

LatentOptResult latent_optimize_score(const VaeModel& model, Eigen::VectorXd z0,
                                      const LatentOptConfig& cfg) {
  const auto& p = model.params;
  auto objective = [&model, &p](const Eigen::VectorXd& z) -> LatentObjective {
    Eigen::ArrayXd h_pre = with_bias(p.w6, z, p.b6).array();
    Eigen::ArrayXd h = model.cfg.activation == Activation::identity ? h_pre : h_pre.tanh();
    double s = model.score_mean + model.score_scale * (p.w7.dot(h.matrix()) + p.b7(0));
    Eigen::ArrayXd h_grad = model.cfg.activation == Activation::identity
                                ? Eigen::ArrayXd(Eigen::ArrayXd::Ones(h.size()))
                                : Eigen::ArrayXd(1.0 - h.square());
    Eigen::VectorXd ds_dz =
        model.score_scale * (p.w6.transpose() * (p.w7.array() * h_grad).matrix());
    double denom = s + k_score_epsilon;
    LatentObjective out;
    out.value = 1.0 / denom;
    out.grad = -ds_dz / (denom * denom);
    return out;
  };
  return latent_optimize(objective, std::move(z0), cfg);
}

// ---- generation -------------------------------------------------------------------

GenerationResult generate(const VaeModel& model, int n, std::uint64_t seed,
                          const GenerateConfig& cfg) {
  if (n < 0) throw ValidationError("candidate count must be non-negative");
  model.validate();
  if (model.vocab.symbols.empty())
    throw ValidationError("generation requires a model with a vocabulary");

  GenerationResult result;
  Rng master(seed);
  const int v = model.vocab.size();
  long attempts = 0;
  const long max_attempts =
      static_cast<long>(cfg.max_attempt_factor) * std::max(n, 1);
  while (static_cast<int>(result.candidates.size()) < n) {
    if (attempts >= max_attempts)
      throw DivergenceError("candidate generation exhausted its retry budget");
    Rng stream = master.split(static_cast<std::uint64_t>(attempts));
    ++attempts;

    Eigen::VectorXd z0(model.cfg.latent);
    for (Eigen::Index i = 0; i < z0.size(); ++i) z0(i) = stream.normal();
    LatentOptResult opt = latent_optimize_score(model, z0, cfg.latent);

    Eigen::VectorXd decoded = decode(model, opt.z);
    Eigen::VectorXd denorm = decoded.cwiseProduct(model.feature_scale);

    chem::Composition comp;
    bool any = false;
    for (int i = 0; i < v; ++i) {
      int count = static_cast<int>(std::llround(denorm(i)));
      if (count > 0) {
        comp.add(model.vocab.symbols[static_cast<std::size_t>(i)], count);
        any = true;
      }
    }
    cif::Lattice lattice{denorm(v), denorm(v + 1), denorm(v + 2),
                         denorm(v + 3), denorm(v + 4), denorm(v + 5)};
    bool lattice_ok = lattice.a > 0 && lattice.b > 0 && lattice.c > 0 &&
                      lattice.alpha > 0 && lattice.alpha < 180 && lattice.beta > 0 &&
                      lattice.beta < 180 && lattice.gamma > 0 && lattice.gamma < 180;
    if (!any || !lattice_ok) {
      ++result.discarded;
      continue;
    }

    GeneratedCandidate cand;
    std::ostringstream id;
    id << "gen-" << std::setw(6) << std::setfill('0') << result.candidates.size();
    cand.id = id.str();
    cand.composition = std::move(comp);
    cand.lattice = lattice;
    cand.z = opt.z;
    cand.predicted_score = predict_score(model, opt.z);
    // Re-normalized integer-count descriptor, for estimators and matching.
    Eigen::VectorXd snapped = denorm;
    for (int i = 0; i < v; ++i) snapped(i) = std::llround(denorm(i));
    cand.vector = {snapped.cwiseQuotient(model.feature_scale)};
    result.candidates.push_back(std::move(cand));
  }
  return result;
}

cif::Structure template_structure(const GeneratedCandidate& candidate,
                                  std::span<const dataset::MaterialRecord> training,
                                  const Vocab& vocab, const Eigen::VectorXd& feature_scale) {
  if (training.empty()) throw ValidationError("no training structures available");
  double best = std::numeric_limits<double>::infinity();
  const dataset::MaterialRecord* nearest = nullptr;
  for (const auto& rec : training) {
    CandidateVector cv = featurize(rec, vocab, feature_scale);
    double d = (cv.values - candidate.vector.values).squaredNorm();
    if (d < best) {
      best = d;
      nearest = &rec;
    }
  }

  cif::Structure out;
  out.lattice = candidate.lattice;
  out.source_id = "template:" + nearest->id;

  // Candidate atoms in canonical order, hydrogen last.
  std::vector<std::string> atoms;
  std::vector<std::pair<std::string, int>> ordered;
  int hydrogen = 0;
  for (const auto& [z, n] : candidate.composition.counts()) {
    if (z == 1) {
      hydrogen = n;
      continue;
    }
    ordered.emplace_back(chem::element_by_z(z).symbol, n);
  }
  std::sort(ordered.begin(), ordered.end());
  if (hydrogen > 0) ordered.emplace_back("H", hydrogen);
  for (const auto& [sym, n] : ordered)
    for (int i = 0; i < n; ++i) atoms.push_back(sym);

  const auto& template_sites = nearest->structure->sites;
  constexpr double phi1 = 0.7548776662466927;  // plastic-constant sequence
  constexpr double phi2 = 0.5698402909980532;
  constexpr double phi3 = 0.3538659537585715;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    cif::Site site;
    site.element = atoms[i];
    if (i < template_sites.size()) {
      site.x = template_sites[i].x;
      site.y = template_sites[i].y;
      site.z = template_sites[i].z;
    } else {
      double k = static_cast<double>(i - template_sites.size() + 1);
      site.x = std::fmod(0.5 + k * phi1, 1.0);
      site.y = std::fmod(0.5 + k * phi2, 1.0);
      site.z = std::fmod(0.5 + k * phi3, 1.0);
    }
    out.sites.push_back(std::move(site));
  }
  cif::validate(out);
  return out;
}

// ---- persistence -----------------------------------------------------------------

void save_checkpoint(const VaeModel& model, const std::filesystem::path& path) {
  model.validate();
  json j;
  j["format_version"] = 1;
  j["config"] = {{"input_dim", model.cfg.input_dim},
                 {"count_dims", model.cfg.count_dims},
                 {"hidden", model.cfg.hidden},
                 {"latent", model.cfg.latent},
                 {"property_hidden", model.cfg.property_hidden},
                 {"activation", model.cfg.activation == Activation::tanh_act ? "tanh" : "identity"},
                 {"softplus_counts", model.cfg.softplus_counts},
                 {"beta", model.cfg.beta},
                 {"prop_weight", model.cfg.prop_weight}};
  j["vocab"] = model.vocab.symbols;
  j["feature_scale"] = std::vector<double>(model.feature_scale.data(),
                                           model.feature_scale.data() + model.feature_scale.size());
  j["score_mean"] = model.score_mean;
  j["score_scale"] = model.score_scale;
  j["seed"] = model.seed;
  Eigen::VectorXd theta = model.params.flatten();
  j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw MissingInputError("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

VaeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ValidationError("unsupported checkpoint format version");
    const json& c = j.at("config");
    VaeConfig cfg;
    cfg.input_dim = c.at("input_dim").get<int>();
    cfg.count_dims = c.at("count_dims").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.latent = c.at("latent").get<int>();
    cfg.property_hidden = c.at("property_hidden").get<int>();
    cfg.activation = c.at("activation").get<std::string>() == "identity"
                         ? Activation::identity
                         : Activation::tanh_act;
    cfg.softplus_counts = c.at("softplus_counts").get<bool>();
    cfg.beta = c.at("beta").get<double>();
    cfg.prop_weight = c.at("prop_weight").get<double>();

    VaeModel m;
    m.cfg = cfg;
    m.params = ParamSet::shaped(cfg);
    m.vocab.symbols = j.at("vocab").get<std::vector<std::string>>();
    auto scale = j.at("feature_scale").get<std::vector<double>>();
    m.feature_scale = Eigen::Map<Eigen::VectorXd>(scale.data(),
                                                  static_cast<Eigen::Index>(scale.size()));
    m.score_mean = j.at("score_mean").get<double>();
    m.score_scale = j.at("score_scale").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    auto theta = j.at("theta").get<std::vector<double>>();
    m.params.unflatten(Eigen::Map<Eigen::VectorXd>(theta.data(),
                                                   static_cast<Eigen::Index>(theta.size())));
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace hydride::vae
