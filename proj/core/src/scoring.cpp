#include "hydride/scoring.hpp"

#include <cmath>

#include "hydride/errors.hpp"

namespace hydride::scoring {

namespace {

// The radicand is clamped at 0 so that floating-point underflow at the
// interval boundaries cannot produce NaN.
double e_factor_window(double e_form, double lo, double hi, double half_width) {
  if (std::isnan(e_form)) throw ValidationError("e_form is NaN");
  if (e_form < lo || e_form > hi) return 0.0;
  double r = std::abs(e_form + 0.5) / half_width;
  return std::sqrt(std::max(1.0 - r * r, 0.0));
}

}  // namespace

double e_factor_original(double e_form) {
  return e_factor_window(e_form, -1.0, 0.0, 0.5);
}

double e_factor_modified(double e_form) {
  return e_factor_window(e_form, -1.2, 0.2, 0.7);
}

double e_factor(double e_form, Variant v) {
  return v == Variant::original ? e_factor_original(e_form) : e_factor_modified(e_form);
}

double h_storage_score(double e_form, double w_h2, Variant v) {
  if (std::isnan(w_h2) || w_h2 < 0.0 || w_h2 > 1.0)
    throw ValidationError("hydrogen weight fraction must lie in [0, 1]");
  return e_factor(e_form, v) * w_h2;
}

double formation_energy(const EnergyBreakdown& b) {
  if (b.components.empty())
    throw ValidationError("energy breakdown has no components");
  double reference_sum = 0.0;
  for (const EnergyComponent& c : b.components) {
    if (!(c.moles > 0)) throw ValidationError("component moles must be positive");
    reference_sum += c.moles * c.ref_energy;
  }
  return b.e_total - reference_sum;
}

double squared_error(double predicted, double reference) {
  if (std::isnan(predicted) || std::isnan(reference))
    throw ValidationError("squared_error inputs must be finite");
  double d = predicted - reference;
  return d * d;
}

ErrorStats error_stats(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw ValidationError("error_stats requires at least one pair");
  ErrorStats stats;
  stats.n = pairs.size();
  for (const auto& [pred, ref] : pairs) {
    stats.mse += squared_error(pred, ref);
    stats.mae += std::abs(pred - ref);
  }
  stats.mse /= static_cast<double>(stats.n);
  stats.mae /= static_cast<double>(stats.n);
  return stats;
}

ScoredMaterial score_material(const chem::Composition& c, double e_form, Variant v) {
  ScoredMaterial m;
  m.composition = c;
  m.e_form = e_form;
  m.w_h2 = chem::hydrogen_weight_fraction(c);
  m.e_factor = e_factor(e_form, v);
  m.score = m.e_factor * m.w_h2;
  m.variant = v;
  return m;
}

}  // namespace hydride::scoring
