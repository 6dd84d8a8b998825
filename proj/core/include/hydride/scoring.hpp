#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydride/chem.hpp"

namespace hydride::scoring {

enum class Variant { original, modified };

/// Elliptic weighting of formation energy, peaking at -0.5 eV:
/// sqrt(1 - (|e + 0.5| / 0.5)^2) on [-1, 0] eV, 0 outside.
double e_factor_original(double e_form);

/// Widened variant: sqrt(1 - (|e + 0.5| / 0.7)^2) on [-1.2, 0.2] eV,
/// 0 outside. Admits metastable phases up to +0.2 eV and more stable
/// phases down to -1.2 eV.
double e_factor_modified(double e_form);

double e_factor(double e_form, Variant v);

/// Composite storage metric: e_factor(variant)(e_form) * w_h2.
/// w_h2 must lie in [0, 1].
double h_storage_score(double e_form, double w_h2, Variant v);

struct EnergyComponent {
  std::string element;
  double moles;       // > 0
  double ref_energy;  // per mole of the reference state
};

/// Total energy of a phase plus its per-element reference energies.
struct EnergyBreakdown {
  double e_total = 0;
  std::vector<EnergyComponent> components;
};

/// e_total - sum(n_i * E_i). Components must be non-empty with positive moles.
double formation_energy(const EnergyBreakdown& b);

double squared_error(double predicted, double reference);

struct ErrorStats {
  double mse = 0;
  double mae = 0;
  std::size_t n = 0;
};

/// Mean squared and mean absolute error over (predicted, reference) pairs.
ErrorStats error_stats(std::span<const std::pair<double, double>> pairs);

struct ScoredMaterial {
  chem::Composition composition;
  double e_form = 0;
  double w_h2 = 0;
  double e_factor = 0;
  double score = 0;
  Variant variant = Variant::modified;
};

ScoredMaterial score_material(const chem::Composition& c, double e_form, Variant v);

}  // namespace hydride::scoring
