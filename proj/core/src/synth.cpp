#include "hydride/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hydride/errors.hpp"
#include "hydride/scoring.hpp"

namespace hydride::synth {

namespace {

// Common hydride-forming metals; counts stay small so site totals remain
// within the 20-site training criterion.
constexpr const char* k_metals[] = {"Li", "Na", "K",  "Mg", "Ca", "Sc", "Ti",
                                    "V",  "Cr", "Mn", "Fe", "Ni", "Cu", "Y",
                                    "Zr", "Nb", "Pd", "La", "Ba"};

constexpr double k_avogadro_scale = 1.66053906660;  // amu/A^3 -> g/cm^3

cif::Structure build_structure(const chem::Composition& comp, const cif::Lattice& lattice,
                               const std::string& id) {
  cif::Structure s;
  s.lattice = lattice;
  s.source_id = id;
  std::vector<std::pair<std::string, int>> ordered;
  int hydrogen = 0;
  for (const auto& [z, n] : comp.counts()) {
    if (z == 1) {
      hydrogen = n;
      continue;
    }
    ordered.emplace_back(chem::element_by_z(z).symbol, n);
  }
  std::sort(ordered.begin(), ordered.end());
  if (hydrogen > 0) ordered.emplace_back("H", hydrogen);
  constexpr double phi1 = 0.7548776662466927;
  constexpr double phi2 = 0.5698402909980532;
  constexpr double phi3 = 0.3538659537585715;
  int k = 0;
  for (const auto& [sym, n] : ordered)
    for (int i = 0; i < n; ++i) {
      ++k;
      cif::Site site;
      site.element = sym;
      site.x = std::fmod(0.5 + k * phi1, 1.0);
      site.y = std::fmod(0.5 + k * phi2, 1.0);
      site.z = std::fmod(0.5 + k * phi3, 1.0);
      s.sites.push_back(std::move(site));
    }
  return s;
}

}  // namespace

std::vector<dataset::MaterialRecord> hydride_dataset(int n, std::uint64_t seed) {
  if (n < 0) throw ValidationError("dataset size must be non-negative");
  std::vector<dataset::MaterialRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  Rng master(seed);
  constexpr int n_metals = static_cast<int>(std::size(k_metals));

  for (int i = 0; i < n; ++i) {
    Rng rng = master.split(static_cast<std::uint64_t>(i));
    dataset::MaterialRecord rec;
    std::ostringstream id;
    id << "syn-" << i;
    rec.id = id.str();

    // one to three metal species, hydrogen within the 2-per-metal envelope
    chem::Composition comp;
    double species_draw = rng.uniform();
    int species = species_draw < 0.35 ? 1 : (species_draw < 0.8 ? 2 : 3);
    int metal_atoms = 0;
    std::set<int> used;
    for (int m = 0; m < species; ++m) {
      int pick = rng.uniform_int(0, n_metals - 1);
      const chem::ElementInfo& e = chem::classify(k_metals[pick]);
      if (used.count(e.atomic_number)) continue;
      used.insert(e.atomic_number);
      int count = rng.uniform_int(1, 4);
      comp.add(e.atomic_number, count);
      metal_atoms += count;
    }
    int h_max = std::min(2 * metal_atoms, 20 - metal_atoms);
    int h = rng.uniform_int(1, std::max(1, h_max));
    comp.add(1, h);
    rec.formula = comp;

    double edge = std::cbrt(static_cast<double>(comp.total_atoms())) * rng.uniform(2.2, 3.2);
    cif::Lattice lattice{edge, edge * rng.uniform(0.9, 1.1), edge * rng.uniform(0.9, 1.1),
                         90, 90, 90};
    rec.structure = build_structure(comp, lattice, rec.id);

    rec.e_form = rng.uniform(-1.1, -0.02);
    rec.energy_above_hull = rng.uniform(0.0, 0.08);
    rec.w_h2 = chem::hydrogen_weight_fraction(comp);
    rec.density = chem::molar_mass(comp) * k_avogadro_scale / lattice.volume();
    rec.score = scoring::h_storage_score(rec.e_form, rec.w_h2, scoring::Variant::original);
    // Band gap depends on the score (plus noise); f character tracks the
    // heavier metals. Both give the causal stage real structure to find.
    rec.band_gap = std::max(0.0, 2.5 * *rec.score + 0.15 * std::abs(rng.normal()));
    double mean_z = 0;
    int atoms = 0;
    for (const auto& [z, cnt] : comp.counts())
      if (z != 1) {
        mean_z += static_cast<double>(z) * cnt;
        atoms += cnt;
      }
    mean_z /= std::max(1, atoms);
    rec.f_character = std::clamp(mean_z / 100.0 + 0.03 * rng.normal(), 0.0, 1.0);
    records.push_back(std::move(rec));
  }
  return records;
}

Sem random_sem(int nodes, double edge_prob, Rng& rng, double coef_lo, double coef_hi) {
  if (nodes < 1) throw ValidationError("SEM needs at least one node");
  Sem sem;
  sem.size = nodes;
  sem.coef.assign(static_cast<std::size_t>(nodes),
                  std::vector<double>(static_cast<std::size_t>(nodes), 0.0));
  sem.noise_sd.assign(static_cast<std::size_t>(nodes), 1.0);
  for (int j = 1; j < nodes; ++j)
    for (int i = 0; i < j; ++i)
      if (rng.bernoulli(edge_prob)) {
        double magnitude = rng.uniform(coef_lo, coef_hi);
        sem.coef[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
            rng.bernoulli(0.5) ? magnitude : -magnitude;
      }
  return sem;
}

Sem chain_sem(int nodes) {
  Sem sem;
  sem.size = nodes;
  sem.coef.assign(static_cast<std::size_t>(nodes),
                  std::vector<double>(static_cast<std::size_t>(nodes), 0.0));
  sem.noise_sd.assign(static_cast<std::size_t>(nodes), 1.0);
  for (int j = 1; j < nodes; ++j)
    sem.coef[static_cast<std::size_t>(j)][static_cast<std::size_t>(j - 1)] = 1.0;
  return sem;
}

Sem collider_sem() {
  Sem sem;
  sem.size = 3;
  sem.coef.assign(3, std::vector<double>(3, 0.0));
  sem.noise_sd.assign(3, 1.0);
  sem.coef[2][0] = 1.0;
  sem.coef[2][1] = 1.0;
  return sem;
}

causal::Table sample_sem(const Sem& sem, int rows, Rng& rng,
                         const std::vector<std::string>& names) {
  causal::Table t;
  if (!names.empty()) {
    if (static_cast<int>(names.size()) != sem.size)
      throw ValidationError("name count does not match the SEM");
    t.names = names;
  } else {
    for (int i = 0; i < sem.size; ++i) t.names.push_back("x" + std::to_string(i));
  }
  t.values.resize(rows, sem.size);
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < sem.size; ++j) {
      double v = rng.normal(0.0, sem.noise_sd[static_cast<std::size_t>(j)]);
      for (int i = 0; i < j; ++i) {
        double c = sem.coef[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        if (c != 0.0) v += c * t.values(r, i);
      }
      t.values(r, j) = v;
    }
  return t;
}

}  // namespace hydride::synth
