#include "hydride/screen.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "hydride/errors.hpp"

namespace hydride::screen {

namespace {

struct ClassCounts {
  int group16 = 0, group15 = 0, group14 = 0, group13 = 0;
  int metal = 0, halogen = 0, other = 0;
  bool has_metal_element = false;  // by is_metal, independent of cap classes
  int distinct_non_h = 0;
};

// Each non-hydrogen element lands in exactly one cap class; p-block groups
// take precedence over the metal class (Al counts as group 13, Sn as 14).
ClassCounts classify_composition(const chem::Composition& c, const FilterConfig& cfg) {
  ClassCounts out;
  for (const auto& [z, n] : c.counts()) {
    if (z == 1) continue;
    ++out.distinct_non_h;
    const chem::ElementInfo& e = chem::element_by_z(z);
    if (chem::is_metal(e, cfg.metalloids_as_metals)) out.has_metal_element = true;
    switch (e.group) {
      case 16: out.group16 += n; break;
      case 15: out.group15 += n; break;
      case 14: out.group14 += n; break;
      case 13: out.group13 += n; break;
      case 17: out.halogen += n; break;
      default:
        if (e.metal) out.metal += n;
        else out.other += n;
    }
  }
  return out;
}

bool subset_of_nonhydride_set(const chem::Composition& c) {
  // N, O, S, P, Se and H lack the metallic bonding needed for reversible
  // hydrogen uptake.
  static const std::set<int> allowed = {7, 8, 16, 15, 34, 1};
  for (const auto& [z, n] : c.counts())
    if (!allowed.count(z)) return false;
  return true;
}

FilterVerdict fail(const std::string& id, const char* rule, std::string detail) {
  return {id, false, rule, std::move(detail)};
}

}  // namespace

FilterVerdict evaluate_filters(const std::string& id, const chem::Composition& c,
                               const FilterConfig& cfg) {
  if (c.empty()) return fail(id, "R0", "empty composition");
  const ClassCounts cls = classify_composition(c, cfg);
  const int h = c.hydrogen_count();

  // R1-R5: additive hydrogen caps over the classes present.
  double cap = 0;
  bool any_capped_class = false;
  if (cls.group16 > 0) { cap += 2.0 * cls.group16; any_capped_class = true; }
  if (cls.group15 > 0) { cap += cls.group15 + 2.0; any_capped_class = true; }
  if (cls.group14 > 0) { cap += 2.0 * cls.group14 + 2.0; any_capped_class = true; }
  if (cls.group13 > 0) { cap += 2.0 * cls.group13 - 1.0; any_capped_class = true; }
  if (cls.metal > 0) {
    any_capped_class = true;
    if (cfg.strict_metal_cap) cap += 2.0 * cls.metal;
    else cap = std::numeric_limits<double>::infinity();
  }
  if (any_capped_class && h > cap) {
    std::ostringstream detail;
    detail << "hydrogen count " << h << " exceeds additive cap " << cap;
    if (cls.group16 > 0) return fail(id, "R1", detail.str());
    if (cls.group15 > 0) return fail(id, "R2", detail.str());
    if (cls.group14 > 0) return fail(id, "R3", detail.str());
    if (cls.group13 > 0) return fail(id, "R4", detail.str());
    return fail(id, "R5", detail.str());
  }

  if (subset_of_nonhydride_set(c))
    return fail(id, "R6", "element set within {N, O, S, P, Se, H}");

  bool all_non_metal = true;
  for (const auto& [z, n] : c.counts())
    if (chem::is_metal(chem::element_by_z(z), cfg.metalloids_as_metals))
      all_non_metal = false;
  if (all_non_metal) return fail(id, "R7", "only non-metals and hydrogen");

  if (!cls.has_metal_element) return fail(id, "R8", "no metal element");

  if (cls.halogen > 0) return fail(id, "R9", "contains a halogen");

  if (cfg.element_count_rule && (cls.distinct_non_h < 3 || cls.distinct_non_h > 4)) {
    std::ostringstream detail;
    detail << cls.distinct_non_h << " distinct non-hydrogen elements (need 3 or 4)";
    return fail(id, "R10", detail.str());
  }

  return {id, true, std::nullopt, "kept"};
}

std::vector<FilterVerdict> apply_filters(std::span<const Candidate> candidates,
                                         const FilterConfig& cfg) {
  std::vector<FilterVerdict> out;
  out.reserve(candidates.size());
  for (const Candidate& cand : candidates)
    out.push_back(evaluate_filters(cand.id, cand.composition, cfg));
  return out;
}

std::vector<Candidate> rank(std::span<const Candidate> candidates) {
  std::vector<Candidate> out(candidates.begin(), candidates.end());
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.w_h2 != b.w_h2) return a.w_h2 > b.w_h2;
    return chem::format_formula(a.composition) < chem::format_formula(b.composition);
  });
  return out;
}

std::vector<Candidate> top_k(std::span<const Candidate> ranked, std::size_t k) {
  std::size_t take = std::min(k, ranked.size());
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take)};
}

std::string_view match_class_name(MatchClass m) {
  switch (m) {
    case MatchClass::same_formula: return "same_formula";
    case MatchClass::same_ratio: return "same_ratio";
    case MatchClass::same_elements: return "same_elements";
    default: return "no_match";
  }
}

MatchResult match_classify(const chem::Composition& candidate,
                           std::span<const dataset::MaterialRecord> reference) {
  for (const auto& rec : reference)
    if (rec.formula == candidate) return {MatchClass::same_formula, rec.id};
  chem::Composition reduced = chem::reduced_ratio(candidate);
  for (const auto& rec : reference)
    if (chem::reduced_ratio(rec.formula) == reduced)
      return {MatchClass::same_ratio, rec.id};
  auto elements = candidate.element_set();
  for (const auto& rec : reference)
    if (rec.formula.element_set() == elements)
      return {MatchClass::same_elements, rec.id};
  return {MatchClass::no_match, ""};
}

AccuracyCurves cumulative_accuracy(std::span<const MatchResult> ranked_matches) {
  if (ranked_matches.empty())
    throw ValidationError("cumulative accuracy of an empty candidate list");
  AccuracyCurves curves;
  int formula_hits = 0, ratio_hits = 0, element_hits = 0;
  for (std::size_t i = 0; i < ranked_matches.size(); ++i) {
    MatchClass cls = ranked_matches[i].cls;
    if (cls >= MatchClass::same_formula) ++formula_hits;
    if (cls >= MatchClass::same_ratio) ++ratio_hits;
    if (cls >= MatchClass::same_elements) ++element_hits;
    double n = static_cast<double>(i + 1);
    curves.n.push_back(static_cast<int>(i + 1));
    curves.same_formula.push_back(formula_hits / n);
    curves.same_ratio.push_back(ratio_hits / n);
    curves.same_elements.push_back(element_hits / n);
  }
  return curves;
}

}  // namespace hydride::screen
