#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydride/chem.hpp"
#include "hydride/dataset.hpp"

namespace hydride::screen {

struct FilterConfig {
  /// Soft cap of two hydrogens per metal atom (the most common metal-hydride
  /// stoichiometry). Off lets metals absorb any hydrogen count.
  bool strict_metal_cap = true;
  /// Require 3 or 4 distinct non-hydrogen elements (off by default: accepted
  /// reference rows include plain binary hydrides).
  bool element_count_rule = false;
  /// Count metalloids as metals for the metal-presence rules.
  bool metalloids_as_metals = false;
};

struct FilterVerdict {
  std::string id;
  bool kept = false;
  std::optional<std::string> failed_rule;  // "R1".."R10", set iff !kept
  std::string detail;
};

struct Candidate {
  std::string id;
  chem::Composition composition;
  double score = 0;
  double w_h2 = 0;
  double e_form = 0;
  double predicted_score = 0;  // property-head value, informational
};

/// Chemical plausibility rules, evaluated R1..R10 with the first failure
/// reported. R1-R5 are hydrogen caps that combine additively across the
/// element classes present:
///   R1 group 16: 2 per atom        R2 group 15: n + 2
///   R3 group 14: 2n + 2            R4 group 13: strictly below 2n
///   R5 metals:   2 per atom (soft; see FilterConfig)
/// R6 rejects element sets within {N, O, S, P, Se, H}; R7 rejects all-non-
/// metal compositions; R8 requires a metal; R9 rejects halogens; R10 is the
/// optional element-count restriction.
FilterVerdict evaluate_filters(const std::string& id, const chem::Composition& c,
                               const FilterConfig& cfg = {});

std::vector<FilterVerdict> apply_filters(std::span<const Candidate> candidates,
                                         const FilterConfig& cfg = {});

/// Stable descending sort by score; ties break on higher w_h2, then
/// lexicographic formula.
std::vector<Candidate> rank(std::span<const Candidate> candidates);

std::vector<Candidate> top_k(std::span<const Candidate> ranked, std::size_t k);

/// Match classes form a hierarchy: an exact formula match implies a matching
/// reduced ratio implies a matching element set.
enum class MatchClass { no_match = 0, same_elements = 1, same_ratio = 2, same_formula = 3 };

std::string_view match_class_name(MatchClass m);

struct MatchResult {
  MatchClass cls = MatchClass::no_match;
  std::string matched_id;  // first hit in database order; empty for no_match
};

MatchResult match_classify(const chem::Composition& candidate,
                           std::span<const dataset::MaterialRecord> reference);

struct AccuracyCurves {
  std::vector<int> n;  // 1..N
  std::vector<double> same_formula;
  std::vector<double> same_ratio;    // rate of matches at least as strong
  std::vector<double> same_elements;
};

/// Cumulative accuracy over ranked prefixes: entry n holds the fraction of
/// the top n candidates achieving at least each match class.
AccuracyCurves cumulative_accuracy(std::span<const MatchResult> ranked_matches);

}  // namespace hydride::screen
