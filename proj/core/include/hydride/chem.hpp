#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace hydride::chem {

/// Static classification record for one element (Z = 1..103).
/// `group` is 1..18; 0 for lanthanides/actinides (see the flags).
/// Atomic weights are conventional values abridged to 5 significant figures;
/// elements without a standard weight carry their most stable isotope mass.
struct ElementInfo {
  const char* symbol;
  int atomic_number;
  double atomic_weight;  // g/mol
  int group;
  bool lanthanide;
  bool actinide;
  bool metal;      // metalloids (B, Si, Ge, As, Sb, Te) count as non-metals
  bool metalloid;
};

/// Classification lookup. Throws ValidationError for unknown symbols.
const ElementInfo& classify(std::string_view symbol);
const ElementInfo& element_by_z(int atomic_number);
/// Non-throwing lookup; nullptr when the symbol is not recognized.
const ElementInfo* find_element(std::string_view symbol);

/// Whether an element counts as a metal. `widen_with_metalloids` pulls the
/// six metalloids into the metal set for the screening rules that need it.
bool is_metal(const ElementInfo& e, bool widen_with_metalloids = false);

/// An element -> count multiset keyed by atomic number. Canonical form:
/// non-empty with every count >= 1 (enforced by the mutators).
class Composition {
 public:
  Composition() = default;

  /// Convenience constructor for literals in tests and fixtures.
  static Composition of(std::initializer_list<std::pair<const char*, int>> items);

  void add(int atomic_number, int count);
  void add(std::string_view symbol, int count);

  int count(int atomic_number) const;
  int count(std::string_view symbol) const;
  int hydrogen_count() const { return count(1); }
  int total_atoms() const;
  bool contains_hydrogen() const { return count(1) > 0; }
  bool empty() const { return counts_.empty(); }
  std::size_t distinct_elements() const { return counts_.size(); }

  const std::map<int, int>& counts() const { return counts_; }
  std::set<int> element_set() const;

  bool operator==(const Composition&) const = default;
  auto operator<=>(const Composition&) const = default;

 private:
  std::map<int, int> counts_;  // atomic number -> count
};

/// Parses formulas of repeated (ElementSymbol)(optional positive count)
/// tokens, with at most one level of parenthesized grouping followed by an
/// optional multiplier, e.g. "TiH2", "Li3B3H6", "Ca(OH)2". Throws ParseError.
Composition parse_formula(std::string_view text);

/// Canonical text form: non-hydrogen elements in alphabetical symbol order,
/// hydrogen last, counts of 1 omitted. parse_formula(format_formula(c)) == c.
std::string format_formula(const Composition& c);

/// Sum of count * standard atomic weight, in g/mol. Errors on empty input.
double molar_mass(const Composition& c);

/// Mass fraction of hydrogen, in [0, 1]; 0 when hydrogen is absent.
double hydrogen_weight_fraction(const Composition& c);

/// Counts divided by their greatest common divisor.
Composition reduced_ratio(const Composition& c);

}  // namespace hydride::chem
