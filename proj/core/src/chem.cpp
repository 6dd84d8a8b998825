#include "hydride/chem.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "hydride/errors.hpp"

namespace hydride::chem {

namespace {

constexpr std::array<ElementInfo, 103> k_elements{{
    {"H", 1, 1.008, 1, false, false, false, false},
    {"He", 2, 4.0026, 18, false, false, false, false},
    {"Li", 3, 6.94, 1, false, false, true, false},
    {"Be", 4, 9.0122, 2, false, false, true, false},
    {"B", 5, 10.81, 13, false, false, false, true},
    {"C", 6, 12.011, 14, false, false, false, false},
    {"N", 7, 14.007, 15, false, false, false, false},
    {"O", 8, 15.999, 16, false, false, false, false},
    {"F", 9, 18.998, 17, false, false, false, false},
    {"Ne", 10, 20.18, 18, false, false, false, false},
    {"Na", 11, 22.99, 1, false, false, true, false},
    {"Mg", 12, 24.305, 2, false, false, true, false},
    {"Al", 13, 26.982, 13, false, false, true, false},
    {"Si", 14, 28.085, 14, false, false, false, true},
    {"P", 15, 30.974, 15, false, false, false, false},
    {"S", 16, 32.06, 16, false, false, false, false},
    {"Cl", 17, 35.45, 17, false, false, false, false},
    {"Ar", 18, 39.95, 18, false, false, false, false},
    {"K", 19, 39.098, 1, false, false, true, false},
    {"Ca", 20, 40.078, 2, false, false, true, false},
    {"Sc", 21, 44.956, 3, false, false, true, false},
    {"Ti", 22, 47.867, 4, false, false, true, false},
    {"V", 23, 50.942, 5, false, false, true, false},
    {"Cr", 24, 51.996, 6, false, false, true, false},
    {"Mn", 25, 54.938, 7, false, false, true, false},
    {"Fe", 26, 55.845, 8, false, false, true, false},
    {"Co", 27, 58.933, 9, false, false, true, false},
    {"Ni", 28, 58.693, 10, false, false, true, false},
    {"Cu", 29, 63.546, 11, false, false, true, false},
    {"Zn", 30, 65.38, 12, false, false, true, false},
    {"Ga", 31, 69.723, 13, false, false, true, false},
    {"Ge", 32, 72.63, 14, false, false, false, true},
    {"As", 33, 74.922, 15, false, false, false, true},
    {"Se", 34, 78.971, 16, false, false, false, false},
    {"Br", 35, 79.904, 17, false, false, false, false},
    {"Kr", 36, 83.798, 18, false, false, false, false},
    {"Rb", 37, 85.468, 1, false, false, true, false},
    {"Sr", 38, 87.62, 2, false, false, true, false},
    {"Y", 39, 88.906, 3, false, false, true, false},
    {"Zr", 40, 91.224, 4, false, false, true, false},
    {"Nb", 41, 92.906, 5, false, false, true, false},
    {"Mo", 42, 95.95, 6, false, false, true, false},
    {"Tc", 43, 97.907, 7, false, false, true, false},
    {"Ru", 44, 101.07, 8, false, false, true, false},
    {"Rh", 45, 102.91, 9, false, false, true, false},
    {"Pd", 46, 106.42, 10, false, false, true, false},
    {"Ag", 47, 107.87, 11, false, false, true, false},
    {"Cd", 48, 112.41, 12, false, false, true, false},
    {"In", 49, 114.82, 13, false, false, true, false},
    {"Sn", 50, 118.71, 14, false, false, true, false},
    {"Sb", 51, 121.76, 15, false, false, false, true},
    {"Te", 52, 127.6, 16, false, false, false, true},
    {"I", 53, 126.9, 17, false, false, false, false},
    {"Xe", 54, 131.29, 18, false, false, false, false},
    {"Cs", 55, 132.91, 1, false, false, true, false},
    {"Ba", 56, 137.33, 2, false, false, true, false},
    {"La", 57, 138.91, 0, true, false, true, false},
    {"Ce", 58, 140.12, 0, true, false, true, false},
    {"Pr", 59, 140.91, 0, true, false, true, false},
    {"Nd", 60, 144.24, 0, true, false, true, false},
    {"Pm", 61, 144.91, 0, true, false, true, false},
    {"Sm", 62, 150.36, 0, true, false, true, false},
    {"Eu", 63, 151.96, 0, true, false, true, false},
    {"Gd", 64, 157.25, 0, true, false, true, false},
    {"Tb", 65, 158.93, 0, true, false, true, false},
    {"Dy", 66, 162.5, 0, true, false, true, false},
    {"Ho", 67, 164.93, 0, true, false, true, false},
    {"Er", 68, 167.26, 0, true, false, true, false},
    {"Tm", 69, 168.93, 0, true, false, true, false},
    {"Yb", 70, 173.05, 0, true, false, true, false},
    {"Lu", 71, 174.97, 0, true, false, true, false},
    {"Hf", 72, 178.49, 4, false, false, true, false},
    {"Ta", 73, 180.95, 5, false, false, true, false},
    {"W", 74, 183.84, 6, false, false, true, false},
    {"Re", 75, 186.21, 7, false, false, true, false},
    {"Os", 76, 190.23, 8, false, false, true, false},
    {"Ir", 77, 192.22, 9, false, false, true, false},
    {"Pt", 78, 195.08, 10, false, false, true, false},
    {"Au", 79, 196.97, 11, false, false, true, false},
    {"Hg", 80, 200.59, 12, false, false, true, false},
    {"Tl", 81, 204.38, 13, false, false, true, false},
    {"Pb", 82, 207.2, 14, false, false, true, false},
    {"Bi", 83, 208.98, 15, false, false, true, false},
    {"Po", 84, 208.98, 16, false, false, true, false},
    {"At", 85, 209.99, 17, false, false, false, false},
    {"Rn", 86, 222.02, 18, false, false, false, false},
    {"Fr", 87, 223.02, 1, false, false, true, false},
    {"Ra", 88, 226.03, 2, false, false, true, false},
    {"Ac", 89, 227.03, 0, false, true, true, false},
    {"Th", 90, 232.04, 0, false, true, true, false},
    {"Pa", 91, 231.04, 0, false, true, true, false},
    {"U", 92, 238.03, 0, false, true, true, false},
    {"Np", 93, 237.05, 0, false, true, true, false},
    {"Pu", 94, 244.06, 0, false, true, true, false},
    {"Am", 95, 243.06, 0, false, true, true, false},
    {"Cm", 96, 247.07, 0, false, true, true, false},
    {"Bk", 97, 247.07, 0, false, true, true, false},
    {"Cf", 98, 251.08, 0, false, true, true, false},
    {"Es", 99, 252.08, 0, false, true, true, false},
    {"Fm", 100, 257.1, 0, false, true, true, false},
    {"Md", 101, 258.1, 0, false, true, true, false},
    {"No", 102, 259.1, 0, false, true, true, false},
    {"Lr", 103, 262.11, 0, false, true, true, false},
}};

const std::unordered_map<std::string_view, const ElementInfo*>& symbol_index() {
  static const auto index = [] {
    std::unordered_map<std::string_view, const ElementInfo*> m;
    m.reserve(k_elements.size());
    for (const auto& e : k_elements) m.emplace(e.symbol, &e);
    return m;
  }();
  return index;
}

}  // namespace

const ElementInfo* find_element(std::string_view symbol) {
  auto it = symbol_index().find(symbol);
  return it == symbol_index().end() ? nullptr : it->second;
}

const ElementInfo& classify(std::string_view symbol) {
  const ElementInfo* e = find_element(symbol);
  if (!e) throw ValidationError("unknown element symbol: '" + std::string(symbol) + "'");
  return *e;
}

const ElementInfo& element_by_z(int atomic_number) {
  if (atomic_number < 1 || atomic_number > static_cast<int>(k_elements.size()))
    throw ValidationError("atomic number out of range: " + std::to_string(atomic_number));
  return k_elements[static_cast<std::size_t>(atomic_number - 1)];
}

bool is_metal(const ElementInfo& e, bool widen_with_metalloids) {
  return e.metal || (widen_with_metalloids && e.metalloid);
}

Composition Composition::of(std::initializer_list<std::pair<const char*, int>> items) {
  Composition c;
  for (const auto& [sym, n] : items) c.add(sym, n);
  return c;
}

void Composition::add(int atomic_number, int count) {
  element_by_z(atomic_number);  // range check
  if (count < 1) throw ValidationError("composition counts must be positive");
  counts_[atomic_number] += count;
}

void Composition::add(std::string_view symbol, int count) {
  add(classify(symbol).atomic_number, count);
}

int Composition::count(int atomic_number) const {
  auto it = counts_.find(atomic_number);
  return it == counts_.end() ? 0 : it->second;
}

int Composition::count(std::string_view symbol) const {
  const ElementInfo* e = find_element(symbol);
  return e ? count(e->atomic_number) : 0;
}

int Composition::total_atoms() const {
  int total = 0;
  for (const auto& [z, n] : counts_) total += n;
  return total;
}

std::set<int> Composition::element_set() const {
  std::set<int> s;
  for (const auto& [z, n] : counts_) s.insert(z);
  return s;
}

namespace {

struct FormulaScanner {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("formula '" + std::string(text) + "': " + what +
                     " at position " + std::to_string(pos));
  }

  // ElementSymbol := uppercase letter followed by lowercase letters.
  const ElementInfo& scan_element() {
    std::size_t start = pos;
    ++pos;
    while (!done() && std::islower(static_cast<unsigned char>(peek()))) ++pos;
    std::string_view sym = text.substr(start, pos - start);
    const ElementInfo* e = find_element(sym);
    if (!e) {
      pos = start;
      fail("unknown element symbol '" + std::string(sym) + "'");
    }
    return *e;
  }

  // Optional positive integer; defaults to 1 when absent.
  int scan_count() {
    if (done() || !std::isdigit(static_cast<unsigned char>(peek()))) return 1;
    long value = 0;
    while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
      value = value * 10 + (peek() - '0');
      if (value > 1'000'000) fail("count too large");
      ++pos;
    }
    if (value == 0) fail("zero multiplier");
    return static_cast<int>(value);
  }

  // (ElementSymbol count?)+ until a parenthesis or end of input.
  Composition scan_run(bool inside_group) {
    Composition run;
    while (!done() && peek() != ')' && peek() != '(') {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) fail("whitespace not allowed");
      if (!std::isupper(static_cast<unsigned char>(c)))
        fail(std::string("expected element symbol, found '") + c + "'");
      const ElementInfo& e = scan_element();
      run.add(e.atomic_number, scan_count());
    }
    if (inside_group && !done() && peek() == '(') fail("nested parentheses");
    return run;
  }
};

}  // namespace

Composition parse_formula(std::string_view text) {
  if (text.empty()) throw ParseError("empty formula");
  FormulaScanner s{text};
  Composition result;
  auto merge = [&result](const Composition& part, int multiplier) {
    for (const auto& [z, n] : part.counts()) result.add(z, n * multiplier);
  };
  while (!s.done()) {
    if (s.peek() == '(') {
      ++s.pos;
      Composition group = s.scan_run(/*inside_group=*/true);
      if (s.done() || s.peek() != ')') s.fail("unbalanced parentheses");
      ++s.pos;
      if (group.empty()) s.fail("empty group");
      merge(group, s.scan_count());
    } else if (s.peek() == ')') {
      s.fail("unbalanced parentheses");
    } else {
      merge(s.scan_run(/*inside_group=*/false), 1);
    }
  }
  if (result.empty()) throw ParseError("empty formula");
  return result;
}

std::string format_formula(const Composition& c) {
  if (c.empty()) throw ValidationError("cannot format an empty composition");
  std::vector<std::pair<std::string, int>> parts;
  int hydrogen = 0;
  for (const auto& [z, n] : c.counts()) {
    if (z == 1) {
      hydrogen = n;
      continue;
    }
    parts.emplace_back(element_by_z(z).symbol, n);
  }
  std::sort(parts.begin(), parts.end());
  if (hydrogen > 0) parts.emplace_back("H", hydrogen);
  std::ostringstream out;
  for (const auto& [sym, n] : parts) {
    out << sym;
    if (n > 1) out << n;
  }
  return out.str();
}

double molar_mass(const Composition& c) {
  if (c.empty()) throw ValidationError("molar mass of an empty composition");
  double mass = 0.0;
  for (const auto& [z, n] : c.counts()) mass += n * element_by_z(z).atomic_weight;
  return mass;
}

double hydrogen_weight_fraction(const Composition& c) {
  int h = c.hydrogen_count();
  if (h == 0) return 0.0;
  return h * element_by_z(1).atomic_weight / molar_mass(c);
}

Composition reduced_ratio(const Composition& c) {
  if (c.empty()) return c;
  int g = 0;
  for (const auto& [z, n] : c.counts()) g = std::gcd(g, n);
  Composition reduced;
  for (const auto& [z, n] : c.counts()) reduced.add(z, n / g);
  return reduced;
}

}  // namespace hydride::chem
