#include "hydride/cif.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>

#include "hydride/errors.hpp"

namespace hydride::cif {

namespace {

constexpr double k_pi = 3.14159265358979323846;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// CIF numbers may carry a standard uncertainty suffix, e.g. "4.59(2)".
double parse_number(std::string_view token, std::string_view context) {
  std::string_view body = token;
  if (auto paren = body.find('('); paren != std::string_view::npos)
    body = body.substr(0, paren);
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(body), &used);
    if (used != body.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("non-numeric value '" + std::string(token) + "' for " +
                     std::string(context));
  }
}

double wrap_fractional(double x) { return x - std::floor(x); }

// Site labels like "Ti1" or "H2a" reduce to their leading element symbol.
std::string element_from_label(std::string_view label) {
  std::string sym;
  for (char c : label) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      if (!sym.empty() && std::isupper(static_cast<unsigned char>(c))) break;
      sym.push_back(c);
    } else {
      break;
    }
  }
  return sym;
}

struct LoopBlock {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
};

}  // namespace

double Lattice::volume() const {
  double ca = std::cos(alpha * k_pi / 180.0);
  double cb = std::cos(beta * k_pi / 180.0);
  double cg = std::cos(gamma * k_pi / 180.0);
  double t = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
  return a * b * c * std::sqrt(std::max(t, 0.0));
}

void validate(const Structure& s) {
  const Lattice& l = s.lattice;
  if (!(l.a > 0) || !(l.b > 0) || !(l.c > 0))
    throw ValidationError("lattice lengths must be positive");
  for (double angle : {l.alpha, l.beta, l.gamma})
    if (!(angle > 0.0) || !(angle < 180.0))
      throw ValidationError("lattice angles must lie in (0, 180) degrees");
  if (s.sites.empty()) throw ValidationError("structure has no atomic sites");
  for (const Site& site : s.sites) {
    chem::classify(site.element);
    for (double v : {site.x, site.y, site.z})
      if (!(v >= 0.0) || !(v < 1.0))
        throw ValidationError("fractional coordinates must lie in [0, 1)");
  }
}

Structure parse_cif(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;

  std::optional<double> cell[6];
  constexpr std::string_view cell_tags[6] = {
      "_cell_length_a", "_cell_length_b", "_cell_length_c",
      "_cell_angle_alpha", "_cell_angle_beta", "_cell_angle_gamma"};

  Structure s;
  bool in_block = false;
  std::vector<LoopBlock> loops;
  std::vector<std::string> lines;
  while (std::getline(in, raw)) lines.push_back(raw);

  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.rfind("data_", 0) == 0) {
      if (in_block) break;  // only the first block is read
      in_block = true;
      s.source_id = std::string(line.substr(5));
      continue;
    }
    if (line.empty() || line.front() == '#') continue;

    if (line == "loop_") {
      LoopBlock loop;
      ++i;
      for (; i < lines.size(); ++i) {
        std::string_view hdr = trim(lines[i]);
        if (hdr.rfind('_', 0) == 0)
          loop.headers.emplace_back(hdr.substr(0, hdr.find_first_of(" \t")));
        else
          break;
      }
      for (; i < lines.size(); ++i) {
        std::string_view row = trim(lines[i]);
        if (row.empty() || row.front() == '#') break;
        if (row.rfind('_', 0) == 0 || row == "loop_" || row.rfind("data_", 0) == 0) break;
        auto tokens = split_ws(row);
        if (tokens.size() < loop.headers.size())
          throw ParseError("malformed loop row: '" + std::string(row) + "'");
        std::vector<std::string> cells;
        cells.reserve(tokens.size());
        for (auto t : tokens) cells.emplace_back(t);
        loop.rows.push_back(std::move(cells));
      }
      --i;  // outer loop re-examines the terminating line
      loops.push_back(std::move(loop));
      continue;
    }

    if (line.front() == '_') {
      auto tokens = split_ws(line);
      for (int t = 0; t < 6; ++t)
        if (tokens[0] == cell_tags[t]) {
          if (tokens.size() < 2)
            throw ParseError("missing value for " + std::string(cell_tags[t]));
          cell[t] = parse_number(tokens[1], cell_tags[t]);
        }
      continue;  // unknown tags ignored
    }
  }

  for (int t = 0; t < 6; ++t)
    if (!cell[t]) throw ParseError("missing mandatory tag " + std::string(cell_tags[t]));
  s.lattice = {*cell[0], *cell[1], *cell[2], *cell[3], *cell[4], *cell[5]};

  const LoopBlock* atoms = nullptr;
  int col_symbol = -1, col_label = -1, col_x = -1, col_y = -1, col_z = -1;
  for (const LoopBlock& loop : loops) {
    int symbol = -1, label = -1, x = -1, y = -1, z = -1;
    for (std::size_t h = 0; h < loop.headers.size(); ++h) {
      const std::string& tag = loop.headers[h];
      if (tag == "_atom_site_type_symbol") symbol = static_cast<int>(h);
      else if (tag == "_atom_site_label") label = static_cast<int>(h);
      else if (tag == "_atom_site_fract_x") x = static_cast<int>(h);
      else if (tag == "_atom_site_fract_y") y = static_cast<int>(h);
      else if (tag == "_atom_site_fract_z") z = static_cast<int>(h);
    }
    if ((symbol >= 0 || label >= 0) && x >= 0 && y >= 0 && z >= 0) {
      atoms = &loop;
      col_symbol = symbol;
      col_label = label;
      col_x = x;
      col_y = y;
      col_z = z;
      break;
    }
  }
  if (!atoms) throw ParseError("missing mandatory atom_site loop");

  for (const auto& row : atoms->rows) {
    Site site;
    std::string token = col_symbol >= 0 ? row[col_symbol] : row[col_label];
    std::string sym = element_from_label(token);
    if (!chem::find_element(sym))
      throw ParseError("unknown element symbol in atom_site row: '" + token + "'");
    site.element = sym;
    site.x = wrap_fractional(parse_number(row[static_cast<std::size_t>(col_x)], "_atom_site_fract_x"));
    site.y = wrap_fractional(parse_number(row[static_cast<std::size_t>(col_y)], "_atom_site_fract_y"));
    site.z = wrap_fractional(parse_number(row[static_cast<std::size_t>(col_z)], "_atom_site_fract_z"));
    s.sites.push_back(std::move(site));
  }

  validate(s);
  return s;
}

std::string write_cif(const Structure& s) {
  validate(s);
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  std::string block = s.source_id.empty() ? std::string("structure") : s.source_id;
  std::replace(block.begin(), block.end(), ' ', '_');
  out << "data_" << block << "\n";
  out << "_cell_length_a    " << s.lattice.a << "\n";
  out << "_cell_length_b    " << s.lattice.b << "\n";
  out << "_cell_length_c    " << s.lattice.c << "\n";
  out << "_cell_angle_alpha " << s.lattice.alpha << "\n";
  out << "_cell_angle_beta  " << s.lattice.beta << "\n";
  out << "_cell_angle_gamma " << s.lattice.gamma << "\n";
  out << "loop_\n";
  out << "_atom_site_type_symbol\n";
  out << "_atom_site_label\n";
  out << "_atom_site_fract_x\n";
  out << "_atom_site_fract_y\n";
  out << "_atom_site_fract_z\n";
  std::map<std::string, int> label_counts;
  for (const Site& site : s.sites) {
    int n = ++label_counts[site.element];
    out << site.element << " " << site.element << n << " "
        << site.x << " " << site.y << " " << site.z << "\n";
  }
  return out.str();
}

int site_count(const Structure& s) { return static_cast<int>(s.sites.size()); }

chem::Composition composition(const Structure& s) {
  chem::Composition c;
  for (const Site& site : s.sites) c.add(site.element, 1);
  return c;
}

}  // namespace hydride::cif
