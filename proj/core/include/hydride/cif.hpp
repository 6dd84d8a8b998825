#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hydride/chem.hpp"

namespace hydride::cif {

struct Lattice {
  double a = 0, b = 0, c = 0;           // lengths, angstrom
  double alpha = 0, beta = 0, gamma = 0;  // angles, degrees

  /// Cell volume in cubic angstrom (triclinic formula).
  double volume() const;
};

struct Site {
  std::string element;  // recognized element symbol
  double x = 0, y = 0, z = 0;  // fractional coordinates in [0, 1)
};

/// Lattice plus atomic sites from a single data_ block, P1 setting only:
/// symmetry operations in input files are ignored and sites are taken as
/// listed.
struct Structure {
  Lattice lattice;
  std::vector<Site> sites;
  std::string source_id;  // block name or provenance tag; may be empty
};

/// Throws ValidationError unless lengths are positive, angles lie in
/// (0, 180), coordinates lie in [0, 1) and at least one site is present.
void validate(const Structure& s);

/// Parses the first data_ block. Requires _cell_length_{a,b,c},
/// _cell_angle_{alpha,beta,gamma} and an atom_site loop with an element
/// symbol column and fractional x, y, z. Unknown tags are ignored.
/// Coordinates outside [0, 1) are wrapped by subtracting the floor.
Structure parse_cif(std::string_view text);

/// Fixed decimal formatting with 6 fractional digits;
/// parse_cif(write_cif(s)) equals s within 1e-6 per coordinate.
std::string write_cif(const Structure& s);

int site_count(const Structure& s);

/// Element counts summed over the site list.
chem::Composition composition(const Structure& s);

}  // namespace hydride::cif
