#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydride/chem.hpp"
#include "hydride/cif.hpp"

namespace hydride::dataset {

/// One database row. `w_h2` is always derived from the formula; an explicit
/// input column is cross-checked against the derived value within 1e-6.
struct MaterialRecord {
  std::string id;
  chem::Composition formula;
  std::optional<cif::Structure> structure;
  double e_form = 0;             // eV/atom
  double energy_above_hull = 0;  // eV/atom, >= 0
  double density = 0;            // g/cm^3
  double band_gap = 0;           // eV
  double w_h2 = 0;
  std::optional<double> score;
  std::optional<double> f_character;
  std::map<std::string, double> extra;  // unlisted numeric columns, verbatim
};

enum class Format { csv, jsonl };
enum class OnError { skip, fail };  // lenient rows vs fail-fast

struct LoadReport {
  std::vector<MaterialRecord> records;
  std::vector<std::string> diagnostics;  // one line per skipped row
};

/// CSV schema: header row with id, formula, e_form, energy_above_hull,
/// density, band_gap and optionally f_character, score, w_h2, cif_path;
/// further numeric columns land in `extra`. The JSON-lines format mirrors
/// the same fields plus a schema_version field. cif_path entries resolve
/// relative to the input file's directory.
LoadReport load_records(const std::filesystem::path& path, Format format,
                        OnError on_error = OnError::skip);

/// Writes records; structures are emitted as sibling CIF files under
/// <dir>/structures/<id>.cif and referenced by cif_path.
void save_records(const std::filesystem::path& path, std::span<const MaterialRecord> records,
                  Format format);

struct Rejection {
  std::string id;
  std::string reason;  // first violated criterion
};

struct CriteriaResult {
  std::vector<MaterialRecord> kept;
  std::vector<Rejection> rejected;
};

/// Training-set criteria, checked in order: contains hydrogen; structure
/// present with at most 20 atomic sites; energy above hull in [0, 0.08] eV;
/// formation energy <= 0 eV.
CriteriaResult apply_training_criteria(std::span<const MaterialRecord> records);

struct SplitSpec {
  double train = 0.6, val = 0.2, test = 0.2;  // each > 0, summing to 1
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<MaterialRecord> train, val, test;
};

/// Deterministic seeded shuffle followed by floor allocation; the remainder
/// goes to the training partition. 450 records at 60:20:20 give
/// (270, 90, 90).
Split split(std::span<const MaterialRecord> records, const SplitSpec& spec);

enum class BinStrategy { equal_width, equal_frequency };

struct Discretized {
  std::vector<int> bins;      // one index in [0, bins) per input value
  std::vector<double> edges;  // bins-1 interior edges, non-decreasing
};

/// Order-preserving binning: a value's bin is the number of interior edges
/// <= it. Equal-frequency edges sit at the sorted column's quantiles and
/// reject constant columns.
Discretized discretize(std::span<const double> values, int bins, BinStrategy strategy);

}  // namespace hydride::dataset
