#include "hydride/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hydride/errors.hpp"
#include "hydride/rng.hpp"
#include "hydride/scoring.hpp"

namespace hydride::dataset {

namespace {

using nlohmann::json;

constexpr int k_schema_version = 1;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Comma separation with optional double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_double(const std::string& text, const std::string& column) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("column '" + column + "': non-numeric value '" + text + "'");
  }
}

void check_record(MaterialRecord& rec, std::optional<double> given_w_h2) {
  if (rec.id.empty()) throw ValidationError("empty id");
  if (rec.formula.empty()) throw ValidationError("empty formula");
  if (rec.energy_above_hull < 0)
    throw ValidationError("energy above hull must be >= 0");
  rec.w_h2 = chem::hydrogen_weight_fraction(rec.formula);
  if (given_w_h2 && std::abs(*given_w_h2 - rec.w_h2) > 1e-6)
    throw ValidationError("w_h2 column inconsistent with formula");
}

cif::Structure load_structure(const std::filesystem::path& base,
                              const std::string& rel) {
  std::filesystem::path p = rel;
  if (p.is_relative()) p = base / p;
  std::ifstream in(p);
  if (!in) throw MissingInputError("cannot open CIF file: " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return cif::parse_cif(buf.str());
}

LoadReport load_csv(const std::filesystem::path& path, OnError on_error) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open dataset: " + path.string());

  std::string header_line;
  if (!std::getline(in, header_line)) throw ParseError("empty CSV file: " + path.string());
  auto headers = split_csv_line(header_line);

  auto column = [&](const std::string& name) -> int {
    auto it = std::find(headers.begin(), headers.end(), name);
    return it == headers.end() ? -1 : static_cast<int>(it - headers.begin());
  };
  const int c_id = column("id"), c_formula = column("formula"), c_eform = column("e_form"),
            c_hull = column("energy_above_hull"), c_density = column("density"),
            c_gap = column("band_gap");
  for (auto [idx, name] : {std::pair{c_id, "id"}, {c_formula, "formula"}, {c_eform, "e_form"},
                           {c_hull, "energy_above_hull"}, {c_density, "density"},
                           {c_gap, "band_gap"}})
    if (idx < 0) throw ParseError("CSV schema mismatch: missing column '" + std::string(name) + "'");
  const int c_fchar = column("f_character"), c_score = column("score"),
            c_wh2 = column("w_h2"), c_cif = column("cif_path");

  std::vector<int> extra_cols;
  for (int i = 0; i < static_cast<int>(headers.size()); ++i)
    if (i != c_id && i != c_formula && i != c_eform && i != c_hull && i != c_density &&
        i != c_gap && i != c_fchar && i != c_score && i != c_wh2 && i != c_cif)
      extra_cols.push_back(i);

  LoadReport report;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  const auto base = path.parent_path();
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    std::optional<MaterialRecord> parsed;
    try {
      auto fields = split_csv_line(line);
      if (fields.size() != headers.size())
        throw ParseError("expected " + std::to_string(headers.size()) + " fields, got " +
                         std::to_string(fields.size()));
      MaterialRecord rec;
      rec.id = fields[static_cast<std::size_t>(c_id)];
      rec.formula = chem::parse_formula(fields[static_cast<std::size_t>(c_formula)]);
      rec.e_form = parse_double(fields[static_cast<std::size_t>(c_eform)], "e_form");
      rec.energy_above_hull =
          parse_double(fields[static_cast<std::size_t>(c_hull)], "energy_above_hull");
      rec.density = parse_double(fields[static_cast<std::size_t>(c_density)], "density");
      rec.band_gap = parse_double(fields[static_cast<std::size_t>(c_gap)], "band_gap");
      std::optional<double> given_wh2;
      if (c_fchar >= 0 && !fields[static_cast<std::size_t>(c_fchar)].empty())
        rec.f_character = parse_double(fields[static_cast<std::size_t>(c_fchar)], "f_character");
      if (c_score >= 0 && !fields[static_cast<std::size_t>(c_score)].empty())
        rec.score = parse_double(fields[static_cast<std::size_t>(c_score)], "score");
      if (c_wh2 >= 0 && !fields[static_cast<std::size_t>(c_wh2)].empty())
        given_wh2 = parse_double(fields[static_cast<std::size_t>(c_wh2)], "w_h2");
      if (c_cif >= 0 && !fields[static_cast<std::size_t>(c_cif)].empty())
        rec.structure = load_structure(base, fields[static_cast<std::size_t>(c_cif)]);
      for (int col : extra_cols)
        rec.extra[headers[static_cast<std::size_t>(col)]] =
            parse_double(fields[static_cast<std::size_t>(col)], headers[static_cast<std::size_t>(col)]);
      check_record(rec, given_wh2);
      parsed = std::move(rec);
    } catch (const std::runtime_error& e) {
      if (on_error == OnError::fail)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": skipped: " + e.what());
    }
    if (parsed) {
      if (!seen_ids.insert(parsed->id).second)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate id '" + parsed->id + "'");
      report.records.push_back(std::move(*parsed));
    }
  }
  return report;
}

LoadReport load_jsonl(const std::filesystem::path& path, OnError on_error) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open dataset: " + path.string());
  LoadReport report;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  const auto base = path.parent_path();
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    std::optional<MaterialRecord> parsed;
    try {
      json j = json::parse(line);
      int version = j.value("schema_version", k_schema_version);
      if (version != k_schema_version)
        throw ParseError("unsupported schema_version " + std::to_string(version));
      MaterialRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.formula = chem::parse_formula(j.at("formula").get<std::string>());
      rec.e_form = j.at("e_form").get<double>();
      rec.energy_above_hull = j.at("energy_above_hull").get<double>();
      rec.density = j.at("density").get<double>();
      rec.band_gap = j.at("band_gap").get<double>();
      std::optional<double> given_wh2;
      if (j.contains("w_h2")) given_wh2 = j.at("w_h2").get<double>();
      if (j.contains("f_character") && !j.at("f_character").is_null())
        rec.f_character = j.at("f_character").get<double>();
      if (j.contains("score") && !j.at("score").is_null())
        rec.score = j.at("score").get<double>();
      if (j.contains("cif_path") && !j.at("cif_path").is_null())
        rec.structure = load_structure(base, j.at("cif_path").get<std::string>());
      if (j.contains("extra"))
        for (auto& [key, value] : j.at("extra").items())
          rec.extra[key] = value.get<double>();
      check_record(rec, given_wh2);
      parsed = std::move(rec);
    } catch (const json::exception& e) {
      if (on_error == OnError::fail)
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": skipped: " + e.what());
    } catch (const std::runtime_error& e) {
      if (on_error == OnError::fail)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": skipped: " + e.what());
    }
    if (parsed) {
      if (!seen_ids.insert(parsed->id).second)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate id '" + parsed->id + "'");
      report.records.push_back(std::move(*parsed));
    }
  }
  return report;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

std::string write_structures(const std::filesystem::path& path,
                             const MaterialRecord& rec) {
  auto dir = path.parent_path() / "structures";
  std::filesystem::create_directories(dir);
  auto file = dir / (rec.id + ".cif");
  std::ofstream out(file);
  out << cif::write_cif(*rec.structure);
  return "structures/" + rec.id + ".cif";
}

}  // namespace

LoadReport load_records(const std::filesystem::path& path, Format format, OnError on_error) {
  return format == Format::csv ? load_csv(path, on_error) : load_jsonl(path, on_error);
}

void save_records(const std::filesystem::path& path, std::span<const MaterialRecord> records,
                  Format format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw MissingInputError("cannot write dataset: " + path.string());

  if (format == Format::csv) {
    std::set<std::string> extra_keys;
    for (const auto& rec : records)
      for (const auto& [k, v] : rec.extra) extra_keys.insert(k);
    out << "id,formula,e_form,energy_above_hull,density,band_gap,w_h2,f_character,score,cif_path";
    for (const auto& k : extra_keys) out << "," << k;
    out << "\n";
    for (const auto& rec : records) {
      std::string cif_rel = rec.structure ? write_structures(path, rec) : "";
      out << rec.id << "," << chem::format_formula(rec.formula) << ","
          << format_double(rec.e_form) << "," << format_double(rec.energy_above_hull) << ","
          << format_double(rec.density) << "," << format_double(rec.band_gap) << ","
          << format_double(rec.w_h2) << ","
          << (rec.f_character ? format_double(*rec.f_character) : "") << ","
          << (rec.score ? format_double(*rec.score) : "") << "," << cif_rel;
      for (const auto& k : extra_keys) {
        auto it = rec.extra.find(k);
        out << "," << (it == rec.extra.end() ? "" : format_double(it->second));
      }
      out << "\n";
    }
    return;
  }

  for (const auto& rec : records) {
    json j;
    j["schema_version"] = k_schema_version;
    j["id"] = rec.id;
    j["formula"] = chem::format_formula(rec.formula);
    j["e_form"] = rec.e_form;
    j["energy_above_hull"] = rec.energy_above_hull;
    j["density"] = rec.density;
    j["band_gap"] = rec.band_gap;
    j["w_h2"] = rec.w_h2;
    if (rec.f_character) j["f_character"] = *rec.f_character;
    if (rec.score) j["score"] = *rec.score;
    if (rec.structure) j["cif_path"] = write_structures(path, rec);
    if (!rec.extra.empty()) j["extra"] = rec.extra;
    out << j.dump() << "\n";
  }
}

CriteriaResult apply_training_criteria(std::span<const MaterialRecord> records) {
  CriteriaResult result;
  for (const MaterialRecord& rec : records) {
    if (!rec.formula.contains_hydrogen()) {
      result.rejected.push_back({rec.id, "no hydrogen"});
    } else if (!rec.structure) {
      result.rejected.push_back({rec.id, "no structure"});
    } else if (cif::site_count(*rec.structure) > 20) {
      result.rejected.push_back({rec.id, "more than 20 atomic sites"});
    } else if (rec.energy_above_hull < 0.0 || rec.energy_above_hull > 0.08) {
      result.rejected.push_back({rec.id, "energy above hull outside [0, 0.08]"});
    } else if (rec.e_form > 0.0) {
      result.rejected.push_back({rec.id, "formation energy > 0"});
    } else {
      result.kept.push_back(rec);
    }
  }
  return result;
}

Split split(std::span<const MaterialRecord> records, const SplitSpec& spec) {
  if (records.size() < 3) throw ValidationError("split requires at least 3 records");
  if (!(spec.train > 0) || !(spec.val > 0) || !(spec.test > 0))
    throw ValidationError("split ratios must be positive");
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");

  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  // The 1e-9 slack absorbs binary-fraction representation (0.6 * 450 is
  // fractionally below 270 in doubles).
  auto alloc = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  std::size_t n_train = alloc(spec.train), n_val = alloc(spec.val), n_test = alloc(spec.test);
  n_train += n - (n_train + n_val + n_test);  // remainder to train

  Split out;
  std::size_t i = 0;
  for (; i < n_train; ++i) out.train.push_back(records[order[i]]);
  for (; i < n_train + n_val; ++i) out.val.push_back(records[order[i]]);
  for (; i < n; ++i) out.test.push_back(records[order[i]]);
  return out;
}

Discretized discretize(std::span<const double> values, int bins, BinStrategy strategy) {
  if (bins < 2) throw ValidationError("discretize requires bins >= 2");
  if (values.empty()) throw ValidationError("discretize requires a non-empty column");

  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;

  Discretized out;
  if (strategy == BinStrategy::equal_width) {
    if (hi == lo) {
      // Degenerate but legal: everything in bin 0.
      out.bins.assign(values.size(), 0);
      out.edges.assign(static_cast<std::size_t>(bins - 1), lo);
      return out;
    }
    double width = (hi - lo) / bins;
    for (int i = 1; i < bins; ++i) out.edges.push_back(lo + width * i);
  } else {
    if (hi == lo)
      throw ValidationError("equal-frequency discretization of a constant column");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    for (int i = 1; i < bins; ++i)
      out.edges.push_back(sorted[values.size() * static_cast<std::size_t>(i) / static_cast<std::size_t>(bins)]);
  }

  out.bins.reserve(values.size());
  for (double v : values) {
    auto it = std::upper_bound(out.edges.begin(), out.edges.end(), v);
    out.bins.push_back(static_cast<int>(it - out.edges.begin()));
  }
  return out;
}

}  // namespace hydride::dataset
