// Command-line driver for the hydride screening workflow. One subcommand per
// pipeline stage; every stage records its effective configuration next to its
// outputs and all randomness flows from the --seed flag.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hydride/causal.hpp"
#include "hydride/chem.hpp"
#include "hydride/dataset.hpp"
#include "hydride/errors.hpp"
#include "hydride/estimator.hpp"
#include "hydride/pcr.hpp"
#include "hydride/scoring.hpp"
#include "hydride/screen.hpp"
#include "hydride/synth.hpp"
#include "hydride/vae.hpp"
#include "hydride/version.hpp"

namespace fs = std::filesystem;
using namespace hydride;

namespace {

// ---- shared plumbing -------------------------------------------------------

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

fs::path resolve_out(std::string out, const std::string& command) {
  if (out.empty()) {
    const char* root = std::getenv("HYDRIDE_OUTPUT_ROOT");
    if (!root || !*root)
      throw MissingInputError("--out not given and HYDRIDE_OUTPUT_ROOT is unset");
    return fs::path(root) / command;
  }
  return fs::path(out);
}

void write_run_config(const fs::path& dir, const std::string& command,
                      const std::map<std::string, std::string>& values) {
  std::ofstream out(dir / "run_config.txt");
  out << "command=" << command << "\n";
  for (const auto& [key, value] : values) out << key << "=" << value << "\n";
  out << "version=" << k_version << "\n";
}

dataset::Format format_from_path(const fs::path& p, const std::string& flag) {
  if (flag == "csv") return dataset::Format::csv;
  if (flag == "jsonl") return dataset::Format::jsonl;
  return p.extension() == ".jsonl" ? dataset::Format::jsonl : dataset::Format::csv;
}

std::vector<dataset::MaterialRecord> load_or_die(const fs::path& path,
                                                 const std::string& format_flag,
                                                 bool strict = true) {
  auto report = dataset::load_records(path, format_from_path(path, format_flag),
                                      strict ? dataset::OnError::fail : dataset::OnError::skip);
  for (const auto& d : report.diagnostics) std::cerr << path.string() << ": " << d << "\n";
  if (report.records.empty())
    throw ValidationError("no usable records in " + path.string());
  return report.records;
}

double record_score(const dataset::MaterialRecord& rec, scoring::Variant variant) {
  if (rec.score) return *rec.score;
  return scoring::h_storage_score(rec.e_form, rec.w_h2, variant);
}

// Candidate CSV shared by generate, screen and accuracy.
const char* k_candidate_header =
    "id,formula,a,b,c,alpha,beta,gamma,predicted_score,e_form,w_h2,e_factor,score";

struct CandidateRow {
  std::string id;
  chem::Composition composition;
  cif::Lattice lattice;
  double predicted_score = 0, e_form = 0, w_h2 = 0, e_factor = 0, score = 0;
};

void write_candidates(const fs::path& file, const std::vector<CandidateRow>& rows) {
  std::ofstream out(file);
  out << k_candidate_header << "\n";
  for (const auto& r : rows)
    out << r.id << "," << chem::format_formula(r.composition) << "," << fmt(r.lattice.a)
        << "," << fmt(r.lattice.b) << "," << fmt(r.lattice.c) << "," << fmt(r.lattice.alpha)
        << "," << fmt(r.lattice.beta) << "," << fmt(r.lattice.gamma) << ","
        << fmt(r.predicted_score) << "," << fmt(r.e_form) << "," << fmt(r.w_h2) << ","
        << fmt(r.e_factor) << "," << fmt(r.score) << "\n";
}

std::vector<CandidateRow> read_candidates(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingInputError("cannot open candidate list: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty candidate file");
  std::vector<CandidateRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 13)
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": short row");
    try {
      CandidateRow r;
      r.id = f[0];
      r.composition = chem::parse_formula(f[1]);
      r.lattice = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                   std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
      r.predicted_score = std::stod(f[8]);
      r.e_form = std::stod(f[9]);
      r.w_h2 = std::stod(f[10]);
      r.e_factor = std::stod(f[11]);
      r.score = std::stod(f[12]);
      rows.push_back(std::move(r));
    } catch (const std::invalid_argument&) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    } catch (const std::out_of_range&) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": value out of range");
    }
  }
  return rows;
}

// ---- subcommand options ------------------------------------------------------

struct FixtureOpts {
  int rows = 450;
  std::uint64_t seed = 7;
  std::string out;
};

struct IngestOpts {
  std::string input, format = "auto", out;
  bool strict = false;
};

struct ScoreOpts {
  std::string input, format = "auto", variant = "modified", out;
  bool efactor_curve = false;
};

struct CausalOpts {
  std::string input, format = "auto", out, test = "auto", target = "score";
  double alpha = 0.05;
  int bins = 3;
  std::vector<std::string> exclude;
};

struct PcrOpts {
  std::string input, format = "auto", out, subsets, k_policy = "variance:0.95";
  std::uint64_t seed = 7;
  std::vector<double> ratios = {0.6, 0.2, 0.2};
};

struct TrainOpts {
  std::string input, format = "auto", out, score_variant = "original";
  std::uint64_t seed = 7;
  int epochs = 2000, batch = 32, latent = 8, hidden = 64, prop_hidden = 16;
  double lr = 0.04, momentum = 0.0, beta = 1.0, prop_weight = 2.0;
  std::vector<double> ratios = {0.6, 0.2, 0.2};
};

struct GenerateOpts {
  std::string checkpoint, train_records, format = "auto", out, estimator_table;
  int n = 1000, steps = 5000, knn_k = 5;
  double step_size = 1e-3;
  std::uint64_t seed = 7;
};

struct ScreenOpts {
  std::string candidates, out;
  bool strict_metal_cap = true, element_count_rule = false, metalloids_as_metals = false;
  int top = 100;
};

struct AccuracyOpts {
  std::string ranked, reference, format = "auto", out;
};

struct ReportOpts {
  std::string run, out;
};

// ---- subcommand bodies ---------------------------------------------------------

void cmd_fixture(const FixtureOpts& o) {
  fs::path dir = resolve_out(o.out, "fixture");
  fs::create_directories(dir);
  auto records = synth::hydride_dataset(o.rows, o.seed);
  dataset::save_records(dir / "records.csv", records, dataset::Format::csv);
  write_run_config(dir, "fixture",
                   {{"rows", std::to_string(o.rows)}, {"seed", std::to_string(o.seed)}});
  std::cout << "fixture: wrote " << records.size() << " records to " << dir << "\n";
}

void cmd_ingest(const IngestOpts& o) {
  fs::path dir = resolve_out(o.out, "ingest");
  fs::create_directories(dir);
  auto report = dataset::load_records(fs::path(o.input),
                                      format_from_path(o.input, o.format),
                                      o.strict ? dataset::OnError::fail : dataset::OnError::skip);
  if (report.records.empty()) throw ValidationError("no usable records in " + o.input);
  dataset::save_records(dir / "records.jsonl", report.records, dataset::Format::jsonl);
  std::ofstream diag(dir / "diagnostics.txt");
  for (const auto& d : report.diagnostics) diag << d << "\n";
  write_run_config(dir, "ingest",
                   {{"input", o.input},
                    {"strict", o.strict ? "true" : "false"},
                    {"records", std::to_string(report.records.size())},
                    {"skipped", std::to_string(report.diagnostics.size())}});
  std::cout << "ingest: " << report.records.size() << " records, "
            << report.diagnostics.size() << " skipped\n";
}

void cmd_score(const ScoreOpts& o) {
  fs::path dir = resolve_out(o.out, "score");
  fs::create_directories(dir);
  auto records = load_or_die(o.input, o.format);
  scoring::Variant variant =
      o.variant == "original" ? scoring::Variant::original : scoring::Variant::modified;

  std::ofstream out(dir / "scored.csv");
  out << "id,formula,e_form,w_h2,e_factor,score\n";
  for (const auto& rec : records) {
    double ef = scoring::e_factor(rec.e_form, variant);
    out << rec.id << "," << chem::format_formula(rec.formula) << "," << fmt(rec.e_form)
        << "," << fmt(rec.w_h2) << "," << fmt(ef) << "," << fmt(ef * rec.w_h2) << "\n";
  }

  if (o.efactor_curve) {
    std::ofstream curve(dir / "efactor_curve.csv");
    curve << "e_form,original,modified\n";
    for (int i = 0; i <= 2000; ++i) {
      double e = -1.5 + i * 0.001;
      curve << fmt(e) << "," << fmt(scoring::e_factor_original(e)) << ","
            << fmt(scoring::e_factor_modified(e)) << "\n";
    }
  }
  write_run_config(dir, "score", {{"input", o.input}, {"variant", o.variant}});
  std::cout << "score: wrote " << records.size() << " rows (" << o.variant << ")\n";
}

causal::Table table_from_records(const std::vector<dataset::MaterialRecord>& records,
                                 const std::vector<std::string>& exclude) {
  auto excluded = [&exclude](const std::string& name) {
    return std::find(exclude.begin(), exclude.end(), name) != exclude.end();
  };
  causal::Table t;
  std::vector<std::string> names = {"score", "w_h2", "e_form", "density", "band_gap"};
  bool has_fchar = true;
  for (const auto& rec : records) has_fchar &= rec.f_character.has_value();
  if (has_fchar) names.push_back("f_character");
  std::vector<std::string> extras;
  if (!records.empty())
    for (const auto& [k, v] : records.front().extra) extras.push_back(k);
  for (const auto& e : extras) names.push_back(e);
  names.erase(std::remove_if(names.begin(), names.end(), excluded), names.end());

  t.names = names;
  t.values.resize(static_cast<Eigen::Index>(records.size()),
                  static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    for (std::size_t j = 0; j < names.size(); ++j) {
      const std::string& name = names[j];
      double v;
      if (name == "score") v = record_score(rec, scoring::Variant::original);
      else if (name == "w_h2") v = rec.w_h2;
      else if (name == "e_form") v = rec.e_form;
      else if (name == "density") v = rec.density;
      else if (name == "band_gap") v = rec.band_gap;
      else if (name == "f_character") v = *rec.f_character;
      else v = rec.extra.at(name);
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return t;
}

void cmd_causal(const CausalOpts& o) {
  fs::path dir = resolve_out(o.out, "causal");
  fs::create_directories(dir);
  auto records = load_or_die(o.input, o.format);
  causal::Table t = table_from_records(records, o.exclude);

  causal::CiTest test;
  causal::Table analysis = t;
  if (o.test == "fisherz") {
    test = causal::CiTest::fisher_z;
  } else {
    // the default path: discretize continuous columns, then chi-square
    test = causal::CiTest::chi_square;
    analysis = causal::discretize_continuous(t, o.bins);
  }

  causal::Pag pag = causal::fci(analysis, o.alpha, test);
  std::ofstream pag_out(dir / "pag.txt");
  pag_out << causal::write_pag(pag);

  std::ofstream nbr(dir / "neighborhood.csv");
  nbr << "neighbor,mark_at_target,mark_at_neighbor,edge\n";
  if (pag.node_index(o.target) < 0)
    throw ValidationError("target column '" + o.target + "' not in the analysis table");
  for (const auto& info : causal::neighborhood(pag, o.target)) {
    std::string edge = std::string(1, causal::mark_char(info.at_target)) + "-" +
                       causal::mark_char(info.at_neighbor);
    nbr << info.name << "," << causal::mark_char(info.at_target) << ","
        << causal::mark_char(info.at_neighbor) << "," << edge << "\n";
  }
  std::ofstream warn(dir / "warnings.txt");
  for (const auto& w : pag.warnings) warn << w << "\n";

  write_run_config(dir, "causal",
                   {{"input", o.input},
                    {"alpha", fmt(o.alpha)},
                    {"test", o.test},
                    {"bins", std::to_string(o.bins)},
                    {"target", o.target}});
  std::cout << "causal: " << pag.edges().size() << " edges over " << t.names.size()
            << " variables\n";
}

void cmd_pcr(const PcrOpts& o) {
  fs::path dir = resolve_out(o.out, "pcr");
  fs::create_directories(dir);
  auto records = load_or_die(o.input, o.format);
  for (auto& rec : records)
    if (!rec.score) rec.score = record_score(rec, scoring::Variant::original);

  std::vector<std::vector<std::string>> subsets;
  if (o.subsets.empty()) {
    bool has_fchar = true;
    for (const auto& rec : records) has_fchar &= rec.f_character.has_value();
    std::vector<std::string> crystal =
        has_fchar ? std::vector<std::string>{"density", "f_character"}
                  : std::vector<std::string>{"density"};
    auto with = [&crystal](std::vector<std::string> base, bool add_crystal) {
      if (add_crystal) base.insert(base.end(), crystal.begin(), crystal.end());
      return base;
    };
    subsets = {with({"w_h2"}, true),
               {"e_form", "density"},
               {"e_form", "density", "w_h2"},
               {"e_form", "density", "band_gap"},
               with({"e_form", "density", "band_gap"}, true),
               with({"e_form", "density"}, true),
               with({"e_form", "density", "w_h2", "band_gap"}, true)};
  } else {
    std::stringstream groups(o.subsets);
    std::string group;
    while (std::getline(groups, group, ';')) {
      std::vector<std::string> names;
      std::stringstream ss(group);
      std::string name;
      while (std::getline(ss, name, ',')) names.push_back(name);
      subsets.push_back(names);
    }
  }

  pcr::KPolicy policy;
  if (o.k_policy.rfind("fixed:", 0) == 0)
    policy = pcr::KPolicy::fixed(std::stoi(o.k_policy.substr(6)));
  else if (o.k_policy.rfind("variance:", 0) == 0)
    policy = pcr::KPolicy::variance(std::stod(o.k_policy.substr(9)));
  else
    throw ValidationError("k-policy must be fixed:<k> or variance:<fraction>");

  dataset::SplitSpec split_spec{o.ratios.at(0), o.ratios.at(1), o.ratios.at(2), o.seed};
  auto results = pcr::subset_experiment(records, subsets, split_spec, policy);

  std::vector<std::string> all_features;
  for (const auto& r : results)
    for (const auto& f : r.subset)
      if (std::find(all_features.begin(), all_features.end(), f) == all_features.end())
        all_features.push_back(f);

  std::ofstream out(dir / "pcr_results.csv");
  for (const auto& f : all_features) out << f << ",";
  out << "k,train_mse,test_mse\n";
  for (const auto& r : results) {
    for (const auto& f : all_features)
      out << (std::find(r.subset.begin(), r.subset.end(), f) != r.subset.end() ? "X" : "")
          << ",";
    out << r.k << "," << fmt(r.train_mse) << "," << fmt(r.test_mse) << "\n";
  }
  write_run_config(dir, "pcr",
                   {{"input", o.input},
                    {"seed", std::to_string(o.seed)},
                    {"k_policy", o.k_policy},
                    {"subsets", std::to_string(results.size())}});
  std::cout << "pcr: evaluated " << results.size() << " feature subsets\n";
}

void cmd_train(const TrainOpts& o) {
  fs::path dir = resolve_out(o.out, "train");
  fs::create_directories(dir);
  auto records = load_or_die(o.input, o.format);

  auto criteria = dataset::apply_training_criteria(records);
  std::ofstream rej(dir / "rejections.txt");
  for (const auto& r : criteria.rejected) rej << r.id << ": " << r.reason << "\n";
  if (criteria.kept.size() < 3)
    throw ValidationError("fewer than 3 records satisfy the training criteria");

  scoring::Variant variant = o.score_variant == "modified" ? scoring::Variant::modified
                                                           : scoring::Variant::original;
  dataset::SplitSpec split_spec{o.ratios.at(0), o.ratios.at(1), o.ratios.at(2), o.seed};
  auto parts = dataset::split(criteria.kept, split_spec);

  vae::Vocab vocab = vae::Vocab::from_records(criteria.kept);
  Eigen::VectorXd scale = vae::fit_feature_scale(criteria.kept, vocab);

  auto to_matrix = [&vocab, &scale, variant](const std::vector<dataset::MaterialRecord>& recs,
                                             Eigen::MatrixXd& x, Eigen::VectorXd& s) {
    x.resize(vocab.size() + 6, static_cast<Eigen::Index>(recs.size()));
    s.resize(static_cast<Eigen::Index>(recs.size()));
    for (std::size_t i = 0; i < recs.size(); ++i) {
      x.col(static_cast<Eigen::Index>(i)) = vae::featurize(recs[i], vocab, scale).values;
      s(static_cast<Eigen::Index>(i)) = record_score(recs[i], variant);
    }
  };
  Eigen::MatrixXd train_x, val_x;
  Eigen::VectorXd train_s, val_s;
  to_matrix(parts.train, train_x, train_s);
  to_matrix(parts.val, val_x, val_s);

  vae::VaeConfig cfg;
  cfg.input_dim = vocab.size() + 6;
  cfg.count_dims = vocab.size();
  cfg.hidden = o.hidden;
  cfg.latent = o.latent;
  cfg.property_hidden = o.prop_hidden;
  cfg.beta = o.beta;
  cfg.prop_weight = o.prop_weight;
  vae::VaeModel model = vae::VaeModel::init(cfg, o.seed);
  model.vocab = vocab;
  model.feature_scale = scale;

  vae::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch;
  tc.learning_rate = o.lr;
  tc.momentum = o.momentum;
  vae::TrainResult result = vae::train(model, train_x, train_s, val_x, val_s, tc, o.seed);
  if (result.aborted) throw DivergenceError("training loss became non-finite");

  vae::save_checkpoint(model, dir / "checkpoint.json");
  std::ofstream hist(dir / "loss_history.csv");
  hist << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < result.history.size(); ++i)
    hist << i << "," << fmt(result.history[i].first) << "," << fmt(result.history[i].second)
         << "\n";
  std::ofstream split_out(dir / "split_summary.txt");
  split_out << "kept=" << criteria.kept.size() << "\nrejected=" << criteria.rejected.size()
            << "\ntrain=" << parts.train.size() << "\nval=" << parts.val.size()
            << "\ntest=" << parts.test.size() << "\nbest_epoch=" << result.best_epoch << "\n";

  write_run_config(dir, "train",
                   {{"input", o.input},
                    {"seed", std::to_string(o.seed)},
                    {"epochs", std::to_string(o.epochs)},
                    {"batch", std::to_string(o.batch)},
                    {"lr", fmt(o.lr)},
                    {"momentum", fmt(o.momentum)},
                    {"beta", fmt(o.beta)},
                    {"prop_weight", fmt(o.prop_weight)},
                    {"latent", std::to_string(o.latent)},
                    {"hidden", std::to_string(o.hidden)},
                    {"score_variant", o.score_variant}});
  std::cout << "train: " << parts.train.size() << "/" << parts.val.size() << "/"
            << parts.test.size() << " split, best epoch " << result.best_epoch << "\n";
}

void cmd_generate(const GenerateOpts& o) {
  fs::path dir = resolve_out(o.out, "generate");
  fs::create_directories(dir);
  vae::VaeModel model = vae::load_checkpoint(o.checkpoint);
  auto records = load_or_die(o.train_records, o.format);
  auto criteria = dataset::apply_training_criteria(records);
  const auto& training = criteria.kept.empty() ? records : criteria.kept;

  std::shared_ptr<const vae::EnergyEstimator> estimator =
      vae::fit_knn_estimator(training, model.vocab, model.feature_scale, o.knn_k);
  if (!o.estimator_table.empty()) {
    std::ifstream table_in(o.estimator_table);
    if (!table_in)
      throw MissingInputError("cannot open estimator table: " + o.estimator_table);
    std::map<std::string, double> table;
    std::string line;
    std::getline(table_in, line);  // header formula,e_form
    while (std::getline(table_in, line)) {
      if (line.empty()) continue;
      auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("estimator table: bad row " + line);
      table[chem::format_formula(chem::parse_formula(line.substr(0, comma)))] =
          std::stod(line.substr(comma + 1));
    }
    estimator = std::make_shared<vae::TableEnergyEstimator>(std::move(table), model.vocab,
                                                            model.feature_scale, estimator);
  }

  vae::GenerateConfig gc;
  gc.latent.steps = o.steps;
  gc.latent.step_size = o.step_size;
  vae::GenerationResult gen = vae::generate(model, o.n, o.seed, gc);

  std::vector<CandidateRow> rows;
  fs::create_directories(dir / "cifs");
  for (const auto& cand : gen.candidates) {
    CandidateRow r;
    r.id = cand.id;
    r.composition = cand.composition;
    r.lattice = cand.lattice;
    r.predicted_score = cand.predicted_score;
    r.e_form = estimator->predict(cand.vector);
    r.w_h2 = chem::hydrogen_weight_fraction(cand.composition);
    r.e_factor = scoring::e_factor_modified(r.e_form);
    r.score = r.e_factor * r.w_h2;
    rows.push_back(r);

    cif::Structure st =
        vae::template_structure(cand, training, model.vocab, model.feature_scale);
    std::ofstream cif_out(dir / "cifs" / (cand.id + ".cif"));
    cif_out << cif::write_cif(st);
  }
  write_candidates(dir / "candidates.csv", rows);
  std::ofstream log(dir / "generation_log.txt");
  log << "requested=" << o.n << "\nproduced=" << gen.candidates.size()
      << "\ndiscarded=" << gen.discarded << "\nestimator=" << estimator->id() << "\n";

  write_run_config(dir, "generate",
                   {{"checkpoint", o.checkpoint},
                    {"train_records", o.train_records},
                    {"n", std::to_string(o.n)},
                    {"seed", std::to_string(o.seed)},
                    {"steps", std::to_string(o.steps)},
                    {"step_size", fmt(o.step_size)},
                    {"knn_k", std::to_string(o.knn_k)},
                    {"estimator", estimator->id()}});
  std::cout << "generate: " << gen.candidates.size() << " candidates ("
            << gen.discarded << " discarded decodes)\n";
}

void cmd_screen(const ScreenOpts& o) {
  fs::path dir = resolve_out(o.out, "screen");
  fs::create_directories(dir);
  auto rows = read_candidates(o.candidates);

  screen::FilterConfig cfg;
  cfg.strict_metal_cap = o.strict_metal_cap;
  cfg.element_count_rule = o.element_count_rule;
  cfg.metalloids_as_metals = o.metalloids_as_metals;

  std::vector<screen::Candidate> candidates;
  for (const auto& r : rows) {
    screen::Candidate c;
    c.id = r.id;
    c.composition = r.composition;
    c.score = r.score;
    c.w_h2 = r.w_h2;
    c.e_form = r.e_form;
    c.predicted_score = r.predicted_score;
    candidates.push_back(std::move(c));
  }
  auto verdicts = screen::apply_filters(candidates, cfg);

  std::ofstream v_out(dir / "verdicts.csv");
  v_out << "id,formula,kept,failed_rule,detail\n";
  std::vector<screen::Candidate> kept;
  std::map<std::string, const CandidateRow*> row_by_id;
  for (const auto& r : rows) row_by_id[r.id] = &r;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& verdict = verdicts[i];
    v_out << verdict.id << "," << chem::format_formula(candidates[i].composition) << ","
          << (verdict.kept ? "true" : "false") << "," << verdict.failed_rule.value_or("")
          << ",\"" << verdict.detail << "\"\n";
    if (verdict.kept) kept.push_back(candidates[i]);
  }

  auto ranked = screen::rank(kept);
  auto top = screen::top_k(ranked, static_cast<std::size_t>(o.top));
  auto rows_for = [&row_by_id](const std::vector<screen::Candidate>& list) {
    std::vector<CandidateRow> out;
    for (const auto& c : list) out.push_back(*row_by_id.at(c.id));
    return out;
  };
  write_candidates(dir / "ranked.csv", rows_for(ranked));
  write_candidates(dir / ("top" + std::to_string(o.top) + ".csv"), rows_for(top));

  write_run_config(dir, "screen",
                   {{"candidates", o.candidates},
                    {"strict_metal_cap", o.strict_metal_cap ? "true" : "false"},
                    {"element_count_rule", o.element_count_rule ? "true" : "false"},
                    {"metalloids_as_metals", o.metalloids_as_metals ? "true" : "false"},
                    {"top", std::to_string(o.top)}});
  std::cout << "screen: kept " << kept.size() << " of " << candidates.size()
            << ", top " << top.size() << " ranked\n";
}

void cmd_accuracy(const AccuracyOpts& o) {
  fs::path dir = resolve_out(o.out, "accuracy");
  fs::create_directories(dir);
  auto rows = read_candidates(o.ranked);
  auto reference = load_or_die(o.reference, o.format);

  std::vector<screen::MatchResult> matches;
  std::ofstream m_out(dir / "matches.csv");
  m_out << "id,formula,match_class,matched_id\n";
  for (const auto& r : rows) {
    auto m = screen::match_classify(r.composition, reference);
    matches.push_back(m);
    m_out << r.id << "," << chem::format_formula(r.composition) << ","
          << screen::match_class_name(m.cls) << "," << m.matched_id << "\n";
  }

  auto curves = screen::cumulative_accuracy(matches);
  std::ofstream c_out(dir / "accuracy_curves.csv");
  c_out << "n,same_formula_rate,same_ratio_rate,same_elements_rate\n";
  for (std::size_t i = 0; i < curves.n.size(); ++i)
    c_out << curves.n[i] << "," << fmt(curves.same_formula[i]) << ","
          << fmt(curves.same_ratio[i]) << "," << fmt(curves.same_elements[i]) << "\n";

  write_run_config(dir, "accuracy", {{"ranked", o.ranked}, {"reference", o.reference}});
  std::cout << "accuracy: classified " << matches.size() << " candidates\n";
}

void cmd_report(const ReportOpts& o) {
  fs::path run(o.run);
  if (!fs::exists(run)) throw MissingInputError("run directory not found: " + o.run);
  fs::path out_path = o.out.empty() ? run / "run_report.txt" : fs::path(o.out);

  std::ofstream out(out_path);
  out << "run report (tool version " << k_version << ")\n";
  out << "root: " << run.string() << "\n\n";

  auto count_lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    long n = -1;  // exclude header
    while (std::getline(in, line)) ++n;
    return n;
  };

  std::vector<std::pair<std::string, std::string>> stages = {
      {"fixture", "records.csv"},   {"ingest", "records.jsonl"},
      {"score", "scored.csv"},      {"causal", "pag.txt"},
      {"pcr", "pcr_results.csv"},   {"train", "loss_history.csv"},
      {"generate", "candidates.csv"}, {"screen", "ranked.csv"},
      {"accuracy", "accuracy_curves.csv"}};
  for (const auto& [stage, file] : stages) {
    fs::path p = run / stage / file;
    if (!fs::exists(p)) {
      out << stage << ": (absent)\n";
      continue;
    }
    out << stage << ": " << file << " with " << count_lines(p) << " data lines\n";
    fs::path config = run / stage / "run_config.txt";
    if (fs::exists(config)) {
      std::ifstream cfg_in(config);
      std::string line;
      while (std::getline(cfg_in, line)) out << "    " << line << "\n";
    }
  }
  std::cout << "report: wrote " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metal-hydride screening workflow"};
  app.set_config("--config");
  app.require_subcommand(1);

  FixtureOpts fixture;
  auto* c_fix = app.add_subcommand("fixture", "write a synthetic demo dataset");
  c_fix->add_option("--rows", fixture.rows, "record count");
  c_fix->add_option("--seed", fixture.seed, "generator seed");
  c_fix->add_option("--out", fixture.out, "output directory");

  IngestOpts ingest;
  auto* c_ing = app.add_subcommand("ingest", "validate and normalize a dataset");
  c_ing->add_option("--input", ingest.input, "records file")->required();
  c_ing->add_option("--format", ingest.format, "csv|jsonl|auto");
  c_ing->add_flag("--strict", ingest.strict, "fail on the first bad row");
  c_ing->add_option("--out", ingest.out, "output directory");

  ScoreOpts score;
  auto* c_sco = app.add_subcommand("score", "compute storage scores");
  c_sco->add_option("--input", score.input, "records file")->required();
  c_sco->add_option("--format", score.format, "csv|jsonl|auto");
  c_sco->add_option("--variant", score.variant, "original|modified")
      ->check(CLI::IsMember({"original", "modified"}));
  c_sco->add_flag("--efactor-curve", score.efactor_curve, "emit the weight-factor curve");
  c_sco->add_option("--out", score.out, "output directory");

  CausalOpts causal_opts;
  auto* c_cau = app.add_subcommand("causal", "run causal discovery over the database");
  c_cau->add_option("--input", causal_opts.input, "records file")->required();
  c_cau->add_option("--format", causal_opts.format, "csv|jsonl|auto");
  c_cau->add_option("--alpha", causal_opts.alpha, "significance level");
  c_cau->add_option("--test", causal_opts.test, "auto|chi2|fisherz")
      ->check(CLI::IsMember({"auto", "chi2", "fisherz"}));
  c_cau->add_option("--bins", causal_opts.bins, "discretization bins");
  c_cau->add_option("--target", causal_opts.target, "neighborhood target column");
  c_cau->add_option("--exclude", causal_opts.exclude, "columns to drop")->delimiter(',');
  c_cau->add_option("--out", causal_opts.out, "output directory");

  PcrOpts pcr_opts;
  auto* c_pcr = app.add_subcommand("pcr", "principal component regression experiment");
  c_pcr->add_option("--input", pcr_opts.input, "records file")->required();
  c_pcr->add_option("--format", pcr_opts.format, "csv|jsonl|auto");
  c_pcr->add_option("--seed", pcr_opts.seed, "split seed");
  c_pcr->add_option("--ratios", pcr_opts.ratios, "train,val,test fractions")
      ->delimiter(',')->expected(3);
  c_pcr->add_option("--subsets", pcr_opts.subsets,
                    "semicolon-separated feature subsets (comma-separated names)");
  c_pcr->add_option("--k-policy", pcr_opts.k_policy, "fixed:<k> or variance:<fraction>");
  c_pcr->add_option("--out", pcr_opts.out, "output directory");

  TrainOpts train_opts;
  auto* c_tra = app.add_subcommand("train", "train the generative model");
  c_tra->add_option("--input", train_opts.input, "records file")->required();
  c_tra->add_option("--format", train_opts.format, "csv|jsonl|auto");
  c_tra->add_option("--seed", train_opts.seed, "training seed");
  c_tra->add_option("--epochs", train_opts.epochs, "training epochs");
  c_tra->add_option("--batch", train_opts.batch, "minibatch size");
  c_tra->add_option("--lr", train_opts.lr, "learning rate");
  c_tra->add_option("--momentum", train_opts.momentum, "momentum coefficient");
  c_tra->add_option("--beta", train_opts.beta, "KL weight");
  c_tra->add_option("--prop-weight", train_opts.prop_weight, "score-head weight");
  c_tra->add_option("--latent", train_opts.latent, "latent dimension");
  c_tra->add_option("--hidden", train_opts.hidden, "hidden width");
  c_tra->add_option("--prop-hidden", train_opts.prop_hidden, "score-head width");
  c_tra->add_option("--ratios", train_opts.ratios, "train,val,test fractions")
      ->delimiter(',')->expected(3);
  c_tra->add_option("--score-variant", train_opts.score_variant, "original|modified")
      ->check(CLI::IsMember({"original", "modified"}));
  c_tra->add_option("--out", train_opts.out, "output directory");

  GenerateOpts gen_opts;
  auto* c_gen = app.add_subcommand("generate", "sample and refine candidates");
  c_gen->add_option("--checkpoint", gen_opts.checkpoint, "model checkpoint")->required();
  c_gen->add_option("--train-records", gen_opts.train_records,
                    "training records for the estimator and templates")->required();
  c_gen->add_option("--format", gen_opts.format, "csv|jsonl|auto");
  c_gen->add_option("--n", gen_opts.n, "candidate count");
  c_gen->add_option("--seed", gen_opts.seed, "generation seed");
  c_gen->add_option("--steps", gen_opts.steps, "latent optimization steps");
  c_gen->add_option("--step-size", gen_opts.step_size, "latent optimization step size");
  c_gen->add_option("--knn-k", gen_opts.knn_k, "estimator neighbor count");
  c_gen->add_option("--estimator-table", gen_opts.estimator_table,
                    "formula,e_form CSV of external energies");
  c_gen->add_option("--out", gen_opts.out, "output directory");

  ScreenOpts screen_opts;
  auto* c_scr = app.add_subcommand("screen", "filter and rank candidates");
  c_scr->add_option("--candidates", screen_opts.candidates, "candidates.csv")->required();
  c_scr->add_flag("--strict-metal-cap,!--no-strict-metal-cap", screen_opts.strict_metal_cap,
                  "cap hydrogen at twice the metal atoms");
  c_scr->add_flag("--element-count-rule", screen_opts.element_count_rule,
                  "require 3 or 4 distinct non-hydrogen elements");
  c_scr->add_flag("--metalloids-as-metals", screen_opts.metalloids_as_metals,
                  "count metalloids as metals");
  c_scr->add_option("--top", screen_opts.top, "ranked prefix size");
  c_scr->add_option("--out", screen_opts.out, "output directory");

  AccuracyOpts acc_opts;
  auto* c_acc = app.add_subcommand("accuracy", "match candidates against a reference db");
  c_acc->add_option("--ranked", acc_opts.ranked, "ranked candidate CSV")->required();
  c_acc->add_option("--reference", acc_opts.reference, "reference records")->required();
  c_acc->add_option("--format", acc_opts.format, "csv|jsonl|auto");
  c_acc->add_option("--out", acc_opts.out, "output directory");

  ReportOpts rep_opts;
  auto* c_rep = app.add_subcommand("report", "consolidate a run directory");
  c_rep->add_option("--run", rep_opts.run, "run root directory")->required();
  c_rep->add_option("--out", rep_opts.out, "report file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (c_fix->parsed()) cmd_fixture(fixture);
    if (c_ing->parsed()) cmd_ingest(ingest);
    if (c_sco->parsed()) cmd_score(score);
    if (c_cau->parsed()) cmd_causal(causal_opts);
    if (c_pcr->parsed()) cmd_pcr(pcr_opts);
    if (c_tra->parsed()) cmd_train(train_opts);
    if (c_gen->parsed()) cmd_generate(gen_opts);
    if (c_scr->parsed()) cmd_screen(screen_opts);
    if (c_acc->parsed()) cmd_accuracy(acc_opts);
    if (c_rep->parsed()) cmd_report(rep_opts);
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
