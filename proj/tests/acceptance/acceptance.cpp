// Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
// Exercises the library directly and drives the installed CLI binary for the
// end-to-end and determinism checks.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hydride/causal.hpp"
#include "hydride/chem.hpp"
#include "hydride/dataset.hpp"
#include "hydride/rng.hpp"
#include "hydride/pcr.hpp"
#include "hydride/scoring.hpp"
#include "hydride/screen.hpp"
#include "hydride/synth.hpp"
#include "hydride/vae.hpp"

namespace fs = std::filesystem;
using namespace hydride;

namespace {

#ifndef ACCEPT_CLI_PATH
#define ACCEPT_CLI_PATH "hydride"
#endif
#ifndef ACCEPT_DATA_DIR
#define ACCEPT_DATA_DIR "."
#endif

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(ACCEPT_CLI_PATH) + " " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_root() {
  fs::path dir = fs::temp_directory_path() / "hydride_acceptance";
  return dir;
}

// ---- criterion 1: score reproduction -----------------------------------------

void criterion_1() {
  struct Row {
    const char* formula;
    double e_form;
    double expected;  // reported to 3 decimals
  };
  const std::vector<Row> rows = {
      {"Li3B3H6", 0.057, 0.062}, {"Li1Al3H6", 0.019, 0.043}, {"Ti1H2", -0.426, 0.040},
      {"Ti2H4", -0.401, 0.040},  {"K2Al3H6", -0.159, 0.032}, {"Ti6H8", -0.387, 0.027},
      {"Ti3H4", -0.322, 0.026},  {"Ti5H6", -0.361, 0.024},   {"Ca2Al1Si2H3", -0.404, 0.018},
      {"Ti4Ni1H4", -0.390, 0.016}};

  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    double w = chem::hydrogen_weight_fraction(chem::parse_formula(row.formula));
    double s = scoring::h_storage_score(row.e_form, w, scoring::Variant::modified);
    if (std::abs(s - row.expected) > 0.001) {
      ok = false;
      detail = std::string(row.formula) + " -> " + std::to_string(s);
      break;
    }
  }

  // same numbers through the CLI score command
  fs::path dir = scratch_root() / "c1";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string data = std::string(ACCEPT_DATA_DIR) + "/table2_records.csv";
  bool cli_ok = run_cli("score --input " + data + " --variant modified --out " +
                        (dir / "score").string()) == 0;
  if (cli_ok) {
    std::ifstream in(dir / "score" / "scored.csv");
    std::string line;
    std::getline(in, line);  // header
    std::size_t i = 0;
    while (std::getline(in, line) && i < rows.size()) {
      double score = std::stod(line.substr(line.find_last_of(',') + 1));
      if (std::abs(score - rows[i].expected) > 0.001) {
        cli_ok = false;
        detail = "cli row " + std::to_string(i);
        break;
      }
      ++i;
    }
    cli_ok = cli_ok && i == rows.size();
  }
  report(1, ok && cli_ok, "modified-variant scores match the reference column to 0.001",
         detail);
}

// ---- criterion 2: weight-factor boundary behavior ------------------------------

void criterion_2() {
  bool exact = scoring::e_factor_original(-0.5) == 1.0 &&
               scoring::e_factor_modified(-0.5) == 1.0 &&
               scoring::e_factor_original(-1.0) == 0.0 &&
               scoring::e_factor_original(0.0) == 0.0 &&
               scoring::e_factor_modified(-1.2) == 0.0 &&
               scoring::e_factor_modified(0.2) == 0.0;
  bool dominated = true;
  for (int i = 0; i <= 10000 && dominated; ++i) {
    double e = -1.0 + i * (1.0 / 10000.0);
    dominated = scoring::e_factor_modified(e) >= scoring::e_factor_original(e);
  }
  report(2, exact && dominated,
         "weight factors hit 1 at -0.5 eV, 0 at their edges, modified >= original on "
         "[-1, 0]",
         exact ? (dominated ? "" : "domination grid failed") : "boundary values not exact");
}

// ---- criterion 3: table error statistics ----------------------------------------

void criterion_3() {
  const std::vector<std::pair<double, double>> candidate_pairs = {
      {0.057, -0.189},  {0.019, 0.049},   {-0.426, -0.466}, {-0.401, -0.465},
      {-0.159, 0.080},  {-0.387, -0.315}, {-0.322, -0.171}, {-0.361, -0.350},
      {-0.404, -0.243}, {-0.390, -0.372}};
  const std::vector<std::pair<double, double>> matched_pairs = {
      {0.6603, -0.0813},  {-0.4334, -0.4598}, {-0.5353, -0.5414}, {0.0574, -0.1888},
      {-0.4264, -0.4479}, {-0.2306, -0.3351}, {-0.2727, -0.2278}, {-0.4006, -0.4652},
      {-0.3039, -0.3099}, {-0.4096, -0.3288}};
  auto cand = scoring::error_stats(candidate_pairs);
  auto matched = scoring::error_stats(matched_pairs);
  bool ok = std::abs(cand.mse - 0.018) <= 0.0005 && std::abs(matched.mse - 0.064) <= 0.001;
  std::ostringstream detail;
  detail << "mse " << cand.mse << " / " << matched.mse << "; recomputed MAEs " << cand.mae
         << " / " << matched.mae
         << " differ from the reported 0.157 / 0.0775 and are not reproducible from the "
            "table columns";
  report(3, ok, "table error statistics reproduce MSE 0.018 and 0.064", detail.str());
}

// ---- criterion 4: split protocol -------------------------------------------------

void criterion_4() {
  auto records = synth::hydride_dataset(450, 7);
  auto parts = dataset::split(records, {0.6, 0.2, 0.2, 7});
  bool sizes = parts.train.size() == 270 && parts.val.size() == 90 && parts.test.size() == 90;

  bool partition = true;
  for (std::uint64_t seed = 0; seed < 100 && partition; ++seed) {
    auto p = dataset::split(records, {0.6, 0.2, 0.2, seed});
    std::set<std::string> ids;
    for (const auto& r : p.train) ids.insert(r.id);
    for (const auto& r : p.val) ids.insert(r.id);
    for (const auto& r : p.test) ids.insert(r.id);
    partition = ids.size() == 450 && p.train.size() == 270 && p.val.size() == 90 &&
                p.test.size() == 90;
  }
  report(4, sizes && partition, "60:20:20 split of 450 records gives (270, 90, 90)",
         sizes ? (partition ? "" : "partition property failed") : "sizes wrong");
}

// ---- criterion 5: causal discovery ------------------------------------------------

void criterion_5() {
  Rng master(7);

  // (a) skeleton recovery on random linear-Gaussian SEMs. Coefficient
  // magnitudes start at 0.7 to keep the benchmark clear of the near-
  // cancellation regime where exact recovery is information-limited.
  int skeleton_hits = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng = master.split(static_cast<std::uint64_t>(rep));
    int nodes = rng.uniform_int(3, 4);
    synth::Sem sem = synth::random_sem(nodes, 0.5, rng, 0.7, 1.5);
    auto t = synth::sample_sem(sem, 10000, rng);
    causal::Pag pag = causal::fci(t, 0.05, causal::CiTest::fisher_z);
    bool match = true;
    for (int i = 0; i < nodes && match; ++i)
      for (int j = i + 1; j < nodes && match; ++j) {
        bool truth = sem.edge(i, j);
        match = pag.adjacent(i, j) == truth;
      }
    if (match) ++skeleton_hits;
  }

  // (b) collider orientation
  int collider_hits = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng rng = master.split(1000 + static_cast<std::uint64_t>(rep));
    auto t = synth::sample_sem(synth::collider_sem(), 10000, rng);
    causal::Pag pag = causal::fci(t, 0.05, causal::CiTest::fisher_z);
    if (pag.adjacent(0, 2) && pag.adjacent(1, 2) && !pag.adjacent(0, 1) &&
        pag.mark(2, 0) == causal::Mark::arrow && pag.mark(2, 1) == causal::Mark::arrow)
      ++collider_hits;
  }

  // (c, d) empirical type-I error of both tests at alpha = 0.05
  int chi_rejections = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Rng rng = master.split(2000 + static_cast<std::uint64_t>(rep));
    causal::Table t;
    t.names = {"x", "y"};
    t.values.resize(2000, 2);
    for (int i = 0; i < 2000; ++i) {
      t.values(i, 0) = rng.uniform_int(0, 2);
      t.values(i, 1) = rng.uniform_int(0, 2);
    }
    if (!causal::chi_square_ci(t, 0, 1, {}, 0.05).independent) ++chi_rejections;
  }
  int fisher_rejections = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Rng rng = master.split(3000 + static_cast<std::uint64_t>(rep));
    causal::Table t;
    t.names = {"x", "y"};
    t.values.resize(1000, 2);
    for (int i = 0; i < 1000; ++i) {
      t.values(i, 0) = rng.normal();
      t.values(i, 1) = rng.normal();
    }
    if (!causal::fisher_z_ci(t, 0, 1, {}, 0.05).independent) ++fisher_rejections;
  }
  double chi_rate = chi_rejections / 1000.0;
  double fisher_rate = fisher_rejections / 1000.0;

  bool ok = skeleton_hits >= 90 && collider_hits >= 90 && chi_rate >= 0.03 &&
            chi_rate <= 0.07 && fisher_rate >= 0.03 && fisher_rate <= 0.07;
  std::ostringstream detail;
  detail << "skeleton " << skeleton_hits << "/100, collider " << collider_hits
         << "/100, type-I chi2 " << chi_rate << ", fisher " << fisher_rate;
  report(5, ok, "FCI recovers structure and both CI tests hold their level", detail.str());
}

// ---- criterion 6: PCR ordering ------------------------------------------------------

void criterion_6() {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto records = synth::hydride_dataset(500, 100 + seed);
    // score = e_factor(e_form) * w_h2 + noise with R^2 near 0.9
    std::vector<double> signal;
    for (const auto& rec : records)
      signal.push_back(scoring::h_storage_score(rec.e_form, rec.w_h2,
                                                scoring::Variant::modified));
    double mean = 0, var = 0;
    for (double s : signal) mean += s;
    mean /= static_cast<double>(signal.size());
    for (double s : signal) var += (s - mean) * (s - mean);
    var /= static_cast<double>(signal.size());
    double sigma = std::sqrt(var / 9.0);

    Rng rng(500 + seed);
    for (std::size_t i = 0; i < records.size(); ++i)
      records[i].score = signal[i] + sigma * rng.normal();

    std::vector<std::vector<std::string>> subsets = {{"e_form", "density", "w_h2"},
                                                     {"e_form", "density"}};
    auto results = pcr::subset_experiment(records, subsets, {0.6, 0.2, 0.2, seed},
                                          pcr::KPolicy::variance(0.95));
    if (results[0].test_mse < results[1].test_mse) ++wins;
  }
  report(6, wins >= 95, "subset with w_h2 beats the subset without it in test MSE",
         std::to_string(wins) + "/100 seeds");
}

// ---- criterion 7: VAE numerics --------------------------------------------------------

void criterion_7() {
  // gradient checks over 20 random small models
  double worst = 0;
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    vae::VaeConfig cfg;
    cfg.input_dim = 4 + trial % 4;
    cfg.count_dims = 2;
    cfg.hidden = 5 + trial % 3;
    cfg.latent = 2 + trial % 3;
    cfg.property_hidden = 3;
    cfg.beta = 0.5 + 0.1 * (trial % 5);
    cfg.prop_weight = trial % 2 ? 1.0 : 0.0;
    auto model = vae::VaeModel::init(cfg, 7000 + static_cast<std::uint64_t>(trial));
    Eigen::MatrixXd x(cfg.input_dim, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal() * 0.5;
    Eigen::VectorXd scores;
    if (cfg.prop_weight > 0) {
      scores.resize(3);
      scores << rng.uniform(), rng.uniform(), rng.uniform();
    }
    worst = std::max(worst, vae::gradient_check(model, x, scores, 1e-5));
  }
  bool grad_ok = worst < 1e-4;

  // KL vanishes exactly at the standard-normal posterior
  vae::VaeConfig cfg;
  cfg.input_dim = 4;
  cfg.count_dims = 0;
  cfg.hidden = 3;
  cfg.latent = 2;
  cfg.property_hidden = 2;
  cfg.softplus_counts = false;
  auto model = vae::VaeModel::init(cfg, 1);
  model.params.setZero();
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(4, 1);
  bool kl_ok = vae::loss(model, x0, Eigen::VectorXd(), Eigen::MatrixXd::Zero(2, 1)).kl == 0.0;

  // overfit a single sample
  vae::VaeConfig oc;
  oc.input_dim = 5;
  oc.count_dims = 3;
  oc.hidden = 7;
  oc.latent = 3;
  oc.property_hidden = 4;
  oc.beta = 0.05;
  oc.prop_weight = 0.0;
  auto omodel = vae::VaeModel::init(oc, 14);
  Eigen::MatrixXd one(5, 1);
  one << 0.8, 0.2, 0.5, -0.3, 0.9;
  vae::TrainConfig tc;
  tc.epochs = 5000;
  tc.batch_size = 1;
  tc.learning_rate = 0.05;
  vae::train(omodel, one, Eigen::VectorXd(), one, Eigen::VectorXd(), tc, 15);
  double recon =
      vae::loss(omodel, one, Eigen::VectorXd(), Eigen::MatrixXd::Zero(3, 1)).mse;
  bool overfit_ok = recon < 1e-3;

  // monotone descent on a quadratic objective
  std::vector<double> values;
  Eigen::VectorXd target = Eigen::VectorXd::Constant(3, 1.0);
  auto objective = [&](const Eigen::VectorXd& z) {
    vae::LatentObjective o;
    o.value = (z - target).squaredNorm();
    o.grad = 2 * (z - target);
    values.push_back(o.value);
    return o;
  };
  vae::LatentOptConfig lc;
  lc.steps = 5000;
  lc.step_size = 1e-3;
  vae::latent_optimize(objective, Eigen::VectorXd::Zero(3), lc);
  int monotone = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1] + 1e-15) ++monotone;
  bool latent_ok =
      static_cast<double>(monotone) / static_cast<double>(values.size() - 1) >= 0.95;

  std::ostringstream detail;
  detail << "max grad err " << worst << ", overfit mse " << recon;
  report(7, grad_ok && kl_ok && overfit_ok && latent_ok,
         "gradients, KL zero-point, overfit and latent descent all hold", detail.str());
}

// ---- criteria 8 and 11: pipeline scale and determinism -----------------------------------

bool run_pipeline(const fs::path& dir, int& n_candidates, int& n_top) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto step = [&dir](const std::string& args) { return run_cli(args) == 0; };
  std::string d = dir.string();
  bool ok =
      step("fixture --rows 450 --seed 7 --out " + d + "/fixture") &&
      step("ingest --input " + d + "/fixture/records.csv --out " + d + "/ingest") &&
      step("score --input " + d + "/ingest/records.jsonl --variant modified --out " + d +
           "/score") &&
      step("train --input " + d + "/ingest/records.jsonl --seed 7 --epochs 800 --out " + d +
           "/train") &&
      step("generate --checkpoint " + d + "/train/checkpoint.json --train-records " + d +
           "/ingest/records.jsonl --n 1000 --seed 7 --steps 5000 --out " + d + "/generate") &&
      step("screen --candidates " + d + "/generate/candidates.csv --top 100 --out " + d +
           "/screen") &&
      step("accuracy --ranked " + d + "/screen/top100.csv --reference " + d +
           "/ingest/records.jsonl --out " + d + "/accuracy");
  if (!ok) return false;

  auto data_lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    int n = -1;
    while (std::getline(in, line)) ++n;
    return n;
  };
  n_candidates = data_lines(dir / "generate" / "candidates.csv");
  n_top = data_lines(dir / "screen" / "top100.csv");
  return true;
}

void criteria_8_and_11() {
  fs::path a = scratch_root() / "pipe_a";
  fs::path b = scratch_root() / "pipe_b";
  int cand_a = 0, top_a = 0, cand_b = 0, top_b = 0;
  bool ran_a = run_pipeline(a, cand_a, top_a);
  report(8, ran_a && cand_a == 1000 && top_a == 100,
         "pipeline generates 1,000 candidates and ranks a top 100",
         std::to_string(cand_a) + " candidates, top " + std::to_string(top_a));

  bool ran_b = run_pipeline(b, cand_b, top_b);
  bool identical = ran_a && ran_b;
  std::string first_diff;
  const std::vector<std::string> artifacts = {
      "fixture/records.csv",        "score/scored.csv",
      "train/loss_history.csv",     "generate/candidates.csv",
      "screen/verdicts.csv",        "screen/ranked.csv",
      "screen/top100.csv",          "accuracy/matches.csv",
      "accuracy/accuracy_curves.csv"};
  for (const auto& rel : artifacts) {
    if (!identical) break;
    if (read_file(a / rel) != read_file(b / rel)) {
      identical = false;
      first_diff = rel;
    }
  }
  report(11, identical, "same-seed pipeline reruns are byte-identical",
         identical ? "" : "first difference: " + first_diff);
}

// ---- criterion 9: filter fidelity ---------------------------------------------------------

void criterion_9() {
  auto rejected = [](const char* formula) {
    return !screen::evaluate_filters(formula, chem::parse_formula(formula)).kept;
  };
  bool h6s = rejected("H6S");
  bool h2s2 = rejected("H2S2");
  bool halogens = rejected("KF") && rejected("CaF2H2") && rejected("NaClH2");

  bool table_ok = true;
  std::string failed;
  for (const char* formula : {"Li3B3H6", "Li1Al3H6", "Ti1H2", "Ti2H4", "K2Al3H6", "Ti6H8",
                              "Ti3H4", "Ti5H6", "Ca2Al1Si2H3", "Ti4Ni1H4"}) {
    auto verdict = screen::evaluate_filters(formula, chem::parse_formula(formula));
    if (!verdict.kept) {
      table_ok = false;
      failed = std::string(formula) + " by " + verdict.failed_rule.value_or("?");
    }
  }
  report(9, h6s && h2s2 && halogens && table_ok,
         "H6S/H2S2 and halogen compounds rejected; all reference formulas pass", failed);
}

// ---- criterion 10: accuracy-curve oracle ---------------------------------------------------

void criterion_10() {
  using screen::MatchClass;
  Rng rng(101);
  bool brute_ok = true;
  for (int trial = 0; trial < 10 && brute_ok; ++trial) {
    std::vector<screen::MatchResult> matches;
    for (int i = 0; i < 100; ++i)
      matches.push_back({static_cast<MatchClass>(rng.uniform_int(0, 3)), "x"});
    auto curves = screen::cumulative_accuracy(matches);
    for (std::size_t n = 1; n <= matches.size() && brute_ok; ++n) {
      int sf = 0, sr = 0, se = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (matches[i].cls >= MatchClass::same_formula) ++sf;
        if (matches[i].cls >= MatchClass::same_ratio) ++sr;
        if (matches[i].cls >= MatchClass::same_elements) ++se;
      }
      brute_ok = curves.same_formula[n - 1] == static_cast<double>(sf) / static_cast<double>(n) &&
                 curves.same_ratio[n - 1] == static_cast<double>(sr) / static_cast<double>(n) &&
                 curves.same_elements[n - 1] == static_cast<double>(se) / static_cast<double>(n);
    }
  }

  std::vector<screen::MatchResult> fixture;
  auto add = [&fixture](MatchClass cls, int count) {
    for (int i = 0; i < count; ++i) fixture.push_back({cls, "m"});
  };
  add(MatchClass::same_formula, 5);
  add(MatchClass::same_ratio, 2);
  add(MatchClass::same_elements, 12);
  add(MatchClass::no_match, 1);
  add(MatchClass::same_elements, 80);
  auto curves = screen::cumulative_accuracy(fixture);
  bool fixture_ok = std::abs(curves.same_formula[19] - 0.25) < 1e-12 &&
                    std::abs(curves.same_ratio[19] - 0.35) < 1e-12 &&
                    std::abs(curves.same_elements[19] - 0.95) < 1e-12;
  report(10, brute_ok && fixture_ok,
         "cumulative accuracy equals brute force and hits (0.25, 0.35, 0.95) at n = 20");
}

}  // namespace

int main() {
  std::cout << "acceptance suite (cli: " << ACCEPT_CLI_PATH << ")\n";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criteria_8_and_11();
  criterion_9();
  criterion_10();
  std::cout << (g_failures == 0 ? "all criteria passed"
                                : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
