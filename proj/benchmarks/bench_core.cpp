#include <benchmark/benchmark.h>

#include "hydride/causal.hpp"
#include "hydride/chem.hpp"
#include "hydride/cif.hpp"
#include "hydride/estimator.hpp"
#include "hydride/pcr.hpp"
#include "hydride/rng.hpp"
#include "hydride/scoring.hpp"
#include "hydride/screen.hpp"
#include "hydride/synth.hpp"
#include "hydride/vae.hpp"

using namespace hydride;

namespace {

static void BM_ParseFormula(benchmark::State& state) {
  for (auto _ : state) {
    auto c = chem::parse_formula("Ca2Al1Si2H3");
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_ParseFormula);

static void BM_StorageScore(benchmark::State& state) {
  auto comp = chem::parse_formula("Li3B3H6");
  double w = chem::hydrogen_weight_fraction(comp);
  for (auto _ : state) {
    double s = scoring::h_storage_score(-0.426, w, scoring::Variant::modified);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_StorageScore);

static void BM_CifRoundTrip(benchmark::State& state) {
  auto records = synth::hydride_dataset(1, 3);
  const cif::Structure& s = *records[0].structure;
  for (auto _ : state) {
    auto back = cif::parse_cif(cif::write_cif(s));
    benchmark::DoNotOptimize(back);
  }
}
BENCHMARK(BM_CifRoundTrip);

static void BM_ChiSquareCi(benchmark::State& state) {
  Rng rng(1);
  causal::Table t;
  t.names = {"x", "y", "z"};
  const int n = static_cast<int>(state.range(0));
  t.values.resize(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) t.values(i, j) = rng.uniform_int(0, 2);
  std::vector<int> z = {2};
  for (auto _ : state) {
    auto r = causal::chi_square_ci(t, 0, 1, z, 0.05);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ChiSquareCi)->Arg(1000)->Arg(10000);

static void BM_FisherZCi(benchmark::State& state) {
  Rng rng(2);
  causal::Table t;
  t.names = {"x", "y", "z"};
  const int n = static_cast<int>(state.range(0));
  t.values.resize(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) t.values(i, j) = rng.normal();
  std::vector<int> z = {2};
  for (auto _ : state) {
    auto r = causal::fisher_z_ci(t, 0, 1, z, 0.05);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_FisherZCi)->Arg(1000)->Arg(10000);

static void BM_Fci5Nodes(benchmark::State& state) {
  Rng rng(3);
  synth::Sem sem = synth::random_sem(5, 0.4, rng);
  auto t = synth::sample_sem(sem, 2000, rng);
  for (auto _ : state) {
    auto pag = causal::fci(t, 0.05, causal::CiTest::fisher_z);
    benchmark::DoNotOptimize(pag);
  }
}
BENCHMARK(BM_Fci5Nodes);

static void BM_PcrFit(benchmark::State& state) {
  Rng rng(4);
  Eigen::MatrixXd x(400, 5);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
    y(i) = x(i, 0) - 0.5 * x(i, 3) + 0.1 * rng.normal();
  }
  for (auto _ : state) {
    auto model = pcr::pcr_fit(x, y, pcr::KPolicy::variance(0.95));
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_PcrFit);

static void BM_VaeEpoch(benchmark::State& state) {
  auto records = synth::hydride_dataset(270, 5);
  vae::Vocab vocab = vae::Vocab::from_records(records);
  Eigen::VectorXd scale = vae::fit_feature_scale(records, vocab);
  vae::VaeConfig cfg;
  cfg.input_dim = vocab.size() + 6;
  cfg.count_dims = vocab.size();
  auto model = vae::VaeModel::init(cfg, 6);
  model.vocab = vocab;
  model.feature_scale = scale;
  Eigen::MatrixXd x(cfg.input_dim, static_cast<Eigen::Index>(records.size()));
  Eigen::VectorXd s(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = vae::featurize(records[i], vocab, scale).values;
    s(static_cast<Eigen::Index>(i)) = *records[i].score;
  }
  vae::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 32;
  for (auto _ : state) {
    auto work = model;
    auto result = vae::train(work, x, s, x, s, tc, 7);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_VaeEpoch);

static void BM_LatentOptimize(benchmark::State& state) {
  auto records = synth::hydride_dataset(60, 8);
  vae::Vocab vocab = vae::Vocab::from_records(records);
  vae::VaeConfig cfg;
  cfg.input_dim = vocab.size() + 6;
  cfg.count_dims = vocab.size();
  auto model = vae::VaeModel::init(cfg, 9);
  model.vocab = vocab;
  model.feature_scale = vae::fit_feature_scale(records, vocab);
  Eigen::VectorXd z0 = Eigen::VectorXd::Constant(cfg.latent, 0.3);
  vae::LatentOptConfig lc;
  lc.steps = static_cast<int>(state.range(0));
  lc.trajectory_stride = 0;
  for (auto _ : state) {
    auto r = vae::latent_optimize_score(model, z0, lc);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_LatentOptimize)->Arg(500)->Arg(5000);

static void BM_KnnPredict(benchmark::State& state) {
  auto records = synth::hydride_dataset(450, 10);
  vae::Vocab vocab = vae::Vocab::from_records(records);
  Eigen::VectorXd scale = vae::fit_feature_scale(records, vocab);
  auto est = vae::fit_knn_estimator(records, vocab, scale, 5);
  auto query = vae::featurize(records[7], vocab, scale);
  query.values.array() += 0.01;
  for (auto _ : state) {
    double e = est->predict(query);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_KnnPredict);

static void BM_ApplyFilters(benchmark::State& state) {
  std::vector<screen::Candidate> candidates;
  Rng rng(11);
  auto records = synth::hydride_dataset(1000, 12);
  for (const auto& rec : records) {
    screen::Candidate c;
    c.id = rec.id;
    c.composition = rec.formula;
    c.score = *rec.score;
    c.w_h2 = rec.w_h2;
    candidates.push_back(std::move(c));
  }
  for (auto _ : state) {
    auto verdicts = screen::apply_filters(candidates, {});
    benchmark::DoNotOptimize(verdicts);
  }
}
BENCHMARK(BM_ApplyFilters);

static void BM_RankAndCurves(benchmark::State& state) {
  auto records = synth::hydride_dataset(1000, 13);
  std::vector<screen::Candidate> candidates;
  for (const auto& rec : records) {
    screen::Candidate c;
    c.id = rec.id;
    c.composition = rec.formula;
    c.score = *rec.score;
    c.w_h2 = rec.w_h2;
    candidates.push_back(std::move(c));
  }
  auto reference = synth::hydride_dataset(450, 14);
  for (auto _ : state) {
    auto ranked = screen::rank(candidates);
    auto top = screen::top_k(ranked, 100);
    std::vector<screen::MatchResult> matches;
    for (const auto& c : top) matches.push_back(screen::match_classify(c.composition, reference));
    auto curves = screen::cumulative_accuracy(matches);
    benchmark::DoNotOptimize(curves);
  }
}
BENCHMARK(BM_RankAndCurves);

}  // namespace

BENCHMARK_MAIN();
