#include <doctest.h>

#include <algorithm>

#include "hydride/errors.hpp"
#include "hydride/rng.hpp"
#include "hydride/screen.hpp"
#include "hydride/synth.hpp"

using namespace hydride;
using screen::FilterConfig;
using screen::MatchClass;

namespace {

screen::Candidate candidate(const char* formula, double score = 0, double e_form = 0) {
  screen::Candidate c;
  c.id = formula;
  c.composition = chem::parse_formula(formula);
  c.score = score;
  c.w_h2 = chem::hydrogen_weight_fraction(c.composition);
  c.e_form = e_form;
  return c;
}

dataset::MaterialRecord ref_record(const char* id, const char* formula) {
  dataset::MaterialRecord rec;
  rec.id = id;
  rec.formula = chem::parse_formula(formula);
  rec.w_h2 = chem::hydrogen_weight_fraction(rec.formula);
  return rec;
}

// Ranked Table-2-style rows: formula, modified score, predicted e_form.
const std::vector<std::tuple<const char*, double, double>> k_reference_rows = {
    {"Li3B3H6", 0.062, 0.057},     {"Li1Al3H6", 0.043, 0.019},
    {"Ti1H2", 0.040, -0.426},      {"Ti2H4", 0.040, -0.401},
    {"K2Al3H6", 0.032, -0.159},    {"Ti6H8", 0.027, -0.387},
    {"Ti3H4", 0.026, -0.322},      {"Ti5H6", 0.024, -0.361},
    {"Ca2Al1Si2H3", 0.018, -0.404}, {"Ti4Ni1H4", 0.016, -0.390}};

}  // namespace

TEST_SUITE("screen") {

TEST_CASE("chalcogen cap rejects H6S; the non-hydride set rejects H2S2") {
  auto v1 = screen::evaluate_filters("H6S", chem::parse_formula("H6S"));
  CHECK_FALSE(v1.kept);
  CHECK(v1.failed_rule == "R1");

  auto v2 = screen::evaluate_filters("H2S2", chem::parse_formula("H2S2"));
  CHECK_FALSE(v2.kept);
  CHECK(v2.failed_rule == "R6");
}

TEST_CASE("pnictogen, tetrel and triel caps fire in order") {
  CHECK(screen::evaluate_filters("PH6", chem::parse_formula("PH6")).failed_rule == "R2");
  CHECK(screen::evaluate_filters("SiH8", chem::parse_formula("SiH8")).failed_rule == "R3");
  CHECK(screen::evaluate_filters("AlH4", chem::parse_formula("AlH4")).failed_rule == "R4");
  // group-13 cap is strict: AlH2 needs m < 2n
  CHECK(screen::evaluate_filters("AlH2", chem::parse_formula("AlH2")).failed_rule == "R4");
  CHECK(screen::evaluate_filters("Al2H3", chem::parse_formula("Al2H3")).kept);
}

TEST_CASE("metal cap is additive with the group caps and configurable") {
  CHECK(screen::evaluate_filters("TiH5", chem::parse_formula("TiH5")).failed_rule == "R5");
  FilterConfig no_cap;
  no_cap.strict_metal_cap = false;
  CHECK(screen::evaluate_filters("TiH5", chem::parse_formula("TiH5"), no_cap).kept);
  // LiAl3H6: metal cap 2 + group-13 cap 5 admits six hydrogens
  CHECK(screen::evaluate_filters("LiAl3H6", chem::parse_formula("LiAl3H6")).kept);
}

TEST_CASE("non-metal compositions fail R6/R7 and halogens fail R9") {
  CHECK(screen::evaluate_filters("H2O", chem::parse_formula("H2O")).failed_rule == "R6");
  CHECK(screen::evaluate_filters("SiH4", chem::parse_formula("SiH4")).failed_rule == "R7");
  CHECK(screen::evaluate_filters("KF", chem::parse_formula("KF")).failed_rule == "R9");
  CHECK(screen::evaluate_filters("CaF2H2", chem::parse_formula("CaF2H2")).failed_rule == "R9");

  FilterConfig widened;
  widened.metalloids_as_metals = true;
  CHECK(screen::evaluate_filters("SiH4", chem::parse_formula("SiH4"), widened).kept);
}

TEST_CASE("every reference-table formula passes with the element-count rule off") {
  for (const auto& [formula, score, e_form] : k_reference_rows) {
    auto verdict = screen::evaluate_filters(formula, chem::parse_formula(formula));
    CHECK_MESSAGE(verdict.kept, formula, " rejected by ",
                  verdict.failed_rule.value_or("-"));
  }
}

TEST_CASE("the element-count rule keeps quaternaries and drops binaries") {
  FilterConfig with_rule;
  with_rule.element_count_rule = true;
  CHECK(screen::evaluate_filters("Ca2Al1Si2H3", chem::parse_formula("Ca2Al1Si2H3"), with_rule)
            .kept);
  auto tih2 = screen::evaluate_filters("TiH2", chem::parse_formula("TiH2"), with_rule);
  CHECK_FALSE(tih2.kept);
  CHECK(tih2.failed_rule == "R10");
}

TEST_CASE("verdicts are independent of list order") {
  std::vector<screen::Candidate> forward = {candidate("TiH2"), candidate("H6S"),
                                            candidate("KF"), candidate("LiAl3H6")};
  std::vector<screen::Candidate> backward(forward.rbegin(), forward.rend());
  auto vf = screen::apply_filters(forward, {});
  auto vb = screen::apply_filters(backward, {});
  for (const auto& f : vf) {
    auto match = std::find_if(vb.begin(), vb.end(),
                              [&](const auto& b) { return b.id == f.id; });
    REQUIRE(match != vb.end());
    CHECK(match->kept == f.kept);
    CHECK(match->failed_rule == f.failed_rule);
  }
}

TEST_CASE("rank sorts by score with w_h2 and formula tie-breaks") {
  std::vector<screen::Candidate> cands = {candidate("LiH", 0.01), candidate("NaH", 0.05),
                                          candidate("KH", 0.03)};
  auto ranked = screen::rank(cands);
  CHECK(ranked[0].id == "NaH");
  CHECK(ranked[1].id == "KH");
  CHECK(ranked[2].id == "LiH");

  // equal score and w_h2: stable, so input order survives
  std::vector<screen::Candidate> ties = {candidate("TiH2", 0.04), candidate("TiH2", 0.04)};
  ties[0].id = "first";
  ties[1].id = "second";
  auto tied = screen::rank(ties);
  CHECK(tied[0].id == "first");
  CHECK(tied[1].id == "second");
}

TEST_CASE("rank is a permutation and reproduces the reference ordering ends") {
  std::vector<screen::Candidate> rows;
  for (const auto& [formula, score, e_form] : k_reference_rows)
    rows.push_back(candidate(formula, score, e_form));
  Rng rng(17);
  rng.shuffle(rows);
  auto ranked = screen::rank(rows);
  REQUIRE(ranked.size() == rows.size());
  CHECK(ranked.front().id == "Li3B3H6");
  CHECK(ranked.back().id == "Ti4Ni1H4");
  std::multiset<std::string> in, out;
  for (const auto& c : rows) in.insert(c.id);
  for (const auto& c : ranked) out.insert(c.id);
  CHECK(in == out);
}

TEST_CASE("top_k clamps to the list size") {
  std::vector<screen::Candidate> cands;
  for (int i = 0; i < 1000; ++i) cands.push_back(candidate("TiH2", i * 1e-5));
  auto ranked = screen::rank(cands);
  CHECK(screen::top_k(ranked, 100).size() == 100);
  CHECK(screen::top_k(ranked, 0).empty());
  CHECK(screen::top_k(ranked, 5000).size() == 1000);
}

TEST_CASE("match classes follow the formula/ratio/elements hierarchy") {
  std::vector<dataset::MaterialRecord> db = {ref_record("mp-1077482", "TiH2"),
                                             ref_record("mp-2", "LiBH4")};
  auto exact = screen::match_classify(chem::parse_formula("Ti1H2"), db);
  CHECK(exact.cls == MatchClass::same_formula);
  CHECK(exact.matched_id == "mp-1077482");

  auto ratio = screen::match_classify(chem::parse_formula("Ti2H4"), db);
  CHECK(ratio.cls == MatchClass::same_ratio);
  CHECK(ratio.matched_id == "mp-1077482");

  auto elements = screen::match_classify(chem::parse_formula("Ti3H7"), db);
  CHECK(elements.cls == MatchClass::same_elements);

  auto none = screen::match_classify(chem::parse_formula("ZrH2"), db);
  CHECK(none.cls == MatchClass::no_match);
  CHECK(none.matched_id.empty());
}

TEST_CASE("the match hierarchy is honored on random candidates") {
  auto records = synth::hydride_dataset(80, 91);
  Rng rng(92);
  for (int trial = 0; trial < 200; ++trial) {
    const auto& base = records[rng.index(records.size())].formula;
    chem::Composition probe;
    int mode = rng.uniform_int(0, 2);
    if (mode == 0) probe = base;
    else if (mode == 1) {
      for (const auto& [z, n] : base.counts()) probe.add(z, n * rng.uniform_int(1, 3));
    } else {
      for (const auto& [z, n] : base.counts()) probe.add(z, rng.uniform_int(1, 9));
    }
    auto result = screen::match_classify(probe, records);
    if (result.cls >= MatchClass::same_formula) {
      bool found = false;
      for (const auto& rec : records) found |= rec.formula == probe;
      CHECK(found);
    }
    if (result.cls >= MatchClass::same_ratio) {
      bool found = false;
      for (const auto& rec : records)
        found |= chem::reduced_ratio(rec.formula) == chem::reduced_ratio(probe);
      CHECK(found);
    }
    if (result.cls >= MatchClass::same_elements) {
      bool found = false;
      for (const auto& rec : records)
        found |= rec.formula.element_set() == probe.element_set();
      CHECK(found);
    }
  }
}

TEST_CASE("cumulative accuracy is constant one for all-exact matches") {
  std::vector<screen::MatchResult> matches(7, {MatchClass::same_formula, "mp-1"});
  auto curves = screen::cumulative_accuracy(matches);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    CHECK(curves.same_formula[i] == 1.0);
    CHECK(curves.same_ratio[i] == 1.0);
    CHECK(curves.same_elements[i] == 1.0);
  }
}

TEST_CASE("cumulative accuracy equals a brute-force prefix recount") {
  Rng rng(93);
  std::vector<screen::MatchResult> matches;
  for (int i = 0; i < 100; ++i)
    matches.push_back({static_cast<MatchClass>(rng.uniform_int(0, 3)), "x"});
  auto curves = screen::cumulative_accuracy(matches);
  for (std::size_t n = 1; n <= matches.size(); ++n) {
    int sf = 0, sr = 0, se = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (matches[i].cls >= MatchClass::same_formula) ++sf;
      if (matches[i].cls >= MatchClass::same_ratio) ++sr;
      if (matches[i].cls >= MatchClass::same_elements) ++se;
    }
    CHECK(curves.same_formula[n - 1] == static_cast<double>(sf) / static_cast<double>(n));
    CHECK(curves.same_ratio[n - 1] == static_cast<double>(sr) / static_cast<double>(n));
    CHECK(curves.same_elements[n - 1] == static_cast<double>(se) / static_cast<double>(n));
    CHECK(curves.same_elements[n - 1] >= curves.same_ratio[n - 1]);
    CHECK(curves.same_ratio[n - 1] >= curves.same_formula[n - 1]);
  }
}

TEST_CASE("the top-20 fixture reproduces rates 0.25, 0.35 and 0.95") {
  std::vector<screen::MatchResult> matches;
  auto add = [&matches](MatchClass cls, int count) {
    for (int i = 0; i < count; ++i) matches.push_back({cls, "m"});
  };
  add(MatchClass::same_formula, 5);
  add(MatchClass::same_ratio, 2);
  add(MatchClass::same_elements, 12);
  add(MatchClass::no_match, 1);
  add(MatchClass::same_elements, 80);  // tail beyond the reported prefix
  auto curves = screen::cumulative_accuracy(matches);
  CHECK(curves.same_formula[19] == doctest::Approx(0.25));
  CHECK(curves.same_ratio[19] == doctest::Approx(0.35));
  CHECK(curves.same_elements[19] == doctest::Approx(0.95));
}

TEST_CASE("cumulative accuracy rejects empty input") {
  std::vector<screen::MatchResult> none;
  CHECK_THROWS_AS(screen::cumulative_accuracy(none), ValidationError);
}

}  // TEST_SUITE
