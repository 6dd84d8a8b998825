#include "hydride/causal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <Eigen/Dense>

#include "hydride/dataset.hpp"
#include "hydride/errors.hpp"

namespace hydride::causal {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ValidationError("alpha must lie in (0, 1)");
}

void check_columns(const Table& data, int x, int y, std::span<const int> z) {
  auto in_range = [&](int c) { return c >= 0 && c < data.cols(); };
  if (!in_range(x) || !in_range(y) || x == y)
    throw ValidationError("invalid test columns");
  for (int c : z)
    if (!in_range(c) || c == x || c == y)
      throw ValidationError("conditioning set overlaps test columns");
}

int categorical_level(double v, const std::string& name) {
  double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 0 || r > 1023)
    throw ValidationError("column '" + name + "' is not categorical");
  return static_cast<int>(r);
}

// Lexicographic size-k combinations of 0..n-1, mapped through `pool`.
struct Combinations {
  const std::vector<int>& pool;
  int k;

  template <typename Fn>
  bool for_each(Fn&& fn) const {  // fn returns true to stop early
    int n = static_cast<int>(pool.size());
    if (k > n) return false;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      std::vector<int> subset;
      subset.reserve(static_cast<std::size_t>(k));
      for (int i : idx) subset.push_back(pool[static_cast<std::size_t>(i)]);
      if (fn(subset)) return true;
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) return false;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
};

}  // namespace

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

Table discretize_continuous(const Table& t, int bins) {
  Table out = t;
  for (int c = 0; c < t.cols(); ++c) {
    bool integral = true;
    for (int r = 0; r < t.rows(); ++r) {
      double v = t.values(r, c);
      if (std::abs(v - std::round(v)) > 1e-9 || v < 0 || v > 63) {
        integral = false;
        break;
      }
    }
    if (integral) continue;
    std::vector<double> col(static_cast<std::size_t>(t.rows()));
    for (int r = 0; r < t.rows(); ++r) col[static_cast<std::size_t>(r)] = t.values(r, c);
    auto binned = dataset::discretize(col, bins, dataset::BinStrategy::equal_frequency);
    for (int r = 0; r < t.rows(); ++r)
      out.values(r, c) = binned.bins[static_cast<std::size_t>(r)];
  }
  return out;
}

CiTestResult chi_square_ci(const Table& data, int x, int y, std::span<const int> z,
                           double alpha) {
  check_alpha(alpha);
  check_columns(data, x, y, z);
  CiTestResult res;
  res.test = CiTest::chi_square;
  res.alpha = alpha;

  int kx = 0, ky = 0;
  const int n = data.rows();
  std::vector<int> xv(static_cast<std::size_t>(n)), yv(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    xv[static_cast<std::size_t>(r)] = categorical_level(data.values(r, x), data.names[static_cast<std::size_t>(x)]);
    yv[static_cast<std::size_t>(r)] = categorical_level(data.values(r, y), data.names[static_cast<std::size_t>(y)]);
    kx = std::max(kx, xv[static_cast<std::size_t>(r)] + 1);
    ky = std::max(ky, yv[static_cast<std::size_t>(r)] + 1);
  }

  std::map<std::vector<int>, Eigen::MatrixXi> strata;
  std::vector<int> zkey(z.size());
  for (int r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < z.size(); ++j)
      zkey[j] = categorical_level(data.values(r, z[j]), data.names[static_cast<std::size_t>(z[j])]);
    auto [it, inserted] = strata.try_emplace(zkey, Eigen::MatrixXi::Zero(kx, ky));
    it->second(xv[static_cast<std::size_t>(r)], yv[static_cast<std::size_t>(r)]) += 1;
  }

  double stat = 0.0;
  int dof = 0;
  for (const auto& [key, table] : strata) {
    Eigen::VectorXi row_sum = table.rowwise().sum();
    Eigen::VectorXi col_sum = table.colwise().sum();
    int total = row_sum.sum();
    int occupied_rows = (row_sum.array() > 0).count();
    int occupied_cols = (col_sum.array() > 0).count();
    if (occupied_rows < 2 || occupied_cols < 2) continue;
    dof += (occupied_rows - 1) * (occupied_cols - 1);
    for (int i = 0; i < kx; ++i)
      for (int j = 0; j < ky; ++j) {
        double expected = static_cast<double>(row_sum(i)) * col_sum(j) / total;
        if (expected <= 0) continue;
        double d = table(i, j) - expected;
        stat += d * d / expected;
      }
  }

  if (dof == 0) {
    res.untestable = true;  // treated as independent, by policy
    return res;
  }
  res.statistic = stat;
  res.dof = dof;
  boost::math::chi_squared dist(static_cast<double>(dof));
  res.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  res.independent = res.p_value > alpha;
  return res;
}

CiTestResult fisher_z_ci(const Table& data, int x, int y, std::span<const int> z,
                         double alpha) {
  check_alpha(alpha);
  check_columns(data, x, y, z);
  const int n = data.rows();
  const int k = static_cast<int>(z.size());
  if (n <= k + 3)
    throw ValidationError("fisher_z requires n > |z| + 3 observations");

  CiTestResult res;
  res.test = CiTest::fisher_z;
  res.alpha = alpha;

  std::vector<int> cols;
  cols.push_back(x);
  cols.push_back(y);
  for (int c : z) cols.push_back(c);
  const int m = static_cast<int>(cols.size());

  Eigen::MatrixXd centered(n, m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd col = data.values.col(cols[static_cast<std::size_t>(j)]);
    double mean = col.mean();
    centered.col(j) = col.array() - mean;
    double norm = centered.col(j).norm();
    if (norm < 1e-12) {
      res.untestable = true;  // constant column: correlation undefined
      return res;
    }
    centered.col(j) /= norm;
  }
  Eigen::MatrixXd corr = centered.transpose() * centered;

  double r;
  if (k == 0) {
    r = corr(0, 1);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(corr);
    if (!lu.isInvertible()) {
      res.untestable = true;
      return res;
    }
    Eigen::MatrixXd precision = lu.inverse();
    r = -precision(0, 1) / std::sqrt(precision(0, 0) * precision(1, 1));
  }
  r = std::clamp(r, -1.0, 1.0);

  if (1.0 - std::abs(r) < 1e-15) {
    res.statistic = r > 0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
    res.independent = false;
    return res;
  }
  double stat = std::sqrt(static_cast<double>(n - k - 3)) * std::atanh(r);
  res.statistic = stat;
  res.p_value = std::erfc(std::abs(stat) / std::sqrt(2.0));
  res.independent = res.p_value > alpha;
  return res;
}

CiTestResult run_ci_test(CiTest test, const Table& data, int x, int y,
                         std::span<const int> z, double alpha) {
  return test == CiTest::chi_square ? chi_square_ci(data, x, y, z, alpha)
                                    : fisher_z_ci(data, x, y, z, alpha);
}

Skeleton pc_skeleton(const Table& data, double alpha, CiTest test) {
  const int p = data.cols();
  if (p < 2) throw ValidationError("skeleton search requires at least 2 variables");
  check_alpha(alpha);

  Skeleton sk;
  sk.node_count = p;
  sk.adjacency.assign(static_cast<std::size_t>(p),
                      std::vector<bool>(static_cast<std::size_t>(p), true));
  for (int i = 0; i < p; ++i) sk.adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = false;

  auto neighbors_excluding = [&](int v, int excl) {
    std::vector<int> out;
    for (int u = 0; u < p; ++u)
      if (u != excl && sk.adjacency[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)])
        out.push_back(u);
    return out;
  };

  for (int depth = 0;; ++depth) {
    bool depth_feasible = false;
    for (int x = 0; x < p && !depth_feasible; ++x)
      for (int y = x + 1; y < p && !depth_feasible; ++y)
        if (sk.adjacency[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] &&
            (static_cast<int>(neighbors_excluding(x, y).size()) >= depth ||
             static_cast<int>(neighbors_excluding(y, x).size()) >= depth))
          depth_feasible = true;
    if (!depth_feasible) break;

    for (int x = 0; x < p; ++x) {
      for (int y = x + 1; y < p; ++y) {
        if (!sk.adjacency[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]) continue;
        bool removed = false;
        for (int side = 0; side < 2 && !removed; ++side) {
          if (depth == 0 && side == 1) continue;  // the empty set is side-symmetric
          int from = side == 0 ? x : y;
          int other = side == 0 ? y : x;
          std::vector<int> pool = neighbors_excluding(from, other);
          if (static_cast<int>(pool.size()) < depth) continue;
          Combinations combos{pool, depth};
          combos.for_each([&](const std::vector<int>& zset) {
            CiTestResult r = run_ci_test(test, data, x, y, zset, alpha);
            sk.log.push_back({x, y, zset, r.p_value, r.independent, r.untestable});
            if (r.independent) {
              sk.adjacency[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = false;
              sk.adjacency[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = false;
              sk.sepsets[{x, y}] = zset;
              removed = true;
            }
            return removed;
          });
        }
      }
    }
  }
  return sk;
}

// ---- Pag -------------------------------------------------------------

char mark_char(Mark m) {
  switch (m) {
    case Mark::arrow: return '>';
    case Mark::tail: return '-';
    default: return 'o';
  }
}

Pag::Pag(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
  std::size_t n = nodes_.size();
  adj_.assign(n * n, false);
  marks_.assign(2 * n * n, Mark::circle);
}

int Pag::node_index(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i] == name) return static_cast<int>(i);
  return -1;
}

std::size_t Pag::key(int a, int b) const {
  return static_cast<std::size_t>(std::min(a, b)) * nodes_.size() +
         static_cast<std::size_t>(std::max(a, b));
}

bool Pag::adjacent(int a, int b) const {
  if (a == b) return false;
  return adj_[key(a, b)];
}

void Pag::add_edge(int a, int b, Mark at_a, Mark at_b) {
  if (a == b) throw ValidationError("self edges are not allowed");
  if (adjacent(a, b)) throw ValidationError("duplicate edge");
  adj_[key(a, b)] = true;
  set_mark(a, b, at_a);
  set_mark(b, a, at_b);
}

void Pag::remove_edge(int a, int b) {
  adj_[key(a, b)] = false;
  marks_[2 * key(a, b)] = Mark::circle;
  marks_[2 * key(a, b) + 1] = Mark::circle;
}

Mark Pag::mark(int node, int other) const {
  return marks_[2 * key(node, other) + (node < other ? 0 : 1)];
}

void Pag::set_mark(int node, int other, Mark m) {
  marks_[2 * key(node, other) + (node < other ? 0 : 1)] = m;
}

std::vector<int> Pag::adjacency(int node) const {
  std::vector<int> out;
  for (int u = 0; u < node_count(); ++u)
    if (u != node && adjacent(node, u)) out.push_back(u);
  return out;
}

std::vector<PagEdge> Pag::edges() const {
  std::vector<PagEdge> out;
  for (int a = 0; a < node_count(); ++a)
    for (int b = a + 1; b < node_count(); ++b)
      if (adjacent(a, b)) out.push_back({a, b, mark(a, b), mark(b, a)});
  return out;
}

void Pag::check_directed_acyclic() const {
  const int n = node_count();
  // colors: 0 unvisited, 1 on stack, 2 done
  std::vector<int> color(static_cast<std::size_t>(n), 0);
  auto directed_out = [&](int v) {
    std::vector<int> out;
    for (int u : adjacency(v))
      if (mark(v, u) == Mark::tail && mark(u, v) == Mark::arrow) out.push_back(u);
    return out;
  };
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (color[static_cast<std::size_t>(start)] != 0) continue;
    stack.push_back(start);
    std::vector<std::pair<int, std::size_t>> frames{{start, 0}};
    color[static_cast<std::size_t>(start)] = 1;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      auto succ = directed_out(v);
      if (next < succ.size()) {
        int u = succ[next++];
        if (color[static_cast<std::size_t>(u)] == 1)
          throw ValidationError("directed cycle in PAG through '" +
                                nodes_[static_cast<std::size_t>(u)] + "'");
        if (color[static_cast<std::size_t>(u)] == 0) {
          color[static_cast<std::size_t>(u)] = 1;
          frames.emplace_back(u, 0);
        }
      } else {
        color[static_cast<std::size_t>(v)] = 2;
        frames.pop_back();
      }
    }
  }
}

// ---- orientation ------------------------------------------------------

namespace {

// Upgrades the mark at `at` (edge at-other) to an arrowhead. Tails are left
// intact: the earlier orientation wins and the conflict is recorded.
bool set_arrowhead(Pag& g, int at, int other) {
  Mark m = g.mark(at, other);
  if (m == Mark::arrow) return false;
  if (m == Mark::tail) {
    g.warnings.push_back("orientation conflict: arrowhead at '" +
                         g.nodes()[static_cast<std::size_t>(at)] + "' on edge to '" +
                         g.nodes()[static_cast<std::size_t>(other)] + "' skipped (tail already set)");
    return false;
  }
  g.set_mark(at, other, Mark::arrow);
  return true;
}

// Orients from -> to (tail at from, arrowhead at to) when compatible.
bool orient_directed(Pag& g, int from, int to) {
  Mark at_from = g.mark(from, to);
  Mark at_to = g.mark(to, from);
  if (at_from == Mark::arrow || at_to == Mark::tail) {
    g.warnings.push_back("orientation conflict: cannot orient '" +
                         g.nodes()[static_cast<std::size_t>(from)] + "' -> '" +
                         g.nodes()[static_cast<std::size_t>(to)] + "'");
    return false;
  }
  bool changed = false;
  if (at_from != Mark::tail) {
    g.set_mark(from, to, Mark::tail);
    changed = true;
  }
  if (at_to != Mark::arrow) {
    g.set_mark(to, from, Mark::arrow);
    changed = true;
  }
  return changed;
}

bool is_parent(const Pag& g, int a, int b) {  // a -> b
  return g.adjacent(a, b) && g.mark(a, b) == Mark::tail && g.mark(b, a) == Mark::arrow;
}

const std::vector<int>* find_sepset(const Pag& g, int a, int b) {
  auto it = g.sepsets.find({std::min(a, b), std::max(a, b)});
  return it == g.sepsets.end() ? nullptr : &it->second;
}

// R1: a *-> b o-* c with a, c non-adjacent  =>  b -> c.
bool rule_r1(Pag& g) {
  bool changed = false;
  for (int b = 0; b < g.node_count(); ++b)
    for (int a : g.adjacency(b)) {
      if (g.mark(b, a) != Mark::arrow) continue;
      for (int c : g.adjacency(b)) {
        if (c == a || g.adjacent(a, c)) continue;
        if (g.mark(b, c) != Mark::circle) continue;
        changed |= orient_directed(g, b, c);
      }
    }
  return changed;
}

// R2: (a -> b *-> c) or (a *-> b -> c), with a *-o c  =>  a *-> c.
bool rule_r2(Pag& g) {
  bool changed = false;
  for (int a = 0; a < g.node_count(); ++a)
    for (int c : g.adjacency(a)) {
      if (c == a || g.mark(c, a) != Mark::circle) continue;
      for (int b : g.adjacency(a)) {
        if (b == c || !g.adjacent(b, c)) continue;
        bool chain1 = is_parent(g, a, b) && g.mark(c, b) == Mark::arrow;
        bool chain2 = g.mark(b, a) == Mark::arrow && is_parent(g, b, c);
        if (chain1 || chain2) {
          changed |= set_arrowhead(g, c, a);
          break;
        }
      }
    }
  return changed;
}

// R3: a *-> b <-* c, a *-o d o-* c, a, c non-adjacent, d *-o b  =>  d *-> b.
bool rule_r3(Pag& g) {
  bool changed = false;
  for (int d = 0; d < g.node_count(); ++d)
    for (int b : g.adjacency(d)) {
      if (g.mark(b, d) != Mark::circle) continue;
      auto adj_d = g.adjacency(d);
      for (std::size_t i = 0; i < adj_d.size(); ++i)
        for (std::size_t j = i + 1; j < adj_d.size(); ++j) {
          int a = adj_d[i], c = adj_d[j];
          if (a == b || c == b || g.adjacent(a, c)) continue;
          if (g.mark(d, a) != Mark::circle || g.mark(d, c) != Mark::circle) continue;
          if (!g.adjacent(a, b) || !g.adjacent(c, b)) continue;
          if (g.mark(b, a) != Mark::arrow || g.mark(b, c) != Mark::arrow) continue;
          changed |= set_arrowhead(g, b, d);
        }
    }
  return changed;
}

// R4: discriminating path <theta, ..., alpha, b, c> for b with b o-* c.
// If b lies in sepset(theta, c), orient b -> c; otherwise make
// alpha <-> b <-> c.
bool rule_r4(Pag& g) {
  bool changed = false;
  for (int c = 0; c < g.node_count(); ++c) {
    for (int b : g.adjacency(c)) {
      if (g.mark(b, c) != Mark::circle) continue;
      // Backward search; a state is (node, alpha seed of its path).
      std::deque<std::pair<int, int>> frontier;
      std::set<int> visited;
      for (int alpha : g.adjacency(b)) {
        if (alpha == c || !g.adjacent(alpha, c)) continue;
        if (!is_parent(g, alpha, c)) continue;
        if (g.mark(alpha, b) != Mark::arrow) continue;
        frontier.emplace_back(alpha, alpha);
        visited.insert(alpha);
      }
      bool applied = false;
      while (!frontier.empty() && !applied) {
        auto [h, alpha] = frontier.front();
        frontier.pop_front();
        for (int m : g.adjacency(h)) {
          if (m == b || m == c || visited.count(m)) continue;
          if (g.mark(h, m) != Mark::arrow) continue;  // collider half at h
          if (!g.adjacent(m, c)) {
            // m = theta: discriminating path found.
            const std::vector<int>* sep = find_sepset(g, m, c);
            bool b_in_sepset =
                sep && std::find(sep->begin(), sep->end(), b) != sep->end();
            if (b_in_sepset) {
              changed |= orient_directed(g, b, c);
            } else {
              changed |= set_arrowhead(g, alpha, b);
              changed |= set_arrowhead(g, b, alpha);
              changed |= set_arrowhead(g, b, c);
              changed |= set_arrowhead(g, c, b);
            }
            applied = true;
            break;
          }
          if (is_parent(g, m, c) && g.mark(m, h) == Mark::arrow) {
            visited.insert(m);
            frontier.emplace_back(m, alpha);
          }
        }
      }
    }
  }
  return changed;
}

std::vector<int> possible_d_sep(const Pag& g, int x) {
  std::set<std::pair<int, int>> visited;  // (prev, cur) states
  std::deque<std::pair<int, int>> frontier;
  std::set<int> reachable;
  for (int nb : g.adjacency(x)) {
    frontier.emplace_back(x, nb);
    visited.insert({x, nb});
    reachable.insert(nb);
  }
  while (!frontier.empty()) {
    auto [a, b] = frontier.front();
    frontier.pop_front();
    for (int c : g.adjacency(b)) {
      if (c == a || c == x) continue;
      bool collider_at_b = g.mark(b, a) == Mark::arrow && g.mark(b, c) == Mark::arrow;
      bool triangle = g.adjacent(a, c);
      if (!collider_at_b && !triangle) continue;
      if (visited.insert({b, c}).second) {
        reachable.insert(c);
        frontier.emplace_back(b, c);
      }
    }
  }
  return {reachable.begin(), reachable.end()};
}

void apply_orientation_rules(Pag& g) {
  bool changed = true;
  while (changed) {
    changed = rule_r1(g);
    changed = rule_r2(g) || changed;
    changed = rule_r3(g) || changed;
    changed = rule_r4(g) || changed;
  }
}

}  // namespace

void orient_v_structures(Pag& pag) {
  for (int z = 0; z < pag.node_count(); ++z) {
    auto adj = pag.adjacency(z);
    for (std::size_t i = 0; i < adj.size(); ++i)
      for (std::size_t j = i + 1; j < adj.size(); ++j) {
        int x = adj[i], y = adj[j];
        if (pag.adjacent(x, y)) continue;
        const std::vector<int>* sep = find_sepset(pag, x, y);
        bool z_in_sepset = sep && std::find(sep->begin(), sep->end(), z) != sep->end();
        if (!z_in_sepset) {
          set_arrowhead(pag, z, x);
          set_arrowhead(pag, z, y);
        }
      }
  }
}

Pag fci(const Table& data, double alpha, CiTest test) {
  if (data.cols() < 1) throw ValidationError("fci requires at least one variable");
  if (static_cast<int>(data.names.size()) != data.cols())
    throw ValidationError("table names do not match column count");
  if (data.cols() == 1) return Pag({data.names[0]});

  Skeleton sk = pc_skeleton(data, alpha, test);
  Pag pag(data.names);
  pag.sepsets = sk.sepsets;
  for (int a = 0; a < sk.node_count; ++a)
    for (int b = a + 1; b < sk.node_count; ++b)
      if (sk.adjacency[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)])
        pag.add_edge(a, b, Mark::circle, Mark::circle);

  orient_v_structures(pag);

  // Possible-d-separating-set refinement: retest every remaining edge
  // against subsets drawn from pds(x) and pds(y).
  for (const PagEdge& e : pag.edges()) {
    if (!pag.adjacent(e.a, e.b)) continue;
    bool removed = false;
    for (int side = 0; side < 2 && !removed; ++side) {
      int from = side == 0 ? e.a : e.b;
      std::vector<int> pds = possible_d_sep(pag, from);
      std::erase(pds, e.a);
      std::erase(pds, e.b);
      for (int d = 1; d <= static_cast<int>(pds.size()) && !removed; ++d) {
        Combinations combos{pds, d};
        combos.for_each([&](const std::vector<int>& zset) {
          CiTestResult r = run_ci_test(test, data, e.a, e.b, zset, alpha);
          if (r.independent) {
            pag.remove_edge(e.a, e.b);
            pag.sepsets[{e.a, e.b}] = zset;
            removed = true;
          }
          return removed;
        });
      }
    }
  }

  // Re-orient from scratch with the refined adjacencies and sepsets.
  for (const PagEdge& e : pag.edges()) {
    pag.set_mark(e.a, e.b, Mark::circle);
    pag.set_mark(e.b, e.a, Mark::circle);
  }
  orient_v_structures(pag);
  apply_orientation_rules(pag);
  return pag;
}

std::vector<NeighborInfo> neighborhood(const Pag& pag, std::string_view target) {
  int t = pag.node_index(target);
  if (t < 0) throw ValidationError("unknown target node: '" + std::string(target) + "'");
  std::vector<NeighborInfo> out;
  for (int u : pag.adjacency(t))
    out.push_back({pag.nodes()[static_cast<std::size_t>(u)], pag.mark(t, u), pag.mark(u, t)});
  return out;
}

std::string write_pag(const Pag& pag) {
  std::ostringstream out;
  for (const std::string& name : pag.nodes()) out << "node " << name << "\n";
  for (const PagEdge& e : pag.edges())
    out << pag.nodes()[static_cast<std::size_t>(e.a)] << " " << mark_char(e.at_a) << "-"
        << mark_char(e.at_b) << " " << pag.nodes()[static_cast<std::size_t>(e.b)] << "\n";
  return out.str();
}

namespace {

bool is_mark_token(std::string_view t) {
  auto is_mark = [](char c) { return c == 'o' || c == '>' || c == '-'; };
  return t.size() == 3 && is_mark(t[0]) && t[1] == '-' && is_mark(t[2]);
}

Mark mark_from_char(char c) {
  switch (c) {
    case '>': return Mark::arrow;
    case '-': return Mark::tail;
    case 'o': return Mark::circle;
    default: throw ParseError(std::string("invalid endpoint mark '") + c + "'");
  }
}

}  // namespace

Pag parse_pag(std::string_view text) {
  std::vector<std::string> nodes;
  struct RawEdge {
    std::string a, b;
    Mark at_a, at_b;
  };
  std::vector<RawEdge> edges;
  auto intern = [&nodes](const std::string& name) {
    if (std::find(nodes.begin(), nodes.end(), name) == nodes.end()) nodes.push_back(name);
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // trim
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string body = line.substr(b, e - b + 1);
    if (body.empty() || body[0] == '#') continue;
    // tokenize and locate the mark token; a line without one is a node
    // declaration (names themselves may contain spaces, even "node ...")
    std::istringstream ls(body);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    int mark_pos = -1;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (is_mark_token(tokens[i])) {
        if (mark_pos >= 0)
          throw ParseError("line " + std::to_string(line_no) + ": ambiguous edge line");
        mark_pos = static_cast<int>(i);
      }
    if (mark_pos < 0) {
      if (body.rfind("node ", 0) == 0) {
        intern(body.substr(5));
        continue;
      }
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'node <name>' or '<A> <m>-<m> <B>'");
    }
    if (mark_pos == 0 || mark_pos + 1 >= static_cast<int>(tokens.size()))
      throw ParseError("line " + std::to_string(line_no) + ": expected '<A> <m>-<m> <B>'");
    auto join = [&tokens](int from, int to) {
      std::string s;
      for (int i = from; i < to; ++i) {
        if (!s.empty()) s += " ";
        s += tokens[static_cast<std::size_t>(i)];
      }
      return s;
    };
    RawEdge re;
    re.a = join(0, mark_pos);
    re.b = join(mark_pos + 1, static_cast<int>(tokens.size()));
    re.at_a = mark_from_char(tokens[static_cast<std::size_t>(mark_pos)][0]);
    re.at_b = mark_from_char(tokens[static_cast<std::size_t>(mark_pos)][2]);
    if (re.a == re.b)
      throw ParseError("line " + std::to_string(line_no) + ": self edge");
    intern(re.a);
    intern(re.b);
    edges.push_back(std::move(re));
  }

  Pag pag(nodes);
  for (const auto& re : edges)
    pag.add_edge(pag.node_index(re.a), pag.node_index(re.b), re.at_a, re.at_b);
  return pag;
}

}  // namespace hydride::causal
