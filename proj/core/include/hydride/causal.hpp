#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace hydride::causal {

/// Named numeric columns; rows are observations.
struct Table {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // n x p

  int column(std::string_view name) const;  // -1 when absent
  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

/// Columns whose values are all small non-negative integers are treated as
/// categorical already; the rest are binned (equal-frequency) in place.
Table discretize_continuous(const Table& t, int bins);

enum class CiTest { chi_square, fisher_z };

struct CiTestResult {
  double statistic = 0;
  double p_value = 1;
  int dof = 0;  // chi-square only
  bool independent = true;
  CiTest test = CiTest::chi_square;
  double alpha = 0.05;
  /// Set when the query could not be evaluated (all strata degenerate or a
  /// singular correlation submatrix); such queries count as independent.
  bool untestable = false;
};

/// Stratified chi-square test of x against y given the categorical columns
/// in z. Degrees of freedom sum (rows-1)(cols-1) over strata with at least
/// two occupied rows and columns.
CiTestResult chi_square_ci(const Table& data, int x, int y, std::span<const int> z,
                           double alpha);

/// Partial-correlation test: r from the precision matrix of the correlation
/// submatrix over {x, y} and z; statistic sqrt(n - |z| - 3) * atanh(r) with a
/// two-sided normal p-value.
CiTestResult fisher_z_ci(const Table& data, int x, int y, std::span<const int> z,
                         double alpha);

CiTestResult run_ci_test(CiTest test, const Table& data, int x, int y,
                         std::span<const int> z, double alpha);

/// Every conditional-independence query performed during a skeleton search,
/// in execution order.
struct CiLogEntry {
  int x = 0, y = 0;
  std::vector<int> z;
  double p_value = 1;
  bool independent = false;
  bool untestable = false;
};

struct Skeleton {
  int node_count = 0;
  std::vector<std::vector<bool>> adjacency;
  std::map<std::pair<int, int>, std::vector<int>> sepsets;  // removed pairs
  std::vector<CiLogEntry> log;
};

/// PC adjacency search: starts from the complete graph and removes an edge
/// (x, y) as soon as some conditioning set of the current depth drawn from
/// adj(x)\{y} or adj(y)\{x} renders them independent. Candidate sets are
/// enumerated in lexicographic order for reproducibility.
Skeleton pc_skeleton(const Table& data, double alpha, CiTest test);

enum class Mark : unsigned char { circle, tail, arrow };

char mark_char(Mark m);  // '>', '-' or 'o'

struct PagEdge {
  int a = 0, b = 0;  // a < b
  Mark at_a = Mark::circle;
  Mark at_b = Mark::circle;
};

/// Partial ancestral graph: an edge carries one endpoint mark per side.
/// a --> b encodes tail at a, arrow at b; >-> is a bidirected edge.
class Pag {
 public:
  Pag() = default;
  explicit Pag(std::vector<std::string> nodes);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  int node_index(std::string_view name) const;  // -1 when absent

  bool adjacent(int a, int b) const;
  void add_edge(int a, int b, Mark at_a, Mark at_b);
  void remove_edge(int a, int b);
  Mark mark(int node, int other) const;  // mark at `node` end of edge node-other
  void set_mark(int node, int other, Mark m);
  std::vector<int> adjacency(int node) const;
  std::vector<PagEdge> edges() const;  // sorted by (a, b)

  std::map<std::pair<int, int>, std::vector<int>> sepsets;
  std::vector<std::string> warnings;

  /// Throws ValidationError if the -> subgraph (tail to arrow edges)
  /// contains a directed cycle.
  void check_directed_acyclic() const;

 private:
  std::size_t key(int a, int b) const;
  std::vector<std::string> nodes_;
  std::vector<bool> adj_;
  std::vector<Mark> marks_;  // mark at min end, mark at max end per pair
};

/// Orients unshielded triples x - z - y with z outside sepset(x, y) as
/// colliders (arrowheads at z). Conflicting re-orientations are resolved
/// first-orientation-wins and recorded in pag.warnings.
void orient_v_structures(Pag& pag);

/// Fast causal inference: PC skeleton, collider orientation, the
/// possible-d-separating-set edge refinement, re-orientation, then
/// orientation rules R1-R4 to fixpoint. Selection-bias rules are omitted.
Pag fci(const Table& data, double alpha, CiTest test);

struct NeighborInfo {
  std::string name;
  Mark at_target;    // mark at the target's end of the connecting edge
  Mark at_neighbor;  // mark at the neighbor's end
};

/// Radius-1 causal neighborhood of a node, with endpoint annotations.
std::vector<NeighborInfo> neighborhood(const Pag& pag, std::string_view target);

/// Text form: `node <name>` lines followed by `<A> <m>-<m> <B>` edge lines
/// with marks drawn from {">", "-", "o"}. Node names may contain spaces;
/// round-trips nodes, edges and marks losslessly (sepsets are not
/// serialized).
std::string write_pag(const Pag& pag);
Pag parse_pag(std::string_view text);

}  // namespace hydride::causal
