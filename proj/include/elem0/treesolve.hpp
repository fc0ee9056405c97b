#pragma once

#include "elem0/model.hpp"

#include <span>
#include <vector>

namespace elem0 {

struct Quadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double t) const { return (a * t + b) * t + c; }
  Quadratic operator+(const Quadratic& o) const { return {a + o.a, b + o.b, c + o.c}; }
  Quadratic operator-(const Quadratic& o) const { return {a - o.a, b - o.b, c - o.c}; }
};

// How a DP message recovers the child's value from the parent's value t.
// zero: x = 0. Otherwise the child minimized curvature*x^2 + slope*x + ...
// jointly with its parent edge term; see TreeL0Solver.
struct PiecePayload {
  bool zero = true;
  double curvature = 0.0;
  double slope = 0.0;
  int id = 0;  // identity of the generating quadratic, used for coalescing
};

// Continuous piecewise quadratic over the real line, stored as the lower
// envelope of a family of quadratics. Piece k covers [start_k, start_{k+1});
// the first piece starts at -inf.
class PiecewiseQuadratic {
 public:
  struct Piece {
    double start;
    Quadratic q;
    PiecePayload payload;
  };

  PiecewiseQuadratic() = default;
  explicit PiecewiseQuadratic(const Quadratic& q, PiecePayload payload = {});

  double operator()(double t) const { return piece_at(t).q(t); }
  const Piece& piece_at(double t) const;
  std::size_t size() const { return pieces_.size(); }
  std::span<const Piece> pieces() const { return pieces_; }
  void clear() { pieces_.clear(); }

  // Lower envelope of whole-line quadratics. At ties within `tolerance`
  // (relative to the compared values) a zero payload wins, then the lower id.
  static PiecewiseQuadratic lower_envelope(std::span<const Piece> candidates, double tolerance);

  // Pointwise sum; each resulting piece carries `a`'s payload.
  static PiecewiseQuadratic sum(const PiecewiseQuadratic& a, const PiecewiseQuadratic& b);

  // Pointwise minimum, built by the same merge the envelope uses.
  static PiecewiseQuadratic minimum(const PiecewiseQuadratic& a, const PiecewiseQuadratic& b, double tolerance);

 private:
  std::vector<Piece> pieces_;
  friend class TreeL0Solver;
};

// Separable objective on a rooted tree (node 0 is the root):
//
//   sum_v  quad_v x_v^2 + lin_v x_v + penalty_v 1[x_v != 0]
//   + sum_{v != root} fusion_v (x_v - scale_v x_parent(v) - offset_v)^2
//   + constant
//
// A zero penalty exempts the variable from the l0 term.
struct RootedQuadraticProblem {
  std::vector<int> parent;  // parent[0] == -1
  std::vector<double> quad;
  std::vector<double> lin;
  std::vector<double> penalty;
  std::vector<double> fusion;
  std::vector<double> scale;
  std::vector<double> offset;
  double constant = 0.0;

  explicit RootedQuadraticProblem(std::vector<int> parents = {});
  int size() const { return static_cast<int>(parent.size()); }
  double evaluate(std::span<const double> x) const;
  void validate() const;
};

struct TreeSolution {
  Vector x;
  double objective = 0.0;
};

// Exact minimizer for RootedQuadraticProblem. Holds the rooted traversal and
// message storage so it can be reused across many problems that share the
// same tree.
class TreeL0Solver {
 public:
  explicit TreeL0Solver(const std::vector<int>& parent, double tolerance = 1e-12);

  TreeSolution solve(const RootedQuadraticProblem& problem);

  // Piece counts of the messages sent to each node's parent during the last
  // solve (root entry is 0).
  std::span<const int> message_sizes() const { return message_sizes_; }
  std::span<const int> subtree_sizes() const { return subtree_sizes_; }
  // Value function sent from `v` to its parent in the last solve.
  const PiecewiseQuadratic& message(int v) const { return messages_.at(v); }

 private:
  std::vector<int> parent_;
  std::vector<int> order_;  // parents before children
  std::vector<std::vector<int>> children_;
  std::vector<int> subtree_sizes_;
  std::vector<int> message_sizes_;
  std::vector<PiecewiseQuadratic> messages_;
  std::vector<PiecewiseQuadratic::Piece> candidates_;
  double tolerance_;
};

// Minimizes the convex part only (penalties ignored) by leaf-first
// elimination in O(size).
Vector solve_tree_quadratic(const RootedQuadraticProblem& problem);

// ---------------------------------------------------------------------------
// Per-coordinate problems over the population tree

// g(x) = sum_k (x_k - f_k)^2 + lambda sum_k 1[x_k != 0]
//        + gamma sum_{(k,l)} W_kl (x_k - x_l)^2 + ridge sum_k x_k^2
// Exempted variables carry no l0 term.
struct ScalarTreeProblem {
  Vector targets;
  double lambda = 0.0;
  double gamma = 0.0;
  TreeHypergraph tree;
  double ridge = 0.0;
  std::vector<bool> exempt;  // empty: nobody is exempt

  double evaluate(const Vector& x) const;
  void validate() const;
  RootedQuadraticProblem rooted(int root = 0) const;
};

// Parent array of `tree` rooted at `root`, with vertices relabeled so the root
// becomes 0. `relabel[v]` is the new index of original vertex v.
struct RootedTree {
  std::vector<int> parent;
  std::vector<int> relabel;
  std::vector<double> parent_weight;  // weight of the edge to the parent
};
RootedTree root_tree(const TreeHypergraph& tree, int root = 0);

// Closed form for sum_k (x_k - f_k)^2 + gamma sum W_kl (x_k - x_l)^2, i.e.
// (I + gamma L_W) x = f, in O(K).
Vector solve_diagonal(const Vector& targets, double gamma, const TreeHypergraph& tree);

TreeSolution solve_offdiag_l0(const ScalarTreeProblem& problem);

inline constexpr int kMaxOracleSize = 20;

// Support enumeration with a dense solve per support. Throws
// TooLargeForOracle beyond kMaxOracleSize free variables.
TreeSolution brute_force_offdiag(const ScalarTreeProblem& problem);

// Same enumeration for the general rooted form, built from its dense Hessian.
TreeSolution brute_force(const RootedQuadraticProblem& problem);

}  // namespace elem0
