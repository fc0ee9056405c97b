#include "elem0/treesolve.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <tuple>

namespace elem0 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Piece = PiecewiseQuadratic::Piece;

// Real roots of d strictly inside (lo, hi), ascending. Double roots are
// skipped since d does not change sign there.
int roots_inside(const Quadratic& d, double lo, double hi, double out[2]) {
  double r[2];
  int m = 0;
  if (d.a == 0.0) {
    if (d.b != 0.0) r[m++] = -d.c / d.b;
  } else {
    const double disc = d.b * d.b - 4.0 * d.a * d.c;
    if (disc > 0.0) {
      const double q = -0.5 * (d.b + std::copysign(std::sqrt(disc), d.b));
      r[m++] = q / d.a;
      if (q != 0.0) r[m++] = d.c / q;
    }
  }
  if (m == 2 && r[1] < r[0]) std::swap(r[0], r[1]);
  int n = 0;
  for (int k = 0; k < m; ++k) {
    if (std::isfinite(r[k]) && r[k] > lo && r[k] < hi && (n == 0 || r[k] > out[n - 1])) out[n++] = r[k];
  }
  return n;
}

// A point strictly inside (lo, hi), as close to the origin as the interval
// allows, so comparisons happen where the coefficients are accurate.
double interior_point(double lo, double hi) {
  if (lo < 0.0 && hi > 0.0) return 0.0;
  if (lo >= 0.0) {
    if (hi == kInf) return lo + std::max(1.0, lo);
    return lo + 0.5 * (hi - lo) * std::min(1.0, std::max(1.0, lo) / std::max(1.0, hi - lo));
  }
  if (lo == -kInf) return hi - std::max(1.0, -hi);
  return hi - 0.5 * (hi - lo) * std::min(1.0, std::max(1.0, -hi) / std::max(1.0, hi - lo));
}

// p1 - p2 with coefficients at rounding level set to exactly zero.
Quadratic difference(const Quadratic& p1, const Quadratic& p2) {
  constexpr double kRounding = 8.0 * std::numeric_limits<double>::epsilon();
  auto clean = [](double x, double y) {
    const double d = x - y;
    return std::abs(d) <= kRounding * (std::abs(x) + std::abs(y)) ? 0.0 : d;
  };
  return {clean(p1.a, p2.a), clean(p1.b, p2.b), clean(p1.c, p2.c)};
}

bool negligible_width(double lo, double hi) { return hi - lo <= 1e-12 * std::max(1.0, std::abs(lo)); }

const Piece& pick(const Piece& p1, const Piece& p2, const Quadratic& diff, double t, double tolerance) {
  const double d = diff(t);
  if (std::abs(d) <= tolerance * (1.0 + std::abs(p1.q(t)) + std::abs(p2.q(t)))) {
    if (p1.payload.zero != p2.payload.zero) return p1.payload.zero ? p1 : p2;
    return p1.payload.id <= p2.payload.id ? p1 : p2;
  }
  return d < 0.0 ? p1 : p2;
}

void append_coalesced(std::vector<Piece>& out, double start, const Piece& src) {
  if (!out.empty() && out.back().payload.id == src.payload.id) return;
  out.push_back({out.empty() ? -kInf : start, src.q, src.payload});
}

// Visits the common refinement of two piece lists: calls f(lo, hi, p1, p2).
template <typename F>
void for_each_overlap(std::span<const Piece> e1, std::span<const Piece> e2, F&& f) {
  std::size_t i = 0;
  std::size_t j = 0;
  double lo = -kInf;
  while (true) {
    const double hi1 = i + 1 < e1.size() ? e1[i + 1].start : kInf;
    const double hi2 = j + 1 < e2.size() ? e2[j + 1].start : kInf;
    const double hi = std::min(hi1, hi2);
    f(lo, hi, e1[i], e2[j]);
    if (hi == kInf) break;
    if (hi1 == hi) ++i;
    if (hi2 == hi) ++j;
    lo = hi;
  }
}

void merge_envelopes(std::span<const Piece> e1, std::span<const Piece> e2, double tolerance,
                     std::vector<Piece>& out) {
  out.clear();
  for_each_overlap(e1, e2, [&](double lo, double hi, const Piece& p1, const Piece& p2) {
    double roots[2];
    const Quadratic diff = difference(p1.q, p2.q);
    const int n = roots_inside(diff, lo, hi, roots);
    double s = lo;
    for (int k = 0; k <= n; ++k) {
      const double e = k < n ? roots[k] : hi;
      if (out.empty() || !negligible_width(s, e)) {
        append_coalesced(out, s, pick(p1, p2, diff, interior_point(s, e), tolerance));
      }
      s = e;
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// PiecewiseQuadratic

PiecewiseQuadratic::PiecewiseQuadratic(const Quadratic& q, PiecePayload payload) {
  pieces_.push_back({-kInf, q, payload});
}

const PiecewiseQuadratic::Piece& PiecewiseQuadratic::piece_at(double t) const {
  auto it = std::upper_bound(pieces_.begin() + 1, pieces_.end(), t,
                             [](double v, const Piece& p) { return v < p.start; });
  return *(it - 1);
}

PiecewiseQuadratic PiecewiseQuadratic::lower_envelope(std::span<const Piece> candidates, double tolerance) {
  PiecewiseQuadratic out;
  if (candidates.empty()) return out;
  // Bottom-up pairwise merging: envelopes of runs of length 1, 2, 4, ...
  // Identical quadratics (the same child piece reached on several intervals)
  // are kept once, preferring the zero payload and then the lower id.
  std::vector<Piece> unique(candidates.begin(), candidates.end());
  auto key = [](const Piece& p) { return std::tuple(p.q.a, p.q.b, p.q.c, !p.payload.zero, p.payload.id); };
  std::sort(unique.begin(), unique.end(), [&](const Piece& x, const Piece& y) { return key(x) < key(y); });
  unique.erase(std::unique(unique.begin(), unique.end(),
                           [](const Piece& x, const Piece& y) {
                             return x.q.a == y.q.a && x.q.b == y.q.b && x.q.c == y.q.c;
                           }),
               unique.end());
  std::vector<std::vector<Piece>> level;
  level.reserve(unique.size());
  for (const auto& c : unique) level.push_back({{-kInf, c.q, c.payload}});
  std::vector<Piece> merged;
  while (level.size() > 1) {
    std::vector<std::vector<Piece>> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
      merge_envelopes(level[k], level[k + 1], tolerance, merged);
      next.push_back(merged);
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  out.pieces_ = std::move(level.front());
  return out;
}

PiecewiseQuadratic PiecewiseQuadratic::sum(const PiecewiseQuadratic& a, const PiecewiseQuadratic& b) {
  PiecewiseQuadratic out;
  out.pieces_.reserve(a.size() + b.size());
  for_each_overlap(a.pieces_, b.pieces_, [&](double lo, double, const Piece& p1, const Piece& p2) {
    out.pieces_.push_back({lo, p1.q + p2.q, p1.payload});
  });
  return out;
}

PiecewiseQuadratic PiecewiseQuadratic::minimum(const PiecewiseQuadratic& a, const PiecewiseQuadratic& b,
                                               double tolerance) {
  PiecewiseQuadratic out;
  merge_envelopes(a.pieces_, b.pieces_, tolerance, out.pieces_);
  return out;
}

// ---------------------------------------------------------------------------
// RootedQuadraticProblem

RootedQuadraticProblem::RootedQuadraticProblem(std::vector<int> parents)
    : parent(std::move(parents)),
      quad(parent.size(), 0.0),
      lin(parent.size(), 0.0),
      penalty(parent.size(), 0.0),
      fusion(parent.size(), 0.0),
      scale(parent.size(), 1.0),
      offset(parent.size(), 0.0) {}

double RootedQuadraticProblem::evaluate(std::span<const double> x) const {
  double total = constant;
  for (int v = 0; v < size(); ++v) {
    total += (quad[v] * x[v] + lin[v]) * x[v];
    if (x[v] != 0.0) total += penalty[v];
    if (parent[v] >= 0) {
      const double d = x[v] - scale[v] * x[parent[v]] - offset[v];
      total += fusion[v] * d * d;
    }
  }
  return total;
}

void RootedQuadraticProblem::validate() const {
  const auto n = parent.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "problem has no variables");
  for (const auto* v : {&quad, &lin, &penalty, &fusion, &scale, &offset}) {
    if (v->size() != n) throw Error(ErrorKind::InvalidArgument, "coefficient vectors differ in length");
    for (double c : *v) {
      if (!std::isfinite(c)) throw Error(ErrorKind::NonFiniteInput, "non-finite coefficient");
    }
  }
  if (!std::isfinite(constant)) throw Error(ErrorKind::NonFiniteInput, "non-finite constant");
  if (parent[0] != -1) throw Error(ErrorKind::InvalidArgument, "node 0 must be the root");
  for (std::size_t v = 0; v < n; ++v) {
    if (penalty[v] < 0.0 || fusion[v] < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "penalties and fusion weights must be non-negative");
    }
    if (v > 0 && (parent[v] < 0 || parent[v] >= static_cast<int>(n) || parent[v] == static_cast<int>(v))) {
      throw Error(ErrorKind::NotATree, "invalid parent index");
    }
  }
}

// ---------------------------------------------------------------------------
// TreeL0Solver

namespace {

std::vector<int> traversal_order(const std::vector<int>& parent, std::vector<std::vector<int>>& children) {
  const int n = static_cast<int>(parent.size());
  children.assign(n, {});
  for (int v = 1; v < n; ++v) children[parent[v]].push_back(v);
  std::vector<int> order;
  order.reserve(n);
  order.push_back(0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int c : children[order[k]]) order.push_back(c);
  }
  if (static_cast<int>(order.size()) != n) throw Error(ErrorKind::NotATree, "parent array does not form a tree");
  return order;
}

// Message of the free branch through the parent edge: minimizes
// A x^2 + B x + C + w (x - u)^2 over x with u = s t + r, as a quadratic in t.
Quadratic free_branch(double A, double B, double C, double w, double s, double r) {
  const double D = A + w;
  const double ku = w * A / D;  // coefficient of u^2
  const double lu = w * B / D;  // coefficient of u
  const double k0 = C - B * B / (4.0 * D);
  return {ku * s * s, lu * s + 2.0 * ku * s * r, k0 + lu * r + ku * r * r};
}

double recover_child(const PiecePayload& p, double w, double s, double r, double t) {
  if (p.zero) return 0.0;
  const double u = s * t + r;
  return (2.0 * w * u - p.slope) / (2.0 * (p.curvature + w));
}

[[noreturn]] void throw_unbounded(int v) {
  throw Error(ErrorKind::InvalidArgument,
              "objective is unbounded below along variable " + std::to_string(v) + " (zero curvature)");
}

}  // namespace

TreeL0Solver::TreeL0Solver(const std::vector<int>& parent, double tolerance)
    : parent_(parent), tolerance_(tolerance) {
  if (parent_.empty() || parent_[0] != -1) throw Error(ErrorKind::InvalidArgument, "node 0 must be the root");
  order_ = traversal_order(parent_, children_);
  const int n = static_cast<int>(parent_.size());
  subtree_sizes_.assign(n, 1);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    if (parent_[*it] >= 0) subtree_sizes_[parent_[*it]] += subtree_sizes_[*it];
  }
  message_sizes_.assign(n, 0);
  messages_.resize(n);
}

TreeSolution TreeL0Solver::solve(const RootedQuadraticProblem& problem) {
  if (problem.parent != parent_) throw Error(ErrorKind::InvalidArgument, "problem tree differs from solver tree");
  const int n = static_cast<int>(parent_.size());

  bool root_zero = true;
  double root_value = 0.0;
  PiecePayload root_payload;

  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const int v = *it;
    const double degenerate = 1e-12 * (1.0 + std::abs(problem.quad[v]) + problem.fusion[v]);

    PiecewiseQuadratic free_part(Quadratic{problem.quad[v], problem.lin[v], problem.penalty[v]});
    double zero_value = 0.0;
    for (int c : children_[v]) {
      free_part = PiecewiseQuadratic::sum(free_part, messages_[c]);
      zero_value += messages_[c](0.0);
    }

    if (v == 0) {
      root_value = zero_value;
      for (const auto& piece : free_part.pieces_) {
        const double A = piece.q.a;
        const double B = piece.q.b;
        if (A <= degenerate) {
          if (std::abs(B) <= 1e-9 * (1.0 + std::abs(problem.lin[v]))) continue;
          throw_unbounded(v);
        }
        const double value = piece.q.c - B * B / (4.0 * A);
        const double tie = tolerance_ * (1.0 + std::abs(root_value) + std::abs(value));
        if (value < root_value - (root_zero ? tie : 0.0)) {
          root_value = value;
          root_zero = false;
          root_payload = {false, A, B, 0};
        }
      }
      message_sizes_[v] = 0;
      continue;
    }

    const double w = problem.fusion[v];
    const double s = problem.scale[v];
    const double r = problem.offset[v];
    candidates_.clear();
    candidates_.push_back({-kInf, Quadratic{w * s * s, 2.0 * w * s * r, zero_value + w * r * r}, {true, 0.0, 0.0, 0}});
    int id = 1;
    for (const auto& piece : free_part.pieces_) {
      const double A = piece.q.a;
      const double B = piece.q.b;
      if (A + w <= degenerate) {
        if (std::abs(B) <= 1e-9 * (1.0 + std::abs(problem.lin[v]))) continue;
        throw_unbounded(v);
      }
      candidates_.push_back({-kInf, free_branch(A, B, piece.q.c, w, s, r), {false, A, B, id++}});
    }
    messages_[v] = PiecewiseQuadratic::lower_envelope(candidates_, tolerance_);
    message_sizes_[v] = static_cast<int>(messages_[v].size());
  }

  TreeSolution out;
  out.x = Vector::Zero(n);
  out.objective = root_value + problem.constant;
  out.x[0] = root_zero ? 0.0 : -root_payload.slope / (2.0 * root_payload.curvature);
  for (std::size_t k = 1; k < order_.size(); ++k) {
    const int v = order_[k];
    const double t = out.x[parent_[v]];
    const auto& piece = messages_[v].piece_at(t);
    out.x[v] = recover_child(piece.payload, problem.fusion[v], problem.scale[v], problem.offset[v], t);
  }
  return out;
}

Vector solve_tree_quadratic(const RootedQuadraticProblem& problem) {
  problem.validate();
  std::vector<std::vector<int>> children;
  const auto order = traversal_order(problem.parent, children);
  const int n = problem.size();
  std::vector<Quadratic> acc(n);
  for (int v = 0; v < n; ++v) acc[v] = {problem.quad[v], problem.lin[v], 0.0};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    if (v == 0) break;
    const double w = problem.fusion[v];
    if (acc[v].a + w <= 0.0) throw_unbounded(v);
    acc[problem.parent[v]] =
        acc[problem.parent[v]] + free_branch(acc[v].a, acc[v].b, acc[v].c, w, problem.scale[v], problem.offset[v]);
  }
  Vector x(n);
  if (acc[0].a <= 0.0) throw_unbounded(0);
  x[0] = -acc[0].b / (2.0 * acc[0].a);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const int v = order[k];
    const PiecePayload free{false, acc[v].a, acc[v].b, 0};
    x[v] = recover_child(free, problem.fusion[v], problem.scale[v], problem.offset[v], x[problem.parent[v]]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Scalar problems over the population tree

RootedTree root_tree(const TreeHypergraph& tree, int root) {
  const int n = tree.node_count();
  if (root < 0 || root >= n) throw Error(ErrorKind::InvalidArgument, "root outside the tree");
  RootedTree out;
  out.relabel.resize(n);
  for (int v = 0; v < n; ++v) out.relabel[v] = v;
  std::swap(out.relabel[0], out.relabel[root]);
  out.parent.assign(n, -1);
  out.parent_weight.assign(n, 0.0);
  std::vector<bool> seen(n, false);
  std::queue<int> queue;
  queue.push(root);
  seen[root] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (const auto& nb : tree.neighbors(u)) {
      if (seen[nb.node]) continue;
      seen[nb.node] = true;
      out.parent[out.relabel[nb.node]] = out.relabel[u];
      out.parent_weight[out.relabel[nb.node]] = nb.weight;
      queue.push(nb.node);
    }
  }
  return out;
}

double ScalarTreeProblem::evaluate(const Vector& x) const {
  double total = 0.0;
  for (Eigen::Index k = 0; k < targets.size(); ++k) {
    const double d = x[k] - targets[k];
    total += d * d + ridge * x[k] * x[k];
    const bool penalized = exempt.empty() || !exempt[k];
    if (penalized && x[k] != 0.0) total += lambda;
  }
  for (const auto& e : tree.edges()) {
    const double d = x[e.u] - x[e.v];
    total += gamma * e.weight * d * d;
  }
  return total;
}

void ScalarTreeProblem::validate() const {
  if (targets.size() != tree.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "target length differs from tree size");
  }
  if (!exempt.empty() && static_cast<Eigen::Index>(exempt.size()) != targets.size()) {
    throw Error(ErrorKind::ShapeMismatch, "exemption mask length differs from tree size");
  }
  if (!targets.allFinite()) throw Error(ErrorKind::NonFiniteInput, "non-finite target");
  for (double v : {lambda, gamma, ridge}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "lambda, gamma and ridge must be finite and non-negative");
    }
  }
}

RootedQuadraticProblem ScalarTreeProblem::rooted(int root) const {
  validate();
  const auto rt = root_tree(tree, root);
  RootedQuadraticProblem out(rt.parent);
  const int n = tree.node_count();
  for (int k = 0; k < n; ++k) {
    const int v = rt.relabel[k];
    out.quad[v] = 1.0 + ridge;
    out.lin[v] = -2.0 * targets[k];
    out.penalty[v] = (exempt.empty() || !exempt[k]) ? lambda : 0.0;
    out.fusion[v] = gamma * rt.parent_weight[v];
    out.constant += targets[k] * targets[k];
  }
  return out;
}

Vector solve_diagonal(const Vector& targets, double gamma, const TreeHypergraph& tree) {
  ScalarTreeProblem problem{targets, 0.0, gamma, tree};
  return solve_tree_quadratic(problem.rooted());
}

TreeSolution solve_offdiag_l0(const ScalarTreeProblem& problem) {
  const auto rooted = problem.rooted();
  TreeL0Solver solver(rooted.parent);
  return solver.solve(rooted);
}

namespace {

// Minimizes x^T H x + g^T x over vectors supported on `mask` (all other
// entries zero). Always-free variables are part of every mask by construction.
Vector solve_on_support(const Matrix& hessian, const Vector& gradient, const std::vector<int>& support) {
  const int m = static_cast<int>(support.size());
  Vector x = Vector::Zero(hessian.rows());
  if (m == 0) return x;
  Matrix h(m, m);
  Vector rhs(m);
  for (int a = 0; a < m; ++a) {
    rhs[a] = -0.5 * gradient[support[a]];
    for (int b = 0; b < m; ++b) h(a, b) = hessian(support[a], support[b]);
  }
  Vector sol;
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) {
    sol = llt.solve(rhs);
  } else {
    sol = h.completeOrthogonalDecomposition().solve(rhs);
  }
  for (int a = 0; a < m; ++a) x[support[a]] = sol[a];
  return x;
}

template <typename Objective>
TreeSolution enumerate_supports(const Matrix& hessian, const Vector& gradient, const std::vector<bool>& penalized,
                                Objective&& objective) {
  const int n = static_cast<int>(penalized.size());
  std::vector<int> free_vars;
  std::vector<int> fixed_free;
  for (int v = 0; v < n; ++v) (penalized[v] ? free_vars : fixed_free).push_back(v);
  if (static_cast<int>(free_vars.size()) > kMaxOracleSize) {
    throw Error(ErrorKind::TooLargeForOracle, std::to_string(free_vars.size()) + " penalized variables exceed the " +
                                                  std::to_string(kMaxOracleSize) + "-variable enumeration limit");
  }
  TreeSolution best;
  int best_count = std::numeric_limits<int>::max();
  bool have = false;
  const std::uint64_t masks = std::uint64_t{1} << free_vars.size();
  std::vector<int> support;
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    support = fixed_free;
    for (std::size_t b = 0; b < free_vars.size(); ++b) {
      if (mask & (std::uint64_t{1} << b)) support.push_back(free_vars[b]);
    }
    std::sort(support.begin(), support.end());
    Vector x = solve_on_support(hessian, gradient, support);
    const double value = objective(x);
    const int count = std::popcount(mask);
    const double tie = 1e-13 * (1.0 + std::abs(value));
    if (!have || value < best.objective - tie || (std::abs(value - best.objective) <= tie && count < best_count)) {
      best.x = std::move(x);
      best.objective = value;
      best_count = count;
      have = true;
    }
  }
  return best;
}

}  // namespace

TreeSolution brute_force_offdiag(const ScalarTreeProblem& problem) {
  problem.validate();
  const int n = problem.tree.node_count();
  Matrix hessian = (1.0 + problem.ridge) * Matrix::Identity(n, n) + problem.gamma * problem.tree.laplacian();
  Vector gradient = -2.0 * problem.targets;
  std::vector<bool> penalized(n);
  for (int k = 0; k < n; ++k) penalized[k] = problem.exempt.empty() || !problem.exempt[k];
  return enumerate_supports(hessian, gradient, penalized, [&](const Vector& x) { return problem.evaluate(x); });
}

TreeSolution brute_force(const RootedQuadraticProblem& problem) {
  problem.validate();
  const int n = problem.size();
  Matrix hessian = Matrix::Zero(n, n);
  Vector gradient = Vector::Zero(n);
  for (int v = 0; v < n; ++v) {
    hessian(v, v) += problem.quad[v];
    gradient[v] += problem.lin[v];
    const int p = problem.parent[v];
    if (p < 0) continue;
    // w (x_v - s x_p - r)^2
    const double w = problem.fusion[v];
    const double s = problem.scale[v];
    const double r = problem.offset[v];
    hessian(v, v) += w;
    hessian(p, p) += w * s * s;
    hessian(v, p) -= w * s;
    hessian(p, v) -= w * s;
    gradient[v] -= 2.0 * w * r;
    gradient[p] += 2.0 * w * s * r;
  }
  std::vector<bool> penalized(n);
  for (int v = 0; v < n; ++v) penalized[v] = problem.penalty[v] > 0.0;
  return enumerate_supports(hessian, gradient, penalized, [&](const Vector& x) {
    return problem.evaluate(std::span<const double>(x.data(), x.size()));
  });
}

}  // namespace elem0
