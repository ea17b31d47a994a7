#include "qcmod/cayley_capacity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "qcmod/ellipsoid.hpp"
#include "qcmod/errors.hpp"
#include "qcmod/kernels.hpp"

namespace qcmod {

using Clock = std::chrono::steady_clock;

GroupSpec GroupSpec::lattice(int d) {
  GroupSpec g;
  g.kind = GroupKind::integer_lattice;
  g.rank = d;
  g.validate();
  return g;
}

GroupSpec GroupSpec::free(int k) {
  GroupSpec g;
  g.kind = GroupKind::free_group;
  g.rank = k;
  g.validate();
  return g;
}

GroupSpec GroupSpec::custom_tables(std::vector<std::vector<int>> tables) {
  GroupSpec g;
  g.kind = GroupKind::custom;
  g.tables = std::move(tables);
  g.rank = static_cast<int>(g.tables.size());
  g.validate();
  return g;
}

int GroupSpec::generator_count() const { return kind == GroupKind::custom ? static_cast<int>(tables.size()) : rank; }

void GroupSpec::validate() const {
  if (kind != GroupKind::custom) {
    if (rank < 1) throw ValidationError("group: rank must be >= 1");
    return;
  }
  if (tables.empty()) throw ValidationError("group: custom group needs at least one generator table");
  const std::size_t V = tables[0].size();
  if (V == 0) throw ValidationError("group: custom tables must be nonempty");
  for (std::size_t j = 0; j < tables.size(); ++j) {
    if (tables[j].size() != V) throw ValidationError("group: custom tables differ in length");
    std::vector<bool> hit(V, false);
    for (int v : tables[j]) {
      if (v < 0 || static_cast<std::size_t>(v) >= V || hit[static_cast<std::size_t>(v)])
        throw ValidationError("group: custom table " + std::to_string(j) + " is not a bijection");
      hit[static_cast<std::size_t>(v)] = true;
    }
  }
}

namespace {

// F_k letters: +i is a_i, -i its inverse. Order a_1 < A_1 < a_2 < ...
bool letter_less(int a, int b) {
  const int ka = 2 * (std::abs(a) - 1) + (a < 0), kb = 2 * (std::abs(b) - 1) + (b < 0);
  return ka < kb;
}

bool word_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), letter_less);
}

std::vector<int> reduce_word(const std::vector<int>& w) {
  std::vector<int> out;
  for (int l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

void enumerate_lattice(int d, int R, std::vector<std::vector<int>>& els) {
  // all points with |x|_1 <= R, grouped by length then lexicographic
  std::vector<std::vector<std::vector<int>>> shells(static_cast<std::size_t>(R) + 1);
  std::vector<int> x(static_cast<std::size_t>(d), -R);
  while (true) {
    int l1 = 0;
    for (int v : x) l1 += std::abs(v);
    if (l1 <= R) shells[static_cast<std::size_t>(l1)].push_back(x);
    int i = d - 1;
    while (i >= 0 && x[static_cast<std::size_t>(i)] == R) x[static_cast<std::size_t>(i--)] = -R;
    if (i < 0) break;
    ++x[static_cast<std::size_t>(i)];
  }
  for (auto& s : shells)
    for (auto& p : s) els.push_back(std::move(p));
}

void enumerate_free(int k, int R, std::vector<std::vector<int>>& els) {
  std::vector<std::vector<int>> shell{{}};
  els.push_back({});
  for (int l = 1; l <= R; ++l) {
    std::vector<std::vector<int>> next;
    for (const auto& w : shell) {
      for (int i = 1; i <= k; ++i) {
        for (int s : {i, -i}) {
          if (!w.empty() && w.back() == -s) continue;
          std::vector<int> n = w;
          n.push_back(s);
          next.push_back(std::move(n));
        }
      }
    }
    std::sort(next.begin(), next.end(), word_less);
    for (const auto& w : next) els.push_back(w);
    shell = std::move(next);
  }
}

std::vector<int> custom_distances(const GroupSpec& g) {
  const int V = static_cast<int>(g.tables[0].size());
  std::vector<std::vector<int>> inv(g.tables.size(), std::vector<int>(static_cast<std::size_t>(V)));
  for (std::size_t j = 0; j < g.tables.size(); ++j)
    for (int v = 0; v < V; ++v) inv[j][static_cast<std::size_t>(g.tables[j][static_cast<std::size_t>(v)])] = v;
  std::vector<int> dist(static_cast<std::size_t>(V), -1);
  std::deque<int> q{0};
  dist[0] = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (std::size_t j = 0; j < g.tables.size(); ++j) {
      for (int w : {g.tables[j][static_cast<std::size_t>(v)], inv[j][static_cast<std::size_t>(v)]}) {
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
          q.push_back(w);
        }
      }
    }
  }
  return dist;
}

std::vector<int> resolve(const CayleyBall& ball, const VertexSet& s, const char* name) {
  std::vector<int> out;
  switch (s.kind) {
    case VertexSet::Kind::empty: break;
    case VertexSet::Kind::origin: out.push_back(0); break;
    case VertexSet::Kind::sphere:
      for (int v = 0; v < ball.vertex_count(); ++v)
        if (ball.word_length[static_cast<std::size_t>(v)] == ball.radius) out.push_back(v);
      break;
    case VertexSet::Kind::indices:
      for (int v : s.indices) {
        if (v < 0 || v >= ball.vertex_count())
          throw ValidationError(std::string(name) + ": vertex index " + std::to_string(v) + " outside the ball");
        out.push_back(v);
      }
      break;
    case VertexSet::Kind::elements:
      for (const auto& e : s.elements) {
        const int v = ball.index_of(e);
        if (v < 0) throw ValidationError(std::string(name) + ": element outside the ball");
        out.push_back(v);
      }
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::string CayleyBall::label(int v) const {
  const auto& e = elements[static_cast<std::size_t>(v)];
  switch (group.kind) {
    case GroupKind::integer_lattice: {
      std::string s = "(";
      for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
      return s + ")";
    }
    case GroupKind::free_group: {
      if (e.empty()) return "e";
      std::string s;
      for (int l : e) s += static_cast<char>((l > 0 ? 'a' : 'A') + std::abs(l) - 1);
      return s;
    }
    case GroupKind::custom: return "#" + std::to_string(e[0]);
  }
  return "?";
}

int CayleyBall::index_of(const std::vector<int>& element) const {
  std::vector<int> key = element;
  if (group.kind == GroupKind::free_group) {
    for (int l : key)
      if (l == 0 || std::abs(l) > group.rank) return -1;
    key = reduce_word(key);
  }
  if (group.kind == GroupKind::integer_lattice && static_cast<int>(key.size()) != group.rank) return -1;
  // elements are sorted by (length, lexicographic); a linear scan is fine at these sizes
  for (int v = 0; v < vertex_count(); ++v)
    if (elements[static_cast<std::size_t>(v)] == key) return v;
  return -1;
}

CayleyBall build_ball(const GroupSpec& group, int R, const VertexSet& x1, const VertexSet& x2) {
  group.validate();
  if (R < 0) throw ValidationError("build_ball: R must be >= 0");
  CayleyBall b;
  b.group = group;
  b.radius = R;
  const int n = group.generator_count();

  if (group.kind == GroupKind::integer_lattice) {
    enumerate_lattice(group.rank, R, b.elements);
    for (const auto& e : b.elements) {
      int l = 0;
      for (int v : e) l += std::abs(v);
      b.word_length.push_back(l);
    }
  } else if (group.kind == GroupKind::free_group) {
    enumerate_free(group.rank, R, b.elements);
    for (const auto& e : b.elements) b.word_length.push_back(static_cast<int>(e.size()));
  } else {
    const std::vector<int> dist = custom_distances(group);
    std::vector<std::pair<int, int>> order;
    for (int v = 0; v < static_cast<int>(dist.size()); ++v)
      if (dist[static_cast<std::size_t>(v)] >= 0 && dist[static_cast<std::size_t>(v)] <= R)
        order.emplace_back(dist[static_cast<std::size_t>(v)], v);
    std::sort(order.begin(), order.end());
    for (auto [l, v] : order) {
      b.elements.push_back({v});
      b.word_length.push_back(l);
    }
  }

  std::map<std::vector<int>, int> index;
  for (int v = 0; v < b.vertex_count(); ++v) index.emplace(b.elements[static_cast<std::size_t>(v)], v);
  auto lookup = [&](const std::vector<int>& e) {
    const auto it = index.find(e);
    return it == index.end() ? -1 : it->second;
  };

  const int V = b.vertex_count();
  b.sigma.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(V), -1));
  for (int j = 0; j < n; ++j) {
    for (int h = 0; h < V; ++h) {
      const auto& e = b.elements[static_cast<std::size_t>(h)];
      std::vector<int> g;
      if (group.kind == GroupKind::integer_lattice) {
        g = e;
        ++g[static_cast<std::size_t>(j)];
      } else if (group.kind == GroupKind::free_group) {
        g.push_back(j + 1);
        g.insert(g.end(), e.begin(), e.end());
        g = reduce_word(g);
      } else {
        g = {group.tables[static_cast<std::size_t>(j)][static_cast<std::size_t>(e[0])]};
      }
      b.sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)] = lookup(g);
    }
  }

  b.edges.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    auto& E = b.edges[static_cast<std::size_t>(j)];
    std::vector<bool> has_pre(static_cast<std::size_t>(V), false);
    for (int h = 0; h < V; ++h) {
      const int t = b.sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)];
      E.from.push_back(h);
      E.to.push_back(t);
      if (t >= 0) has_pre[static_cast<std::size_t>(t)] = true;
    }
    // edges g_j^{-1} h -> h whose tail lies outside the ball
    for (int h = 0; h < V; ++h) {
      if (has_pre[static_cast<std::size_t>(h)]) continue;
      E.from.push_back(-1);
      E.to.push_back(h);
    }
  }

  b.x1 = resolve(b, x1, "X1");
  b.x2 = resolve(b, x2, "X2");
  std::vector<int> common;
  std::set_intersection(b.x1.begin(), b.x1.end(), b.x2.begin(), b.x2.end(), std::back_inserter(common));
  if (!common.empty()) throw ValidationError("build_ball: X1 and X2 overlap at vertex " + b.label(common[0]));
  return b;
}

long long expected_ball_size(const GroupSpec& group, int R) {
  if (R < 0) return 0;
  if (group.kind == GroupKind::free_group) {
    const long long k = group.rank;
    if (k == 1) return 2LL * R + 1;
    long long pw = 1;
    for (int i = 0; i < R; ++i) pw *= 2 * k - 1;
    return 1 + 2 * k * (pw - 1) / (2 * k - 2);
  }
  if (group.kind == GroupKind::integer_lattice) {
    // sum_i 2^i C(d,i) C(R,i)
    const int d = group.rank;
    auto binom = [](long long a, long long b) {
      if (b < 0 || b > a) return 0LL;
      long long r = 1;
      for (long long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
      return r;
    };
    long long s = 0;
    for (int i = 0; i <= std::min(d, R); ++i) s += (1LL << i) * binom(d, i) * binom(R, i);
    return s;
  }
  return -1;
}

double graph_objective(const CayleyBall& ball, std::span<const double> u, const NormSpec& spec,
                       std::vector<double>* per_generator) {
  if (static_cast<int>(u.size()) != ball.vertex_count())
    throw ValidationError("graph_objective: potential has wrong length");
  double best = 0.0;
  if (per_generator) per_generator->clear();
  std::vector<double> diff;
  for (const auto& E : ball.edges) {
    diff.resize(E.from.size());
    kernels::edge_differences(E.from, E.to, u, diff);
    const double v = vector_norm(diff, spec);
    if (per_generator) per_generator->push_back(v);
    best = std::max(best, v);
  }
  return best;
}

namespace {

// Pins and free-vertex bookkeeping shared by both solvers.
struct Layout {
  std::vector<double> pinned;  // value per vertex (pins only)
  std::vector<int> free_of;    // vertex -> free index or -1
  std::vector<int> free_vertices;
};

Layout make_layout(const CayleyBall& ball) {
  Layout L;
  const int V = ball.vertex_count();
  L.pinned.assign(static_cast<std::size_t>(V), 0.0);
  L.free_of.assign(static_cast<std::size_t>(V), 0);
  for (int v : ball.x1) {
    L.pinned[static_cast<std::size_t>(v)] = 1.0;
    L.free_of[static_cast<std::size_t>(v)] = -1;
  }
  for (int v : ball.x2) L.free_of[static_cast<std::size_t>(v)] = -1;
  for (int v = 0; v < V; ++v) {
    if (L.free_of[static_cast<std::size_t>(v)] < 0) continue;
    L.free_of[static_cast<std::size_t>(v)] = static_cast<int>(L.free_vertices.size());
    L.free_vertices.push_back(v);
  }
  return L;
}

std::vector<double> assemble(const Layout& L, std::span<const double> x) {
  std::vector<double> u = L.pinned;
  for (std::size_t i = 0; i < L.free_vertices.size(); ++i) u[static_cast<std::size_t>(L.free_vertices[i])] = x[i];
  return u;
}

// Per-generator Dirichlet forms restricted to the free vertices:
// ||D_j u||^2 = x^T L_j x - 2 b_j^T x + c_j.
struct QuadraticPieces {
  std::vector<kernels::Csr> Lj;
  std::vector<std::vector<double>> bj;
  std::vector<std::vector<double>> diag;
};

QuadraticPieces quadratic_pieces(const CayleyBall& ball, const Layout& L) {
  QuadraticPieces Q;
  const int m = static_cast<int>(L.free_vertices.size());
  for (const auto& E : ball.edges) {
    std::vector<std::map<int, double>> rows(static_cast<std::size_t>(m));
    std::vector<double> b(static_cast<std::size_t>(m), 0.0), dg(static_cast<std::size_t>(m), 0.0);
    for (std::size_t e = 0; e < E.from.size(); ++e) {
      const int a = E.from[e], c = E.to[e];
      const int fa = a >= 0 ? L.free_of[static_cast<std::size_t>(a)] : -1;
      const int fc = c >= 0 ? L.free_of[static_cast<std::size_t>(c)] : -1;
      const double va = a >= 0 && fa < 0 ? L.pinned[static_cast<std::size_t>(a)] : 0.0;
      const double vc = c >= 0 && fc < 0 ? L.pinned[static_cast<std::size_t>(c)] : 0.0;
      if (fa >= 0) {
        rows[static_cast<std::size_t>(fa)][fa] += 1.0;
        if (fc >= 0)
          rows[static_cast<std::size_t>(fa)][fc] -= 1.0;
        else
          b[static_cast<std::size_t>(fa)] += vc;
      }
      if (fc >= 0) {
        rows[static_cast<std::size_t>(fc)][fc] += 1.0;
        if (fa >= 0)
          rows[static_cast<std::size_t>(fc)][fa] -= 1.0;
        else
          b[static_cast<std::size_t>(fc)] += va;
      }
    }
    kernels::Csr M;
    M.rows = m;
    for (int i = 0; i < m; ++i) {
      for (auto [col, v] : rows[static_cast<std::size_t>(i)]) {
        M.col.push_back(col);
        M.val.push_back(v);
        if (col == i) dg[static_cast<std::size_t>(i)] = v;
      }
      M.row_ptr.push_back(static_cast<int>(M.col.size()));
    }
    Q.Lj.push_back(std::move(M));
    Q.bj.push_back(std::move(b));
    Q.diag.push_back(std::move(dg));
  }
  return Q;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solve (sum theta_j L_j) x = sum theta_j b_j by Jacobi-preconditioned CG.
std::vector<double> weighted_harmonic(const QuadraticPieces& Q, std::span<const double> theta, double tol,
                                      std::span<const double> x0) {
  const std::size_t m = Q.bj.empty() ? 0 : Q.bj[0].size();
  std::vector<double> rhs(m, 0.0), dg(m, 0.0), tmp(m);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      rhs[i] += theta[j] * Q.bj[j][i];
      dg[i] += theta[j] * Q.diag[j][i];
    }
  }
  auto apply = [&](std::span<const double> x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (theta[j] == 0.0) continue;
      kernels::spmv(Q.Lj[j], x, tmp);
      for (std::size_t i = 0; i < m; ++i) y[i] += theta[j] * tmp[i];
    }
  };
  std::vector<double> x(x0.begin(), x0.end()), r(m), z(m), p(m), Ap(m);
  if (x.size() != m) x.assign(m, 0.0);
  apply(x, Ap);
  for (std::size_t i = 0; i < m; ++i) r[i] = rhs[i] - Ap[i];
  const double bnorm = std::max(std::sqrt(dot(rhs, rhs)), 1e-300);
  for (std::size_t i = 0; i < m; ++i) z[i] = dg[i] > 0 ? r[i] / dg[i] : r[i];
  p = z;
  double rz = dot(r, z);
  const int max_it = static_cast<int>(10 * m) + 100;
  for (int it = 0; it < max_it && std::sqrt(dot(r, r)) > tol * bnorm; ++it) {
    apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < m; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    for (std::size_t i = 0; i < m; ++i) z[i] = dg[i] > 0 ? r[i] / dg[i] : r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
  }
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  return x;
}

std::vector<double> generator_energies(const CayleyBall& ball, const Layout& L, std::span<const double> x) {
  const std::vector<double> u = assemble(L, x);
  std::vector<double> e;
  std::vector<double> diff;
  for (const auto& E : ball.edges) {
    diff.resize(E.from.size());
    kernels::edge_differences(E.from, E.to, u, diff);
    e.push_back(dot(diff, diff));
  }
  return e;
}

// min_u max_j ||D_j u||^2 = max_{theta in simplex} min_u sum_j theta_j ||D_j u||^2.
// Exponentiated-gradient ascent on theta; the inner problem is a weighted
// Dirichlet problem whose solution respects the box by the maximum principle.
GraphCapacityReport quadratic_capacity(const CayleyBall& ball, const Layout& L, const GraphSolveOptions& opts) {
  GraphCapacityReport rep;
  rep.method = "dual_weighted_energy";
  const QuadraticPieces Q = quadratic_pieces(ball, L);
  const std::size_t n = Q.Lj.size();
  std::vector<double> theta(n, 1.0 / static_cast<double>(n));
  std::vector<double> x(L.free_vertices.size(), 0.0), best_x;
  double best_primal = std::numeric_limits<double>::infinity(), best_dual = 0.0;
  double eta = 1.0, prev_g = -1.0;
  std::vector<double> prev_theta = theta;
  const int max_outer = std::max(1, std::min(opts.base.max_iters, 500));
  for (int it = 0; it < max_outer; ++it) {
    x = weighted_harmonic(Q, theta, opts.cg_tol, x);
    const std::vector<double> e = generator_energies(ball, L, x);
    const double g = dot(theta, e);
    const double primal = *std::max_element(e.begin(), e.end());
    rep.history.push_back(std::sqrt(primal));
    ++rep.iters;
    if (primal < best_primal) {
      best_primal = primal;
      best_x = x;
    }
    best_dual = std::max(best_dual, g);
    if (best_primal - best_dual <= opts.base.tol * 1e-3 * std::max(best_primal, 1e-300) || n == 1) break;
    if (g < prev_g) {
      // overshoot: back off toward the previous weights
      eta *= 0.5;
      theta = prev_theta;
    } else {
      prev_g = g;
      prev_theta = theta;
    }
    const double scale = std::max(g, 1e-300);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      theta[j] *= std::exp(eta * (e[j] - g) / scale);
      z += theta[j];
    }
    for (double& t : theta) t /= z;
  }
  rep.u = assemble(L, best_x);
  rep.value = graph_objective(ball, rep.u, NormSpec::schatten(2.0), &rep.per_generator);
  rep.lower_bound = std::sqrt(best_dual);
  rep.converged = rep.value - *rep.lower_bound <= opts.base.tol * std::max(rep.value, 1e-300);
  return rep;
}

struct GraphStart {
  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  bool stalled = false;
  int iters = 0;
};

class GraphObjective {
 public:
  GraphObjective(const CayleyBall& ball, const Layout& L, const NormSpec& spec) : ball_(ball), L_(L), spec_(spec) {
    for (const auto& E : ball.edges) inc_.push_back(kernels::build_incidence(ball.vertex_count(), E.from, E.to));
  }

  double value(std::span<const double> x, std::vector<double>* grad) const {
    const std::vector<double> u = assemble(L_, x);
    double best = -1.0;
    int arg = 0;
    std::vector<double> diff, darg;
    for (std::size_t j = 0; j < ball_.edges.size(); ++j) {
      const auto& E = ball_.edges[j];
      diff.resize(E.from.size());
      kernels::edge_differences(E.from, E.to, u, diff);
      const double v = vector_norm(diff, spec_);
      if (v > best) {
        best = v;
        arg = static_cast<int>(j);
        darg = diff;
      }
    }
    if (grad) {
      const std::vector<double> w = gauge_subgradient(darg, spec_);
      std::vector<double> gu(u.size());
      kernels::incidence_gather(inc_[static_cast<std::size_t>(arg)], w, gu);
      grad->resize(L_.free_vertices.size());
      for (std::size_t i = 0; i < L_.free_vertices.size(); ++i)
        (*grad)[i] = gu[static_cast<std::size_t>(L_.free_vertices[i])];
    }
    return best;
  }

 private:
  const CayleyBall& ball_;
  const Layout& L_;
  NormSpec spec_;
  std::vector<kernels::Incidence> inc_;
};

GraphStart run_graph_start(const GraphObjective& F, std::vector<double> x, const SolveOptions& opts, double radius) {
  GraphStart r;
  std::vector<double> g;
  double f = F.value(x, &g);
  r.best = x;
  r.best_value = f;
  r.history.push_back(f);
  const double a = opts.step_scale > 0 ? opts.step_scale : 0.5 * radius;
  double delta = std::max(f, 1e-300) * 0.5, level_ref = f;
  int since_progress = 0;
  std::vector<double> best_trace{f};
  for (int k = 0; k < opts.max_iters; ++k) {
    const double gnorm = std::sqrt(dot(g, g));
    if (!(gnorm > 0.0)) {
      r.stalled = true;
      break;
    }
    double alpha = a / std::sqrt(static_cast<double>(k) + 1.0) / gnorm;
    if (opts.step_rule == StepRule::polyak_with_estimate) {
      const double target = opts.target ? *opts.target : r.best_value - delta;
      const double pa = std::max(f - target, 0.0) / (gnorm * gnorm);
      if (pa > 0.0) alpha = pa;
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i] - alpha * g[i], 0.0, 1.0);
    f = F.value(x, &g);
    r.history.push_back(f);
    r.iters = k + 1;
    if (f < r.best_value) {
      r.best_value = f;
      r.best = x;
    }
    if (opts.step_rule == StepRule::polyak_with_estimate && !opts.target) {
      if (r.best_value <= level_ref - 0.5 * delta) {
        level_ref = r.best_value;
        since_progress = 0;
      } else if (++since_progress >= 50) {
        delta *= 0.5;
        since_progress = 0;
        level_ref = r.best_value;
      }
    }
    best_trace.push_back(r.best_value);
    const int window = std::max(200, (k + 1) / 4);
    if (k + 1 >= 2 * window) {
      const double old = best_trace[best_trace.size() - 1 - static_cast<std::size_t>(window)];
      if (old - r.best_value <= opts.tol * std::max(r.best_value, 1e-300)) {
        r.stalled = true;
        break;
      }
    }
  }
  return r;
}

GraphCapacityReport subgradient_capacity(const CayleyBall& ball, const Layout& L, const NormSpec& spec,
                                         const GraphSolveOptions& opts) {
  GraphCapacityReport rep;
  const GraphObjective F(ball, L, spec);
  const std::size_t m = L.free_vertices.size();

  std::vector<std::vector<double>> starts;
  starts.emplace_back(m, 0.0);  // indicator of X1
  {
    // harmonic potential
    const QuadraticPieces Q = quadratic_pieces(ball, L);
    const std::vector<double> theta(Q.Lj.size(), 1.0 / static_cast<double>(Q.Lj.size()));
    starts.push_back(weighted_harmonic(Q, theta, 1e-10, std::vector<double>(m, 0.0)));
  }
  for (int r = 1; r < opts.base.restarts; ++r) {
    std::mt19937_64 rng(mix_seed(opts.base.seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> x(m);
    for (double& v : x) v = U(rng);
    starts.push_back(std::move(x));
  }

  const double radius = 0.5 * std::sqrt(static_cast<double>(m));
  const int ns = static_cast<int>(starts.size());
  std::vector<GraphStart> results(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < ns; ++i) results[static_cast<std::size_t>(i)] = run_graph_start(F, starts[static_cast<std::size_t>(i)], opts.base, radius);

  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i].best_value < results[best].best_value) best = i;
  std::vector<double> xbest = results[best].best;
  double fbest = results[best].best_value;
  bool stalled = results[best].stalled;
  rep.history = results[best].history;
  rep.iters = results[best].iters;
  rep.method = "projected_subgradient/" + to_string(opts.base.step_rule);

  if (static_cast<int>(m) <= opts.base.polish_max_params && opts.base.polish_max_iters > 0) {
    const double abs_tol = opts.base.tol * std::max(fbest, 1e-12);
    auto oracle = [&](const Vec& z) {
      CutOracle o;
      Eigen::Index worst = -1;
      double viol = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double v = std::max(-z(i), z(i) - 1.0);
        if (v > viol) {
          viol = v;
          worst = i;
        }
      }
      if (worst >= 0) {
        o.feasible = false;
        o.value = viol;
        o.grad = Vec::Zero(z.size());
        o.grad(worst) = z(worst) < 0 ? -1.0 : 1.0;
        return o;
      }
      std::vector<double> g;
      o.value = F.value(std::span<const double>(z.data(), m), &g);
      o.grad = Eigen::Map<const Vec>(g.data(), static_cast<Eigen::Index>(m));
      return o;
    };
    const Vec center = Vec::Constant(static_cast<Eigen::Index>(m), 0.5);
    const Vec inc = Eigen::Map<const Vec>(xbest.data(), static_cast<Eigen::Index>(m));
    const EllipsoidResult er = ellipsoid_minimize(oracle, center, radius * (1.0 + 1e-9), opts.base.polish_max_iters,
                                                  abs_tol, std::make_pair(inc, fbest));
    rep.history.insert(rep.history.end(), er.history.begin(), er.history.end());
    rep.iters += er.iters;
    if (er.best_f < fbest) {
      fbest = er.best_f;
      xbest.assign(er.best_x.data(), er.best_x.data() + m);
    }
    if (er.certified) {
      rep.lower_bound = std::min(er.lower, fbest);
      stalled = stalled || fbest - *rep.lower_bound <= abs_tol;
    }
    rep.method += "+ellipsoid";
  }
  rep.u = assemble(L, xbest);
  rep.value = graph_objective(ball, rep.u, spec, &rep.per_generator);
  rep.converged = stalled;
  return rep;
}

}  // namespace

GraphCapacityReport graph_capacity(const CayleyBall& ball, const NormSpec& spec, const GraphSolveOptions& opts) {
  spec.validate();
  opts.base.validate();
  const auto t0 = Clock::now();
  GraphCapacityReport rep;
  const Layout L = make_layout(ball);
  if (ball.x1.empty()) {
    rep.empty_inner_plate = true;
    rep.u.assign(static_cast<std::size_t>(ball.vertex_count()), 0.0);
    rep.per_generator.assign(static_cast<std::size_t>(ball.generator_count()), 0.0);
    rep.lower_bound = 0.0;
    rep.converged = true;
    rep.history = {0.0};
    rep.method = "empty_inner_plate";
  } else if (L.free_vertices.empty()) {
    rep.u = L.pinned;
    rep.value = graph_objective(ball, rep.u, spec, &rep.per_generator);
    rep.lower_bound = rep.value;
    rep.converged = true;
    rep.history = {rep.value};
    rep.method = "single_point";
  } else if (spec.kind == NormKind::schatten && spec.p == 2.0 && opts.exact_quadratic) {
    rep = quadratic_capacity(ball, L, opts);
  } else {
    rep = subgradient_capacity(ball, L, spec, opts);
  }
  rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

OperatorTuple truncated_regular_rep(const CayleyBall& ball) {
  const int V = ball.vertex_count();
  std::vector<Mat> comps;
  for (const auto& s : ball.sigma) {
    Mat L = Mat::Zero(V, V);
    for (int h = 0; h < V; ++h)
      if (s[static_cast<std::size_t>(h)] >= 0) L(s[static_cast<std::size_t>(h)], h) = 1.0;
    comps.push_back(std::move(L));
  }
  std::vector<bool> flags(comps.size(), false);
  return OperatorTuple(std::move(comps), std::move(flags));
}

TransferReport verify_transfer(const CayleyBall& ball, const NormSpec& spec, const GraphSolveOptions& opts) {
  TransferReport t;
  t.cap = graph_capacity(ball, spec, opts);
  t.cap_value = t.cap.value;
  const OperatorTuple tau = truncated_regular_rep(ball);
  const Condenser c = make_condenser(ball.vertex_count(), ball.x1, ball.x2);

  // M_u compressed to the middle block
  Vec du(ball.vertex_count());
  for (int v = 0; v < ball.vertex_count(); ++v) du(v) = t.cap.u[static_cast<std::size_t>(v)];
  const Mat W = c.middle_basis();
  const Mat Mu_mid = hermitian_part(W.adjoint() * du.cast<cplx>().asDiagonal() * W);
  t.k_at_multiplication = objective(tau, embed(c, Mu_mid), std::span<const NormSpec>(&spec, 1));

  SolveOptions o = opts.base;
  o.warm_starts.insert(o.warm_starts.begin(), Mu_mid);
  t.k = solve_condenser(tau, c, spec, o);
  t.k_value = t.k.value_upper;
  t.gap = t.cap_value > 0 ? std::abs(t.cap_value - t.k_value) / t.cap_value : 0.0;
  t.inequality_holds = t.k_value <= t.cap_value + 1e-9 * std::max(1.0, t.cap_value);
  return t;
}

ParabolicityReport parabolicity_scan(const GroupSpec& group, double p, const VertexSet& x1, const std::vector<int>& radii,
                                     const GraphSolveOptions& opts) {
  group.validate();
  const NormSpec spec = NormSpec::schatten(p);
  if (radii.size() < 3) throw ValidationError("parabolicity_scan: need at least 3 radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw ValidationError("parabolicity_scan: radii must be increasing");
  if (radii[0] < 0) throw ValidationError("parabolicity_scan: radii must be nonnegative");

  ParabolicityReport rep;
  const int n = static_cast<int>(radii.size());
  rep.radii = radii;
  rep.vertex_counts.resize(radii.size());
  rep.values.resize(radii.size());
  rep.converged.resize(radii.size());
  std::vector<GraphCapacityReport> reports(radii.size());
  std::vector<std::string> errors(radii.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const CayleyBall b = build_ball(group, radii[static_cast<std::size_t>(i)], x1, VertexSet::none());
      GraphSolveOptions o = opts;
      o.base.seed = mix_seed(opts.base.seed, static_cast<std::uint64_t>(2000 + i));
      reports[static_cast<std::size_t>(i)] = graph_capacity(b, spec, o);
      rep.vertex_counts[static_cast<std::size_t>(i)] = b.vertex_count();
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw ValidationError("parabolicity_scan: " + e);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    rep.values[i] = reports[i].value;
    rep.converged[i] = reports[i].converged;
    if (!reports[i].converged) rep.warnings.push_back("R=" + std::to_string(radii[i]) + ": solve did not converge");
  }
  for (std::size_t i = 1; i < radii.size(); ++i) {
    const double slack = 2.0 * opts.base.tol * std::max(1.0, rep.values[i - 1]);
    if (rep.values[i] > rep.values[i - 1] + slack) {
      rep.monotone = false;
      rep.warnings.push_back("capacity increased from R=" + std::to_string(radii[i - 1]) + " to R=" +
                             std::to_string(radii[i]) + "; solver quality suspect");
    }
  }
  std::vector<double> R(radii.begin(), radii.end());
  for (double& r : R) r = std::max(r, 1.0);
  rep.fit = extrapolate(R, rep.values, Extrapolation::power_fit);
  const double last = rep.values[static_cast<std::size_t>(n - 1)], prev = rep.values[static_cast<std::size_t>(n - 2)];
  if (prev > 0 && std::abs(last - prev) / prev < 0.05 && last > 10.0 * opts.base.tol)
    rep.classification = "positive";
  else if (rep.fit.loglog_exponent < -0.1 && rep.fit.loglog_r2 >= 0.95)
    rep.classification = "vanishing";
  else
    rep.classification = "undetermined";
  return rep;
}

}  // namespace qcmod
