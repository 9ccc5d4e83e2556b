#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fraclap/boundary_data.hpp"
#include "fraclap/cheeger.hpp"
#include "fraclap/extension.hpp"
#include "fraclap/rng.hpp"

namespace fraclap {

struct SolverOptions {
  double tol = 1e-9;   // EL residual target, scaled by (1 + ||data||_inf)
  int max_iter = 400;  // Newton/descent iteration cap
  std::vector<double> epsilon_schedule;  // p != 2 regularization stages; auto when empty
  enum class Method { Auto, Newton, Descent } method = Method::Auto;
  bool random_init = false;
  Rng rng{};  // drives random initialization when requested
};

/// Result of a variational solve: node values, the unregularized
/// p-energy, worst-case Euler-Lagrange residuals, and the reference-ball
/// normalization (zero after Neumann post-normalization).
struct Solution {
  std::vector<double> u;
  double energy = 0;
  double el_residual_interior = 0;
  double el_residual_boundary = 0;
  int iterations = 0;
  double b0_mean = 0;
  bool converged = false;

  double el_residual() const { return std::max(el_residual_interior, el_residual_boundary); }
};

namespace detail {

struct VarProblem {
  const ExtensionDomain* dom = nullptr;
  const DifferentialStructure* st = nullptr;
  double p = 2;
  std::vector<char> fixed;          // per node
  std::vector<double> fixed_value;  // valid where fixed
  std::vector<double> b;            // linear term: minimize (1/p) E(u) - sum b_i u_i
  std::vector<int> unknowns;
  std::vector<int> slot;  // node -> unknown slot, -1 if fixed
  double data_scale = 0;  // ||data||_inf for the stopping rule
  int pin_node = -1;      // gauge pin whose residual is still reported
};

inline void index_unknowns(VarProblem& pr) {
  const int n = pr.dom->node_count();
  pr.slot.assign(n, -1);
  pr.unknowns.clear();
  for (int v = 0; v < n; ++v)
    if (!pr.fixed[v]) {
      pr.slot[v] = static_cast<int>(pr.unknowns.size());
      pr.unknowns.push_back(v);
    }
}

/// every connected component must touch a fixed node, otherwise the
/// problem has no anchor there
inline void check_anchored(const VarProblem& pr) {
  const ExtensionDomain& d = *pr.dom;
  const int n = d.node_count();
  std::vector<int> comp(n, -1);
  Adjacency adj = build_adjacency(d);
  int nc = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = nc;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int t = adj.offset[u]; t < adj.offset[u + 1]; ++t)
        if (comp[adj.nbr[t]] < 0) {
          comp[adj.nbr[t]] = nc;
          stack.push_back(adj.nbr[t]);
        }
    }
    ++nc;
  }
  std::vector<char> anchored(nc, 0);
  for (int v = 0; v < n; ++v)
    if (pr.fixed[v]) anchored[comp[v]] = 1;
  for (int v = 0; v < n; ++v)
    require(anchored[comp[v]], errc::disconnected_component_without_boundary,
            "node " + std::to_string(v) + " sits in a component with no anchored value");
}

/// true (eps = 0) Euler-Lagrange residual per node, isotropic route
inline std::vector<double> el_residual_vector(const VarProblem& pr, std::span<const double> u) {
  const ExtensionDomain& d = *pr.dom;
  std::vector<double> r(d.node_count(), 0.0);
  for (const Edge& e : d.edges) {
    const double t = e.w * signed_power(u[e.i] - u[e.j], pr.p);
    r[e.i] += t;
    r[e.j] -= t;
  }
  for (int v = 0; v < d.node_count(); ++v) r[v] -= pr.b[v];
  return r;
}

inline double max_unknown_residual(const VarProblem& pr, const std::vector<double>& r) {
  double m = 0;
  for (int v : pr.unknowns) m = std::max(m, std::fabs(r[v]));
  return m;
}

/// direct sparse solve of the p = 2 problem (graph Laplacian system)
inline void solve_linear(const VarProblem& pr, std::vector<double>& u) {
  const ExtensionDomain& d = *pr.dom;
  const int nu = static_cast<int>(pr.unknowns.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(d.edges.size() * 4);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
  for (const Edge& e : d.edges) {
    const int si = pr.slot[e.i], sj = pr.slot[e.j];
    if (si >= 0 && sj >= 0) {
      trips.emplace_back(si, si, e.w);
      trips.emplace_back(sj, sj, e.w);
      trips.emplace_back(si, sj, -e.w);
      trips.emplace_back(sj, si, -e.w);
    } else if (si >= 0) {
      trips.emplace_back(si, si, e.w);
      rhs[si] += e.w * pr.fixed_value[e.j];
    } else if (sj >= 0) {
      trips.emplace_back(sj, sj, e.w);
      rhs[sj] += e.w * pr.fixed_value[e.i];
    }
  }
  for (int k = 0; k < nu; ++k) rhs[k] += pr.b[pr.unknowns[k]];
  Eigen::SparseMatrix<double> A(nu, nu);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  require(ldlt.info() == Eigen::Success, errc::non_convergence, "LDLT factorization failed");
  Eigen::VectorXd x = ldlt.solve(rhs);
  for (int k = 0; k < nu; ++k) u[pr.unknowns[k]] = x[k];
}

struct NewtonStats {
  int iterations = 0;
  bool converged = false;
};

/// damped Newton on the regularized energy
///   F_eps(u) = sum_e (w_e len_e^p / p) (eps^2 + ((u_i-u_j)/len_e)^2)^{p/2} - sum b_i u_i
/// with eps-continuation; the final stage shrinks eps until the true
/// (eps = 0) residual meets the target.
inline NewtonStats solve_newton(const VarProblem& pr, std::vector<double>& u, double target,
                                const SolverOptions& opt) {
  const ExtensionDomain& d = *pr.dom;
  const double p = pr.p;
  const int nu = static_cast<int>(pr.unknowns.size());
  NewtonStats stats;

  auto value = [&](const std::vector<double>& x, double eps) {
    double F = 0;
    for (const Edge& e : d.edges) {
      const double q = (x[e.i] - x[e.j]) / e.len;
      F += (e.w * std::pow(e.len, p) / p) * std::pow(eps * eps + q * q, p / 2.0);
    }
    for (int v : pr.unknowns) F -= pr.b[v] * x[v];
    return F;
  };

  auto grad = [&](const std::vector<double>& x, double eps, std::vector<double>& g) {
    g.assign(d.node_count(), 0.0);
    for (const Edge& e : d.edges) {
      const double q = (x[e.i] - x[e.j]) / e.len;
      const double t =
          e.w * std::pow(e.len, p - 1.0) * q * std::pow(eps * eps + q * q, (p - 2.0) / 2.0);
      g[e.i] += t;
      g[e.j] -= t;
    }
    for (int v = 0; v < d.node_count(); ++v) g[v] -= pr.b[v];
  };

  double qref = 1.0;
  for (const Edge& e : d.edges)
    qref = std::max(qref, std::fabs((u[e.i] - u[e.j]) / e.len));
  std::vector<double> schedule = opt.epsilon_schedule;
  if (schedule.empty())
    for (double f : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) schedule.push_back(f * qref);

  std::vector<double> g;
  std::vector<Eigen::Triplet<double>> trips;
  std::size_t stage = 0;
  double eps = schedule.front();
  double stage_best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  while (stats.iterations < opt.max_iter) {
    grad(u, eps, g);
    double gmax = 0;
    for (int v : pr.unknowns) gmax = std::max(gmax, std::fabs(g[v]));
    if (gmax < 0.9 * stage_best) {
      stage_best = gmax;
      stalled = 0;
    } else if (++stalled > 40) {
      gmax = 0;  // saturated in double precision at this eps; move on
    }
    const double stage_target = (stage + 1 < schedule.size()) ? std::max(target, 1e-3 * eps) : target;
    if (gmax <= stage_target) {
      stage_best = std::numeric_limits<double>::infinity();
      stalled = 0;
      if (stage + 1 < schedule.size()) {
        eps = schedule[++stage];
        continue;
      }
      // schedule exhausted: accept if the unregularized residual passes,
      // otherwise keep shrinking eps
      const double true_res = max_unknown_residual(pr, el_residual_vector(pr, u));
      if (true_res <= target || eps < 1e-22) {
        stats.converged = true_res <= target;
        return stats;
      }
      eps = std::max(eps / 100.0, 1e-23);
      continue;
    }

    trips.clear();
    for (const Edge& e : d.edges) {
      const double q = (u[e.i] - u[e.j]) / e.len;
      const double c = e.w * std::pow(e.len, p - 2.0) *
                       std::pow(eps * eps + q * q, (p - 4.0) / 2.0) *
                       (eps * eps + (p - 1.0) * q * q);
      const int si = pr.slot[e.i], sj = pr.slot[e.j];
      if (si >= 0) trips.emplace_back(si, si, c);
      if (sj >= 0) trips.emplace_back(sj, sj, c);
      if (si >= 0 && sj >= 0) {
        trips.emplace_back(si, sj, -c);
        trips.emplace_back(sj, si, -c);
      }
    }
    Eigen::SparseMatrix<double> H(nu, nu);
    H.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    require(ldlt.info() == Eigen::Success, errc::non_convergence,
            "Newton Hessian factorization failed");
    Eigen::VectorXd rhs(nu);
    for (int k = 0; k < nu; ++k) rhs[k] = -g[pr.unknowns[k]];
    Eigen::VectorXd step = ldlt.solve(rhs);

    const double F0 = value(u, eps);
    double slope = 0;
    for (int k = 0; k < nu; ++k) slope += -rhs[k] * step[k];  // g . step
    std::vector<double> trial = u;
    const double noise = 32.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(F0));
    if (-slope > noise) {
      double t = 1.0;
      for (int back = 0; back < 60; ++back) {
        for (int k = 0; k < nu; ++k) trial[pr.unknowns[k]] = u[pr.unknowns[k]] + t * step[k];
        if (value(trial, eps) <= F0 + 1e-4 * t * slope) break;
        t *= 0.5;
      }
    } else {
      // predicted decrease sits below the energy's evaluation noise:
      // the local model is trustworthy, take the plain Newton step
      for (int k = 0; k < nu; ++k) trial[pr.unknowns[k]] = u[pr.unknowns[k]] + step[k];
    }
    u = trial;
    ++stats.iterations;
  }
  stats.converged = false;
  return stats;
}

// ---- anisotropic (coordinate-grid) energy: first-order descent path ----

struct AnisoWork {
  int dim = 0;
  struct AxisEdge {
    int i, j, axis;
    double dx;  // x_i - x_j along axis
  };
  std::vector<AxisEdge> axis_edges;
  std::vector<std::vector<int>> cnt;  // per node, per axis
};

inline AnisoWork build_aniso(const ExtensionDomain& d, const DifferentialStructure& s) {
  AnisoWork w;
  w.dim = s.dim;
  const auto xs = detail::node_coords(d);
  require(static_cast<int>(xs[0].size()) == s.dim, errc::bad_config,
          "structure dimension does not match domain coordinates");
  require(static_cast<int>(s.A.size()) == d.node_count(), errc::bad_config,
          "anisotropic structure needs one matrix per node");
  double scale = 1.0;
  for (const auto& x : xs)
    for (double c : x) scale = std::max(scale, std::fabs(c));
  const double tol = 1e-9 * scale;
  w.cnt.assign(d.node_count(), std::vector<int>(s.dim, 0));
  for (const Edge& e : d.edges) {
    int axis = -1;
    bool aligned = true;
    for (int k = 0; k < s.dim; ++k)
      if (std::fabs(xs[e.i][k] - xs[e.j][k]) > tol) {
        if (axis >= 0) {
          aligned = false;
          break;
        }
        axis = k;
      }
    if (!aligned || axis < 0) continue;
    w.axis_edges.push_back({e.i, e.j, axis, xs[e.i][axis] - xs[e.j][axis]});
    ++w.cnt[e.i][axis];
    ++w.cnt[e.j][axis];
  }
  return w;
}

inline double aniso_value_grad(const VarProblem& pr, const AnisoWork& w,
                               const std::vector<double>& u, double eps,
                               std::vector<double>* grad_out) {
  const ExtensionDomain& d = *pr.dom;
  const DifferentialStructure& s = *pr.st;
  const double p = pr.p;
  const int n = d.node_count();
  std::vector<std::vector<double>> g(n, std::vector<double>(w.dim, 0.0));
  for (const auto& ae : w.axis_edges) {
    const double q = (u[ae.i] - u[ae.j]) / ae.dx;
    g[ae.i][ae.axis] += q / w.cnt[ae.i][ae.axis];
    g[ae.j][ae.axis] += q / w.cnt[ae.j][ae.axis];
  }
  double F = 0;
  std::vector<std::vector<double>> v(n);
  for (int node = 0; node < n; ++node) {
    if (d.mu[node] <= 0) {
      v[node].assign(w.dim, 0.0);
      continue;
    }
    auto h = apply_matrix(s.A[node], g[node]);
    double m2 = 0;
    for (double c : h) m2 += c * c;
    F += d.mu[node] / p * std::pow(eps * eps + m2, p / 2.0);
    if (grad_out) {
      const double fac = d.mu[node] * std::pow(eps * eps + m2, (p - 2.0) / 2.0);
      auto ah = apply_matrix(s.A[node], h);  // A^T A g, A symmetric
      for (double& c : ah) c *= fac;
      v[node] = std::move(ah);
    }
  }
  for (int node = 0; node < n; ++node) F -= pr.b[node] * u[node];
  if (grad_out) {
    grad_out->assign(n, 0.0);
    for (const auto& ae : w.axis_edges) {
      const double ci = v[ae.i].empty() ? 0.0 : v[ae.i][ae.axis] / (w.cnt[ae.i][ae.axis] * ae.dx);
      const double cj = v[ae.j].empty() ? 0.0 : v[ae.j][ae.axis] / (w.cnt[ae.j][ae.axis] * ae.dx);
      (*grad_out)[ae.i] += ci + cj;
      (*grad_out)[ae.j] -= ci + cj;
    }
    for (int node = 0; node < n; ++node) (*grad_out)[node] -= pr.b[node];
  }
  return F;
}

/// Barzilai-Borwein descent with Armijo fallback; used for anisotropic
/// structures and as the optional first-order method.
inline NewtonStats solve_descent(const VarProblem& pr, std::vector<double>& u, double target,
                                 const SolverOptions& opt) {
  const bool aniso = pr.st->kind == StructureKind::Anisotropic;
  AnisoWork w;
  if (aniso) w = build_aniso(*pr.dom, *pr.st);

  auto eval = [&](const std::vector<double>& x, double eps, std::vector<double>* g) {
    if (aniso) return aniso_value_grad(pr, w, x, eps, g);
    const ExtensionDomain& d = *pr.dom;
    double F = 0;
    if (g) g->assign(d.node_count(), 0.0);
    for (const Edge& e : d.edges) {
      const double q = (x[e.i] - x[e.j]) / e.len;
      F += (e.w * std::pow(e.len, pr.p) / pr.p) * std::pow(eps * eps + q * q, pr.p / 2.0);
      if (g) {
        const double t = e.w * std::pow(e.len, pr.p - 1.0) * q *
                         std::pow(eps * eps + q * q, (pr.p - 2.0) / 2.0);
        (*g)[e.i] += t;
        (*g)[e.j] -= t;
      }
    }
    for (int v = 0; v < pr.dom->node_count(); ++v) {
      F -= pr.b[v] * x[v];
      if (g) (*g)[v] -= pr.b[v];
    }
    return F;
  };

  std::vector<double> schedule = opt.epsilon_schedule;
  if (schedule.empty()) schedule = {1e-2, 1e-5, 1e-8, 1e-12};
  if (pr.p == 2.0) schedule = {0.0};

  NewtonStats stats;
  const int cap = opt.max_iter * 50;
  std::vector<double> g, gprev, uprev;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    double step = 1.0;
    eval(u, eps, &g);
    for (int it = 0; it < cap && stats.iterations < cap; ++it, ++stats.iterations) {
      double gmax = 0;
      for (int vtx : pr.unknowns) gmax = std::max(gmax, std::fabs(g[vtx]));
      if (gmax <= (stage + 1 < schedule.size() ? std::max(target, 1e-3 * eps) : target)) break;
      if (!uprev.empty()) {
        double sy = 0, ss = 0;
        for (int vtx : pr.unknowns) {
          const double sv = u[vtx] - uprev[vtx], yv = g[vtx] - gprev[vtx];
          sy += sv * yv;
          ss += sv * sv;
        }
        step = (sy > 0) ? ss / sy : step * 2.0;
        step = std::clamp(step, 1e-12, 1e12);
      }
      uprev = u;
      gprev = g;
      const double F0 = eval(u, eps, nullptr);
      double t = step;
      std::vector<double> trial = u;
      for (int back = 0; back < 80; ++back) {
        for (int vtx : pr.unknowns) trial[vtx] = u[vtx] - t * g[vtx];
        if (eval(trial, eps, nullptr) <= F0 - 1e-6 * t * gmax * gmax) break;
        t *= 0.5;
      }
      u = trial;
      eval(u, eps, &g);
    }
  }
  double gmax = 0;
  eval(u, 0.0, &g);
  for (int vtx : pr.unknowns) gmax = std::max(gmax, std::fabs(g[vtx]));
  stats.converged = gmax <= target;
  return stats;
}

inline Solution finish_solution(const VarProblem& pr, std::vector<double> u, int iterations,
                                bool converged, bool normalize_b0) {
  const ExtensionDomain& d = *pr.dom;
  Solution sol;
  if (normalize_b0) {
    const auto ball = b0_interior_nodes(d);
    double num = 0, den = 0;
    for (int v : ball) {
      num += u[v] * d.mu[v];
      den += d.mu[v];
    }
    const double mean = den > 0 ? num / den : 0.0;
    for (double& x : u) x -= mean;
  }
  // residuals against the unregularized pairing
  std::vector<double> r;
  if (pr.st->kind == StructureKind::Anisotropic) {
    AnisoWork w = build_aniso(d, *pr.st);
    aniso_value_grad(pr, w, u, 0.0, &r);
  } else {
    r = el_residual_vector(pr, u);
  }
  for (int v = 0; v < d.node_count(); ++v) {
    if (pr.fixed[v] && v != pr.pin_node) continue;
    const double res = std::fabs(r[v]);
    if (d.boundary_mask[v])
      sol.el_residual_boundary = std::max(sol.el_residual_boundary, res);
    else
      sol.el_residual_interior = std::max(sol.el_residual_interior, res);
  }
  sol.energy = p_energy(d, *pr.st, u, pr.p);
  {
    const auto ball = b0_interior_nodes(d);
    double num = 0, den = 0;
    for (int v : ball) {
      num += u[v] * d.mu[v];
      den += d.mu[v];
    }
    sol.b0_mean = den > 0 ? num / den : 0.0;
  }
  sol.u = std::move(u);
  sol.iterations = iterations;
  sol.converged = converged;
  return sol;
}

inline Solution run_problem(VarProblem& pr, const SolverOptions& opt, bool normalize_b0) {
  const ExtensionDomain& d = *pr.dom;
  index_unknowns(pr);
  check_anchored(pr);

  const double target = opt.tol * (1.0 + pr.data_scale);
  std::vector<double> u(d.node_count(), 0.0);
  for (int v = 0; v < d.node_count(); ++v)
    if (pr.fixed[v]) u[v] = pr.fixed_value[v];

  const bool aniso = pr.st->kind == StructureKind::Anisotropic;
  int iterations = 0;
  bool converged = false;

  if (!aniso) {
    // warm start from the p = 2 system (exact solve when p == 2)
    VarProblem lin = pr;
    lin.p = 2.0;
    solve_linear(lin, u);
    iterations = 1;
    converged = true;
  }
  if (opt.random_init) {
    double scale = 1.0;
    for (double x : u) scale = std::max(scale, std::fabs(x));
    for (std::size_t k = 0; k < pr.unknowns.size(); ++k)
      u[pr.unknowns[k]] = scale * opt.rng.symmetric(k);
    converged = false;
  }

  if (pr.p != 2.0 || aniso || opt.method == SolverOptions::Method::Descent || opt.random_init) {
    NewtonStats stats;
    const bool use_descent = aniso || opt.method == SolverOptions::Method::Descent;
    if (use_descent)
      stats = solve_descent(pr, u, target, opt);
    else
      stats = solve_newton(pr, u, target, opt);
    iterations += stats.iterations;
    converged = stats.converged;
    if (!converged)
      raise(errc::non_convergence,
            "solver stalled after " + std::to_string(iterations) +
                " iterations (target residual " + std::to_string(target) + ")");
  }
  return finish_solution(pr, std::move(u), iterations, converged, normalize_b0);
}

}  // namespace detail

/// p-harmonic Dirichlet extension: minimizes the p-energy subject to the
/// given values on the active boundary nodes (free and interior nodes
/// relax; free boundary nodes see the natural zero-Neumann condition).
inline Solution solve_dirichlet(const ExtensionDomain& domain, const DifferentialStructure& st,
                                double p, const std::vector<double>& boundary_values,
                                const SolverOptions& options = {}) {
  require(p > 1.0, errc::bad_config, "p must exceed 1");
  require(!domain.boundary_ids.empty(), errc::bad_config, "domain has no active boundary");
  require(boundary_values.size() == domain.boundary_ids.size(), errc::bad_config,
          "need one value per active boundary node");
  detail::VarProblem pr;
  pr.dom = &domain;
  pr.st = &st;
  pr.p = p;
  pr.fixed.assign(domain.node_count(), 0);
  pr.fixed_value.assign(domain.node_count(), 0.0);
  pr.b.assign(domain.node_count(), 0.0);
  for (std::size_t k = 0; k < domain.boundary_ids.size(); ++k) {
    pr.fixed[domain.boundary_ids[k]] = 1;
    pr.fixed_value[domain.boundary_ids[k]] = boundary_values[k];
    pr.data_scale = std::max(pr.data_scale, std::fabs(boundary_values[k]));
  }
  return detail::run_problem(pr, options, /*normalize_b0=*/false);
}

/// Neumann problem: minimizes I(v) = int |grad v|^p dmu - p int v f dnu.
/// The gauge is fixed by pinning one node during optimization and the
/// result is normalized to zero mu-mean on the reference ball B_0.
inline Solution solve_neumann(const ExtensionDomain& domain, const DifferentialStructure& st,
                              double p, const BoundaryData& data,
                              const SolverOptions& options = {}) {
  require(p > 1.0, errc::bad_config, "p must exceed 1");
  require(static_cast<int>(data.f.size()) == domain.n_boundary, errc::bad_config,
          "Neumann data must cover the boundary space");
  double mean = 0, abs_mass = 0, nu_active = 0;
  for (int i : domain.boundary_ids) {
    mean += data.f[i] * domain.z.nu[i];
    abs_mass += std::fabs(data.f[i]) * domain.z.nu[i];
    nu_active += domain.z.nu[i];
  }
  // numerically-zero means (e.g. chained operator output) are recentred;
  // anything larger is rejected
  require(std::fabs(mean) <= 1e-8 * std::max(abs_mass, 1e-300) || abs_mass == 0.0,
          errc::nonzero_mean, "Neumann data must have zero nu-mean over the active boundary");
  const double shift = abs_mass > 0 ? mean / nu_active : 0.0;

  detail::VarProblem pr;
  pr.dom = &domain;
  pr.st = &st;
  pr.p = p;
  pr.fixed.assign(domain.node_count(), 0);
  pr.fixed_value.assign(domain.node_count(), 0.0);
  pr.b.assign(domain.node_count(), 0.0);
  for (int i : domain.boundary_ids) {
    pr.b[i] = (data.f[i] - shift) * domain.z.nu[i];
    pr.data_scale = std::max(pr.data_scale, std::fabs(data.f[i]));
  }
  // gauge pin; its own EL equation is implied by the others at a zero-mean optimum
  pr.fixed[domain.base_point] = 1;
  pr.fixed_value[domain.base_point] = 0.0;
  pr.pin_node = domain.base_point;
  return detail::run_problem(pr, options, /*normalize_b0=*/true);
}

struct ExhaustionReport {
  std::vector<int> ks;
  std::vector<double> radii;
  std::vector<double> f_tail_norms;  // ||f - f_k||_{L^{p'}(nu_J)}
  std::vector<double> increments;    // ||grad u_{k+1} - grad u_k||_{L^p(mu)}
  bool cauchy = false;
  Solution final;
};

/// Exhaustion scheme for data that need not be compactly supported:
/// f_k = f 1_{B_k} - (1/nu(B_0)) [int_{B_k} f dnu] 1_{B_0}, solved on the
/// k-truncated domain with the w_k = u_k - (u_k)_{B_0} normalization.
inline ExhaustionReport solve_neumann_exhaustion(const ExtensionDomain& domain,
                                                 const DifferentialStructure& st, double p,
                                                 const BoundaryData& data, int k_max,
                                                 const SolverOptions& options = {},
                                                 double cauchy_ratio = 1e-3) {
  require(k_max >= 1, errc::bad_config, "k_max must be >= 1");
  const MetricMeasureSpace& z = domain.z;
  const int x0 = domain.col_of[domain.base_point];
  const auto b0 = b0_boundary_cols(domain);
  double nu_b0 = 0;
  for (int i : b0) nu_b0 += z.nu[i];

  const FractionalParams& fp = domain.params;
  ExhaustionReport rep;
  std::vector<std::vector<double>> us;
  for (int k = 1; k <= k_max; ++k) {
    const double radius = std::ldexp(domain.r0, k);
    std::vector<double> fk(z.n, 0.0);
    double inner = 0;
    for (int i = 0; i < z.n; ++i)
      if (z.d(x0, i) <= radius) {
        fk[i] = data.f[i];
        inner += data.f[i] * z.nu[i];
      }
    for (int i : b0) fk[i] -= inner / nu_b0;

    std::vector<double> tail(z.n);
    for (int i = 0; i < z.n; ++i) tail[i] = data.f[i] - fk[i];
    rep.ks.push_back(k);
    rep.radii.push_back(radius);
    rep.f_tail_norms.push_back(lp_conj_j_norm(z, tail, data.J, fp.p_conj));

    ExtensionDomain dom_k = truncate(domain, k);
    BoundaryData bk = make_boundary_data(z, fk, data.x0, fp);
    Solution sk = solve_neumann(dom_k, st, p, bk, options);
    us.push_back(sk.u);
    if (k == k_max) rep.final = std::move(sk);
  }
  for (int k = 0; k + 1 < k_max; ++k) {
    std::vector<double> diff(us[k].size());
    for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = us[k + 1][v] - us[k][v];
    rep.increments.push_back(std::pow(p_energy(domain, st, diff, p), 1.0 / p));
  }
  rep.cauchy = !rep.increments.empty();
  for (std::size_t k = 0; k + 1 < rep.increments.size(); ++k)
    if (rep.increments[k + 1] >= rep.increments[k]) rep.cauchy = false;
  if (!rep.increments.empty() && rep.increments.back() > cauchy_ratio * rep.increments.front())
    rep.cauchy = false;
  return rep;
}

struct AprioriReport {
  double energy = 0;
  double data_term = 0;  // ||f||_{nu_J}^{p'}
  double ratio = 0;
  bool trivial = false;
  bool violated = false;
  double bound = std::numeric_limits<double>::infinity();
};

/// energy / ||f||_{nu_J}^{p'}; flags violation of a configured bound
inline AprioriReport a_priori_check(const Solution& sol, const BoundaryData& data, double p_conj,
                                    double bound = std::numeric_limits<double>::infinity()) {
  AprioriReport rep;
  rep.energy = sol.energy;
  rep.data_term = std::pow(data.norm_J, p_conj);
  rep.bound = bound;
  if (rep.data_term == 0.0) {
    rep.trivial = true;
    rep.ratio = 0.0;
    return rep;
  }
  rep.ratio = rep.energy / rep.data_term;
  rep.violated = rep.ratio > bound;
  return rep;
}

}  // namespace fraclap
