#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <span>
#include <vector>

#include "fraclap/extension.hpp"

namespace fraclap {

inline double signed_power(double t, double p) {
  // |t|^{p-2} t, extended by 0 at t = 0 (integrable singularity for p < 2)
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::fabs(t), p - 1.0), t);
}

enum class StructureKind { Isotropic, Anisotropic };

/// First-order differential structure on a domain. The isotropic
/// structure works on any weighted graph; the anisotropic one applies a
/// per-node SPD matrix to coordinate gradients and needs coords on Z.
struct DifferentialStructure {
  StructureKind kind = StructureKind::Isotropic;
  int dim = 0;
  std::vector<std::vector<double>> A;  // per node, row-major dim x dim

  static DifferentialStructure isotropic() { return {}; }

  static DifferentialStructure anisotropic(std::vector<std::vector<double>> matrices, int dim) {
    DifferentialStructure s;
    s.kind = StructureKind::Anisotropic;
    s.dim = dim;
    for (const auto& m : matrices) {
      require(static_cast<int>(m.size()) == dim * dim, errc::bad_config,
              "anisotropic matrix has wrong size");
      // symmetry + positive definiteness via an in-place Cholesky probe
      std::vector<double> c = m;
      for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
          require(std::fabs(m[i * dim + j] - m[j * dim + i]) <= 1e-12 * (1.0 + std::fabs(m[i * dim + j])),
                  errc::bad_config, "anisotropic matrix must be symmetric");
      for (int k = 0; k < dim; ++k) {
        for (int j = 0; j < k; ++j) c[k * dim + k] -= c[k * dim + j] * c[k * dim + j];
        require(c[k * dim + k] > 0.0, errc::bad_config, "anisotropic matrix must be positive definite");
        c[k * dim + k] = std::sqrt(c[k * dim + k]);
        for (int i = k + 1; i < dim; ++i) {
          for (int j = 0; j < k; ++j) c[i * dim + k] -= c[i * dim + j] * c[k * dim + j];
          c[i * dim + k] /= c[k * dim + k];
        }
      }
    }
    s.A = std::move(matrices);
    return s;
  }
};

struct GradientField {
  std::vector<double> edge_quotient;          // (u_i - u_j)/len per stored edge
  std::vector<double> node_mag;               // |grad u| per node
  std::vector<std::vector<double>> node_vec;  // anisotropic only
};

namespace detail {

/// weight share of an edge toward each endpoint's node magnitude: edges
/// split evenly between carriers of mass; massless (layer-0) endpoints
/// push their share to the other side so that
/// sum_i mu_i |grad u(i)|^p == sum_e w_e |u_i - u_j|^p exactly.
inline std::pair<double, double> edge_shares(const ExtensionDomain& d, const Edge& e) {
  const bool mi = d.mu[e.i] > 0, mj = d.mu[e.j] > 0;
  if (mi && mj) return {0.5, 0.5};
  if (mi) return {1.0, 0.0};
  if (mj) return {0.0, 1.0};
  return {0.0, 0.0};
}

inline std::vector<std::vector<double>> node_coords(const ExtensionDomain& d) {
  require(d.z.has_coords(), errc::missing_coords,
          "anisotropic structures need coordinates on the boundary space");
  const int base = static_cast<int>(d.z.coords[0].size());
  std::vector<std::vector<double>> out(d.node_count());
  for (int v = 0; v < d.node_count(); ++v) {
    out[v] = d.z.coords[d.col_of[v]];
    out[v].push_back(d.y_of[v]);
    (void)base;
  }
  return out;
}

/// coordinate gradient per node from axis-aligned incident edges
/// (central where both sides exist, one-sided at grid edges)
inline std::vector<std::vector<double>> coordinate_gradients(const ExtensionDomain& d,
                                                             std::span<const double> u, int dim) {
  const auto xs = node_coords(d);
  require(static_cast<int>(xs[0].size()) == dim, errc::bad_config,
          "structure dimension does not match domain coordinates");
  std::vector<std::vector<double>> g(d.node_count(), std::vector<double>(dim, 0.0));
  std::vector<std::vector<int>> cnt(d.node_count(), std::vector<int>(dim, 0));
  double scale = 1.0;
  for (const auto& x : xs)
    for (double c : x) scale = std::max(scale, std::fabs(c));
  const double tol = 1e-9 * scale;
  for (const Edge& e : d.edges) {
    int axis = -1;
    bool aligned = true;
    for (int k = 0; k < dim; ++k) {
      if (std::fabs(xs[e.i][k] - xs[e.j][k]) > tol) {
        if (axis >= 0) {
          aligned = false;
          break;
        }
        axis = k;
      }
    }
    if (!aligned || axis < 0) continue;
    const double dx = xs[e.i][axis] - xs[e.j][axis];
    const double q = (u[e.i] - u[e.j]) / dx;
    g[e.i][axis] += q;
    ++cnt[e.i][axis];
    g[e.j][axis] += q;
    ++cnt[e.j][axis];
  }
  for (int v = 0; v < d.node_count(); ++v)
    for (int k = 0; k < dim; ++k)
      if (cnt[v][k] > 0) g[v][k] /= cnt[v][k];
  return g;
}

inline std::vector<double> apply_matrix(const std::vector<double>& A, const std::vector<double>& x) {
  const int dim = static_cast<int>(x.size());
  std::vector<double> y(dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) y[i] += A[i * dim + j] * x[j];
  return y;
}

inline double norm2(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

inline GradientField gradient(const ExtensionDomain& d, const DifferentialStructure& s,
                              std::span<const double> u) {
  GradientField f;
  f.edge_quotient.resize(d.edges.size());
  for (std::size_t e = 0; e < d.edges.size(); ++e)
    f.edge_quotient[e] = (u[d.edges[e].i] - u[d.edges[e].j]) / d.edges[e].len;

  const int n = d.node_count();
  f.node_mag.assign(n, 0.0);
  if (s.kind == StructureKind::Anisotropic) {
    auto g = detail::coordinate_gradients(d, u, s.dim);
    f.node_vec.resize(n);
    for (int v = 0; v < n; ++v) {
      f.node_vec[v] = detail::apply_matrix(s.A[v], g[v]);
      f.node_mag[v] = detail::norm2(f.node_vec[v]);
    }
    return f;
  }

  const double p = d.params.p;
  std::vector<double> acc(n, 0.0), fallback_num(n, 0.0), fallback_den(n, 0.0);
  for (std::size_t e = 0; e < d.edges.size(); ++e) {
    const Edge& ed = d.edges[e];
    const double term = ed.w * std::pow(std::fabs(u[ed.i] - u[ed.j]), p);
    auto [si, sj] = detail::edge_shares(d, ed);
    acc[ed.i] += si * term;
    acc[ed.j] += sj * term;
    const double lp = ed.w * std::pow(ed.len, p);
    fallback_num[ed.i] += lp * std::pow(std::fabs(f.edge_quotient[e]), p);
    fallback_num[ed.j] += lp * std::pow(std::fabs(f.edge_quotient[e]), p);
    fallback_den[ed.i] += lp;
    fallback_den[ed.j] += lp;
  }
  for (int v = 0; v < n; ++v) {
    if (d.mu[v] > 0)
      f.node_mag[v] = std::pow(acc[v] / d.mu[v], 1.0 / p);
    else if (fallback_den[v] > 0)  // massless node: length-weighted mean quotient, diagnostic only
      f.node_mag[v] = std::pow(fallback_num[v] / fallback_den[v], 1.0 / p);
  }
  return f;
}

inline double p_energy(const ExtensionDomain& d, const DifferentialStructure& s,
                       std::span<const double> u, double p) {
  require(p > 1.0, errc::bad_config, "p must exceed 1");
  if (s.kind == StructureKind::Anisotropic) {
    auto g = detail::coordinate_gradients(d, u, s.dim);
    double sum = 0;
    for (int v = 0; v < d.node_count(); ++v) {
      if (d.mu[v] <= 0) continue;
      sum += d.mu[v] * std::pow(detail::norm2(detail::apply_matrix(s.A[v], g[v])), p);
    }
    return sum;
  }
  double sum = 0;
  for (const Edge& e : d.edges) sum += e.w * std::pow(std::fabs(u[e.i] - u[e.j]), p);
  return sum;
}

/// Euler-Lagrange pairing: sum_e w_e |u_i-u_j|^{p-2}(u_i-u_j)(v_i-v_j).
/// Satisfies el_form(u,u) = p_energy(u,p) and el_form(u, const) = 0.
inline double el_form(const ExtensionDomain& d, const DifferentialStructure& s,
                      std::span<const double> u, std::span<const double> v, double p) {
  require(p > 1.0, errc::bad_config, "p must exceed 1");
  if (s.kind == StructureKind::Anisotropic) {
    auto gu = detail::coordinate_gradients(d, u, s.dim);
    auto gv = detail::coordinate_gradients(d, v, s.dim);
    double sum = 0;
    for (int node = 0; node < d.node_count(); ++node) {
      if (d.mu[node] <= 0) continue;
      auto au = detail::apply_matrix(s.A[node], gu[node]);
      auto av = detail::apply_matrix(s.A[node], gv[node]);
      const double mag = detail::norm2(au);
      if (mag == 0.0) continue;
      double dot = 0;
      for (std::size_t k = 0; k < au.size(); ++k) dot += au[k] * av[k];
      sum += d.mu[node] * std::pow(mag, p - 2.0) * dot;
    }
    return sum;
  }
  double sum = 0;
  for (const Edge& e : d.edges) sum += e.w * signed_power(u[e.i] - u[e.j], p) * (v[e.i] - v[e.j]);
  return sum;
}

/// (|z|^{p-2} z - |w|^{p-2} w) . (z - w); nonnegative for p > 1.
inline double monotonicity_gap(std::span<const double> z, std::span<const double> w, double p) {
  require(z.size() == w.size(), errc::bad_config, "vectors must share a dimension");
  require(p > 1.0, errc::bad_config, "p must exceed 1");
  double nz = 0, nw = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    nz += z[k] * z[k];
    nw += w[k] * w[k];
  }
  nz = std::sqrt(nz);
  nw = std::sqrt(nw);
  const double fz = nz == 0.0 ? 0.0 : std::pow(nz, p - 2.0);
  const double fw = nw == 0.0 ? 0.0 : std::pow(nw, p - 2.0);
  double dot = 0;
  for (std::size_t k = 0; k < z.size(); ++k) dot += (fz * z[k] - fw * w[k]) * (z[k] - w[k]);
  return dot;
}

}  // namespace fraclap
