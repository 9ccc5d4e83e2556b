#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "fraclap/params.hpp"
#include "fraclap/space.hpp"

namespace fraclap {

struct Edge {
  int i = 0, j = 0;
  double len = 0;  // metric length
  double w = 0;    // conductance; the p-energy is sum_e w |u_i - u_j|^p
};

/// Horizontal wiring rule for the product construction.
///   FixedRadius: every layer carries the same neighbor graph, thresholded
///     at the first layer scale. Keeps the per-layer horizontal operators
///     spectrally aligned across heights (default).
///   LayerRadius: threshold grows with the layer height, so coarse layers
///     couple at long range.
///   Knn: k nearest neighbors per layer.
enum class Connectivity { FixedRadius, LayerRadius, Knn };

/// Discrete weighted extension domain over a boundary space Z: one column
/// of nodes per boundary point at heights 0 = y_0 < y_1 < ... < y_M, with
/// the |y|^a-weighted node measure. Node ids are layer-major:
/// id = layer * n_boundary + column. Layer-0 nodes carry mu = 0 and are
/// the (active or free) boundary.
struct ExtensionDomain {
  MetricMeasureSpace z;
  FractionalParams params;
  int n_boundary = 0;
  int layers = 0;
  std::vector<double> heights;  // y_1..y_M
  std::vector<double> mu;       // per node; 0 on layer 0
  std::vector<int> layer_of;
  std::vector<int> col_of;
  std::vector<double> y_of;
  std::vector<char> boundary_mask;  // active boundary flag per node
  std::vector<int> boundary_ids;
  std::vector<int> free_ids;  // layer-0 nodes reclassified by truncation
  std::vector<Edge> edges;
  int base_point = 0;  // node id of x0 (layer 0, so id == column)
  double r0 = 1.0;     // reference-ball radius around x0
  double horizontal_radius = 0.0;
  Connectivity connectivity = Connectivity::FixedRadius;
  int knn_k = 0;
  bool dampened = false;

  int node_count() const { return static_cast<int>(mu.size()); }
  bool is_interior(int id) const { return layer_of[id] > 0; }

  /// product metric d((x,s),(x',t)) = d_Z(x,x') + |s - t|
  double node_distance(int u, int v) const {
    return z.d(col_of[u], col_of[v]) + std::fabs(y_of[u] - y_of[v]);
  }

  /// mu-mass of the open product-metric ball around any node, interior only
  double mu_ball_interior(int center, double r) const {
    double t = 0;
    for (int v = 0; v < node_count(); ++v)
      if (layer_of[v] > 0 && node_distance(center, v) < r) t += mu[v];
    return t;
  }

  double mu_total() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }
};

struct Adjacency {
  std::vector<int> offset;   // node_count+1
  std::vector<int> nbr;      // neighbor node
  std::vector<int> edge_id;  // parallel to nbr
};

inline Adjacency build_adjacency(const ExtensionDomain& d) {
  const int n = d.node_count();
  Adjacency adj;
  adj.offset.assign(n + 1, 0);
  for (const Edge& e : d.edges) {
    ++adj.offset[e.i + 1];
    ++adj.offset[e.j + 1];
  }
  for (int i = 0; i < n; ++i) adj.offset[i + 1] += adj.offset[i];
  adj.nbr.resize(adj.offset[n]);
  adj.edge_id.resize(adj.offset[n]);
  std::vector<int> cursor(adj.offset.begin(), adj.offset.end() - 1);
  for (int e = 0; e < static_cast<int>(d.edges.size()); ++e) {
    const Edge& ed = d.edges[e];
    adj.nbr[cursor[ed.i]] = ed.j;
    adj.edge_id[cursor[ed.i]++] = e;
    adj.nbr[cursor[ed.j]] = ed.i;
    adj.edge_id[cursor[ed.j]++] = e;
  }
  return adj;
}

namespace detail {

/// smallest threshold radius under which the distance graph of Z is connected
inline double connect_radius(const MetricMeasureSpace& z) {
  std::vector<double> ds;
  for (int i = 0; i < z.n; ++i)
    for (int j = i + 1; j < z.n; ++j) ds.push_back(z.d(i, j));
  std::sort(ds.begin(), ds.end());
  ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
  std::vector<int> parent(z.n);
  auto reset = [&] { std::iota(parent.begin(), parent.end(), 0); };
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (double r : ds) {
    reset();
    int comps = z.n;
    for (int i = 0; i < z.n; ++i)
      for (int j = i + 1; j < z.n; ++j)
        if (z.d(i, j) <= r) {
          int a = find(i), b = find(j);
          if (a != b) {
            parent[a] = b;
            --comps;
          }
        }
    if (comps == 1) return r;
  }
  return ds.empty() ? 0.0 : ds.back();
}

inline double power_integral(double t, double a) {
  // antiderivative of |y|^a on [0,t], t >= 0
  return std::pow(t, a + 1.0) / (a + 1.0);
}

}  // namespace detail

/// Builds the weighted product extension of Z with M geometric layers.
/// Heights follow y_m = y_min * rho^{m-1}; if that ladder would overshoot
/// Y_max the grading ratio is reduced so that exactly M layers land on
/// Y_max. Node measure is nu_i times the |y|^a mass of the node's height
/// cell; vertical conductances carry the exact slab mass so the two-node
/// energy term reproduces the weighted column energy.
inline ExtensionDomain build_product_extension(const MetricMeasureSpace& z,
                                               const FractionalParams& params, int M, double y_min,
                                               double rho, double Y_max,
                                               Connectivity connectivity = Connectivity::FixedRadius,
                                               int knn_k = 0, int x0 = -1) {
  require(params.a > -1.0 && params.a < 1.0, errc::weight_out_of_range,
          "weight exponent a = 1 - p*theta must lie in (-1,1), got " + std::to_string(params.a));
  require(rho > 1.0, errc::degenerate_grading, "grading ratio rho must exceed 1");
  require(M >= 2, errc::bad_config, "need at least two layers");
  require(y_min > 0.0, errc::bad_config, "y_min must be positive");
  require(Y_max >= y_min, errc::bad_config, "Y_max must be >= y_min");

  ExtensionDomain d;
  d.z = z;
  d.params = params;
  d.n_boundary = z.n;
  d.layers = M;
  d.connectivity = connectivity;
  d.knn_k = knn_k;

  double g = rho;
  const bool regrade = y_min * std::pow(rho, M - 1) > Y_max;
  if (regrade) g = std::pow(Y_max / y_min, 1.0 / (M - 1));
  d.heights.resize(M);
  for (int m = 1; m <= M; ++m) d.heights[m - 1] = y_min * std::pow(g, m - 1);
  if (regrade) d.heights[M - 1] = Y_max;  // land exactly on the cap

  const int n = z.n;
  const int nodes = n * (M + 1);
  d.mu.assign(nodes, 0.0);
  d.layer_of.resize(nodes);
  d.col_of.resize(nodes);
  d.y_of.resize(nodes);
  for (int m = 0; m <= M; ++m)
    for (int i = 0; i < n; ++i) {
      const int id = m * n + i;
      d.layer_of[id] = m;
      d.col_of[id] = i;
      d.y_of[id] = (m == 0) ? 0.0 : d.heights[m - 1];
    }

  const double a = params.a;
  auto ipow = [&](double t) { return detail::power_integral(t, a); };
  // height cells tile [0, y_M]: layer 1 absorbs [0, y_1] so the singular
  // weight near y=0 is integrated in closed form
  std::vector<double> cell(M + 1, 0.0);
  for (int m = 1; m <= M; ++m) {
    const double lo = (m == 1) ? 0.0 : 0.5 * (d.heights[m - 2] + d.heights[m - 1]);
    const double hi = (m == M) ? d.heights[M - 1] : 0.5 * (d.heights[m - 1] + d.heights[m]);
    cell[m] = ipow(hi) - ipow(lo);
  }
  for (int m = 1; m <= M; ++m)
    for (int i = 0; i < n; ++i) d.mu[m * n + i] = z.nu[i] * cell[m];

  const double kappa = spectral_calibration(params);
  const double p = params.p;

  for (int m = 0; m < M; ++m) {
    const double ylo = (m == 0) ? 0.0 : d.heights[m - 1];
    const double yhi = d.heights[m];
    const double len = yhi - ylo;
    const double slab = ipow(yhi) - ipow(ylo);
    for (int i = 0; i < n; ++i)
      d.edges.push_back({m * n + i, (m + 1) * n + i, len, kappa * z.nu[i] * slab / std::pow(len, p)});
  }

  const double rc = detail::connect_radius(z);
  auto hmean = [](double x, double y) { return 2.0 * x * y / (x + y); };
  if (connectivity == Connectivity::Knn) {
    require(knn_k >= 1, errc::bad_config, "knn connectivity needs k >= 1");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<double, int>> cand;
      for (int j = 0; j < n; ++j)
        if (j != i) cand.emplace_back(z.d(i, j), j);
      std::sort(cand.begin(), cand.end());
      for (int k = 0; k < std::min<int>(knn_k, n - 1); ++k)
        pairs.emplace_back(std::min(i, cand[k].second), std::max(i, cand[k].second));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    d.horizontal_radius = rc;
    for (int m = 1; m <= M; ++m)
      for (auto [i, j] : pairs) {
        const double len = z.d(i, j);
        d.edges.push_back({m * n + i, m * n + j, len,
                           kappa * cell[m] * hmean(z.nu[i], z.nu[j]) / std::pow(len, p)});
      }
  } else {
    d.horizontal_radius = std::max(d.heights[0], rc);
    for (int m = 1; m <= M; ++m) {
      double radius = (connectivity == Connectivity::LayerRadius)
                          ? std::max(d.heights[m - 1], rc)
                          : d.horizontal_radius;
      radius *= 1.0 + 1e-9;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double len = z.d(i, j);
          if (len <= radius)
            d.edges.push_back({m * n + i, m * n + j, len,
                               kappa * cell[m] * hmean(z.nu[i], z.nu[j]) / std::pow(len, p)});
        }
    }
  }

  if (x0 < 0) {
    // base point: maximizer of the unit-ball mass, lowest index on ties
    double best = -1.0;
    x0 = 0;
    for (int i = 0; i < n; ++i) {
      const double m = z.nu_ball(i, 1.0);
      if (m > best + 1e-15) {
        best = m;
        x0 = i;
      }
    }
  }
  require(x0 >= 0 && x0 < n, errc::bad_config, "base point out of range");
  d.base_point = x0;

  const int want = std::max(4, (n + 15) / 16);
  std::vector<double> dx0(n);
  for (int i = 0; i < n; ++i) dx0[i] = z.d(x0, i);
  std::vector<double> sorted = dx0;
  std::sort(sorted.begin(), sorted.end());
  d.r0 = std::max({1.0, sorted[std::min(want, n) - 1], d.heights[0]});

  d.boundary_ids.resize(n);
  std::iota(d.boundary_ids.begin(), d.boundary_ids.end(), 0);
  d.boundary_mask.assign(nodes, 0);
  for (int i = 0; i < n; ++i) d.boundary_mask[i] = 1;
  return d;
}

/// Graph distance from every node to the nearest active boundary node
/// (multi-source Dijkstra along edge lengths).
inline std::vector<double> boundary_graph_distance(const ExtensionDomain& d) {
  const int n = d.node_count();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  for (int b : d.boundary_ids) {
    dist[b] = 0.0;
    pq.push({0.0, b});
  }
  Adjacency adj = build_adjacency(d);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    for (int t = adj.offset[u]; t < adj.offset[u + 1]; ++t) {
      const int v = adj.nbr[t];
      const double alt = du + d.edges[adj.edge_id[t]].len;
      if (alt < dist[v]) {
        dist[v] = alt;
        pq.push({alt, v});
      }
    }
  }
  return dist;
}

/// Conformal dampening phi(t) = min(1, t^{-beta}) applied at graph
/// distance t from the active boundary: edge lengths scale by phi at the
/// edge midpoint and node measures by phi^p, while conductances are kept,
/// so the discrete p-energy of every node function is unchanged exactly.
inline ExtensionDomain dampen(const ExtensionDomain& domain, double beta, double Q_mu) {
  require(beta * domain.params.p > Q_mu, errc::beta_too_small,
          "need beta*p > Q_mu (beta*p = " + std::to_string(beta * domain.params.p) +
              ", Q_mu = " + std::to_string(Q_mu) + ")");
  ExtensionDomain out = domain;
  out.dampened = true;
  out.params.beta = beta;
  const std::vector<double> dist = boundary_graph_distance(domain);
  auto phi = [&](double t) { return t <= 1.0 ? 1.0 : std::pow(t, -beta); };
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    const double mid = 0.5 * (dist[out.edges[e].i] + dist[out.edges[e].j]);
    out.edges[e].len = domain.edges[e].len * phi(mid);
  }
  const double p = domain.params.p;
  for (int v = 0; v < out.node_count(); ++v) out.mu[v] = domain.mu[v] * std::pow(phi(dist[v]), p);
  return out;
}

/// Reclassifies boundary nodes outside the closed ball of radius 2^k * r0
/// around the base point as free (natural, zero-Neumann) nodes. The graph
/// itself is unchanged; applying the same k twice is the identity.
inline ExtensionDomain truncate(const ExtensionDomain& domain, int k) {
  require(k >= 0, errc::bad_config, "truncation index k must be >= 0");
  ExtensionDomain out = domain;
  const double radius = std::ldexp(out.r0, k);  // 2^k * r0
  const int x0 = out.col_of[out.base_point];
  out.boundary_ids.clear();
  out.free_ids.clear();
  for (int i = 0; i < out.n_boundary; ++i) {
    const bool keep = out.z.d(x0, i) <= radius;
    out.boundary_mask[i] = keep ? 1 : 0;
    (keep ? out.boundary_ids : out.free_ids).push_back(i);
  }
  return out;
}

/// interior nodes of the reference ball B_0 (used for solution normalization)
inline std::vector<int> b0_interior_nodes(const ExtensionDomain& d) {
  std::vector<int> out;
  for (int v = 0; v < d.node_count(); ++v)
    if (d.layer_of[v] > 0 && d.node_distance(d.base_point, v) <= d.r0) out.push_back(v);
  return out;
}

/// boundary columns of the reference ball B_0
inline std::vector<int> b0_boundary_cols(const ExtensionDomain& d) {
  std::vector<int> out;
  const int x0 = d.col_of[d.base_point];
  for (int i = 0; i < d.n_boundary; ++i)
    if (d.z.d(x0, i) <= d.r0) out.push_back(i);
  return out;
}

struct CodimReport {
  double Theta = 0;
  double ratio_min = 0;
  double ratio_max = 0;
  double C = 0;  // max(ratio_max, 1/ratio_min)
  int samples = 0;
  std::vector<double> radii;
};

/// Extremes of nu(B(xi,r)) * r^Theta / mu(B(xi,r) cap Omega) over boundary
/// centers and dyadic radii below 2*diam(Z). Radii whose ball holds no
/// interior mass are skipped.
inline CodimReport check_codimension(const MetricMeasureSpace& z, const ExtensionDomain& domain,
                                     double Theta, double p) {
  require(Theta > 0.0 && Theta < p, errc::invalid_theta,
          "codimension requires 0 < Theta < p, got Theta = " + std::to_string(Theta));
  require(domain.layers >= 1 && domain.node_count() > domain.n_boundary, errc::empty_interior,
          "extension domain has no interior nodes");
  bool any_interior_mass = false;
  for (int v = 0; v < domain.node_count(); ++v)
    if (domain.layer_of[v] > 0 && domain.mu[v] > 0) any_interior_mass = true;
  require(any_interior_mass, errc::empty_interior, "extension domain carries no interior mass");
  require(z.n == domain.n_boundary, errc::bad_config,
          "boundary of the domain must coincide with Z");

  CodimReport rep;
  rep.Theta = Theta;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = 0;
  const double top = 2.0 * z.diameter();
  for (double r = top / 2; r > 0; r /= 2) {
    bool used = false;
    for (int xi = 0; xi < z.n; ++xi) {
      const double nub = z.nu_ball(xi, r);
      const double mub = domain.mu_ball_interior(xi, r);  // boundary node id == column
      if (nub <= 0 || mub <= 0) continue;
      const double ratio = nub * std::pow(r, Theta) / mub;
      rep.ratio_min = std::min(rep.ratio_min, ratio);
      rep.ratio_max = std::max(rep.ratio_max, ratio);
      ++rep.samples;
      used = true;
    }
    if (used) rep.radii.push_back(r);
    if (r < 0.5 * domain.heights[0]) break;
  }
  require(rep.samples > 0, errc::empty_interior, "no usable (center, radius) samples");
  rep.C = std::max(rep.ratio_max, 1.0 / rep.ratio_min);
  return rep;
}

}  // namespace fraclap
