#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fraclap/error.hpp"

namespace fraclap {

/// Finite metric measure space: a point set with a full distance matrix
/// and a positive weight per point. Balls are open throughout,
/// B(x,r) = { y : d(x,y) < r }.
struct MetricMeasureSpace {
  int n = 0;
  std::vector<double> dist;                 // n*n, row-major
  std::vector<double> nu;                   // n positive weights
  std::vector<std::vector<double>> coords;  // optional, n rows when present
  std::vector<std::string> labels;          // optional

  double d(int i, int j) const { return dist[static_cast<std::size_t>(i) * n + j]; }

  double diameter() const {
    double m = 0;
    for (double v : dist) m = std::max(m, v);
    return m;
  }

  double min_positive_distance() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) m = std::min(m, d(i, j));
    return m;
  }

  double nu_total() const {
    double t = 0;
    for (double v : nu) t += v;
    return t;
  }

  /// total weight of the open ball around point c
  double nu_ball(int c, double r) const {
    double t = 0;
    for (int j = 0; j < n; ++j)
      if (d(c, j) < r) t += nu[j];
    return t;
  }

  /// total weight of the closed ball around point c
  double nu_closed_ball(int c, double r) const {
    double t = 0;
    for (int j = 0; j < n; ++j)
      if (d(c, j) <= r) t += nu[j];
    return t;
  }

  std::vector<int> ball_points(int c, double r) const {
    std::vector<int> out;
    for (int j = 0; j < n; ++j)
      if (d(c, j) < r) out.push_back(j);
    return out;
  }

  bool has_coords() const { return !coords.empty(); }
};

/// Validation gate. Checks symmetry, positivity off the diagonal, the
/// triangle inequality up to tol_tri = 1e-9 * diameter, and positive
/// weights. Throws TriangleViolation / NonSymmetric / NonpositiveMeasure.
inline MetricMeasureSpace validate_space(const std::vector<std::vector<double>>& dist,
                                         const std::vector<double>& nu,
                                         const std::vector<std::vector<double>>& coords = {},
                                         const std::vector<std::string>& labels = {}) {
  const int n = static_cast<int>(dist.size());
  require(n >= 1, errc::bad_config, "space needs at least one point");
  require(static_cast<int>(nu.size()) == n, errc::bad_config, "nu length must match dist");
  require(coords.empty() || static_cast<int>(coords.size()) == n, errc::bad_config,
          "coords length must match dist");

  MetricMeasureSpace s;
  s.n = n;
  s.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(dist[i].size()) == n, errc::bad_config, "dist must be square");
    for (int j = 0; j < n; ++j) s.dist[static_cast<std::size_t>(i) * n + j] = dist[i][j];
  }
  s.nu = nu;
  s.coords = coords;
  s.labels = labels;

  double diam = s.diameter();
  for (int i = 0; i < n; ++i) {
    require(s.d(i, i) == 0.0, errc::non_symmetric,
            "dist(" + std::to_string(i) + "," + std::to_string(i) + ") must be 0");
    require(nu[i] > 0.0, errc::nonpositive_measure, "nu(" + std::to_string(i) + ") must be > 0");
    for (int j = i + 1; j < n; ++j) {
      double dij = s.d(i, j), dji = s.d(j, i);
      require(std::fabs(dij - dji) <= 1e-12 * std::max(1.0, diam), errc::non_symmetric,
              "dist(" + std::to_string(i) + "," + std::to_string(j) + ") != dist(" +
                  std::to_string(j) + "," + std::to_string(i) + ")");
      require(dij > 0.0, errc::non_symmetric,
              "distinct points " + std::to_string(i) + "," + std::to_string(j) +
                  " at distance <= 0");
    }
  }

  const double tol_tri = 1e-9 * diam;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = s.d(i, j);
      for (int k = 0; k < n; ++k) {
        if (s.d(i, k) > dij + s.d(j, k) + tol_tri)
          raise(errc::triangle_violation,
                "d(" + std::to_string(i) + "," + std::to_string(k) + ") > d(" + std::to_string(i) +
                    "," + std::to_string(j) + ") + d(" + std::to_string(j) + "," +
                    std::to_string(k) + ")");
      }
    }
  return s;
}

/// Doubling/lower-mass diagnostics fitted over dyadic scales.
struct DoublingProfile {
  double C_d = 1.0;
  double Q_mu = 0.0;
  std::vector<double> scales;
  double fit_residual = 0.0;
};

/// Fits the lower mass bound exponent: dyadic radii strictly between the
/// minimum positive distance and the diameter, worst-case nested-ball
/// ratios nu(B(y,r))/nu(B(x,R)) over y in B(x,R), least squares of
/// log(ratio) against log(r/R). C_d is the max dyadic doubling ratio.
inline DoublingProfile estimate_mass_exponents(const MetricMeasureSpace& s, int scale_count = 8) {
  require(scale_count >= 3, errc::bad_config, "scale_count must be >= 3");
  const double diam = s.diameter();
  const double dmin = s.min_positive_distance();

  DoublingProfile prof;
  if (s.n >= 2 && std::isfinite(dmin))
    for (double r = diam / 2; r > dmin && static_cast<int>(prof.scales.size()) < scale_count; r /= 2)
      prof.scales.push_back(r);
  require(static_cast<int>(prof.scales.size()) >= 3, errc::insufficient_scales,
          "need at least 3 dyadic scales between the minimum positive distance and the diameter");

  for (int i = 0; i < s.n; ++i)
    for (double r : prof.scales) {
      double small = s.nu_ball(i, r);
      if (small > 0) prof.C_d = std::max(prof.C_d, s.nu_ball(i, 2 * r) / small);
    }

  std::vector<double> xs, ys;
  for (std::size_t jR = 0; jR < prof.scales.size(); ++jR) {
    for (std::size_t jr = jR + 1; jr < prof.scales.size(); ++jr) {
      const double R = prof.scales[jR], r = prof.scales[jr];
      double worst = std::numeric_limits<double>::infinity();
      for (int x = 0; x < s.n; ++x) {
        const double big = s.nu_ball(x, R);
        for (int y = 0; y < s.n; ++y)
          if (s.d(x, y) < R) worst = std::min(worst, s.nu_ball(y, r) / big);
      }
      xs.push_back(std::log(r / R));
      ys.push_back(std::log(worst));
    }
  }
  const int m = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  prof.Q_mu = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - prof.Q_mu * sx) / m;
  double rss = 0;
  for (int i = 0; i < m; ++i) {
    const double e = ys[i] - prof.Q_mu * xs[i] - icpt;
    rss += e * e;
  }
  prof.fit_residual = std::sqrt(rss / m);
  return prof;
}

struct KernelMetricResult {
  MetricMeasureSpace space;
  double lambda = 1.0;  // realized two-sided comparability constant
};

/// Length metric induced by a symmetric positive kernel: edge lengths
/// K(x,y)^{-1/(n_dim + p*theta)} on the complete graph (or a k-NN
/// sparsification when knn > 0), closed under shortest paths. Reports
/// the constant lambda with  K/lambda <= d_K^{-(n_dim+p*theta)} <= lambda*K.
inline KernelMetricResult kernel_metric(const std::vector<std::vector<double>>& coords,
                                        const std::vector<std::vector<double>>& K, int n_dim,
                                        double p, double theta, int knn = 0) {
  const int n = static_cast<int>(K.size());
  require(n >= 2, errc::bad_config, "kernel_metric needs at least two points");
  require(coords.empty() || static_cast<int>(coords.size()) == n, errc::bad_config,
          "coords length must match kernel");
  const double expo = static_cast<double>(n_dim) + p * theta;
  require(expo > 0, errc::bad_config, "n_dim + p*theta must be positive");

  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(K[i].size()) == n, errc::bad_config, "kernel must be square");
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      require(K[i][j] > 0.0, errc::nonpositive_kernel,
              "K(" + std::to_string(i) + "," + std::to_string(j) + ") must be > 0");
      double scale = std::max(std::fabs(K[i][j]), std::fabs(K[j][i]));
      require(std::fabs(K[i][j] - K[j][i]) <= 1e-12 * scale, errc::asymmetric_kernel,
              "K(" + std::to_string(i) + "," + std::to_string(j) + ") != K(" + std::to_string(j) +
                  "," + std::to_string(i) + ")");
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> len(static_cast<std::size_t>(n) * n, inf);
  for (int i = 0; i < n; ++i) len[static_cast<std::size_t>(i) * n + i] = 0.0;
  auto quasi = [&](int i, int j) { return std::pow(K[i][j], -1.0 / expo); };

  if (knn <= 0 || knn >= n - 1) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) len[static_cast<std::size_t>(i) * n + j] = quasi(i, j);
  } else {
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<double, int>> cand;
      for (int j = 0; j < n; ++j)
        if (j != i) cand.emplace_back(quasi(i, j), j);
      std::sort(cand.begin(), cand.end());
      for (int k = 0; k < knn; ++k) {
        int j = cand[k].second;
        len[static_cast<std::size_t>(i) * n + j] = cand[k].first;
        len[static_cast<std::size_t>(j) * n + i] = cand[k].first;
      }
    }
  }

  // Floyd-Warshall; n stays at desk scale
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      const double dik = len[static_cast<std::size_t>(i) * n + k];
      if (!std::isfinite(dik)) continue;
      for (int j = 0; j < n; ++j) {
        double alt = dik + len[static_cast<std::size_t>(k) * n + j];
        double& ref = len[static_cast<std::size_t>(i) * n + j];
        if (alt < ref) ref = alt;
      }
    }

  KernelMetricResult out;
  out.space.n = n;
  out.space.dist = std::move(len);
  out.space.nu.assign(n, 1.0);
  out.space.coords = coords;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ratio = std::pow(out.space.d(i, j), -expo) / K[i][j];
      out.lambda = std::max(out.lambda, std::max(ratio, 1.0 / ratio));
    }
  return out;
}

// ---- stock geometries used by the CLI generators and tests ----

inline MetricMeasureSpace cycle_space(int n, double spacing = 1.0) {
  MetricMeasureSpace s;
  s.n = n;
  s.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
  s.nu.assign(n, 1.0);
  s.coords.resize(n);
  for (int i = 0; i < n; ++i) {
    double ang = 2.0 * 3.14159265358979323846 * i / n;
    s.coords[i] = {std::cos(ang), std::sin(ang)};
    for (int j = 0; j < n; ++j) {
      int k = std::abs(i - j);
      s.dist[static_cast<std::size_t>(i) * n + j] = spacing * std::min(k, n - k);
    }
  }
  return s;
}

inline MetricMeasureSpace path_space(int n, double spacing = 1.0) {
  MetricMeasureSpace s;
  s.n = n;
  s.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
  s.nu.assign(n, 1.0);
  s.coords.resize(n);
  for (int i = 0; i < n; ++i) {
    s.coords[i] = {spacing * i};
    for (int j = 0; j < n; ++j)
      s.dist[static_cast<std::size_t>(i) * n + j] = spacing * std::abs(i - j);
  }
  return s;
}

/// nx-by-ny lattice with the l1 graph metric
inline MetricMeasureSpace grid_space(int nx, int ny, double spacing = 1.0) {
  MetricMeasureSpace s;
  const int n = nx * ny;
  s.n = n;
  s.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
  s.nu.assign(n, 1.0);
  s.coords.resize(n);
  for (int i = 0; i < n; ++i) s.coords[i] = {spacing * (i % nx), spacing * (i / nx)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s.dist[static_cast<std::size_t>(i) * n + j] =
          std::fabs(s.coords[i][0] - s.coords[j][0]) + std::fabs(s.coords[i][1] - s.coords[j][1]);
  return s;
}

}  // namespace fraclap
