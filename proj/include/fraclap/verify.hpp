#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fraclap/nonlocal.hpp"
#include "fraclap/rng.hpp"

namespace fraclap {

struct ExponentFit {
  std::vector<std::pair<double, double>> samples;  // (log x, log y)
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

inline ExponentFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 4, errc::bad_config,
          "exponent fit needs at least 4 samples");
  ExponentFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const int m = static_cast<int>(xs.size());
  for (int i = 0; i < m; ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    fit.samples.emplace_back(lx, ly);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double den = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (auto [lx, ly] : fit.samples) {
    const double e = ly - fit.slope * lx - fit.intercept;
    ss_res += e * e;
    ss_tot += (ly - ybar) * (ly - ybar);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// ---------------------------------------------------------------- spectral

/// Dense eigendecomposition of the nu-weighted boundary Laplacian over
/// the neighbor graph thresholded at `radius` (the extension's first
/// layer scale). Forward applies lambda^theta, inverse lambda^{-theta}
/// on the zero-mean span.
struct SpectralOracle {
  Eigen::MatrixXd vectors;  // columns, nu-orthonormal
  Eigen::VectorXd values;
  std::vector<double> nu;

  std::vector<double> apply(std::span<const double> u, double theta, bool inverse) const {
    const int n = static_cast<int>(nu.size());
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = u[i] * std::sqrt(nu[i]);
    Eigen::VectorXd c = vectors.transpose() * x;
    const double lam_max = values.maxCoeff();
    for (int k = 0; k < n; ++k) {
      if (values[k] <= 1e-12 * lam_max)
        c[k] = 0.0;  // kernel (constants): dropped either way
      else
        c[k] *= inverse ? std::pow(values[k], -theta) : std::pow(values[k], theta);
    }
    Eigen::VectorXd y = vectors * c;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = y[i] / std::sqrt(nu[i]);
    return out;
  }
};

inline SpectralOracle make_spectral_oracle(const MetricMeasureSpace& z, double radius, double p) {
  require(p == 2.0, errc::requires_p2, "the spectral oracle is a p = 2 construction");
  const int n = z.n;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const double r = radius * (1.0 + 1e-9);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dij = z.d(i, j);
      if (dij > r) continue;
      const double w = 2.0 * z.nu[i] * z.nu[j] / (z.nu[i] + z.nu[j]) / (dij * dij);
      L(i, i) += w;
      L(j, j) += w;
      L(i, j) -= w;
      L(j, i) -= w;
    }
  // symmetrize against the measure: S = D^{-1/2} L D^{-1/2}
  Eigen::MatrixXd S = L;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) /= std::sqrt(z.nu[i] * z.nu[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  require(es.info() == Eigen::Success, errc::non_convergence, "eigendecomposition failed");
  SpectralOracle oracle;
  oracle.vectors = es.eigenvectors();
  oracle.values = es.eigenvalues();
  oracle.nu = z.nu;
  return oracle;
}

/// forward (or inverse) fractional power of the boundary Laplacian; the
/// neighbor graph matches the domain's horizontal rule
inline std::vector<double> spectral_oracle_p2(const ExtensionDomain& d, std::span<const double> u,
                                              double theta, bool inverse = false) {
  require(d.params.p == 2.0, errc::requires_p2, "spectral oracle requires p = 2");
  SpectralOracle oracle = make_spectral_oracle(d.z, d.horizontal_radius, 2.0);
  return oracle.apply(u, theta, inverse);
}

// ------------------------------------------------- energy comparability

struct RatioInterval {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0;
  double implied_C = 0;
  int count = 0;
};

/// [min, max] of E_{p,theta}(u,u) / E_T(u,u) over an ensemble of random
/// nonconstant functions; constant draws are excluded (0/0).
inline RatioInterval check_energy_equivalence(const ExtensionDomain& d,
                                              const DifferentialStructure& st, int ensemble_size,
                                              const Rng& rng, const SolverOptions& options = {}) {
  RatioInterval out;
  for (int t = 0; t < ensemble_size; ++t) {
    std::vector<double> u(d.n_boundary);
    const Rng member = rng.fork(t);
    for (int i = 0; i < d.n_boundary; ++i) u[i] = member.symmetric(i);
    const double spread = *std::max_element(u.begin(), u.end()) -
                          *std::min_element(u.begin(), u.end());
    if (spread <= 0) continue;
    const double besov = besov_form(d.z, u, u, d.params).value;
    const double et = et_form(d, st, u, u, options).value;
    if (et <= 0) continue;
    const double ratio = besov / et;
    out.lo = std::min(out.lo, ratio);
    out.hi = std::max(out.hi, ratio);
    ++out.count;
  }
  require(out.count > 0, errc::bad_config, "ensemble produced no usable draws");
  out.implied_C = std::max(out.hi, 1.0 / out.lo);
  return out;
}

// ------------------------------------------------------------- stability

struct StabilityReport {
  ExponentFit fit;
  double tau = 0;    // expected exponent: 1/(p-1) for p >= 2, 1 for p < 2
  double kappa = 0;  // prefactor exponent: (2-p)/(p-1) for p < 2, else 0
  bool pass = false;
  std::vector<double> ts;
  std::vector<double> data_dists;  // ||f - g_t||_{nu_J}
  std::vector<double> grad_dists;  // ||grad u_f - grad u_{g_t}||_{L^p(mu)}
};

/// Fits the data-to-gradient continuity exponent along g_t = f + t h.
/// For p < 2 the measured prefactor max(||f||, ||g_t||)^kappa is divided
/// out before fitting. The two largest t samples are treated as
/// pre-asymptotic and discarded. PASS when slope >= tau - 0.1.
inline StabilityReport measure_stability_exponent(const ExtensionDomain& d,
                                                  const DifferentialStructure& st, double p,
                                                  const BoundaryData& f,
                                                  const std::vector<double>& h,
                                                  std::vector<double> t_schedule,
                                                  const SolverOptions& options = {}) {
  require(t_schedule.size() >= 6, errc::bad_config,
          "stability schedule needs >= 6 values (two are discarded)");
  std::sort(t_schedule.begin(), t_schedule.end(), std::greater<>());
  StabilityReport rep;
  rep.tau = p >= 2.0 ? 1.0 / (p - 1.0) : 1.0;
  rep.kappa = p < 2.0 ? (2.0 - p) / (p - 1.0) : 0.0;

  Solution base = solve_neumann(d, st, p, f, options);
  std::vector<double> xs, ys;
  for (std::size_t idx = 0; idx < t_schedule.size(); ++idx) {
    const double t = t_schedule[idx];
    std::vector<double> g(f.f);
    for (int i = 0; i < d.n_boundary; ++i) g[i] += t * h[i];
    BoundaryData gd = make_boundary_data(d.z, std::move(g), f.x0, d.params);
    Solution sol = solve_neumann(d, st, p, gd, options);
    std::vector<double> diff(sol.u.size());
    for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = sol.u[v] - base.u[v];
    const double gdist = std::pow(p_energy(d, st, diff, p), 1.0 / p);
    double x = 0;
    {
      std::vector<double> df(d.n_boundary);
      for (int i = 0; i < d.n_boundary; ++i) df[i] = gd.f[i] - f.f[i];
      x = lp_conj_j_norm(d.z, df, f.J, d.params.p_conj);
    }
    rep.ts.push_back(t);
    rep.data_dists.push_back(x);
    rep.grad_dists.push_back(gdist);
    if (idx < 2) continue;  // pre-asymptotic
    double y = gdist;
    if (rep.kappa > 0) y /= std::pow(std::max(f.norm_J, gd.norm_J), rep.kappa);
    xs.push_back(x);
    ys.push_back(y);
  }
  rep.fit = fit_loglog(xs, ys);
  rep.pass = rep.fit.slope >= rep.tau - 0.1;
  return rep;
}

// --------------------------------------------------------------- harnack

struct HarnackBall {
  int center = 0;
  double radius = 0;
  double sup = 0, inf = 0;
};

struct HarnackReport {
  std::vector<HarnackBall> balls;
  double max_ratio = 1.0;
  double shift = 0;  // applied when the solution dips below zero
  bool constant = false;
};

/// sup/inf ratios of a solution over admissible balls: centers in
/// W cup Omega with B(x, 2r) meeting no boundary node outside the window
/// W. When the solution is not positive it is shifted by
/// -min + 1e-9 * range first (recorded in the report).
inline HarnackReport check_harnack(const ExtensionDomain& d, std::span<const double> u,
                                   const std::vector<int>& window,
                                   const std::vector<double>& radii) {
  std::vector<char> in_w(d.n_boundary, 0);
  for (int i : window) in_w[i] = 1;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int v = 0; v < d.node_count(); ++v) {
    lo = std::min(lo, u[v]);
    hi = std::max(hi, u[v]);
  }
  HarnackReport rep;
  if (hi - lo <= 1e-14 * std::max(1.0, std::fabs(hi))) {
    rep.constant = true;  // constant solutions: every ratio is 1
    rep.max_ratio = 1.0;
    return rep;
  }
  std::vector<double> w(u.begin(), u.end());
  if (lo < 0) {
    // nonnegativity is arranged, not proved; the shift is reported
    rep.shift = -lo + 1e-9 * (hi - lo);
    for (double& x : w) x += rep.shift;
  }

  for (int c = 0; c < d.node_count(); ++c) {
    const bool boundary_center = d.layer_of[c] == 0;
    if (boundary_center && !in_w[d.col_of[c]]) continue;
    for (double r : radii) {
      bool admissible = true;
      for (int i = 0; i < d.n_boundary && admissible; ++i)
        if (!in_w[i] && d.node_distance(c, i) < 2.0 * r) admissible = false;
      if (!admissible) continue;
      HarnackBall ball{c, r, -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
      int members = 0;
      for (int v = 0; v < d.node_count(); ++v) {
        if (d.layer_of[v] == 0 && !d.boundary_mask[v] && !in_w[d.col_of[v]]) continue;
        if (d.node_distance(c, v) < r) {
          ball.sup = std::max(ball.sup, w[v]);
          ball.inf = std::min(ball.inf, w[v]);
          ++members;
        }
      }
      if (members < 2) continue;
      require(ball.inf > 0, errc::zero_infimum,
              "solution touches zero on a tested ball");
      rep.max_ratio = std::max(rep.max_ratio, ball.sup / ball.inf);
      rep.balls.push_back(ball);
    }
  }
  require(!rep.balls.empty(), errc::no_admissible_balls,
          "no admissible ball fits inside the window");
  return rep;
}

// ---------------------------------------------------------------- holder

struct HolderReport {
  ExponentFit fit;
  double predicted = 0;  // (1 - Theta/p)(1 - q0/q) branch
  double q = 0, q0 = 0;
  enum class Verdict { Pass, Fail, BelowThreshold } verdict = Verdict::Pass;
};

/// Boundary oscillation exponent: for each dyadic delta take the sup of
/// |u(x) - u(y)| over boundary pairs in the region at separation
/// delta/2 < d <= delta, averaged over the solution ensemble, and fit
/// the slope against delta. q is the data integrability (infinity for
/// bounded data); below the threshold q0 = (Q_mu - Theta)/(p - Theta)
/// no PASS/FAIL is claimed.
inline HolderReport estimate_holder(const ExtensionDomain& d, const DifferentialStructure& st,
                                    double p, const std::vector<BoundaryData>& ensemble,
                                    double Q_mu, double q, int center_col, double R0,
                                    const std::vector<double>& deltas,
                                    const SolverOptions& options = {}) {
  const FractionalParams& fp = d.params;
  HolderReport rep;
  rep.q = q;
  rep.q0 = (Q_mu - fp.Theta) / (fp.p - fp.Theta);
  rep.predicted = (1.0 - fp.Theta / fp.p) * (1.0 - (std::isinf(q) ? 0.0 : rep.q0 / q));
  require(!ensemble.empty(), errc::bad_config, "Holder fit needs at least one data vector");

  std::vector<int> region;
  for (int i = 0; i < d.n_boundary; ++i)
    if (d.z.d(center_col, i) <= R0) region.push_back(i);
  require(region.size() >= 4, errc::bad_config, "Holder region holds too few boundary points");

  std::vector<double> mean_osc(deltas.size(), 0.0);
  for (const BoundaryData& f : ensemble) {
    Solution sol = solve_neumann(d, st, p, f, options);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      double osc = 0;
      for (std::size_t a = 0; a < region.size(); ++a)
        for (std::size_t b = a + 1; b < region.size(); ++b) {
          const double dist = d.z.d(region[a], region[b]);
          if (dist > 0.5 * deltas[k] && dist <= deltas[k])
            osc = std::max(osc, std::fabs(sol.u[region[a]] - sol.u[region[b]]));
        }
      mean_osc[k] += osc / ensemble.size();
    }
  }
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < deltas.size(); ++k)
    if (mean_osc[k] > 0) {
      xs.push_back(deltas[k]);
      ys.push_back(mean_osc[k]);
    }
  rep.fit = fit_loglog(xs, ys);
  if (!std::isinf(q) && q <= rep.q0)
    rep.verdict = HolderReport::Verdict::BelowThreshold;
  else
    rep.verdict = rep.fit.slope >= rep.predicted - 0.1 ? HolderReport::Verdict::Pass
                                                       : HolderReport::Verdict::Fail;
  return rep;
}

// ------------------------------------------------------------ makalainen

struct MakalainenReport {
  std::vector<double> scales;
  std::vector<double> scale_max;  // max ratio per dyadic scale
  double M = 0;
  bool pass = false;
};

/// Growth condition nu_f(B(x,r)) / mu(B(x,r)) <= M r^{-p + alpha(p-1)}
/// over admissible balls (B(x,4r) inside the tested region, f >= 0
/// there). Scales stop at 4x the first layer height, below which the
/// interior ball mass leaves its scaling regime. PASS when the
/// per-scale maxima do not grow systematically toward small r
/// (log-log trend slope > -1/4); concentrated data blow up and FAIL.
inline MakalainenReport makalainen_check(const ExtensionDomain& d, std::span<const double> f,
                                         double p, double alpha, int center_col,
                                         double region_radius, int scale_count = 5) {
  for (int i = 0; i < d.n_boundary; ++i)
    if (d.z.d(center_col, i) < region_radius)
      require(f[i] >= 0.0, errc::negative_data, "data must be nonnegative on the tested region");

  MakalainenReport rep;
  const double expo = -p + alpha * (p - 1.0);
  for (int s = 0; s < scale_count; ++s) {
    const double r = region_radius / 4.0 / std::pow(2.0, s);
    if (r < 4.0 * d.heights[0]) break;
    double worst = 0;
    bool used = false;
    for (int xi = 0; xi < d.n_boundary; ++xi) {
      if (d.z.d(center_col, xi) + 4.0 * r > region_radius) continue;  // need B(x,4r) inside
      double nuf = 0;
      for (int j = 0; j < d.n_boundary; ++j)
        if (d.z.d(xi, j) < r) nuf += f[j] * d.z.nu[j];
      const double mub = d.mu_ball_interior(xi, r);
      if (mub <= 0) continue;
      worst = std::max(worst, nuf / mub / std::pow(r, expo));
      used = true;
    }
    if (!used) continue;
    rep.scales.push_back(r);
    rep.scale_max.push_back(worst);
    rep.M = std::max(rep.M, worst);
  }
  require(rep.scales.size() >= 2, errc::bad_config, "not enough usable scales");
  if (rep.M == 0.0) {
    rep.pass = true;  // zero data satisfies the bound with M = 0
    return rep;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < rep.scales.size(); ++k) {
    if (rep.scale_max[k] <= 0) continue;
    const double lx = std::log(rep.scales[k]), ly = std::log(rep.scale_max[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double trend = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.pass = std::isfinite(rep.M) && trend > -0.25;
  return rep;
}

}  // namespace fraclap
