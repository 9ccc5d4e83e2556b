#pragma once

#include <cmath>
#include <vector>

#include "fraclap/params.hpp"
#include "fraclap/space.hpp"

namespace fraclap {

/// J(x, x0) = d(x,x0)^{p'theta} * nu(B(x0, d(x0,x)))^{p'/p}, open balls,
/// J(x0) = 0. nu_J integrates J against nu and gauges admissible Neumann
/// data on unbounded boundaries.
inline std::vector<double> weight_J(const MetricMeasureSpace& z, int x0,
                                    const FractionalParams& fp) {
  require(x0 >= 0 && x0 < z.n, errc::bad_config, "x0 out of range");
  std::vector<double> J(z.n, 0.0);
  for (int i = 0; i < z.n; ++i) {
    const double dist = z.d(x0, i);
    if (dist == 0.0) continue;
    J[i] = std::pow(dist, fp.p_conj * fp.theta) *
           std::pow(z.nu_ball(x0, dist), fp.p_conj / fp.p);
  }
  return J;
}

/// ( sum_i |f_i|^{p'} J_i nu_i )^{1/p'}
inline double lp_conj_j_norm(const MetricMeasureSpace& z, const std::vector<double>& f,
                             const std::vector<double>& J, double p_conj) {
  double s = 0;
  for (int i = 0; i < z.n; ++i) s += std::pow(std::fabs(f[i]), p_conj) * J[i] * z.nu[i];
  return std::pow(s, 1.0 / p_conj);
}

/// Zero-nu-mean Neumann data on the boundary points of Z, with the
/// weighted norms that control solvability. Data whose mean exceeds
/// tol_mean = 1e-10 * sum |f_i| nu_i is rejected; smaller residues are
/// recentred away.
struct BoundaryData {
  std::vector<double> f;
  int x0 = 0;
  double norm_p_conj = 0;  // ||f||_{L^{p'}(nu)}
  double norm_J = 0;       // ||f||_{L^{p'}(nu_J)}
  double mean = 0;
  std::vector<double> J;   // per-point weight J(., x0)
};

inline BoundaryData make_boundary_data(const MetricMeasureSpace& z, std::vector<double> f, int x0,
                                       const FractionalParams& fp) {
  require(static_cast<int>(f.size()) == z.n, errc::bad_config,
          "boundary data length must match the space");
  double mean = 0, abs_mass = 0, nu_total = 0;
  for (int i = 0; i < z.n; ++i) {
    mean += f[i] * z.nu[i];
    abs_mass += std::fabs(f[i]) * z.nu[i];
    nu_total += z.nu[i];
  }
  const double tol_mean = 1e-10 * abs_mass;
  require(std::fabs(mean) <= tol_mean || abs_mass == 0.0, errc::nonzero_mean,
          "boundary data must have zero nu-mean (mean = " + std::to_string(mean) + ")");
  if (mean != 0.0) {
    const double shift = mean / nu_total;
    for (double& v : f) v -= shift;
  }

  BoundaryData bd;
  bd.x0 = x0;
  bd.J = weight_J(z, x0, fp);
  double sp = 0;
  bd.mean = 0;
  for (int i = 0; i < z.n; ++i) {
    sp += std::pow(std::fabs(f[i]), fp.p_conj) * z.nu[i];
    bd.mean += f[i] * z.nu[i];
  }
  bd.norm_p_conj = std::pow(sp, 1.0 / fp.p_conj);
  bd.norm_J = lp_conj_j_norm(z, f, bd.J, fp.p_conj);
  bd.f = std::move(f);
  return bd;
}

}  // namespace fraclap
