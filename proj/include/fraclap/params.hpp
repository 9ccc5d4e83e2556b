#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "fraclap/error.hpp"

namespace fraclap {

/// Exponent bookkeeping shared by every module:
///   p in (1,inf), theta in (0,1), Theta = p(1-theta), a = 1 - p*theta,
///   p_conj = p/(p-1). beta is the optional dampening exponent.
struct FractionalParams {
  double p = 2.0;
  double theta = 0.5;
  double Theta = 1.0;
  double a = 0.0;
  double p_conj = 2.0;
  std::optional<double> beta;

  static FractionalParams make(double p, double theta, std::optional<double> beta = {}) {
    require(p > 1.0 && std::isfinite(p), errc::bad_config,
            "p must lie in (1,inf), got " + std::to_string(p));
    require(theta > 0.0 && theta < 1.0, errc::invalid_theta,
            "theta must lie in (0,1), got " + std::to_string(theta));
    if (beta) require(*beta > 0.0, errc::bad_config, "beta must be positive");
    FractionalParams fp;
    fp.p = p;
    fp.theta = theta;
    fp.Theta = p * (1.0 - theta);
    fp.a = 1.0 - p * theta;
    fp.p_conj = p / (p - 1.0);
    fp.beta = beta;
    return fp;
  }
};

/// Normalization folded into the extension conductances so that at p=2
/// the Dirichlet-to-Neumann map of the weighted product domain matches
/// the plain spectral power lambda^theta of the boundary Laplacian
/// (kappa = 2^{p*theta-1} Gamma(theta)/Gamma(1-theta); equals 1 at theta=1/2).
inline double spectral_calibration(const FractionalParams& fp) {
  return std::pow(2.0, fp.p * fp.theta - 1.0) * std::tgamma(fp.theta) / std::tgamma(1.0 - fp.theta);
}

}  // namespace fraclap
