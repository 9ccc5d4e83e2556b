#pragma once

#include <stdexcept>
#include <string>

namespace fraclap {

/// Failure categories surfaced by the library. Names mirror the
/// validation gates of each module.
enum class errc {
  triangle_violation,
  non_symmetric,
  nonpositive_measure,
  insufficient_scales,
  invalid_theta,
  empty_interior,
  asymmetric_kernel,
  nonpositive_kernel,
  weight_out_of_range,
  degenerate_grading,
  beta_too_small,
  missing_coords,
  non_convergence,
  disconnected_component_without_boundary,
  nonzero_mean,
  requires_p2,
  no_admissible_balls,
  zero_infimum,
  negative_data,
  bad_config,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::triangle_violation: return "TriangleViolation";
    case errc::non_symmetric: return "NonSymmetric";
    case errc::nonpositive_measure: return "NonpositiveMeasure";
    case errc::insufficient_scales: return "InsufficientScales";
    case errc::invalid_theta: return "InvalidTheta";
    case errc::empty_interior: return "EmptyInterior";
    case errc::asymmetric_kernel: return "AsymmetricKernel";
    case errc::nonpositive_kernel: return "NonpositiveKernel";
    case errc::weight_out_of_range: return "WeightOutOfRange";
    case errc::degenerate_grading: return "DegenerateGrading";
    case errc::beta_too_small: return "BetaTooSmall";
    case errc::missing_coords: return "MissingCoords";
    case errc::non_convergence: return "NonConvergence";
    case errc::disconnected_component_without_boundary: return "DisconnectedComponentWithoutBoundary";
    case errc::nonzero_mean: return "NonzeroMean";
    case errc::requires_p2: return "RequiresP2";
    case errc::no_admissible_balls: return "NoAdmissibleBalls";
    case errc::zero_infimum: return "ZeroInfimum";
    case errc::negative_data: return "NegativeData";
    case errc::bad_config: return "BadConfig";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const noexcept { return code_; }

  /// true for errors caused by bad inputs/configuration rather than a
  /// failed computation (drives the CLI exit-code contract: 2 vs 1).
  bool is_validation() const noexcept { return code_ != errc::non_convergence; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace fraclap
