#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace mimodelay {

enum class PathState : std::uint8_t { Good, Bad };

/// Raised when a two-state chain has p_gb + p_bg = 0.
class DegenerateChainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Per-slot transition probabilities of one Gilbert-Elliott path.
///
/// The stationary bad-state probability is fixed at construction. Building
/// through from_fading_speed() keeps the requested value exactly, so chains
/// that differ only in fading speed share a bit-identical stationary law.
class GEParams {
 public:
  GEParams(double p_gb, double p_bg);

  /// Parameters with stationary bad probability `omega` and recovery
  /// probability `p_bg`; p_gb = p_bg * omega / (1 - omega).
  static GEParams from_fading_speed(double omega, double p_bg);

  double p_gb() const { return p_gb_; }
  double p_bg() const { return p_bg_; }
  double omega() const { return omega_; }

  /// Row-stochastic 2x2 matrix, state order (Good, Bad).
  Eigen::Matrix2d transition_matrix() const;

 private:
  GEParams(double p_gb, double p_bg, double omega);

  double p_gb_;
  double p_bg_;
  double omega_;
};

/// Stationary probability of the bad state, p_gb / (p_gb + p_bg).
double block_error_prob(const GEParams& params);

GEParams params_for_fading_speed(double omega, double p_bg);

/// Advances one path by one slot given a uniform sample in [0, 1).
PathState step(PathState state, const GEParams& params, double uniform);

}  // namespace mimodelay
