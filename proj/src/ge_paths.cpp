#include "mimodelay/ge_paths.hpp"

#include <string>

namespace mimodelay {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string("GEParams: ") + name + " must lie in [0, 1]");
  }
}

}  // namespace

GEParams::GEParams(double p_gb, double p_bg) : p_gb_(p_gb), p_bg_(p_bg), omega_(0.0) {
  check_probability(p_gb, "p_gb");
  check_probability(p_bg, "p_bg");
  if (p_gb + p_bg <= 0.0) {
    throw DegenerateChainError("GEParams: p_gb + p_bg must be positive");
  }
  omega_ = p_gb / (p_gb + p_bg);
}

GEParams::GEParams(double p_gb, double p_bg, double omega)
    : p_gb_(p_gb), p_bg_(p_bg), omega_(omega) {}

GEParams GEParams::from_fading_speed(double omega, double p_bg) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw std::invalid_argument("from_fading_speed: omega must lie in (0, 1)");
  }
  if (!(p_bg > 0.0 && p_bg <= 1.0)) {
    throw std::invalid_argument("from_fading_speed: p_bg must lie in (0, 1]");
  }
  const double p_gb = p_bg * omega / (1.0 - omega);
  if (p_gb > 1.0) {
    throw std::out_of_range("from_fading_speed: implied p_gb exceeds 1");
  }
  return GEParams(p_gb, p_bg, omega);
}

Eigen::Matrix2d GEParams::transition_matrix() const {
  Eigen::Matrix2d p;
  p << 1.0 - p_gb_, p_gb_,
       p_bg_, 1.0 - p_bg_;
  return p;
}

double block_error_prob(const GEParams& params) { return params.omega(); }

GEParams params_for_fading_speed(double omega, double p_bg) {
  return GEParams::from_fading_speed(omega, p_bg);
}

PathState step(PathState state, const GEParams& params, double uniform) {
  if (state == PathState::Good) {
    return uniform < params.p_gb() ? PathState::Bad : PathState::Good;
  }
  return uniform < params.p_bg() ? PathState::Good : PathState::Bad;
}

}  // namespace mimodelay
