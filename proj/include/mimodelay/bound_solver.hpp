#pragma once

#include <cstdint>

#include "mimodelay/mgf.hpp"
#include "mimodelay/units.hpp"

namespace mimodelay {

/// How the infinite sum over s in the delay bound is evaluated.
enum class SeriesMode {
  /// Exact periodic resummation when the source period is an integer number
  /// of slots, otherwise Truncated.
  Auto,
  /// Partial sums with a certified geometric tail added before testing.
  Truncated,
  /// Exact periodic resummation; requires an integer period.
  Periodic,
};

struct SolverConfig {
  double theta_min = 1e-4;
  double theta_max = 10.0;
  int n_theta = 64;             // log-spaced coarse grid, endpoints included
  int refine_iterations = 40;   // golden-section steps around the best grid point
  std::int64_t t_max = 2'000'000;
  double rel_tail_tol = 1e-9;
  int decay_run = 8;            // terms summed before the first tail test
  std::int64_t tau_max = 10'000'000;
  SeriesMode series = SeriesMode::Auto;

  void validate() const;
};

enum class BoundStatus { Feasible, Infeasible, NonConvergent };

const char* to_string(BoundStatus status);

struct DelayBound {
  BoundStatus status = BoundStatus::Infeasible;
  std::int64_t d_slots = 0;
  double theta_star = 0.0;
  double epsilon = 0.0;
  /// Upper bound on the part of the sum not covered by explicit terms; it is
  /// already included in log_violation.
  double tail_error = 0.0;
  /// ln of the certified sum at (theta_star, d_slots); <= ln(epsilon).
  double log_violation = 0.0;

  bool feasible() const { return status == BoundStatus::Feasible; }
  double d_ms(const LinkUnits& units) const { return slots_to_ms(static_cast<double>(d_slots), units); }
};

/// Smallest d with sum_{s >= d} M_A(theta, s - d) M_S(theta, s) <= epsilon over theta > 0.
DelayBound delay_bound(const ArrivalModel& arrival, const ServiceModel& service, double epsilon,
                       const SolverConfig& config = {});

/// First-order capacity minus arrival rate, in blocks per slot; for tandem
/// hops the smallest per-hop margin.
double stability_margin(const ArrivalModel& arrival, const ServiceModel& service);

/// Outcome of the tau scan at one theta.
struct ThetaEvaluation {
  enum class Status { Feasible, Diverges, NonConvergent, AboveCap };
  Status status = Status::Diverges;
  std::int64_t tau = 0;
  double log_sum = 0.0;    // ln of the certified sum at tau
  double tail_error = 0.0;
  /// Continuous stand-in for tau used by the theta refinement: the crossing
  /// of ln(sum) with ln(epsilon), interpolated between tau - 1 and tau.
  double surrogate = 0.0;
};

ThetaEvaluation evaluate_theta(const ArrivalModel& arrival, const ServiceModel& service,
                               double epsilon, double theta, const SolverConfig& config,
                               std::int64_t tau_cap);

/// Certified ln sum_{s >= tau} M_A(theta, s - tau) M_S(theta, s), tau >= 1,
/// and the tail bound it contains. +inf when the series diverges at theta.
struct LogDelaySum {
  double log_sum;
  double tail_error;
};

LogDelaySum log_delay_sum(const ArrivalModel& arrival, const ServiceModel& service, double theta,
                          std::int64_t tau, const SolverConfig& config = {});

}  // namespace mimodelay
