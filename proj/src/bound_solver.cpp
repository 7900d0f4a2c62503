#include "mimodelay/bound_solver.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace mimodelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// z = sum_{u >= 0} M_A(theta, u) A^u b, split into the explicitly summed
/// part and a nonnegative bound on the rest.
struct WeightedSeries {
  enum class Status { Ok, Diverges, NonConvergent };
  Status status = Status::Diverges;
  StateSpace<double> ss;
  Eigen::VectorXd z;
  Eigen::VectorXd tail;
};

bool integer_period(const ArrivalModel& arrival) {
  return arrival.period == std::floor(arrival.period) && arrival.period <= 1e6;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Uses M_A(u + nP) = e^{n theta sigma} M_A(u) for integer P:
///   z = sum_{j < P} M_A(j) A^j (I - e^{theta sigma} A^P)^{-1} b.
void periodic_series(const ArrivalModel& arrival, double theta, WeightedSeries& out) {
  const auto period = static_cast<int>(arrival.period);
  const Eigen::Index n = out.ss.dim();
  Eigen::MatrixXd a_pow = Eigen::MatrixXd::Identity(n, n);
  std::vector<Eigen::MatrixXd> powers;
  powers.reserve(static_cast<std::size_t>(period));
  for (int j = 0; j < period; ++j) {
    powers.push_back(a_pow);
    a_pow = (a_pow * out.ss.a).eval();
  }
  const double growth = std::exp(theta * arrival.sigma);
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - growth * a_pow;
  const Eigen::VectorXd w = lhs.partialPivLu().solve(out.ss.b);
  out.z = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < period; ++j) {
    out.z += arrival_mgf(arrival, theta, static_cast<double>(j)) * (powers[static_cast<std::size_t>(j)] * w);
  }
  out.tail = Eigen::VectorXd::Zero(n);
  if (!out.z.allFinite() || (out.z.array() < 0.0).any()) {
    out.status = WeightedSeries::Status::Diverges;
    return;
  }
  out.status = WeightedSeries::Status::Ok;
}

/// Partial sums up to the first index past `decay_run` terms where the tail
/// bound
///   sum_{u > U} M_A(u) A^u b <= e^{theta sigma} (I - aA)^{-1} (aA)^{U+1} b,
/// a = e^{theta sigma / P}, falls below rel_tail_tol of the partial sum.
void truncated_series(const ArrivalModel& arrival, double theta, const SolverConfig& config,
                      WeightedSeries& out) {
  const Eigen::Index n = out.ss.dim();
  const double x = theta * arrival.sigma;
  const double log_a = x / arrival.period;
  const Eigen::MatrixXd scaled = std::exp(log_a) * out.ss.a;
  const Eigen::MatrixXd resolvent =
      (Eigen::MatrixXd::Identity(n, n) - scaled).inverse().cwiseAbs();
  const double tail_factor = std::exp(x);

  out.z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = out.ss.b;  // (aA)^u b
  for (std::int64_t u = 0; u <= config.t_max; ++u) {
    // M_A(u) a^{-u} lies in [e^{-x}, e^{x}], so the weight never overflows.
    const double weight =
        std::exp(log_arrival_mgf(arrival, theta, static_cast<double>(u)) - log_a * static_cast<double>(u));
    out.z += weight * v;
    v = (scaled * v).eval();
    if (u + 1 >= config.decay_run) {
      out.tail = tail_factor * (resolvent * v);
      if ((out.tail.array() <= config.rel_tail_tol * out.z.array()).all()) {
        out.status = WeightedSeries::Status::Ok;
        return;
      }
    }
  }
  out.status = WeightedSeries::Status::NonConvergent;
}

WeightedSeries weighted_series(const ArrivalModel& arrival, const ServiceModel& service, double theta,
                               const SolverConfig& config) {
  WeightedSeries out;
  out.ss = realize(service, theta);
  const double log_a = theta * arrival.sigma / arrival.period;
  if (std::log(spectral_radius(out.ss.a)) + log_a >= -1e-12) {
    out.status = WeightedSeries::Status::Diverges;
    return out;
  }
  bool periodic = false;
  switch (config.series) {
    case SeriesMode::Auto: periodic = integer_period(arrival); break;
    case SeriesMode::Periodic:
      if (!integer_period(arrival)) {
        throw std::invalid_argument("SeriesMode::Periodic needs an integer source period");
      }
      periodic = true;
      break;
    case SeriesMode::Truncated: periodic = false; break;
  }
  if (periodic) {
    periodic_series(arrival, theta, out);
  } else {
    truncated_series(arrival, theta, config, out);
  }
  return out;
}

/// Walks tau = 1, 2, ... with row = c A^{tau-1} kept normalized.
class TauScan {
 public:
  explicit TauScan(const WeightedSeries& series)
      : series_(series), upper_(series.z + series.tail), row_(series.ss.c) {}

  std::int64_t tau() const { return tau_; }
  double log_sum() const {
    const double inner = row_.dot(upper_);
    return inner > 0.0 ? log_scale_ + std::log(inner) : -kInf;
  }
  double tail_error() const { return std::exp(log_scale_) * row_.dot(series_.tail); }
  void advance() {
    row_ = (row_ * series_.ss.a).eval();
    const double peak = row_.cwiseAbs().maxCoeff();
    if (peak > 0.0) {
      row_ /= peak;
      log_scale_ += std::log(peak);
    }
    ++tau_;
  }

 private:
  const WeightedSeries& series_;
  Eigen::VectorXd upper_;
  Eigen::RowVectorXd row_;
  double log_scale_ = 0.0;
  std::int64_t tau_ = 1;
};

void check_inputs(const ArrivalModel& arrival, double epsilon) {
  arrival.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("delay_bound: epsilon must lie in (0, 1)");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(theta_min > 0.0 && theta_max > theta_min)) {
    throw std::invalid_argument("SolverConfig: need 0 < theta_min < theta_max");
  }
  if (n_theta < 2 || refine_iterations < 0 || t_max < 1 || tau_max < 1 || decay_run < 1) {
    throw std::invalid_argument("SolverConfig: grid sizes and horizons must be positive");
  }
  if (!(rel_tail_tol > 0.0)) throw std::invalid_argument("SolverConfig: rel_tail_tol must be positive");
}

const char* to_string(BoundStatus status) {
  switch (status) {
    case BoundStatus::Feasible: return "feasible";
    case BoundStatus::Infeasible: return "infeasible";
    case BoundStatus::NonConvergent: return "nonconvergent";
  }
  return "unknown";
}

double stability_margin(const ArrivalModel& arrival, const ServiceModel& service) {
  return service.first_order_capacity() - arrival.rate();
}

ThetaEvaluation evaluate_theta(const ArrivalModel& arrival, const ServiceModel& service,
                               double epsilon, double theta, const SolverConfig& config,
                               std::int64_t tau_cap) {
  ThetaEvaluation out;
  const WeightedSeries series = weighted_series(arrival, service, theta, config);
  if (series.status == WeightedSeries::Status::Diverges) {
    out.status = ThetaEvaluation::Status::Diverges;
    return out;
  }
  if (series.status == WeightedSeries::Status::NonConvergent) {
    out.status = ThetaEvaluation::Status::NonConvergent;
    return out;
  }
  const double log_eps = std::log(epsilon);
  // The s-sum at tau = 0 contains M_A(0) M_S(0) = 1, so its excess is at least -ln(eps).
  double excess_prev = -log_eps;
  TauScan scan(series);
  for (; scan.tau() <= tau_cap; scan.advance()) {
    const double log_sum = scan.log_sum();
    const double excess = log_sum - log_eps;
    if (excess <= 0.0) {
      out.status = ThetaEvaluation::Status::Feasible;
      out.tau = scan.tau();
      out.log_sum = log_sum;
      out.tail_error = scan.tail_error();
      const double drop = excess_prev - excess;
      out.surrogate = static_cast<double>(out.tau - 1) + (drop > 0.0 && std::isfinite(drop) ? excess_prev / drop : 0.0);
      return out;
    }
    excess_prev = excess;
  }
  out.status = ThetaEvaluation::Status::AboveCap;
  return out;
}

LogDelaySum log_delay_sum(const ArrivalModel& arrival, const ServiceModel& service, double theta,
                          std::int64_t tau, const SolverConfig& config) {
  arrival.validate();
  if (tau < 1) throw std::invalid_argument("log_delay_sum: tau must be >= 1");
  const WeightedSeries series = weighted_series(arrival, service, theta, config);
  if (series.status != WeightedSeries::Status::Ok) return {kInf, kInf};
  TauScan scan(series);
  while (scan.tau() < tau) scan.advance();
  return {scan.log_sum(), scan.tail_error()};
}

DelayBound delay_bound(const ArrivalModel& arrival, const ServiceModel& service, double epsilon,
                       const SolverConfig& config) {
  check_inputs(arrival, epsilon);
  config.validate();
  DelayBound out;
  out.epsilon = epsilon;
  if (stability_margin(arrival, service) <= 0.0) {
    out.status = BoundStatus::Infeasible;
    return out;
  }

  std::optional<ThetaEvaluation> best;
  double best_theta = 0.0;
  bool saw_nonconvergent = false;
  auto consider = [&](double theta) -> double {
    const std::int64_t cap = best ? best->tau : config.tau_max;
    const ThetaEvaluation ev = evaluate_theta(arrival, service, epsilon, theta, config, cap);
    if (ev.status == ThetaEvaluation::Status::NonConvergent) saw_nonconvergent = true;
    if (ev.status != ThetaEvaluation::Status::Feasible) return kInf;
    if (!best || ev.tau < best->tau || (ev.tau == best->tau && ev.surrogate < best->surrogate)) {
      best = ev;
      best_theta = theta;
    }
    return ev.surrogate;
  };

  const double log_lo = std::log(config.theta_min);
  const double log_hi = std::log(config.theta_max);
  const double step = (log_hi - log_lo) / (config.n_theta - 1);
  int best_index = -1;
  for (int i = 0; i < config.n_theta; ++i) {
    const double theta = std::exp(log_lo + step * i);
    const auto before = best ? std::optional<double>(best_theta) : std::nullopt;
    consider(theta);
    if (best && (!before || best_theta != *before)) best_index = i;
  }
  if (!best) {
    out.status = saw_nonconvergent ? BoundStatus::NonConvergent : BoundStatus::Infeasible;
    return out;
  }

  // Golden-section search in log(theta) on the interpolated crossing point.
  double lo = log_lo + step * std::max(0, best_index - 1);
  double hi = log_lo + step * std::min(config.n_theta - 1, best_index + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = consider(std::exp(x1));
  double f2 = consider(std::exp(x2));
  for (int it = 0; it < config.refine_iterations; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = consider(std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = consider(std::exp(x2));
    }
  }

  // Re-verify the defining inequality at the reported point.
  const LogDelaySum check = log_delay_sum(arrival, service, best_theta, best->tau, config);
  if (!(check.log_sum <= std::log(epsilon))) {
    throw std::logic_error("delay_bound: reported bound fails its own inequality");
  }
  out.status = BoundStatus::Feasible;
  out.d_slots = best->tau;
  out.theta_star = best_theta;
  out.tail_error = check.tail_error;
  out.log_violation = check.log_sum;
  return out;
}

}  // namespace mimodelay
