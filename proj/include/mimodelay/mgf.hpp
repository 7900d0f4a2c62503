#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mimodelay/dof_chain.hpp"

namespace mimodelay {

/// Periodic source: `sigma` data blocks every `period` slots, with a start
/// phase uniform over one period.
struct ArrivalModel {
  double sigma = 1.0;
  double period = 10.0;

  double rate() const { return sigma / period; }
  void validate() const;
};

/// log E[exp(theta A(t))] for the periodic source:
///   theta sigma floor(t/period) + log(1 + frac(t/period) (e^{theta sigma} - 1)).
template <typename Scalar>
Scalar log_arrival_mgf(const ArrivalModel& arrival, Scalar theta, Scalar t) {
  using std::exp;
  using std::expm1;
  using std::floor;
  using std::log;
  using std::log1p;
  const Scalar x = theta * static_cast<Scalar>(arrival.sigma);
  const Scalar ratio = t / static_cast<Scalar>(arrival.period);
  const Scalar whole = floor(ratio);
  const Scalar frac = ratio - whole;
  Scalar partial = 0;
  if (frac > 0) {
    partial = x > Scalar(30) ? x + log(frac + (1 - frac) * exp(-x)) : log1p(frac * expm1(x));
  }
  return x * whole + partial;
}

template <typename Scalar>
Scalar arrival_mgf(const ArrivalModel& arrival, Scalar theta, Scalar t) {
  using std::exp;
  return exp(log_arrival_mgf(arrival, theta, t));
}

/// One Markov-modulated hop: stationary vector, transition matrix and
/// per-state service in blocks per slot.
struct MarkovService {
  Eigen::VectorXd pi;
  Eigen::MatrixXd q;
  Eigen::VectorXd rates;

  double first_order_capacity() const { return rates.dot(pi); }
};

/// Service of a single link or of independent links in tandem. A constant
/// server is a one-state chain. States with zero stationary mass are dropped.
class ServiceModel {
 public:
  static ServiceModel markov(MarkovService hop);
  static ServiceModel from_chain(const DofChain& chain);
  static ServiceModel constant_rate(double rate);

  std::span<const MarkovService> hops() const { return hops_; }
  std::size_t n_hops() const { return hops_.size(); }
  /// Smallest per-hop first-order capacity.
  double first_order_capacity() const;

  friend ServiceModel compose_hops(std::span<const ServiceModel> models);

 private:
  ServiceModel() = default;
  std::vector<MarkovService> hops_;
};

/// End-to-end service of independent hops in tandem; its MGF is the
/// convolution (f * g)(t) = sum_{u=0}^{t} f(u) g(t - u) of the hop MGFs.
ServiceModel compose_hops(std::span<const ServiceModel> models);

/// Linear realization of a service MGF sequence at fixed theta:
///   M(0) = 1,   M(t) = c A^{t-1} b  for t >= 1.
/// For a single chain c = pi, A = R(-theta) Q, b = R(-theta) 1. Hops in
/// tandem are connected in series, which multiplies their generating
/// functions and therefore convolves the sequences. All entries are >= 0.
template <typename Scalar>
struct StateSpace {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  Matrix a;
  Vector b;
  RowVector c;

  Eigen::Index dim() const { return a.rows(); }
};

template <typename Scalar = double>
StateSpace<Scalar> realize(const ServiceModel& model, Scalar theta) {
  using SS = StateSpace<Scalar>;
  SS out;
  for (const MarkovService& hop : model.hops()) {
    const auto k = hop.pi.size();
    const typename SS::Vector decay = (-theta * hop.rates.cast<Scalar>()).array().exp().matrix();
    typename SS::Matrix a_hop = decay.asDiagonal() * hop.q.cast<Scalar>();
    if (out.dim() == 0) {
      out.a = std::move(a_hop);
      out.b = decay;
      out.c = hop.pi.cast<Scalar>().transpose();
      continue;
    }
    const Eigen::Index n = out.dim();
    typename SS::Matrix a = SS::Matrix::Zero(n + k, n + k);
    a.topLeftCorner(n, n) = out.a;
    a.bottomRightCorner(k, k) = a_hop;
    a.bottomLeftCorner(k, n) = decay * out.c;
    typename SS::Vector b(n + k);
    b << out.b, decay;
    typename SS::RowVector c(n + k);
    c << out.c, hop.pi.cast<Scalar>().transpose();
    out.a = std::move(a);
    out.b = std::move(b);
    out.c = std::move(c);
  }
  return out;
}

/// Memoized log M_S(theta, t) for t = 0, 1, ... at one theta. The row vector
/// c A^{t-1} is kept normalized with a separate log scale, so long horizons
/// neither underflow nor overflow.
template <typename Scalar = double>
class LogServiceMgf {
 public:
  LogServiceMgf(const ServiceModel& model, Scalar theta)
      : ss_(realize(model, theta)), row_(ss_.c), values_{Scalar(0)} {}

  Scalar operator()(std::size_t t) {
    while (values_.size() <= t) extend();
    return values_[t];
  }

 private:
  void extend() {
    using std::log;
    const Scalar inner = row_.dot(ss_.b);
    values_.push_back(inner > 0 ? log_scale_ + log(inner) : -std::numeric_limits<Scalar>::infinity());
    row_ = (row_ * ss_.a).eval();
    const Scalar peak = row_.cwiseAbs().maxCoeff();
    if (peak > 0) {
      row_ /= peak;
      log_scale_ += log(peak);
    }
  }

  StateSpace<Scalar> ss_;
  typename StateSpace<Scalar>::RowVector row_;
  Scalar log_scale_ = 0;
  std::vector<Scalar> values_;
};

/// log E[exp(-theta S(0, t))]; 0 at t = 0.
double log_service_mgf(const ServiceModel& model, double theta, std::size_t t);
double service_mgf(const ServiceModel& model, double theta, std::size_t t);

}  // namespace mimodelay
