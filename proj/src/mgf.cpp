#include "mimodelay/mgf.hpp"

#include <algorithm>
#include <vector>

namespace mimodelay {

void ArrivalModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("ArrivalModel: sigma must be positive");
  }
  if (!(period >= 1.0) || !std::isfinite(period)) {
    throw std::invalid_argument("ArrivalModel: period must be at least one slot");
  }
}

ServiceModel ServiceModel::markov(MarkovService hop) {
  const auto k = hop.pi.size();
  if (k < 1 || hop.q.rows() != k || hop.q.cols() != k || hop.rates.size() != k) {
    throw std::invalid_argument("ServiceModel: inconsistent chain dimensions");
  }
  if ((hop.rates.array() < 0.0).any() || (hop.q.array() < 0.0).any() || (hop.pi.array() < 0.0).any()) {
    throw std::invalid_argument("ServiceModel: rates and probabilities must be nonnegative");
  }
  // The support of pi is closed under Q, so states outside it are never
  // visited and only add spurious modes to the realization.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (hop.pi(i) > 0.0) keep.push_back(i);
  }
  if (keep.empty()) throw std::invalid_argument("ServiceModel: stationary vector is zero");
  ServiceModel model;
  if (static_cast<Eigen::Index>(keep.size()) == k) {
    model.hops_.push_back(std::move(hop));
    return model;
  }
  model.hops_.push_back(MarkovService{hop.pi(keep), hop.q(keep, keep), hop.rates(keep)});
  return model;
}

ServiceModel ServiceModel::from_chain(const DofChain& chain) {
  return markov(MarkovService{chain.pi, chain.q, chain.rates});
}

ServiceModel ServiceModel::constant_rate(double rate) {
  return markov(MarkovService{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1),
                              Eigen::VectorXd::Constant(1, rate)});
}

double ServiceModel::first_order_capacity() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& hop : hops_) out = std::min(out, hop.first_order_capacity());
  return out;
}

ServiceModel compose_hops(std::span<const ServiceModel> models) {
  if (models.empty()) throw std::invalid_argument("compose_hops: need at least one model");
  ServiceModel out;
  for (const auto& m : models) out.hops_.insert(out.hops_.end(), m.hops_.begin(), m.hops_.end());
  return out;
}

double log_service_mgf(const ServiceModel& model, double theta, std::size_t t) {
  if (!(theta > 0.0)) throw std::invalid_argument("service_mgf: theta must be positive");
  LogServiceMgf<double> seq(model, theta);
  return seq(t);
}

double service_mgf(const ServiceModel& model, double theta, std::size_t t) {
  return std::exp(log_service_mgf(model, theta, t));
}

}  // namespace mimodelay
