#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mimodelay/random.hpp"
#include "mimodelay/substate.hpp"

namespace mimodelay {

struct MimoConfig {
  int n_tx = 2;
  int n_rx = 2;
  double snr_db = 15.0;
  int n_scatterers = 500;
  std::int64_t n_mc_samples = 100000;
  std::uint64_t rng_seed = 1;
  /// Threads used for Monte-Carlo; results do not depend on this value.
  int n_workers = 1;

  double rho_linear() const { return std::pow(10.0, snr_db / 10.0); }
  void validate() const;
};

using ChannelMatrix = Eigen::MatrixXcd;

/// Finite-scatterer NLOS gain: sum of `n_scatterers` unit phasors with
/// independent uniform phases, scaled by 1/sqrt(n_scatterers) so that
/// E|h|^2 = 1.
template <typename Scalar = double>
std::complex<Scalar> sample_path_gain(int n_scatterers, Rng& rng) {
  Scalar re = 0;
  Scalar im = 0;
  for (int s = 0; s < n_scatterers; ++s) {
    const Scalar phase = static_cast<Scalar>(2 * std::numbers::pi * uniform01(rng));
    re += std::cos(phase);
    im += std::sin(phase);
  }
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(n_scatterers));
  return {re * scale, im * scale};
}

/// n_rx x n_tx realization; good paths get independent gains, bad paths are 0.
/// Gains are drawn in mask order for good paths only.
ChannelMatrix build_channel_matrix(const SubState& substate, const MimoConfig& config, Rng& rng);

/// log2 det(I + rho/n_tx * H H^H), evaluated through a Cholesky factor.
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real capacity(
    const Eigen::MatrixBase<Derived>& h,
    typename Eigen::NumTraits<typename Derived::Scalar>::Real rho_linear, int n_tx) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  using Complex = std::complex<Real>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = h.rows();
  Matrix gram = Matrix::Identity(m, m);
  gram.noalias() += (rho_linear / static_cast<Real>(n_tx)) * (h * h.adjoint());
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("capacity: Cholesky factorization failed");
  }
  Real log_det = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    log_det += 2 * std::log2(std::real(llt.matrixLLT()(i, i)));
  }
  return log_det;
}

struct CapacityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo mean of the capacity over config.n_mc_samples realizations.
CapacityEstimate mean_substate_capacity(const SubState& substate, const MimoConfig& config);

/// Mean capacities (rows: substates, columns: SNRs) estimated from one shared
/// set of all-good realizations masked per substate. Sharing draws keeps the
/// comparison between substates sharp; every entry is still an unbiased mean.
struct CapacityGrid {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;
};

CapacityGrid estimate_capacities(std::span<const SubState> substates, const MimoConfig& config,
                                 std::span<const double> rho_linear);

/// Stored eigenvalues of H_s^H H_s for each substate and sample, so that the
/// mean capacity can be re-evaluated at any SNR without redrawing channels.
/// Memory grows as substates x samples x min(n_tx, n_rx).
class SpectrumSamples {
 public:
  SpectrumSamples(std::span<const SubState> substates, const MimoConfig& config);

  std::size_t size() const { return eigenvalues_.size(); }
  CapacityEstimate mean_capacity(std::size_t index, double rho_linear) const;

 private:
  int n_tx_;
  std::vector<Eigen::MatrixXd> eigenvalues_;  // rank x samples per substate
};

}  // namespace mimodelay
