#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mimodelay/ge_paths.hpp"
#include "mimodelay/mimo_channel.hpp"
#include "mimodelay/substate.hpp"
#include "mimodelay/units.hpp"

namespace mimodelay {

inline constexpr int kDefaultEnumerationCap = 20;

class EnumerationCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Degrees of freedom of a substate: size of a maximum matching between
/// transmit and receive antennas over good paths. A receive antenna decodes
/// one stream and a transmit antenna counts once.
int dof_of_substate(const SubState& substate);

inline int num_dof_classes(int n_tx, int n_rx) { return std::min(n_tx, n_rx) + 1; }

/// DOF class of every mask 0 .. 2^(n_tx n_rx) - 1.
std::vector<std::uint8_t> dof_classes(int n_tx, int n_rx, int cap = kDefaultEnumerationCap);

/// Stationary probability of every substate for independent identical paths.
Eigen::VectorXd substate_stationary(const GEParams& params, int n_tx, int n_rx,
                                    int cap = kDefaultEnumerationCap);

/// Stationary mass of each DOF class.
Eigen::VectorXd class_stationary(const GEParams& params, int n_tx, int n_rx,
                                 int cap = kDefaultEnumerationCap);

/// One orbit of substates under independent permutations of transmit and
/// receive antennas. All members share DOF and mean capacity.
struct SubstateOrbit {
  SubState representative;  // smallest mask in the orbit
  int dof;
  std::int64_t size;
};

std::vector<SubstateOrbit> substate_orbits(int n_tx, int n_rx, int cap = kDefaultEnumerationCap);

/// Lumped K-state service chain, K = min(n_tx, n_rx) + 1; state i has i DOF.
struct DofChain {
  Eigen::VectorXd pi;
  Eigen::MatrixXd q;
  Eigen::VectorXd rates;  // data blocks per slot
  /// Classes with zero stationary mass; their Q row is the identity row.
  std::vector<bool> empty_class;

  int k_states() const { return static_cast<int>(pi.size()); }
  double first_order_capacity() const { return rates.dot(pi); }
  bool rates_nondecreasing() const;
};

/// Aggregates the 2^(n_tx n_rx) product chain by DOF class.
///
/// pi[i] is the stationary mass of class i and
///   Q[i][j] = sum_{s in i} (pi_s / pi[i]) P(s -> class j),
/// so pi Q = pi holds exactly even though the partition is not lumpable.
DofChain build_chain(const GEParams& params, int n_tx, int n_rx, const Eigen::VectorXd& class_rates,
                     int cap = kDefaultEnumerationCap);

struct ClassRate {
  double bits_per_s_per_hz = 0.0;
  double blocks_per_slot = 0.0;
  double std_error_bits = 0.0;  // Monte-Carlo standard error of the minimizing substate
  SubState argmin{1, 1};
};

/// Rate of a DOF class: smallest mean capacity over its substates, one
/// representative per symmetry orbit.
ClassRate class_rate(int class_index, const MimoConfig& config, const LinkUnits& units);

/// All class rates for each SNR in `snr_db`, sharing one set of channel draws.
/// Result is indexed [snr][class].
std::vector<std::vector<ClassRate>> class_rates(const MimoConfig& config, const LinkUnits& units,
                                                std::span<const double> snr_db);

/// Plain-text table: a header line, then one row per state with
/// index, pi, rate and the Q row.
void write_table(std::ostream& os, const DofChain& chain);
DofChain read_table(std::istream& is);

}  // namespace mimodelay
