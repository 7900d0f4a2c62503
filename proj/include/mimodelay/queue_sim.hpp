#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mimodelay/ge_paths.hpp"
#include "mimodelay/mgf.hpp"

namespace mimodelay {

/// Path-level simulation of the FIFO link(s) that the analytic model describes.
struct SimConfig {
  std::int64_t n_slots = 10'000'000;
  int n_tx = 2;
  int n_rx = 2;
  GEParams ge{0.01, 0.1};
  /// Service per DOF class in blocks per slot, identical for every hop.
  std::vector<double> rates;
  ArrivalModel arrival;
  int hops = 1;
  std::uint64_t rng_seed = 1;
  std::int64_t warmup_slots = 10'000;

  void validate() const;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 1.0;
};

/// Two-sided Wilson score interval for k successes out of n trials.
ConfidenceInterval wilson_interval(std::int64_t k, std::int64_t n, double level);

struct SimResult {
  /// delay_histogram[d] = number of measured blocks with delay d slots.
  std::vector<std::int64_t> delay_histogram;
  std::int64_t n_measured = 0;

  std::int64_t blocks_arrived = 0;
  std::int64_t blocks_departed = 0;
  std::int64_t blocks_queued = 0;
  double work_arrived = 0.0;
  double work_departed = 0.0;
  double backlog = 0.0;  // summed over hops, at the end of the run

  /// Slots the first hop spent in each DOF class after warmup.
  std::vector<std::int64_t> class_slots;
  bool fifo_ok = true;

  /// Fraction of measured blocks delayed by more than d slots.
  double violation_freq(std::int64_t d) const;
  std::int64_t violations(std::int64_t d) const;
  ConfidenceInterval confidence(std::int64_t d, double level = 0.99) const;
  std::int64_t max_delay() const;
};

/// Per slot: advance every GE path, classify each hop by DOF, admit the
/// periodic source's bursts, then serve min(backlog, rate) fluid blocks per
/// hop in order, forwarding departures of hop k to hop k + 1 in the same
/// slot. A block's delay is the slot in which its last bit leaves the last
/// hop minus the slot in which its last bit arrived. Blocks that arrive
/// during warmup are not measured.
SimResult run_queue_sim(const SimConfig& config);

/// CSV with columns d_slots, ccdf, ci_low, ci_high for d = 0 .. max delay.
void write_ccdf_csv(std::ostream& os, const SimResult& result, double level = 0.99);

}  // namespace mimodelay
