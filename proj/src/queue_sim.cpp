#include "mimodelay/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <stdexcept>

#include "mimodelay/dof_chain.hpp"
#include "mimodelay/random.hpp"

namespace mimodelay {

namespace {

constexpr double kBlockTolerance = 1e-7;

double normal_quantile_two_sided(double level) {
  // Solves erfc(z / sqrt 2) = 1 - level by bisection.
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > 1.0 - level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Hop {
  Rng rng;
  std::vector<PathState> paths;
  double queue = 0.0;
};

std::uint32_t good_mask(const std::vector<PathState>& paths) {
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    if (paths[k] == PathState::Good) mask |= 1U << k;
  }
  return mask;
}

}  // namespace

void SimConfig::validate() const {
  arrival.validate();
  if (n_slots < 1 || warmup_slots < 0 || warmup_slots >= n_slots) {
    throw std::invalid_argument("SimConfig: need 0 <= warmup_slots < n_slots");
  }
  if (hops < 1) throw std::invalid_argument("SimConfig: hops must be >= 1");
  if (n_tx < 1 || n_rx < 1 || n_tx * n_rx > SubState::kMaxPaths) {
    throw std::invalid_argument("SimConfig: unsupported antenna configuration");
  }
  if (static_cast<int>(rates.size()) != num_dof_classes(n_tx, n_rx)) {
    throw std::invalid_argument("SimConfig: need one rate per DOF class");
  }
  for (double r : rates) {
    if (!(r >= 0.0)) throw std::invalid_argument("SimConfig: rates must be nonnegative");
  }
}

ConfidenceInterval wilson_interval(std::int64_t k, std::int64_t n, double level) {
  if (n <= 0) return {0.0, 1.0};
  const double z = normal_quantile_two_sided(level);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::int64_t SimResult::violations(std::int64_t d) const {
  std::int64_t count = 0;
  for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(d + 1, 0)); i < delay_histogram.size(); ++i) {
    count += delay_histogram[i];
  }
  return count;
}

double SimResult::violation_freq(std::int64_t d) const {
  if (n_measured == 0) return 0.0;
  return static_cast<double>(violations(d)) / static_cast<double>(n_measured);
}

ConfidenceInterval SimResult::confidence(std::int64_t d, double level) const {
  return wilson_interval(violations(d), n_measured, level);
}

std::int64_t SimResult::max_delay() const {
  return delay_histogram.empty() ? -1 : static_cast<std::int64_t>(delay_histogram.size()) - 1;
}

SimResult run_queue_sim(const SimConfig& config) {
  config.validate();
  const int n_paths = config.n_tx * config.n_rx;
  const double omega = block_error_prob(config.ge);
  std::vector<std::uint8_t> dof_table;
  if (n_paths <= kDefaultEnumerationCap) dof_table = dof_classes(config.n_tx, config.n_rx);
  auto dof_of = [&](std::uint32_t mask) -> int {
    if (!dof_table.empty()) return dof_table[mask];
    return dof_of_substate(SubState(config.n_tx, config.n_rx, mask));
  };

  std::vector<Hop> hops;
  for (int h = 0; h < config.hops; ++h) {
    Hop hop{substream(config.rng_seed, 1 + static_cast<std::uint64_t>(h)), {}, 0.0};
    hop.paths.resize(static_cast<std::size_t>(n_paths));
    for (auto& p : hop.paths) p = uniform01(hop.rng) < omega ? PathState::Bad : PathState::Good;
    hops.push_back(std::move(hop));
  }

  // Bursts at continuous times (U + n) * period land in slot ceil(time).
  Rng arrival_rng = substream(config.rng_seed, 0);
  const double phase = uniform01(arrival_rng) * config.arrival.period;
  std::int64_t burst_index = 0;
  auto burst_slot = [&](std::int64_t n) {
    return static_cast<std::int64_t>(std::ceil(phase + static_cast<double>(n) * config.arrival.period));
  };
  std::int64_t next_burst = burst_slot(0);

  SimResult result;
  result.class_slots.assign(static_cast<std::size_t>(num_dof_classes(config.n_tx, config.n_rx)), 0);
  std::deque<std::int64_t> pending;  // arrival slot per block, FIFO
  double arrived = 0.0;
  double departed = 0.0;
  std::int64_t next_block_in = 1;
  std::int64_t next_block_out = 1;
  std::int64_t last_departure = -1;
  std::vector<double> rate(hops.size());

  for (std::int64_t t = 0; t < config.n_slots; ++t) {
    for (std::size_t h = 0; h < hops.size(); ++h) {
      Hop& hop = hops[h];
      if (t > 0) {
        for (auto& p : hop.paths) p = step(p, config.ge, uniform01(hop.rng));
      }
      const int cls = dof_of(good_mask(hop.paths));
      rate[h] = config.rates[static_cast<std::size_t>(cls)];
      if (h == 0 && t >= config.warmup_slots) ++result.class_slots[static_cast<std::size_t>(cls)];
    }

    double input = 0.0;
    while (next_burst == t) {
      input += config.arrival.sigma;
      next_burst = burst_slot(++burst_index);
    }
    arrived += input;
    while (static_cast<double>(next_block_in) <= arrived + kBlockTolerance) {
      pending.push_back(t);
      ++next_block_in;
      ++result.blocks_arrived;
    }

    for (std::size_t h = 0; h < hops.size(); ++h) {
      Hop& hop = hops[h];
      hop.queue += input;
      const double served = std::min(hop.queue, rate[h]);
      hop.queue -= served;
      input = served;
    }
    departed += input;

    while (!pending.empty() && static_cast<double>(next_block_out) <= departed + kBlockTolerance) {
      const std::int64_t arrival_slot = pending.front();
      pending.pop_front();
      ++next_block_out;
      ++result.blocks_departed;
      if (t < last_departure) result.fifo_ok = false;
      last_departure = t;
      if (arrival_slot < config.warmup_slots) continue;
      const auto delay = static_cast<std::size_t>(t - arrival_slot);
      if (delay >= result.delay_histogram.size()) result.delay_histogram.resize(delay + 1, 0);
      ++result.delay_histogram[delay];
      ++result.n_measured;
    }
  }

  result.blocks_queued = static_cast<std::int64_t>(pending.size());
  result.work_arrived = arrived;
  result.work_departed = departed;
  for (const auto& hop : hops) result.backlog += hop.queue;
  return result;
}

void write_ccdf_csv(std::ostream& os, const SimResult& result, double level) {
  os << "d_slots,ccdf,ci_low,ci_high\n";
  for (std::int64_t d = 0; d <= result.max_delay(); ++d) {
    const ConfidenceInterval ci = result.confidence(d, level);
    os << d << ',' << result.violation_freq(d) << ',' << ci.low << ',' << ci.high << '\n';
  }
}

}  // namespace mimodelay
