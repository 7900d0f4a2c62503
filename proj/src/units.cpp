#include "mimodelay/units.hpp"

#include <stdexcept>

namespace mimodelay {

double rate_conversion(double c_bits_per_s_per_hz, double bandwidth_hz, double slot_us,
                       double block_bytes) {
  if (!(bandwidth_hz > 0.0 && slot_us > 0.0 && block_bytes > 0.0)) {
    throw std::invalid_argument("rate_conversion: bandwidth, slot and block size must be positive");
  }
  if (c_bits_per_s_per_hz < 0.0) {
    throw std::invalid_argument("rate_conversion: spectral efficiency must be nonnegative");
  }
  return c_bits_per_s_per_hz * bandwidth_hz * (slot_us * 1e-6) / (block_bytes * 8.0);
}

double blocks_per_slot(double bits_per_s_per_hz, const LinkUnits& units) {
  return rate_conversion(bits_per_s_per_hz, units.bandwidth_hz, units.slot_us, units.block_bytes);
}

double bits_per_s_per_hz(double blocks, const LinkUnits& units) {
  return blocks * (units.block_bytes * 8.0) / (units.bandwidth_hz * (units.slot_us * 1e-6));
}

double mbps_to_blocks_per_slot(double mbps, const LinkUnits& units) {
  return mbps * 1e6 * (units.slot_us * 1e-6) / (units.block_bytes * 8.0);
}

double blocks_per_slot_to_mbps(double blocks, const LinkUnits& units) {
  return blocks * (units.block_bytes * 8.0) / (units.slot_us * 1e-6) / 1e6;
}

}  // namespace mimodelay
