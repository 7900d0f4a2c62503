#pragma once

namespace mimodelay {

/// Link parameters that turn spectral efficiency into data blocks per slot.
struct LinkUnits {
  double bandwidth_hz = 40e6;
  double slot_us = 31.0;
  double block_bytes = 2312.0;
};

/// c [bit/s/Hz] * bandwidth * slot length / block size in bits.
double rate_conversion(double c_bits_per_s_per_hz, double bandwidth_hz, double slot_us,
                       double block_bytes);

double blocks_per_slot(double bits_per_s_per_hz, const LinkUnits& units);
double bits_per_s_per_hz(double blocks_per_slot, const LinkUnits& units);

double mbps_to_blocks_per_slot(double mbps, const LinkUnits& units);
double blocks_per_slot_to_mbps(double blocks, const LinkUnits& units);

inline double slots_to_ms(double slots, const LinkUnits& units) {
  return slots * units.slot_us / 1000.0;
}

}  // namespace mimodelay
