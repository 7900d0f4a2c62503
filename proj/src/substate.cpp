#include "mimodelay/substate.hpp"

#include <bit>
#include <stdexcept>

namespace mimodelay {

SubState::SubState(int n_tx, int n_rx, std::uint32_t good_mask)
    : n_tx_(n_tx), n_rx_(n_rx), mask_(good_mask) {
  if (n_tx < 1 || n_rx < 1) {
    throw std::invalid_argument("SubState: antenna counts must be positive");
  }
  if (n_tx * n_rx > kMaxPaths) {
    throw std::invalid_argument("SubState: at most 32 spatial paths");
  }
  if (n_tx * n_rx < kMaxPaths && (good_mask >> (n_tx * n_rx)) != 0) {
    throw std::invalid_argument("SubState: mask has bits beyond the path count");
  }
}

SubState SubState::all_good(int n_tx, int n_rx) {
  const int n = n_tx * n_rx;
  const std::uint32_t mask = n >= 32 ? 0xFFFFFFFFU : ((1U << n) - 1U);
  return SubState(n_tx, n_rx, mask);
}

SubState SubState::parse(std::string_view pattern, int n_tx, int n_rx) {
  if (static_cast<int>(pattern.size()) != n_tx * n_rx) {
    throw std::invalid_argument("SubState::parse: pattern length must equal n_tx * n_rx");
  }
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    if (pattern[k] == 'g') {
      mask |= 1U << k;
    } else if (pattern[k] != 'b') {
      throw std::invalid_argument("SubState::parse: expected only 'g' or 'b'");
    }
  }
  return SubState(n_tx, n_rx, mask);
}

SubState SubState::with(int rx, int tx, bool is_good) const {
  const std::uint32_t b = 1U << bit(rx, tx);
  return SubState(n_tx_, n_rx_, is_good ? (mask_ | b) : (mask_ & ~b));
}

int SubState::n_good() const { return std::popcount(mask_); }

std::string SubState::to_string() const {
  std::string out(static_cast<std::size_t>(n_paths()), 'b');
  for (int k = 0; k < n_paths(); ++k) {
    if ((mask_ >> k) & 1U) out[static_cast<std::size_t>(k)] = 'g';
  }
  return out;
}

}  // namespace mimodelay
