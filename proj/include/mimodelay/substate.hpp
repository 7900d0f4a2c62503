#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mimodelay {

/// Good/bad assignment of every spatial path of an n_rx x n_tx channel.
///
/// Path (rx, tx) owns bit `rx * n_tx + tx` of the mask, so a 2x2 mask lists
/// h11, h12, h21, h22 in that order. A set bit means the path is good.
class SubState {
 public:
  static constexpr int kMaxPaths = 32;

  SubState(int n_tx, int n_rx, std::uint32_t good_mask = 0);

  static SubState all_good(int n_tx, int n_rx);
  /// Parses a string of 'g'/'b' characters in mask order, e.g. "gbbg".
  static SubState parse(std::string_view pattern, int n_tx, int n_rx);

  int n_tx() const { return n_tx_; }
  int n_rx() const { return n_rx_; }
  int n_paths() const { return n_tx_ * n_rx_; }
  std::uint32_t mask() const { return mask_; }

  bool good(int rx, int tx) const { return (mask_ >> bit(rx, tx)) & 1U; }
  SubState with(int rx, int tx, bool is_good) const;
  int n_good() const;

  std::string to_string() const;

  friend bool operator==(const SubState&, const SubState&) = default;

 private:
  int bit(int rx, int tx) const { return rx * n_tx_ + tx; }

  int n_tx_;
  int n_rx_;
  std::uint32_t mask_;
};

}  // namespace mimodelay
