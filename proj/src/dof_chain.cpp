#include "mimodelay/dof_chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace mimodelay {

namespace {

void check_cap(int n_tx, int n_rx, int cap) {
  if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("antenna counts must be >= 1");
  if (cap > 30) throw std::invalid_argument("enumeration cap above 30 paths is not supported");
  if (n_tx * n_rx > cap) {
    throw EnumerationCapError("substate enumeration needs 2^" + std::to_string(n_tx * n_rx) +
                              " states, above the cap of 2^" + std::to_string(cap));
  }
}

bool try_augment(const SubState& s, int tx, std::vector<int>& rx_match, std::vector<bool>& seen) {
  for (int rx = 0; rx < s.n_rx(); ++rx) {
    if (!s.good(rx, tx) || seen[static_cast<std::size_t>(rx)]) continue;
    seen[static_cast<std::size_t>(rx)] = true;
    const int owner = rx_match[static_cast<std::size_t>(rx)];
    if (owner < 0 || try_augment(s, owner, rx_match, seen)) {
      rx_match[static_cast<std::size_t>(rx)] = tx;
      return true;
    }
  }
  return false;
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0U); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::uint32_t> parent;
};

std::uint32_t swap_bits(std::uint32_t mask, int i, int j) {
  const std::uint32_t bi = (mask >> i) & 1U;
  const std::uint32_t bj = (mask >> j) & 1U;
  if (bi == bj) return mask;
  return mask ^ ((1U << i) | (1U << j));
}

}  // namespace

int dof_of_substate(const SubState& substate) {
  std::vector<int> rx_match(static_cast<std::size_t>(substate.n_rx()), -1);
  int matched = 0;
  for (int tx = 0; tx < substate.n_tx(); ++tx) {
    std::vector<bool> seen(static_cast<std::size_t>(substate.n_rx()), false);
    if (try_augment(substate, tx, rx_match, seen)) ++matched;
  }
  return matched;
}

std::vector<std::uint8_t> dof_classes(int n_tx, int n_rx, int cap) {
  check_cap(n_tx, n_rx, cap);
  const std::uint32_t n_states = 1U << (n_tx * n_rx);
  std::vector<std::uint8_t> out(n_states);
  for (std::uint32_t mask = 0; mask < n_states; ++mask) {
    out[mask] = static_cast<std::uint8_t>(dof_of_substate(SubState(n_tx, n_rx, mask)));
  }
  return out;
}

Eigen::VectorXd substate_stationary(const GEParams& params, int n_tx, int n_rx, int cap) {
  check_cap(n_tx, n_rx, cap);
  const int n_paths = n_tx * n_rx;
  const double omega = block_error_prob(params);
  // Products in a fixed order so that equal omega gives bit-identical output.
  std::vector<double> by_good(static_cast<std::size_t>(n_paths) + 1);
  for (int g = 0; g <= n_paths; ++g) {
    double p = 1.0;
    for (int k = 0; k < g; ++k) p *= 1.0 - omega;
    for (int k = g; k < n_paths; ++k) p *= omega;
    by_good[static_cast<std::size_t>(g)] = p;
  }
  const std::uint32_t n_states = 1U << n_paths;
  Eigen::VectorXd out(n_states);
  for (std::uint32_t mask = 0; mask < n_states; ++mask) {
    out(mask) = by_good[static_cast<std::size_t>(std::popcount(mask))];
  }
  return out;
}

Eigen::VectorXd class_stationary(const GEParams& params, int n_tx, int n_rx, int cap) {
  const std::vector<std::uint8_t> cls = dof_classes(n_tx, n_rx, cap);
  const Eigen::VectorXd pi_s = substate_stationary(params, n_tx, n_rx, cap);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_dof_classes(n_tx, n_rx));
  for (std::size_t s = 0; s < cls.size(); ++s) out(cls[s]) += pi_s(static_cast<Eigen::Index>(s));
  return out;
}

std::vector<SubstateOrbit> substate_orbits(int n_tx, int n_rx, int cap) {
  check_cap(n_tx, n_rx, cap);
  const std::uint32_t n_states = 1U << (n_tx * n_rx);
  DisjointSets sets(n_states);
  for (std::uint32_t mask = 0; mask < n_states; ++mask) {
    for (int r = 0; r + 1 < n_rx; ++r) {
      std::uint32_t image = mask;
      for (int c = 0; c < n_tx; ++c) image = swap_bits(image, r * n_tx + c, (r + 1) * n_tx + c);
      sets.unite(mask, image);
    }
    for (int c = 0; c + 1 < n_tx; ++c) {
      std::uint32_t image = mask;
      for (int r = 0; r < n_rx; ++r) image = swap_bits(image, r * n_tx + c, r * n_tx + c + 1);
      sets.unite(mask, image);
    }
  }
  std::vector<std::int64_t> size(n_states, 0);
  for (std::uint32_t mask = 0; mask < n_states; ++mask) ++size[sets.find(mask)];
  std::vector<SubstateOrbit> orbits;
  for (std::uint32_t mask = 0; mask < n_states; ++mask) {
    if (sets.find(mask) != mask) continue;
    SubState rep(n_tx, n_rx, mask);
    orbits.push_back({rep, dof_of_substate(rep), size[mask]});
  }
  return orbits;
}

bool DofChain::rates_nondecreasing() const {
  for (Eigen::Index i = 1; i < rates.size(); ++i) {
    if (rates(i) < rates(i - 1)) return false;
  }
  return true;
}

DofChain build_chain(const GEParams& params, int n_tx, int n_rx, const Eigen::VectorXd& class_rates,
                     int cap) {
  const int k = num_dof_classes(n_tx, n_rx);
  if (class_rates.size() != k) {
    throw std::invalid_argument("build_chain: need one rate per DOF class");
  }
  if (class_rates(0) != 0.0) {
    throw std::invalid_argument("build_chain: the zero-DOF class must have rate 0");
  }
  if ((class_rates.array() < 0.0).any()) {
    throw std::invalid_argument("build_chain: rates must be nonnegative");
  }
  const std::vector<std::uint8_t> cls = dof_classes(n_tx, n_rx, cap);
  const Eigen::VectorXd pi_s = substate_stationary(params, n_tx, n_rx, cap);
  const auto n_states = static_cast<Eigen::Index>(cls.size());
  const int n_paths = n_tx * n_rx;

  // y(s, j) = P(s -> class j): start from class indicators and apply the
  // per-path 2x2 transition along each bit of the product chain.
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_states, k);
  for (Eigen::Index s = 0; s < n_states; ++s) y(s, cls[static_cast<std::size_t>(s)]) = 1.0;
  const double p_gb = params.p_gb();
  const double p_bg = params.p_bg();
  for (int bit = 0; bit < n_paths; ++bit) {
    const Eigen::Index stride = Eigen::Index{1} << bit;
    for (Eigen::Index s = 0; s < n_states; ++s) {
      if (s & stride) continue;
      const Eigen::Index bad = s;
      const Eigen::Index good = s | stride;
      const Eigen::RowVectorXd from_bad = (1.0 - p_bg) * y.row(bad) + p_bg * y.row(good);
      const Eigen::RowVectorXd from_good = p_gb * y.row(bad) + (1.0 - p_gb) * y.row(good);
      y.row(bad) = from_bad;
      y.row(good) = from_good;
    }
  }

  DofChain chain;
  chain.pi = Eigen::VectorXd::Zero(k);
  chain.q = Eigen::MatrixXd::Zero(k, k);
  chain.rates = class_rates;
  for (Eigen::Index s = 0; s < n_states; ++s) {
    const int c = cls[static_cast<std::size_t>(s)];
    chain.pi(c) += pi_s(s);
    chain.q.row(c) += pi_s(s) * y.row(s);
  }
  chain.empty_class.assign(static_cast<std::size_t>(k), false);
  for (int i = 0; i < k; ++i) {
    if (chain.pi(i) > 0.0) {
      chain.q.row(i) /= chain.pi(i);
    } else {
      chain.q.row(i).setZero();
      chain.q(i, i) = 1.0;
      chain.empty_class[static_cast<std::size_t>(i)] = true;
    }
  }
  return chain;
}

std::vector<std::vector<ClassRate>> class_rates(const MimoConfig& config, const LinkUnits& units,
                                                std::span<const double> snr_db) {
  config.validate();
  const int k = num_dof_classes(config.n_tx, config.n_rx);
  const std::vector<SubstateOrbit> orbits = substate_orbits(config.n_tx, config.n_rx);
  std::vector<SubState> reps;
  reps.reserve(orbits.size());
  for (const auto& o : orbits) reps.push_back(o.representative);
  std::vector<double> rhos;
  for (double db : snr_db) rhos.push_back(std::pow(10.0, db / 10.0));
  const CapacityGrid grid = estimate_capacities(reps, config, rhos);

  std::vector<std::vector<ClassRate>> out(rhos.size(), std::vector<ClassRate>(static_cast<std::size_t>(k)));
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    std::vector<double> best(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      const auto c = static_cast<std::size_t>(orbits[o].dof);
      const double mean = grid.mean(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(r));
      if (mean < best[c]) {
        best[c] = mean;
        ClassRate& cr = out[r][c];
        cr.bits_per_s_per_hz = c == 0 ? 0.0 : mean;
        cr.std_error_bits = grid.std_error(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(r));
        cr.argmin = orbits[o].representative;
      }
    }
    for (auto& cr : out[r]) cr.blocks_per_slot = blocks_per_slot(cr.bits_per_s_per_hz, units);
  }
  return out;
}

ClassRate class_rate(int class_index, const MimoConfig& config, const LinkUnits& units) {
  if (class_index < 0 || class_index >= num_dof_classes(config.n_tx, config.n_rx)) {
    throw std::out_of_range("class_rate: class index out of range");
  }
  const double snr[] = {config.snr_db};
  return class_rates(config, units, snr).front()[static_cast<std::size_t>(class_index)];
}

void write_table(std::ostream& os, const DofChain& chain) {
  const int k = chain.k_states();
  os << "state pi rate";
  for (int j = 0; j < k; ++j) os << " q" << j;
  os << '\n';
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < k; ++i) {
    os << i << ' ' << chain.pi(i) << ' ' << chain.rates(i);
    for (int j = 0; j < k; ++j) os << ' ' << chain.q(i, j);
    os << '\n';
  }
  os.precision(old_precision);
}

DofChain read_table(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("read_table: missing header");
  std::istringstream hs(header);
  std::string token;
  int columns = 0;
  while (hs >> token) ++columns;
  const int k = columns - 3;
  if (k < 1) throw std::runtime_error("read_table: malformed header");
  DofChain chain;
  chain.pi.resize(k);
  chain.rates.resize(k);
  chain.q.resize(k, k);
  for (int i = 0; i < k; ++i) {
    int index = -1;
    if (!(is >> index) || index != i) throw std::runtime_error("read_table: bad state index");
    if (!(is >> chain.pi(i) >> chain.rates(i))) throw std::runtime_error("read_table: truncated row");
    for (int j = 0; j < k; ++j) {
      if (!(is >> chain.q(i, j))) throw std::runtime_error("read_table: truncated row");
    }
  }
  chain.empty_class.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) chain.empty_class[static_cast<std::size_t>(i)] = chain.pi(i) == 0.0;
  return chain;
}

}  // namespace mimodelay
