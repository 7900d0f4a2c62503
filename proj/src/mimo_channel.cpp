#include "mimodelay/mimo_channel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <Eigen/Eigenvalues>

namespace mimodelay {

namespace {

constexpr std::int64_t kChunkSize = 2048;

std::int64_t chunk_count(std::int64_t n_samples) {
  return (n_samples + kChunkSize - 1) / kChunkSize;
}

/// Runs body(chunk) for every chunk on up to n_workers threads. Each chunk
/// draws from its own substream, so the split does not change results.
template <typename Body>
void for_each_chunk(std::int64_t n_chunks, int n_workers, Body&& body) {
  const int workers = static_cast<int>(std::clamp<std::int64_t>(n_workers, 1, n_chunks));
  if (workers == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t c = next++; c < n_chunks; c = next++) body(c);
    });
  }
  for (auto& t : pool) t.join();
}

void draw_full_matrix(ChannelMatrix& h, int n_scatterers, Rng& rng) {
  for (Eigen::Index m = 0; m < h.rows(); ++m) {
    for (Eigen::Index n = 0; n < h.cols(); ++n) {
      h(m, n) = sample_path_gain(n_scatterers, rng);
    }
  }
}

Eigen::MatrixXcd mask_matrix(const SubState& s) {
  Eigen::MatrixXcd mask = Eigen::MatrixXcd::Zero(s.n_rx(), s.n_tx());
  for (int m = 0; m < s.n_rx(); ++m) {
    for (int n = 0; n < s.n_tx(); ++n) {
      if (s.good(m, n)) mask(m, n) = 1.0;
    }
  }
  return mask;
}

void check_dimensions(std::span<const SubState> substates, const MimoConfig& config) {
  for (const auto& s : substates) {
    if (s.n_tx() != config.n_tx || s.n_rx() != config.n_rx) {
      throw std::invalid_argument("substate dimensions do not match the MIMO configuration");
    }
  }
}

/// Gram matrix of the smaller side, whose nonzero spectrum equals that of H H^H.
void small_gram(const ChannelMatrix& h, Eigen::MatrixXcd& gram) {
  if (h.rows() <= h.cols()) {
    gram.noalias() = h * h.adjoint();
  } else {
    gram.noalias() = h.adjoint() * h;
  }
}

}  // namespace

void MimoConfig::validate() const {
  if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("MimoConfig: antenna counts must be >= 1");
  if (n_scatterers < 1) throw std::invalid_argument("MimoConfig: n_scatterers must be >= 1");
  if (n_mc_samples < 1) throw std::invalid_argument("MimoConfig: n_mc_samples must be >= 1");
  if (!(rho_linear() > 0.0) || !std::isfinite(rho_linear())) {
    throw std::invalid_argument("MimoConfig: linear SNR must be positive and finite");
  }
}

ChannelMatrix build_channel_matrix(const SubState& substate, const MimoConfig& config, Rng& rng) {
  if (substate.n_tx() != config.n_tx || substate.n_rx() != config.n_rx) {
    throw std::invalid_argument("build_channel_matrix: substate dimensions do not match");
  }
  ChannelMatrix h = ChannelMatrix::Zero(config.n_rx, config.n_tx);
  for (int m = 0; m < config.n_rx; ++m) {
    for (int n = 0; n < config.n_tx; ++n) {
      if (substate.good(m, n)) h(m, n) = sample_path_gain(config.n_scatterers, rng);
    }
  }
  return h;
}

CapacityEstimate mean_substate_capacity(const SubState& substate, const MimoConfig& config) {
  config.validate();
  const std::int64_t n_chunks = chunk_count(config.n_mc_samples);
  std::vector<std::pair<double, double>> sums(static_cast<std::size_t>(n_chunks));
  const double rho = config.rho_linear();
  for_each_chunk(n_chunks, config.n_workers, [&](std::int64_t c) {
    Rng rng = substream(config.rng_seed, static_cast<std::uint64_t>(c));
    const std::int64_t begin = c * kChunkSize;
    const std::int64_t end = std::min(config.n_mc_samples, begin + kChunkSize);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double cap = capacity(build_channel_matrix(substate, config, rng), rho, config.n_tx);
      sum += cap;
      sum_sq += cap * cap;
    }
    sums[static_cast<std::size_t>(c)] = {sum, sum_sq};
  });
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& [s, sq] : sums) {
    sum += s;
    sum_sq += sq;
  }
  const auto n = static_cast<double>(config.n_mc_samples);
  CapacityEstimate out;
  out.mean = sum / n;
  if (config.n_mc_samples > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

CapacityGrid estimate_capacities(std::span<const SubState> substates, const MimoConfig& config,
                                 std::span<const double> rho_linear) {
  config.validate();
  check_dimensions(substates, config);
  const auto n_sub = static_cast<Eigen::Index>(substates.size());
  const auto n_rho = static_cast<Eigen::Index>(rho_linear.size());
  std::vector<Eigen::MatrixXcd> masks;
  masks.reserve(substates.size());
  for (const auto& s : substates) masks.push_back(mask_matrix(s));

  const std::int64_t n_chunks = chunk_count(config.n_mc_samples);
  std::vector<Eigen::MatrixXd> chunk_sum(static_cast<std::size_t>(n_chunks));
  std::vector<Eigen::MatrixXd> chunk_sq(static_cast<std::size_t>(n_chunks));

  for_each_chunk(n_chunks, config.n_workers, [&](std::int64_t c) {
    Rng rng = substream(config.rng_seed, static_cast<std::uint64_t>(c));
    const std::int64_t begin = c * kChunkSize;
    const std::int64_t end = std::min(config.n_mc_samples, begin + kChunkSize);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_sub, n_rho);
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n_sub, n_rho);
    ChannelMatrix full(config.n_rx, config.n_tx);
    ChannelMatrix masked(config.n_rx, config.n_tx);
    const Eigen::Index dim = std::min(config.n_rx, config.n_tx);
    Eigen::MatrixXcd gram(dim, dim);
    Eigen::MatrixXcd work(dim, dim);
    Eigen::LLT<Eigen::MatrixXcd> llt(dim);
    for (std::int64_t i = begin; i < end; ++i) {
      draw_full_matrix(full, config.n_scatterers, rng);
      for (Eigen::Index s = 0; s < n_sub; ++s) {
        masked = full.cwiseProduct(masks[static_cast<std::size_t>(s)]);
        small_gram(masked, gram);
        for (Eigen::Index r = 0; r < n_rho; ++r) {
          work = (rho_linear[static_cast<std::size_t>(r)] / config.n_tx) * gram;
          work.diagonal().array() += 1.0;
          llt.compute(work);
          double cap = 0.0;
          for (Eigen::Index k = 0; k < dim; ++k) {
            cap += 2.0 * std::log2(std::real(llt.matrixLLT()(k, k)));
          }
          sum(s, r) += cap;
          sq(s, r) += cap * cap;
        }
      }
    }
    chunk_sum[static_cast<std::size_t>(c)] = std::move(sum);
    chunk_sq[static_cast<std::size_t>(c)] = std::move(sq);
  });

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_sub, n_rho);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n_sub, n_rho);
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    sum += chunk_sum[static_cast<std::size_t>(c)];
    sq += chunk_sq[static_cast<std::size_t>(c)];
  }
  const auto n = static_cast<double>(config.n_mc_samples);
  CapacityGrid grid;
  grid.mean = sum / n;
  grid.std_error = Eigen::MatrixXd::Zero(n_sub, n_rho);
  if (config.n_mc_samples > 1) {
    const Eigen::ArrayXXd var =
        ((sq.array() - sum.array().square() / n) / (n - 1.0)).max(0.0);
    grid.std_error = (var / n).sqrt().matrix();
  }
  return grid;
}

SpectrumSamples::SpectrumSamples(std::span<const SubState> substates, const MimoConfig& config)
    : n_tx_(config.n_tx) {
  config.validate();
  check_dimensions(substates, config);
  const Eigen::Index dim = std::min(config.n_rx, config.n_tx);
  std::vector<Eigen::MatrixXcd> masks;
  masks.reserve(substates.size());
  for (const auto& s : substates) {
    masks.push_back(mask_matrix(s));
    eigenvalues_.emplace_back(dim, config.n_mc_samples);
  }
  const std::int64_t n_chunks = chunk_count(config.n_mc_samples);
  for_each_chunk(n_chunks, config.n_workers, [&](std::int64_t c) {
    Rng rng = substream(config.rng_seed, static_cast<std::uint64_t>(c));
    const std::int64_t begin = c * kChunkSize;
    const std::int64_t end = std::min(config.n_mc_samples, begin + kChunkSize);
    ChannelMatrix full(config.n_rx, config.n_tx);
    ChannelMatrix masked(config.n_rx, config.n_tx);
    Eigen::MatrixXcd gram(dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dim);
    for (std::int64_t i = begin; i < end; ++i) {
      draw_full_matrix(full, config.n_scatterers, rng);
      for (std::size_t s = 0; s < masks.size(); ++s) {
        masked = full.cwiseProduct(masks[s]);
        small_gram(masked, gram);
        solver.compute(gram, Eigen::EigenvaluesOnly);
        eigenvalues_[s].col(i) = solver.eigenvalues().cwiseMax(0.0);
      }
    }
  });
}

CapacityEstimate SpectrumSamples::mean_capacity(std::size_t index, double rho_linear) const {
  const Eigen::MatrixXd& eig = eigenvalues_.at(index);
  const Eigen::ArrayXd caps =
      ((rho_linear / n_tx_) * eig.array()).log1p().colwise().sum().transpose() / std::numbers::ln2;
  const auto n = static_cast<double>(caps.size());
  CapacityEstimate out;
  out.mean = caps.mean();
  if (caps.size() > 1) {
    out.std_error = std::sqrt((caps - out.mean).square().sum() / (n - 1.0) / n);
  }
  return out;
}

}  // namespace mimodelay
