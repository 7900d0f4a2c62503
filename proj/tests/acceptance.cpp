// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "mimodelay/experiment.hpp"
#include "mimodelay/random.hpp"

using namespace mimodelay;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join_d(const std::vector<std::int64_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

bool nondecreasing(const std::vector<std::int64_t>& v) { return std::is_sorted(v.begin(), v.end()); }
bool nonincreasing(const std::vector<std::int64_t>& v) { return std::is_sorted(v.rbegin(), v.rend()); }

/// Shared model state: calibrated SNR and class rates per antenna count.
class Models {
 public:
  Models() : cal_(calibrate_snr(config_)) {}

  const ExperimentConfig& config() const { return config_; }
  const CalibrationResult& calibration() const { return cal_; }

  /// Class rates of an N x N link at calibrated SNR + offset dB.
  const std::vector<ClassRate>& rates(int n, double offset_db = 0.0) {
    auto key = std::make_pair(n, offset_db);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    // All offsets of one N come from the same draws.
    const std::vector<double> offsets{-1.0, 0.0, 1.0, 2.0, 3.0};
    std::vector<double> snrs;
    if (n == 2) {
      for (double o : offsets) snrs.push_back(cal_.snr_db + o);
    } else {
      snrs.push_back(cal_.snr_db);
    }
    const auto table = link_class_rates(config_, n, snrs);
    for (std::size_t i = 0; i < snrs.size(); ++i) {
      cache_[{n, n == 2 ? offsets[i] : 0.0}] = table[i];
    }
    return cache_.at(key);
  }

  LinkModel link(int n, const GEParams& ge, double offset_db = 0.0) {
    return make_link(n, cal_.snr_db + offset_db, rates(n, offset_db), ge);
  }

  GEParams default_ge() const { return ge_params(config_, 0.1); }

  ArrivalModel source(double mbps = 240.0) const {
    return arrival_for_rate(mbps, config_.period_slots, config_.units);
  }

 private:
  ExperimentConfig config_;
  CalibrationResult cal_;
  std::map<std::pair<int, double>, std::vector<ClassRate>> cache_;
};

Outcome closed_form_pi() {
  double worst = 0.0;
  for (double w : {0.01, 1.0 / 11.0, 0.5}) {
    const DofChain chain = build_chain(GEParams::from_fading_speed(w, 0.5), 2, 2, Eigen::Vector3d(0.0, 1.0, 2.0));
    Eigen::Vector3d expected(std::pow(w, 4), 4 * w * w * std::pow(1 - w, 2) + 4 * std::pow(w, 3) * (1 - w),
                             std::pow(1 - w, 4) + 4 * w * std::pow(1 - w, 3) + 2 * w * w * std::pow(1 - w, 2));
    worst = std::max(worst, (chain.pi - expected).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max abs error " + fmt("%.3g", worst)};
}

Outcome table_one(Models& m) {
  const LinkModel two = m.link(2, m.default_ge());
  const LinkModel three = m.link(3, m.default_ge());
  const double c2 = two.first_order_bits();
  const double c3 = three.first_order_bits();
  const double se2 = two.first_order_std_error_bits() / c2;
  const double se3 = three.first_order_std_error_bits() / c3;
  const bool pass = std::abs(c3 - 10.5) <= 0.1 * 10.5 && se2 < 0.01 && se3 < 0.01;
  return {pass, "SNR " + fmt("%.3f", m.calibration().snr_db) + " dB, N=2 " + fmt("%.4f", c2) + ", N=3 " +
                    fmt("%.4f", c3) + " bits/s/Hz (" + fmt("%+.2f", 100 * (c3 / 10.5 - 1)) +
                    "% vs 10.5), ratio " + fmt("%.3f", c3 / c2) + ", rel SE " + fmt("%.2g", se2) + " / " +
                    fmt("%.2g", se3)};
}

Outcome fading_invariance(Models& m) {
  bool pass = true;
  std::string detail;
  for (int n : {2, 3}) {
    std::vector<double> caps;
    for (double p_bg : {1e-3, 1e-2, 1e-1}) {
      caps.push_back(m.link(n, GEParams::from_fading_speed(1.0 / 11.0, p_bg)).chain.first_order_capacity());
    }
    const bool same = caps[0] == caps[1] && caps[1] == caps[2];
    pass = pass && same;
    detail += "N=" + std::to_string(n) + (same ? " identical " : " differs ") + fmt("%.17g", caps[0]) + "; ";
  }
  return {pass, detail};
}

/// Least-squares line through (eta, d); returns slope and ||residual|| / ||d||.
std::pair<double, double> linear_fit(const std::vector<std::int64_t>& d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = static_cast<double>(i + 1);
    y(i) = static_cast<double>(d[static_cast<std::size_t>(i)]);
  }
  const Eigen::Vector2d beta = x.colPivHouseholderQr().solve(y);
  return {beta(1), (y - x * beta).norm() / y.norm()};
}

Outcome multihop(Models& m) {
  std::map<int, std::vector<std::int64_t>> d;
  bool all_feasible = true;
  for (int n : {2, 3}) {
    const ServiceModel hop = ServiceModel::from_chain(m.link(n, m.default_ge()).chain);
    for (int eta = 1; eta <= 8; ++eta) {
      const std::vector<ServiceModel> hops(static_cast<std::size_t>(eta), hop);
      const DelayBound b = delay_bound(m.source(), compose_hops(hops), 1e-6);
      all_feasible = all_feasible && b.feasible();
      d[n].push_back(b.d_slots);
    }
  }
  const auto [slope2, res2] = linear_fit(d[2]);
  const auto [slope3, res3] = linear_fit(d[3]);
  const bool pass = all_feasible && nondecreasing(d[2]) && res2 < 0.1 && slope3 < slope2;
  return {pass, "N=2 d=[" + join_d(d[2]) + "] slope " + fmt("%.3f", slope2) + " rel residual " +
                    fmt("%.4f", res2) + "; N=3 d=[" + join_d(d[3]) + "] slope " + fmt("%.3f", slope3)};
}

Outcome monotonicity(Models& m) {
  const GEParams ge = m.default_ge();
  auto bound = [](const LinkModel& link, const ArrivalModel& a, double eps) {
    const DelayBound b = delay_bound(a, ServiceModel::from_chain(link.chain), eps);
    return b.feasible() ? b.d_slots : std::numeric_limits<std::int64_t>::max();
  };
  std::vector<std::int64_t> by_rate;
  for (double mbps : {160.0, 180.0, 200.0, 220.0, 240.0}) by_rate.push_back(bound(m.link(2, ge), m.source(mbps), 1e-6));
  std::vector<std::int64_t> by_n;
  for (int n : {2, 3, 4}) by_n.push_back(bound(m.link(n, ge), m.source(), 1e-6));
  std::vector<std::int64_t> by_snr;
  for (double o : {-1.0, 0.0, 1.0, 2.0, 3.0}) by_snr.push_back(bound(m.link(2, ge, o), m.source(), 1e-6));
  std::vector<std::int64_t> by_eps;
  for (double eps : {1e-2, 1e-4, 1e-6}) by_eps.push_back(bound(m.link(2, ge), m.source(), eps));
  std::vector<std::int64_t> by_speed;
  for (double p_bg : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
    by_speed.push_back(bound(m.link(2, GEParams::from_fading_speed(1.0 / 11.0, p_bg)), m.source(), 1e-6));
  }
  const bool pass = nondecreasing(by_rate) && nonincreasing(by_n) && nonincreasing(by_snr) &&
                    nondecreasing(by_eps) && nondecreasing(by_speed);
  return {pass, "rate 160..240 [" + join_d(by_rate) + "], N 2..4 [" + join_d(by_n) + "], SNR -1..+3 dB [" +
                    join_d(by_snr) + "], eps 1e-2..1e-6 [" + join_d(by_eps) + "], p_bg 1e-1..1e-3 [" +
                    join_d(by_speed) + "]"};
}

int assignment_search(const SubState& s, int tx, std::vector<bool>& used) {
  if (tx == s.n_tx()) return 0;
  int best = assignment_search(s, tx + 1, used);
  for (int rx = 0; rx < s.n_rx(); ++rx) {
    if (!used[static_cast<std::size_t>(rx)] && s.good(rx, tx)) {
      used[static_cast<std::size_t>(rx)] = true;
      best = std::max(best, 1 + assignment_search(s, tx + 1, used));
      used[static_cast<std::size_t>(rx)] = false;
    }
  }
  return best;
}

Outcome dof_oracle() {
  std::int64_t cases = 0;
  std::int64_t mismatches = 0;
  for (int n_tx = 1; n_tx <= 3; ++n_tx) {
    for (int n_rx = 1; n_rx <= 3; ++n_rx) {
      for (std::uint32_t mask = 0; mask < (1U << (n_tx * n_rx)); ++mask) {
        const SubState s(n_tx, n_rx, mask);
        std::vector<bool> used(static_cast<std::size_t>(n_rx), false);
        mismatches += dof_of_substate(s) != assignment_search(s, 0, used);
        ++cases;
      }
    }
  }
  return {mismatches == 0, std::to_string(cases) + " substates over N, M in 1..3, " +
                               std::to_string(mismatches) + " mismatches"};
}

int sample_index(const Eigen::VectorXd& p, double u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

Outcome service_mgf_oracle(Models& m) {
  const DofChain chain = m.link(2, m.default_ge()).chain;
  const ServiceModel model = ServiceModel::from_chain(chain);
  const double theta = 0.01;
  const int horizon = 20;
  const int n = 1'000'000;
  std::vector<double> sum(horizon + 1, 0.0);
  Rng rng = substream(2024, 0);
  for (int k = 0; k < n; ++k) {
    int state = sample_index(chain.pi, uniform01(rng));
    double served = 0.0;
    for (int t = 1; t <= horizon; ++t) {
      served += chain.rates(state);
      sum[static_cast<std::size_t>(t)] += std::exp(-theta * served);
      state = sample_index(chain.q.row(state).transpose(), uniform01(rng));
    }
  }
  double worst = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const double exact = service_mgf(model, theta, static_cast<std::size_t>(t));
    worst = std::max(worst, std::abs(sum[static_cast<std::size_t>(t)] / n / exact - 1.0));
  }
  return {worst < 0.01, "max relative deviation " + fmt("%.3g", worst) + " over t = 1..20, 10^6 trajectories"};
}

Outcome bound_validity(Models& m) {
  const GEParams ge = m.default_ge();
  const LinkModel link = m.link(2, ge);
  const double eps = 1e-3;
  const ArrivalModel source = m.source();
  const DelayBound b = delay_bound(source, ServiceModel::from_chain(link.chain), eps);
  if (!b.feasible()) return {false, "bound not feasible"};
  SimConfig sim;
  sim.n_slots = 10'000'000;
  sim.warmup_slots = 10'000;
  sim.ge = ge;
  sim.rates.assign(link.chain.rates.data(), link.chain.rates.data() + link.chain.rates.size());
  sim.arrival = source;
  const SimResult r = run_queue_sim(sim);
  const ConfidenceInterval ci = r.confidence(b.d_slots, 0.99);
  return {ci.high <= eps, "d = " + std::to_string(b.d_slots) + " slots, " + std::to_string(r.violations(b.d_slots)) +
                              " of " + std::to_string(r.n_measured) + " blocks late, freq " +
                              fmt("%.3g", r.violation_freq(b.d_slots)) + ", 99% CI upper " + fmt("%.3g", ci.high)};
}

// Sigma(tau) = e^{-theta r tau} Z(theta) for a constant server; Z summed term by term.
std::int64_t direct_tau(const ArrivalModel& a, double r, double theta, double eps) {
  long double z = 0.0L;
  for (std::int64_t u = 0;; ++u) {
    const long double term =
        std::exp(static_cast<long double>(log_arrival_mgf(a, theta, static_cast<double>(u))) -
                 static_cast<long double>(theta) * r * static_cast<long double>(u));
    z += term;
    if (term < 1e-30L * z && u > 10 * a.period) break;
  }
  const long double log_eps = std::log(static_cast<long double>(eps));
  auto ok = [&](std::int64_t tau) { return std::log(z) - static_cast<long double>(theta) * r * tau <= log_eps; };
  std::int64_t tau = 1;
  while (!ok(tau)) ++tau;
  return tau;
}

Outcome solver_oracle() {
  const ArrivalModel a{10.0, 10.0};
  const double r = 2.0;
  const double eps = 1e-6;
  const DelayBound b = delay_bound(a, ServiceModel::constant_rate(r), eps);
  if (!b.feasible()) return {false, "bound not feasible"};
  const std::int64_t at_theta = direct_tau(a, r, b.theta_star, eps);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  const int grid = 2000;
  for (int i = 0; i < grid; ++i) {
    const double theta = std::exp(std::log(1e-4) + (std::log(10.0) - std::log(1e-4)) * i / (grid - 1));
    best = std::min(best, direct_tau(a, r, theta, eps));
  }
  return {at_theta == b.d_slots && best == b.d_slots,
          "solver d = " + std::to_string(b.d_slots) + " at theta " + fmt("%.4g", b.theta_star) +
              ", direct at same theta " + std::to_string(at_theta) + ", direct min over 2000 thetas " +
              std::to_string(best)};
}

Outcome lumping() {
  double worst_balance = 0.0;
  double worst_rows = 0.0;
  double min_entry = 0.0;
  for (int n_tx = 1; n_tx <= 4; ++n_tx) {
    for (int n_rx = 1; n_rx <= 4; ++n_rx) {
      for (double w : {1e-3, 1.0 / 11.0, 0.5, 0.9}) {
        const int k = num_dof_classes(n_tx, n_rx);
        const DofChain c = build_chain(GEParams::from_fading_speed(w, 0.1), n_tx, n_rx,
                                       Eigen::VectorXd::LinSpaced(k, 0.0, k - 1.0));
        worst_balance = std::max(worst_balance, (c.pi.transpose() * c.q - c.pi.transpose()).cwiseAbs().maxCoeff());
        worst_rows = std::max(worst_rows, (c.q.rowwise().sum().array() - 1.0).abs().maxCoeff());
        min_entry = std::min(min_entry, c.q.minCoeff());
      }
    }
  }
  return {worst_balance <= 1e-12 && worst_rows <= 1e-12 && min_entry >= 0.0,
          "max |pi Q - pi| " + fmt("%.3g", worst_balance) + ", max |row sum - 1| " + fmt("%.3g", worst_rows)};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  const auto start = Clock::now();
  Models models;
  std::printf("calibrated SNR %.4f dB (first-order %.4f bits/s/Hz) [%.1f s]\n", models.calibration().snr_db,
              models.calibration().first_order_bits,
              std::chrono::duration<double>(Clock::now() - start).count());

  report(1, "2x2 closed-form stationary vector", closed_form_pi);
  report(2, "first-order capacity N=3 after calibration", [&] { return table_one(models); });
  report(3, "fading-speed invariance", [&] { return fading_invariance(models); });
  report(4, "multi-hop scaling", [&] { return multihop(models); });
  report(5, "monotonicity suite", [&] { return monotonicity(models); });
  report(6, "DOF against assignment search", dof_oracle);
  report(7, "service MGF against trajectories", [&] { return service_mgf_oracle(models); });
  report(8, "bound validity in simulation", [&] { return bound_validity(models); });
  report(9, "solver against direct evaluation", solver_oracle);
  report(10, "lumping stationarity", lumping);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
