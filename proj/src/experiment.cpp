#include "mimodelay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mimodelay {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = value.find(',');
    out.push_back(trim(value.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("config: cannot parse '" + std::string(text) + "' for key " +
                                std::string(key));
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_number(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

/// Runs task(i) for i in [0, n) on up to n_workers threads.
void parallel_for(std::size_t n, int n_workers, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::clamp<std::int64_t>(n_workers, 1, static_cast<std::int64_t>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

MimoConfig mimo_config(const ExperimentConfig& config, int n) {
  MimoConfig m;
  m.n_tx = n;
  m.n_rx = n;
  m.n_scatterers = config.n_scatterers;
  m.n_mc_samples = config.n_mc_samples;
  m.rng_seed = config.rng_seed;
  m.n_workers = config.n_workers;
  return m;
}

Eigen::VectorXd blocks_of(const std::vector<ClassRate>& rates) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rates.size()));
  for (std::size_t i = 0; i < rates.size(); ++i) out(static_cast<Eigen::Index>(i)) = rates[i].blocks_per_slot;
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeyHandler {
  std::string key;
  Setter set;
  Getter get;
};

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = {
      {"bandwidth_hz", [](auto& c, auto k, auto v) { c.units.bandwidth_hz = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.units.bandwidth_hz); }},
      {"slot_us", [](auto& c, auto k, auto v) { c.units.slot_us = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.units.slot_us); }},
      {"block_bytes", [](auto& c, auto k, auto v) { c.units.block_bytes = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.units.block_bytes); }},
      {"n_antennas", [](auto& c, auto k, auto v) { c.n_antennas = parse_list<int>(k, v); },
       [](const auto& c) { return join(c.n_antennas); }},
      {"snr_db", [](auto& c, auto k, auto v) {
         c.snr_db = trim(v).empty() || trim(v) == "calibrate" ? std::vector<double>{} : parse_list<double>(k, v);
       },
       [](const auto& c) { return c.snr_db.empty() ? std::string("calibrate") : join(c.snr_db); }},
      {"calibration_target", [](auto& c, auto k, auto v) { c.calibration_target = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.calibration_target); }},
      {"p_gb", [](auto& c, auto k, auto v) { c.p_gb = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.p_gb); }},
      {"p_bg", [](auto& c, auto k, auto v) { c.p_bg = parse_list<double>(k, v); },
       [](const auto& c) { return join(c.p_bg); }},
      {"epsilon", [](auto& c, auto k, auto v) { c.epsilon = parse_list<double>(k, v); },
       [](const auto& c) { return join(c.epsilon); }},
      {"arrival_rate_mbps", [](auto& c, auto k, auto v) { c.arrival_rate_mbps = parse_list<double>(k, v); },
       [](const auto& c) { return join(c.arrival_rate_mbps); }},
      {"period_slots", [](auto& c, auto k, auto v) { c.period_slots = parse_number<double>(k, v); },
       [](const auto& c) { return format_number(c.period_slots); }},
      {"hops", [](auto& c, auto k, auto v) { c.hops = parse_list<int>(k, v); },
       [](const auto& c) { return join(c.hops); }},
      {"n_scatterers", [](auto& c, auto k, auto v) { c.n_scatterers = parse_number<int>(k, v); },
       [](const auto& c) { return std::to_string(c.n_scatterers); }},
      {"n_mc_samples", [](auto& c, auto k, auto v) { c.n_mc_samples = parse_number<std::int64_t>(k, v); },
       [](const auto& c) { return std::to_string(c.n_mc_samples); }},
      {"rng_seed", [](auto& c, auto k, auto v) { c.rng_seed = parse_number<std::uint64_t>(k, v); },
       [](const auto& c) { return std::to_string(c.rng_seed); }},
      {"n_workers", [](auto& c, auto k, auto v) { c.n_workers = parse_number<int>(k, v); },
       [](const auto& c) { return std::to_string(c.n_workers); }},
      {"sim_slots", [](auto& c, auto k, auto v) { c.sim_slots = parse_number<std::int64_t>(k, v); },
       [](const auto& c) { return std::to_string(c.sim_slots); }},
      {"warmup_slots", [](auto& c, auto k, auto v) { c.warmup_slots = parse_number<std::int64_t>(k, v); },
       [](const auto& c) { return std::to_string(c.warmup_slots); }},
      {"out", [](auto& c, auto, auto v) { c.out = std::string(trim(v)); },
       [](const auto& c) { return c.out; }},
  };
  return table;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

void ExperimentConfig::validate() const {
  if (!(units.bandwidth_hz > 0 && units.slot_us > 0 && units.block_bytes > 0)) {
    throw std::invalid_argument("config: bandwidth_hz, slot_us and block_bytes must be positive");
  }
  if (n_antennas.empty()) throw std::invalid_argument("config: n_antennas is empty");
  for (int n : n_antennas) {
    if (n < 1 || n * n > kDefaultEnumerationCap) {
      throw std::invalid_argument("config: n_antennas must lie in 1..4");
    }
  }
  if (!(p_gb >= 0.0 && p_gb <= 1.0)) throw std::invalid_argument("config: p_gb must lie in [0, 1]");
  if (p_bg.empty()) throw std::invalid_argument("config: p_bg is empty");
  for (double p : p_bg) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("config: p_bg must lie in [0, 1]");
  }
  if (epsilon.empty()) throw std::invalid_argument("config: epsilon is empty");
  for (double e : epsilon) {
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("config: epsilon must lie in (0, 1)");
  }
  if (arrival_rate_mbps.empty()) throw std::invalid_argument("config: arrival_rate_mbps is empty");
  for (double r : arrival_rate_mbps) {
    if (!(r > 0.0)) throw std::invalid_argument("config: arrival rates must be positive");
  }
  if (!(period_slots >= 1.0)) throw std::invalid_argument("config: period_slots must be >= 1");
  if (hops.empty()) throw std::invalid_argument("config: hops is empty");
  for (int h : hops) {
    if (h < 1) throw std::invalid_argument("config: hops must be >= 1");
  }
  if (n_scatterers < 1 || n_mc_samples < 1 || n_workers < 1) {
    throw std::invalid_argument("config: n_scatterers, n_mc_samples and n_workers must be >= 1");
  }
  if (sim_slots < 1 || warmup_slots < 0 || warmup_slots >= sim_slots) {
    throw std::invalid_argument("config: need 0 <= warmup_slots < sim_slots");
  }
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& h : handlers()) {
    if (h.key == key) {
      h.set(config, key, trim(value));
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

void load_config(ExperimentConfig& config, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& h : handlers()) keys.push_back(h.key);
  return keys;
}

std::string canonical_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& h : handlers()) {
    if (h.key == "out" || h.key == "n_workers") continue;  // do not affect results
    out += h.key + " = " + h.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

GEParams ge_params(const ExperimentConfig& config, double p_bg) {
  if (config.p_bg.size() == 1) return GEParams(config.p_gb, p_bg);
  const double omega = config.p_gb / (config.p_gb + config.p_bg.front());
  if (omega > 0.0 && omega < 1.0) return GEParams::from_fading_speed(omega, p_bg);
  return GEParams(config.p_gb, p_bg);
}

ArrivalModel arrival_for_rate(double mbps, double period_slots, const LinkUnits& units) {
  ArrivalModel a;
  a.period = period_slots;
  a.sigma = mbps_to_blocks_per_slot(mbps, units) * period_slots;
  a.validate();
  return a;
}

CalibrationResult calibrate_snr(const ExperimentConfig& config) {
  config.validate();
  const MimoConfig mimo = mimo_config(config, 2);
  const std::vector<SubstateOrbit> orbits = substate_orbits(2, 2);
  std::vector<SubState> reps;
  for (const auto& o : orbits) reps.push_back(o.representative);
  const SpectrumSamples spectra(reps, mimo);
  const Eigen::VectorXd mass = class_stationary(ge_params(config, config.p_bg.front()), 2, 2);

  auto first_order = [&](double snr_db) {
    const double rho = std::pow(10.0, snr_db / 10.0);
    std::vector<CapacityEstimate> best(static_cast<std::size_t>(mass.size()),
                                       CapacityEstimate{std::numeric_limits<double>::infinity(), 0.0});
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      const CapacityEstimate est = spectra.mean_capacity(o, rho);
      auto& slot = best[static_cast<std::size_t>(orbits[o].dof)];
      if (est.mean < slot.mean) slot = est;
    }
    CalibrationResult r;
    r.snr_db = snr_db;
    double var = 0.0;
    for (Eigen::Index i = 1; i < mass.size(); ++i) {
      r.first_order_bits += mass(i) * best[static_cast<std::size_t>(i)].mean;
      var += std::pow(mass(i) * best[static_cast<std::size_t>(i)].std_error, 2);
    }
    r.std_error_bits = std::sqrt(var);
    return r;
  };

  double lo = -20.0;
  double hi = 60.0;
  if (first_order(hi).first_order_bits < config.calibration_target) {
    throw std::runtime_error("calibrate_snr: target first-order capacity is unreachable below 60 dB");
  }
  if (first_order(lo).first_order_bits > config.calibration_target) {
    throw std::runtime_error("calibrate_snr: target first-order capacity is exceeded at -20 dB");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (first_order(mid).first_order_bits < config.calibration_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return first_order(0.5 * (lo + hi));
}

std::vector<double> resolve_snr(const ExperimentConfig& config) {
  if (!config.snr_db.empty()) return config.snr_db;
  return {calibrate_snr(config).snr_db};
}

double LinkModel::first_order_bits() const {
  double out = 0.0;
  for (std::size_t i = 0; i < class_rates.size(); ++i) {
    out += chain.pi(static_cast<Eigen::Index>(i)) * class_rates[i].bits_per_s_per_hz;
  }
  return out;
}

double LinkModel::first_order_std_error_bits() const {
  double var = 0.0;
  for (std::size_t i = 0; i < class_rates.size(); ++i) {
    var += std::pow(chain.pi(static_cast<Eigen::Index>(i)) * class_rates[i].std_error_bits, 2);
  }
  return std::sqrt(var);
}

std::vector<std::vector<ClassRate>> link_class_rates(const ExperimentConfig& config, int n,
                                                     std::span<const double> snr_db) {
  return class_rates(mimo_config(config, n), config.units, snr_db);
}

LinkModel make_link(int n, double snr_db, std::vector<ClassRate> rates, const GEParams& ge) {
  LinkModel link;
  link.n_antennas = n;
  link.snr_db = snr_db;
  link.chain = build_chain(ge, n, n, blocks_of(rates));
  if (!link.chain.rates_nondecreasing()) {
    std::fprintf(stderr, "warning: class rates of the %dx%d link at %.4g dB decrease with DOF\n", n, n, snr_db);
  }
  link.class_rates = std::move(rates);
  return link;
}

std::vector<CapacityRow> cmd_capacity(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> snrs = resolve_snr(config);
  const GEParams ge = ge_params(config, config.p_bg.front());
  std::vector<CapacityRow> rows;
  for (int n : config.n_antennas) {
    const auto rates = link_class_rates(config, n, snrs);
    for (std::size_t s = 0; s < snrs.size(); ++s) {
      const LinkModel link = make_link(n, snrs[s], rates[s], ge);
      const double foc_bits = link.first_order_bits();
      for (int i = 0; i < link.chain.k_states(); ++i) {
        const ClassRate& cr = link.class_rates[static_cast<std::size_t>(i)];
        rows.push_back({n, snrs[s], i, link.chain.pi(i), cr.bits_per_s_per_hz, cr.blocks_per_slot,
                        cr.std_error_bits, foc_bits, link.chain.first_order_capacity(),
                        link.first_order_std_error_bits()});
      }
    }
  }
  return rows;
}

std::vector<DelayRow> cmd_delay_bound(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> snrs = resolve_snr(config);
  std::map<int, std::vector<std::vector<ClassRate>>> rates;
  for (int n : config.n_antennas) rates[n] = link_class_rates(config, n, snrs);

  struct Point {
    int n;
    double eps;
    double mbps;
    std::size_t snr;
    double p_bg;
  };
  std::vector<Point> points;
  for (int n : config.n_antennas)
    for (double eps : config.epsilon)
      for (double mbps : config.arrival_rate_mbps)
        for (std::size_t s = 0; s < snrs.size(); ++s)
          for (double p_bg : config.p_bg) points.push_back({n, eps, mbps, s, p_bg});

  std::vector<std::string> varying;
  if (config.n_antennas.size() > 1) varying.push_back("n_antennas");
  if (config.epsilon.size() > 1) varying.push_back("epsilon");
  if (config.arrival_rate_mbps.size() > 1) varying.push_back("arrival_rate_mbps");
  if (snrs.size() > 1) varying.push_back("snr_db");
  if (config.p_bg.size() > 1) varying.push_back("p_bg");
  if (varying.empty()) varying.push_back("n_antennas");

  std::vector<DelayRow> rows(points.size());
  parallel_for(points.size(), config.n_workers, [&](std::size_t i) {
    const Point& p = points[i];
    const LinkModel link = make_link(p.n, snrs[p.snr], rates.at(p.n)[p.snr], ge_params(config, p.p_bg));
    const ArrivalModel arrival = arrival_for_rate(p.mbps, config.period_slots, config.units);
    DelayRow row;
    row.bound = delay_bound(arrival, ServiceModel::from_chain(link.chain), p.eps);
    row.d_ms = row.bound.d_ms(config.units);
    std::string var;
    std::string value;
    for (const auto& name : varying) {
      if (!var.empty()) {
        var += ';';
        value += ';';
      }
      var += name;
      if (name == "n_antennas") value += std::to_string(p.n);
      if (name == "epsilon") value += format_number(p.eps);
      if (name == "arrival_rate_mbps") value += format_number(p.mbps);
      if (name == "snr_db") value += format_number(snrs[p.snr]);
      if (name == "p_bg") value += format_number(p.p_bg);
    }
    row.sweep_var = var;
    row.value = value;
    rows[i] = std::move(row);
  });
  return rows;
}

std::vector<MultihopRow> cmd_multihop(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> snrs = resolve_snr(config);
  const double snr[] = {snrs.front()};
  const GEParams ge = ge_params(config, config.p_bg.front());
  const ArrivalModel arrival =
      arrival_for_rate(config.arrival_rate_mbps.front(), config.period_slots, config.units);

  std::vector<std::pair<int, ServiceModel>> links;
  for (int n : config.n_antennas) {
    const LinkModel link = make_link(n, snr[0], link_class_rates(config, n, snr).front(), ge);
    links.emplace_back(n, ServiceModel::from_chain(link.chain));
  }
  std::vector<std::pair<std::size_t, int>> points;
  for (std::size_t l = 0; l < links.size(); ++l)
    for (int h : config.hops) points.emplace_back(l, h);

  std::vector<MultihopRow> rows(points.size());
  parallel_for(points.size(), config.n_workers, [&](std::size_t i) {
    const auto [l, h] = points[i];
    const std::vector<ServiceModel> tandem(static_cast<std::size_t>(h), links[l].second);
    const DelayBound bound = delay_bound(arrival, compose_hops(tandem), config.epsilon.front());
    rows[i] = {h, links[l].first, bound, bound.d_ms(config.units)};
  });
  return rows;
}

std::vector<ValidationRow> cmd_validate(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> snrs = resolve_snr(config);
  const double snr[] = {snrs.front()};
  const GEParams ge = ge_params(config, config.p_bg.front());
  std::vector<ValidationRow> rows;
  for (int n : config.n_antennas) {
    const LinkModel link = make_link(n, snr[0], link_class_rates(config, n, snr).front(), ge);
    const ServiceModel service = ServiceModel::from_chain(link.chain);
    for (double mbps : config.arrival_rate_mbps) {
      const ArrivalModel arrival = arrival_for_rate(mbps, config.period_slots, config.units);
      SimConfig sim;
      sim.n_slots = config.sim_slots;
      sim.warmup_slots = config.warmup_slots;
      sim.n_tx = n;
      sim.n_rx = n;
      sim.ge = ge;
      sim.rates.assign(link.chain.rates.data(), link.chain.rates.data() + link.chain.rates.size());
      sim.arrival = arrival;
      sim.rng_seed = config.rng_seed;
      std::optional<SimResult> result;
      for (double eps : config.epsilon) {
        ValidationRow row{n, eps, mbps, delay_bound(arrival, service, eps), 0, 0, 0.0, {}, true, false};
        if (row.bound.feasible()) {
          if (!result) result = run_queue_sim(sim);
          row.n_measured = result->n_measured;
          row.violations = result->violations(row.bound.d_slots);
          row.violation_freq = result->violation_freq(row.bound.d_slots);
          row.ci = result->confidence(row.bound.d_slots, 0.99);
          row.pass = row.ci.low <= eps;
          row.confirmed = row.ci.high <= eps;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<CapacityRow>& rows) {
  os << "n_antennas,snr_db,state,pi,rate_bits_per_hz,rate_blocks_per_slot,std_error_bits,"
        "first_order_bits_per_hz,first_order_blocks_per_slot,first_order_std_error_bits\n";
  for (const auto& r : rows) {
    os << r.n_antennas << ',' << format_number(r.snr_db) << ',' << r.state << ',' << format_number(r.pi)
       << ',' << format_number(r.rate_bits) << ',' << format_number(r.rate_blocks) << ','
       << format_number(r.std_error_bits) << ',' << format_number(r.first_order_bits) << ','
       << format_number(r.first_order_blocks) << ',' << format_number(r.first_order_std_error) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<DelayRow>& rows) {
  os << "sweep_var,value,d_slots,d_ms,theta_star,feasible\n";
  for (const auto& r : rows) {
    os << r.sweep_var << ',' << r.value << ',';
    if (r.bound.feasible()) {
      os << r.bound.d_slots << ',' << format_number(r.d_ms) << ',' << format_number(r.bound.theta_star);
    } else {
      os << ",,";
    }
    os << ',' << (r.bound.feasible() ? "true" : to_string(r.bound.status)) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<MultihopRow>& rows) {
  os << "hops,n_antennas,d_slots,d_ms\n";
  for (const auto& r : rows) {
    os << r.hops << ',' << r.n_antennas << ',';
    if (r.bound.feasible()) {
      os << r.bound.d_slots << ',' << format_number(r.d_ms);
    } else {
      os << to_string(r.bound.status) << ',';
    }
    os << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<ValidationRow>& rows) {
  os << "n_antennas,epsilon,arrival_rate_mbps,d_slots,status,n_blocks,violations,violation_freq,"
        "ci_low,ci_high,pass,confirmed\n";
  for (const auto& r : rows) {
    os << r.n_antennas << ',' << format_number(r.epsilon) << ',' << format_number(r.arrival_mbps) << ',';
    if (r.bound.feasible()) os << r.bound.d_slots;
    os << ',' << to_string(r.bound.status) << ',' << r.n_measured << ',' << r.violations << ','
       << format_number(r.violation_freq) << ',' << format_number(r.ci.low) << ','
       << format_number(r.ci.high) << ',' << (r.pass ? "true" : "false") << ','
       << (r.confirmed ? "true" : "false") << '\n';
  }
}

}  // namespace mimodelay
