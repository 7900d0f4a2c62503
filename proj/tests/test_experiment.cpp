#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>

#include "mimodelay/experiment.hpp"

using namespace mimodelay;

namespace {

// Small but complete configuration; the SNR is fixed so no calibration runs.
ExperimentConfig quick() {
  ExperimentConfig c;
  c.snr_db = {15.8};
  c.n_mc_samples = 2000;
  c.n_scatterers = 50;
  c.hops = {1, 2, 3};
  c.sim_slots = 200'000;
  return c;
}

template <typename Rows>
std::string csv(const Rows& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("rate conversion") {
  CHECK(rate_conversion(15.0, 40e6, 31.0, 2312.0) == doctest::Approx(600e6 * 31e-6 / 18496).epsilon(1e-14));
  CHECK(rate_conversion(15.0, 40e6, 31.0, 2312.0) == doctest::Approx(1.0056).epsilon(1e-4));
  CHECK(rate_conversion(0.0, 40e6, 31.0, 2312.0) == 0.0);
  const LinkUnits units;
  CHECK(arrival_for_rate(240.0, 10.0, units).sigma == doctest::Approx(4.0225).epsilon(1e-4));
  CHECK_THROWS_AS(rate_conversion(1.0, 0.0, 31.0, 2312.0), std::invalid_argument);
}

TEST_CASE("unit round trips") {
  const LinkUnits units;
  for (double c : {0.5, 3.7, 7.25, 10.5, 15.0}) {
    CHECK(bits_per_s_per_hz(blocks_per_slot(c, units), units) == doctest::Approx(c).epsilon(1e-12));
  }
  for (double mbps : {160.0, 240.0, 600.0}) {
    CHECK(blocks_per_slot_to_mbps(mbps_to_blocks_per_slot(mbps, units), units) ==
          doctest::Approx(mbps).epsilon(1e-12));
  }
  CHECK(slots_to_ms(44, units) == doctest::Approx(1.364));
}

TEST_CASE("capacity rows convert consistently") {
  const auto rows = cmd_capacity(quick());
  REQUIRE(rows.size() == 3);
  const LinkUnits units;
  for (const auto& r : rows) {
    CHECK(r.rate_blocks == doctest::Approx(blocks_per_slot(r.rate_bits, units)).epsilon(1e-12));
    CHECK(bits_per_s_per_hz(r.rate_blocks, units) == doctest::Approx(r.rate_bits).epsilon(1e-12));
    CHECK(r.first_order_blocks == doctest::Approx(blocks_per_slot(r.first_order_bits, units)).epsilon(1e-12));
  }
  CHECK(rows[0].rate_bits == 0.0);
}

TEST_CASE("always-bad paths give zero first-order capacity") {
  ExperimentConfig c = quick();
  c.p_gb = 0.3;
  c.p_bg = {0.0};
  for (const auto& r : cmd_capacity(c)) CHECK(r.first_order_bits == 0.0);
  CHECK_FALSE(cmd_delay_bound(c).front().bound.feasible());
}

TEST_CASE("config parsing") {
  ExperimentConfig c;
  std::istringstream in(
      "# comment\n"
      "n_antennas = 2, 3,4\n"
      "epsilon = 1e-2,1e-4  # trailing\n"
      "\n"
      "snr_db = 12.5\n"
      "rng_seed = 42\n"
      "out = result.csv\n");
  load_config(c, in);
  CHECK(c.n_antennas == std::vector<int>{2, 3, 4});
  CHECK(c.epsilon == std::vector<double>{1e-2, 1e-4});
  CHECK(c.snr_db == std::vector<double>{12.5});
  CHECK(c.rng_seed == 42);
  CHECK(c.out == "result.csv");

  apply_setting(c, "snr_db", "calibrate");
  CHECK(c.snr_db.empty());
  CHECK_THROWS_AS(apply_setting(c, "no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "p_gb", "abc"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "hops", "1,,2"), std::invalid_argument);
  std::istringstream broken("n_antennas 2\n");
  CHECK_THROWS_AS(load_config(c, broken), std::invalid_argument);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.n_antennas = {5};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.epsilon = {1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.hops = {0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("config hash") {
  const ExperimentConfig defaults;
  CHECK(config_hash(defaults) == "e1c475fe62da284f");
  ExperimentConfig other = defaults;
  other.n_workers = 8;
  other.out = "x.csv";
  CHECK(config_hash(other) == config_hash(defaults));
  other.rng_seed = 2;
  CHECK(config_hash(other) != config_hash(defaults));

  ExperimentConfig round;
  std::istringstream in(canonical_config(other));
  load_config(round, in);
  CHECK(canonical_config(round) == canonical_config(other));
}

TEST_CASE("fading-speed sweep keeps omega") {
  ExperimentConfig c;
  c.p_bg = {0.1, 0.01, 0.001};
  for (double p : c.p_bg) CHECK(ge_params(c, p).omega() == ge_params(c, 0.1).omega());
  CHECK(ge_params(c, 0.001).p_gb() == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("delay-bound sweep naming and csv") {
  ExperimentConfig c = quick();
  c.epsilon = {1e-2, 1e-6};
  auto rows = cmd_delay_bound(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sweep_var == "epsilon");
  CHECK(rows[0].value == "0.01");
  CHECK(rows[1].bound.d_slots >= rows[0].bound.d_slots);
  const std::string text = csv(rows);
  CHECK(first_line(text) == "sweep_var,value,d_slots,d_ms,theta_star,feasible");

  c.arrival_rate_mbps = {200, 240};
  rows = cmd_delay_bound(c);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].sweep_var == "epsilon;arrival_rate_mbps");
  CHECK(rows[1].value == "0.01;240");
}

TEST_CASE("sweeps are independent of the worker count") {
  ExperimentConfig c = quick();
  c.epsilon = {1e-2, 1e-4, 1e-6};
  c.arrival_rate_mbps = {160, 240};
  const std::string serial = csv(cmd_delay_bound(c));
  c.n_workers = 3;
  CHECK(csv(cmd_delay_bound(c)) == serial);
  CHECK(csv(cmd_delay_bound(c)) == serial);
}

TEST_CASE("single hop multihop row equals the delay-bound row") {
  const ExperimentConfig c = quick();
  const auto hops = cmd_multihop(c);
  const auto single = cmd_delay_bound(c);
  REQUIRE(hops.size() == 3);
  CHECK(hops[0].hops == 1);
  CHECK(hops[0].bound.d_slots == single[0].bound.d_slots);
  CHECK(hops[0].d_ms == single[0].d_ms);
  CHECK(hops[2].bound.d_slots >= hops[1].bound.d_slots);
  CHECK(first_line(csv(hops)) == "hops,n_antennas,d_slots,d_ms");
}

TEST_CASE("validation on a deterministic channel") {
  ExperimentConfig c = quick();
  c.p_gb = 0.0;
  c.epsilon = {1e-3, 1e-6};
  const auto rows = cmd_validate(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pass);
  CHECK(rows[0].confirmed);
  CHECK(rows[1].pass);
  CHECK(rows[1].violations == 0);
  CHECK(rows[1].violation_freq == 0.0);
  CHECK(rows[1].n_measured > 0);
  // Zero violations in ~10^5 blocks cannot confirm 1e-6.
  CHECK_FALSE(rows[1].confirmed);
}

TEST_CASE("validation near capacity never reports a silent wrong bound") {
  ExperimentConfig c = quick();
  c.epsilon = {1e-2};
  const auto cap = cmd_capacity(c);
  const double capacity_mbps = blocks_per_slot_to_mbps(cap.front().first_order_blocks, c.units);
  c.arrival_rate_mbps = {0.98 * capacity_mbps};
  c.sim_slots = 500'000;
  const auto rows = cmd_validate(c);
  REQUIRE(rows.size() == 1);
  if (rows[0].bound.feasible()) {
    CHECK(rows[0].pass);
  } else {
    CHECK(rows[0].bound.status != BoundStatus::Feasible);
  }
  CHECK(first_line(csv(rows)) ==
        "n_antennas,epsilon,arrival_rate_mbps,d_slots,status,n_blocks,violations,violation_freq,ci_low,"
        "ci_high,pass,confirmed");
}

TEST_CASE("calibration hits the target") {
  ExperimentConfig c;
  c.n_mc_samples = 3000;
  c.n_scatterers = 50;
  const CalibrationResult cal = calibrate_snr(c);
  CHECK(cal.first_order_bits == doctest::Approx(7.25).epsilon(1e-9));
  CHECK(cal.snr_db > 10.0);
  CHECK(cal.snr_db < 25.0);
  CHECK(resolve_snr(c).front() == cal.snr_db);

  c.calibration_target = 1e3;
  CHECK_THROWS_AS(calibrate_snr(c), std::runtime_error);
}

TEST_CASE("byte-identical reruns") {
  ExperimentConfig c = quick();
  c.n_antennas = {2, 3};
  CHECK(csv(cmd_capacity(c)) == csv(cmd_capacity(c)));
  CHECK(csv(cmd_multihop(c)) == csv(cmd_multihop(c)));
}
