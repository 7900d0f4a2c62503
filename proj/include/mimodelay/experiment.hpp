#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mimodelay/bound_solver.hpp"
#include "mimodelay/dof_chain.hpp"
#include "mimodelay/ge_paths.hpp"
#include "mimodelay/mgf.hpp"
#include "mimodelay/queue_sim.hpp"
#include "mimodelay/units.hpp"

namespace mimodelay {

/// Everything a sweep needs. Defaults describe a 40 MHz 802.11n-style link:
/// 31 us slots, 2312-byte blocks, a 240 Mbps periodic source with a
/// 10-slot period and epsilon = 1e-6.
struct ExperimentConfig {
  LinkUnits units;
  std::vector<int> n_antennas{2};
  /// Empty means: calibrate the SNR so that N = 2 reaches calibration_target.
  std::vector<double> snr_db;
  double calibration_target = 7.25;  // bits/s/Hz, first-order capacity at N = 2
  double p_gb = 0.01;
  /// With several values, each one is paired with the p_gb that keeps the
  /// bad-state probability of (p_gb, p_bg[0]).
  std::vector<double> p_bg{0.1};
  std::vector<double> epsilon{1e-6};
  std::vector<double> arrival_rate_mbps{240.0};
  double period_slots = 10.0;
  std::vector<int> hops{1, 2, 3, 4, 5, 6, 7, 8};
  int n_scatterers = 500;
  std::int64_t n_mc_samples = 100000;
  std::uint64_t rng_seed = 1;
  int n_workers = 1;
  std::int64_t sim_slots = 10'000'000;
  std::int64_t warmup_slots = 10'000;
  std::string out;  // empty: stdout

  void validate() const;
};

/// Applies one `key = value` setting; lists are comma separated.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
/// Reads a flat key = value file; '#' starts a comment.
void load_config(ExperimentConfig& config, std::istream& in);
std::vector<std::string> config_keys();
/// Canonical key = value dump, one key per line, in config_keys() order.
std::string canonical_config(const ExperimentConfig& config);
/// 64-bit FNV-1a of canonical_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Channel parameters for one p_bg value of the sweep.
GEParams ge_params(const ExperimentConfig& config, double p_bg);

ArrivalModel arrival_for_rate(double mbps, double period_slots, const LinkUnits& units);

struct CalibrationResult {
  double snr_db = 0.0;
  double first_order_bits = 0.0;
  double std_error_bits = 0.0;
};

/// Bisection on SNR until the N = 2 first-order capacity meets the target,
/// using one stored set of channel spectra.
CalibrationResult calibrate_snr(const ExperimentConfig& config);

/// SNR list of the config, or the calibrated SNR when none was given.
std::vector<double> resolve_snr(const ExperimentConfig& config);

/// Lumped chain for an N x N link; class rates shared across p_bg values.
struct LinkModel {
  int n_antennas = 0;
  double snr_db = 0.0;
  std::vector<ClassRate> class_rates;
  DofChain chain;

  double first_order_bits() const;
  double first_order_std_error_bits() const;
};

/// Class rates of an N x N link at each SNR, from one set of channel draws.
std::vector<std::vector<ClassRate>> link_class_rates(const ExperimentConfig& config, int n,
                                                     std::span<const double> snr_db);
LinkModel make_link(int n, double snr_db, std::vector<ClassRate> rates, const GEParams& ge);

struct CapacityRow {
  int n_antennas;
  double snr_db;
  int state;
  double pi;
  double rate_bits;
  double rate_blocks;
  double std_error_bits;
  double first_order_bits;
  double first_order_blocks;
  double first_order_std_error;
};

struct DelayRow {
  std::string sweep_var;
  std::string value;
  DelayBound bound;
  double d_ms;
};

struct MultihopRow {
  int hops;
  int n_antennas;
  DelayBound bound;
  double d_ms;
};

struct ValidationRow {
  int n_antennas;
  double epsilon;
  double arrival_mbps;
  DelayBound bound;
  std::int64_t n_measured;
  std::int64_t violations;
  double violation_freq;
  ConfidenceInterval ci;
  /// No significant violation: the interval reaches down to epsilon.
  bool pass;
  /// The whole interval lies at or below epsilon.
  bool confirmed;
};

std::vector<CapacityRow> cmd_capacity(const ExperimentConfig& config);
std::vector<DelayRow> cmd_delay_bound(const ExperimentConfig& config);
std::vector<MultihopRow> cmd_multihop(const ExperimentConfig& config);
std::vector<ValidationRow> cmd_validate(const ExperimentConfig& config);

void write_csv(std::ostream& os, const std::vector<CapacityRow>& rows);
void write_csv(std::ostream& os, const std::vector<DelayRow>& rows);
void write_csv(std::ostream& os, const std::vector<MultihopRow>& rows);
void write_csv(std::ostream& os, const std::vector<ValidationRow>& rows);

/// Formats a double the way every CSV column does (%.10g).
std::string format_number(double value);

}  // namespace mimodelay
