#pragma once

// Declarative network description. Scenario files are YAML with the unit in
// every key name; the full grammar is in README.md.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "qsync/detection.hpp"
#include "qsync/errors.hpp"
#include "qsync/optics.hpp"
#include "qsync/spdc.hpp"
#include "qsync/stabilizer.hpp"
#include "qsync/units.hpp"

namespace qsync {

struct DetectorConfig {
  DetectorSpec spec;
  int elements = 1;  // > 1: OR-multiplexed identical elements
};

struct ArmSpec {
  std::string name;
  std::vector<FiberSpan> spans;
  std::optional<DispersionCompensator> dcm;
  AmplifierSpec edfa;
  ShgSpec shg;
  SpdcSpec spdc;
  double reference_pump_mw = 15.0;  // pump power at which spdc.mean_pairs_per_pulse holds
  double signal_transmission = 0.5;
  double idler_transmission = 0.2;  // source to relay, first f-PBS included
  double polarization_misalignment_deg = 0.0;

  double length_km() const {
    double l = 0.0;
    for (const auto& s : spans) l += s.length_km;
    return l;
  }
};

struct RelaySpec {
  DelayLine delay_line = DelayLine::free_space();
  double indistinguishability_cap = 1.0;
  double relative_jitter_ps = 0.0;
  double spectral_offset_ghz = 0.0;
  double rotation_deg = 45.0;
  CoincidenceWindow window;
};

struct ScanPlan {
  std::vector<double> positions_mm;
  double integration_s = 3600.0;
  double dip_center_mm = 0.0;
};

struct ServoSpec {
  bool enabled = false;
  ServoConfig config;
};

struct MicroMcSpec {
  double mu = 0.05;
  std::int64_t cycles_per_point = 10'000'000;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  OpticalPulse clock;
  Splitter splitter;
  std::array<ArmSpec, 2> arms;
  RelaySpec relay;
  std::array<DetectorConfig, 4> detectors;
  ScanPlan scan;
  ServoSpec servo;
  ThermalDriftModel drift{DriftMode::none, 0.0};
  MicroMcSpec micro_mc;
  std::string config_hash;
  YAML::Node source;
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? -1 : n.Mark().line + 1; }

/// Reads one YAML mapping, remembering which keys were consumed so the rest
/// can be reported as unknown.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string context) : node_(node), context_(std::move(context)) {
    if (!node_.IsMap()) throw LoadError(context_ + ": expected a mapping", line_of(node_));
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  double real(const std::string& key, double fallback) { return has(key) ? as_real(key) : fallback; }

  double real(const std::string& key) {
    if (!has(key)) {
      // a misspelt required key is reported as the typo, not as a missing key
      for (auto it = node_.begin(); it != node_.end(); ++it) {
        const auto k = it->first.as<std::string>();
        if (!seen_.count(k) && edit_distance(k, key) <= 2)
          throw LoadError(context_ + ": unknown key '" + k + "' (did you mean '" + key + "'?)", line_of(it->first));
      }
      throw LoadError(context_ + ": missing key '" + key + "'", line_of(node_));
    }
    return as_real(key);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const auto v = node_[key];
    try {
      return v.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      throw LoadError(context_ + "." + key + ": expected an integer", line_of(v));
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto v = node_[key];
    try {
      return v.as<bool>();
    } catch (const YAML::Exception&) {
      // numeric overrides arrive as 0/1
      if (v.IsScalar() && (v.Scalar() == "0" || v.Scalar() == "1")) return v.Scalar() == "1";
      throw LoadError(context_ + "." + key + ": expected true or false", line_of(v));
    }
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto v = node_[key];
    if (!v.IsScalar()) throw LoadError(context_ + "." + key + ": expected a string", line_of(v));
    return v.Scalar();
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const auto key = it->first.as<std::string>();
      if (!seen_.count(key)) throw LoadError(context_ + ": unknown key '" + key + "'", line_of(it->first));
    }
  }

  int line() const { return line_of(node_); }
  const std::string& context() const { return context_; }

 private:
  static std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t diag = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t up = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
        diag = up;
      }
    }
    return row[b.size()];
  }

  double as_real(const std::string& key) {
    const auto v = node_[key];
    try {
      return v.as<double>();
    } catch (const YAML::Exception&) {
      throw LoadError(context_ + "." + key + ": expected a number", line_of(v));
    }
  }

  const YAML::Node node_;  // const: lookups must not insert keys
  std::string context_;
  std::set<std::string> seen_;
};

/// Runs a validator and re-raises its complaint with a line number.
template <class F>
void checked(int line, const std::string& context, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw LoadError(context + ": " + e.what(), line);
  }
}

inline OpticalPulse read_clock(MapReader r) {
  OpticalPulse p;
  p.center_wavelength_nm = r.real("wavelength_nm", p.center_wavelength_nm);
  p.duration_fwhm_ps = r.real("duration_ps", p.duration_fwhm_ps);
  p.transform_limited_duration_ps = p.duration_fwhm_ps;
  p.spectral_width_nm = r.real("spectral_width_nm", p.spectral_width_nm);
  p.mean_power_mw = r.real("power_mw", p.mean_power_mw);
  p.repetition_rate_ghz = r.real("repetition_rate_ghz", p.repetition_rate_ghz);
  p.timing_jitter_rms_ps = r.real("jitter_ps", p.timing_jitter_rms_ps);
  p.train_coherence_length_m = r.real("coherence_length_m", p.train_coherence_length_m);
  r.finish();
  checked(r.line(), r.context(), [&] { p.validate(); });
  return p;
}

inline SpectralFilter read_filter(MapReader r, SpectralFilter f) {
  f.center_wavelength_nm = r.real("wavelength_nm", f.center_wavelength_nm);
  f.bandwidth_ghz = r.real("bandwidth_ghz", f.bandwidth_ghz);
  const auto shape = r.text("shape", "gaussian");
  if (shape != "gaussian") throw LoadError(r.context() + ": unsupported filter shape '" + shape + "'", r.line());
  r.finish();
  return f;
}

inline ArmSpec read_arm(MapReader r, int index) {
  ArmSpec a;
  a.name = r.text("name", index == 0 ? "arm1" : "arm2");
  const auto spans = r.child("spans");
  if (!spans || !spans.IsSequence() || spans.size() == 0)
    throw LoadError(r.context() + ": 'spans' must be a non-empty list", r.line());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    MapReader s(spans[i], r.context() + ".spans[" + std::to_string(i) + "]");
    FiberSpan f;
    f.length_km = s.real("length_km");
    f.attenuation_db_per_km = s.real("attenuation_db_per_km", f.attenuation_db_per_km);
    f.dispersion_ps_per_nm_km = s.real("dispersion_ps_per_nm_km", f.dispersion_ps_per_nm_km);
    f.excess_loss_db = s.real("excess_loss_db", f.excess_loss_db);
    f.thermal_drift_rate_max_mm_per_h = s.real("thermal_drift_mm_per_h", f.thermal_drift_rate_max_mm_per_h);
    s.finish();
    checked(s.line(), s.context(), [&] { f.validate(); });
    a.spans.push_back(f);
  }
  if (r.has("dcm")) {
    MapReader d(r.child("dcm"), r.context() + ".dcm");
    DispersionCompensator c;
    c.net_dispersion_ps_per_nm = d.real("net_dispersion_ps_per_nm");
    c.insertion_loss_db = d.real("insertion_loss_db", 0.0);
    d.finish();
    if (c.insertion_loss_db < 0.0) throw LoadError(d.context() + ": insertion loss must be >= 0", d.line());
    a.dcm = c;
  }
  if (r.has("edfa")) {
    MapReader e(r.child("edfa"), r.context() + ".edfa");
    a.edfa.target_output_power_w = e.real("target_power_w", a.edfa.target_output_power_w);
    a.edfa.max_gain_db = e.real("max_gain_db", a.edfa.max_gain_db);
    e.finish();
    if (!(a.edfa.target_output_power_w > 0.0))
      throw LoadError(e.context() + ": target power must be positive", e.line());
  }
  if (r.has("shg")) {
    MapReader s(r.child("shg"), r.context() + ".shg");
    a.shg.conversion_efficiency = s.real("efficiency", a.shg.conversion_efficiency);
    s.finish();
    if (!(a.shg.conversion_efficiency >= 0.0 && a.shg.conversion_efficiency <= 1.0))
      throw LoadError(s.context() + ": efficiency must be in [0,1]", s.line());
  }
  if (r.has("spdc")) {
    MapReader s(r.child("spdc"), r.context() + ".spdc");
    a.spdc.mean_pairs_per_pulse = s.real("mu", a.spdc.mean_pairs_per_pulse);
    a.reference_pump_mw = s.real("reference_pump_mw", a.reference_pump_mw);
    if (s.has("signal")) a.spdc.signal_channel = read_filter(MapReader(s.child("signal"), s.context() + ".signal"), a.spdc.signal_channel);
    if (s.has("idler")) a.spdc.idler_channel = read_filter(MapReader(s.child("idler"), s.context() + ".idler"), a.spdc.idler_channel);
    s.finish();
    checked(s.line(), s.context(), [&] { a.spdc.validate(); });
    if (!(a.reference_pump_mw > 0.0)) throw LoadError(s.context() + ": reference pump power must be positive", s.line());
  }
  a.signal_transmission = r.real("signal_transmission", a.signal_transmission);
  a.idler_transmission = r.real("idler_transmission", a.idler_transmission);
  a.polarization_misalignment_deg = r.real("polarization_misalignment_deg", a.polarization_misalignment_deg);
  r.finish();
  for (double t : {a.signal_transmission, a.idler_transmission})
    if (!(t >= 0.0 && t <= 1.0)) throw LoadError(r.context() + ": transmissions must be in [0,1]", r.line());
  return a;
}

inline DetectorConfig read_detector(MapReader r, DetectorConfig d) {
  d.spec.efficiency = r.real("efficiency", d.spec.efficiency);
  d.spec.dark_count_prob_per_ns = r.real("dark_per_ns", d.spec.dark_count_prob_per_ns);
  d.spec.dead_time_us = r.real("dead_time_us", d.spec.dead_time_us);
  d.spec.saturation_rate_khz = r.real("saturation_khz", d.spec.saturation_rate_khz);
  const auto mode = r.text("mode", d.spec.mode == DetectorMode::gated ? "gated" : "free_running");
  if (mode == "gated")
    d.spec.mode = DetectorMode::gated;
  else if (mode == "free_running")
    d.spec.mode = DetectorMode::free_running;
  else
    throw LoadError(r.context() + ": mode must be gated or free_running", r.line());
  d.elements = static_cast<int>(r.integer("elements", d.elements));
  r.finish();
  checked(r.line(), r.context(), [&] { d.spec.validate(); });
  if (d.elements < 1) throw LoadError(r.context() + ": elements must be >= 1", r.line());
  return d;
}

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace detail

/// Default detector set: APD1/APD3/APD4 gated InGaAs, APD2 the free-running
/// 4x multiplexed trigger.
inline std::array<DetectorConfig, 4> default_detectors() {
  DetectorConfig gated;
  DetectorConfig trigger{{0.25, 1e-6, 7.0, DetectorMode::free_running, 60.0}, 4};
  return {gated, trigger, gated, gated};
}

inline Scenario load_scenario(const YAML::Node& root) {
  using detail::MapReader;
  Scenario sc;
  sc.source = YAML::Clone(root);
  MapReader r(root, "scenario");
  sc.name = r.text("name", "unnamed");
  if (!r.has("seed")) throw LoadError("scenario: 'seed' is mandatory", r.line());
  sc.seed = static_cast<std::uint64_t>(r.integer("seed", 0));

  if (r.has("clock")) sc.clock = detail::read_clock(MapReader(r.child("clock"), "clock"));
  if (r.has("splitter")) {
    MapReader s(r.child("splitter"), "splitter");
    sc.splitter.split_ratio = s.real("ratio", sc.splitter.split_ratio);
    sc.splitter.excess_loss_db = s.real("excess_loss_db", sc.splitter.excess_loss_db);
    s.finish();
    if (!(sc.splitter.split_ratio > 0.0 && sc.splitter.split_ratio <= 1.0) || sc.splitter.excess_loss_db < 0.0)
      throw LoadError("splitter: ratio must be in (0,1] and excess loss >= 0", s.line());
  }

  const auto arms = r.child("arms");
  if (!arms || !arms.IsSequence() || arms.size() != 2)
    throw LoadError("scenario: 'arms' must list exactly two source arms", arms ? detail::line_of(arms) : r.line());
  for (int i = 0; i < 2; ++i)
    sc.arms[i] = detail::read_arm(MapReader(arms[i], "arms[" + std::to_string(i) + "]"), i);

  if (r.has("relay")) {
    MapReader s(r.child("relay"), "relay");
    sc.relay.delay_line.group_index = s.real("delay_line_group_index", 1.0);
    sc.relay.indistinguishability_cap = s.real("indistinguishability_cap", 1.0);
    sc.relay.relative_jitter_ps = s.real("relative_jitter_ps", 0.0);
    sc.relay.spectral_offset_ghz = s.real("spectral_offset_ghz", 0.0);
    sc.relay.rotation_deg = s.real("rotation_deg", 45.0);
    sc.relay.window.width_ns = s.real("coincidence_window_ns", sc.clock.period_ps() / 1000.0);
    s.finish();
    if (!(sc.relay.delay_line.group_index >= 1.0))
      throw LoadError("relay: delay line group index must be >= 1", s.line());
    if (!(sc.relay.indistinguishability_cap >= 0.0 && sc.relay.indistinguishability_cap <= 1.0))
      throw LoadError("relay: indistinguishability cap must be in [0,1]", s.line());
    if (!(sc.relay.relative_jitter_ps >= 0.0)) throw LoadError("relay: relative jitter must be >= 0", s.line());
  } else {
    sc.relay.window.width_ns = sc.clock.period_ps() / 1000.0;
  }
  sc.relay.window.slot_period_ns = sc.clock.period_ps() / 1000.0;
  detail::checked(r.line(), "relay", [&] { sc.relay.window.validate(); });

  sc.detectors = default_detectors();
  if (r.has("detectors")) {
    MapReader d(r.child("detectors"), "detectors");
    for (int i = 0; i < 4; ++i) {
      const std::string key = "apd" + std::to_string(i + 1);
      if (d.has(key)) sc.detectors[i] = detail::read_detector(MapReader(d.child(key), "detectors." + key), sc.detectors[i]);
    }
    d.finish();
  }
  if (sc.detectors[1].spec.mode != DetectorMode::free_running)
    throw LoadError("detectors.apd2: the trigger detector must be free_running", r.line());

  {
    if (!r.has("scan")) throw LoadError("scenario: 'scan' section is mandatory", r.line());
    MapReader s(r.child("scan"), "scan");
    if (s.has("positions_mm")) {
      const auto list = s.child("positions_mm");
      if (!list.IsSequence()) throw LoadError("scan.positions_mm: expected a list", detail::line_of(list));
      for (const auto& v : list) {
        try {
          sc.scan.positions_mm.push_back(v.as<double>());
        } catch (const YAML::Exception&) {
          throw LoadError("scan.positions_mm: expected numbers", detail::line_of(v));
        }
      }
      if (s.has("start_mm") || s.has("stop_mm") || s.has("points"))
        throw LoadError("scan: give either positions_mm or start_mm/stop_mm/points", s.line());
    } else {
      const double a = s.real("start_mm");
      const double b = s.real("stop_mm");
      const auto n = s.integer("points", 21);
      if (n < 2) throw LoadError("scan.points must be >= 2", s.line());
      for (std::int64_t i = 0; i < n; ++i) sc.scan.positions_mm.push_back(a + (b - a) * i / static_cast<double>(n - 1));
    }
    sc.scan.integration_s = s.real("integration_s", sc.scan.integration_s);
    sc.scan.dip_center_mm = s.real("dip_center_mm", 0.0);
    s.finish();
    for (std::size_t i = 1; i < sc.scan.positions_mm.size(); ++i)
      if (!(sc.scan.positions_mm[i] > sc.scan.positions_mm[i - 1]))
        throw LoadError("scan: positions must be strictly increasing", s.line());
    if (sc.scan.positions_mm.empty()) throw LoadError("scan: no positions", s.line());
    if (!(sc.scan.integration_s > 0.0)) throw LoadError("scan: integration time must be positive", s.line());
  }

  if (r.has("servo")) {
    MapReader s(r.child("servo"), "servo");
    auto& c = sc.servo.config;
    sc.servo.enabled = s.boolean("enabled", false);
    c.measurement_interval_s = s.real("interval_s", c.measurement_interval_s);
    c.scan_step_mm = s.real("scan_step_mm", c.scan_step_mm);
    c.scan_half_range_mm = s.real("scan_half_range_mm", c.scan_half_range_mm);
    c.samples_per_step = static_cast<int>(s.integer("samples_per_step", c.samples_per_step));
    c.intensity_noise = s.real("intensity_noise", c.intensity_noise);
    c.accuracy_budget_mm = s.real("accuracy_budget_mm", c.accuracy_budget_mm);
    c.min_contrast = s.real("min_contrast", c.min_contrast);
    s.finish();
    detail::checked(s.line(), "servo", [&] { c.validate(sc.clock); });
  }

  double span_drift = 0.0;
  for (const auto& a : sc.arms)
    for (const auto& f : a.spans) span_drift += f.thermal_drift_rate_max_mm_per_h;
  sc.drift = {span_drift > 0.0 ? DriftMode::ramp : DriftMode::none, span_drift};
  if (r.has("drift")) {
    MapReader s(r.child("drift"), "drift");
    const auto mode = s.text("mode", sc.drift.mode == DriftMode::none ? "none" : "ramp");
    if (mode == "none")
      sc.drift.mode = DriftMode::none;
    else if (mode == "ramp")
      sc.drift.mode = DriftMode::ramp;
    else if (mode == "random_walk")
      sc.drift.mode = DriftMode::random_walk;
    else
      throw LoadError("drift.mode must be none, ramp or random_walk", s.line());
    sc.drift.max_rate_mm_per_h = s.real("rate_mm_per_h", span_drift);
    s.finish();
    if (!(sc.drift.max_rate_mm_per_h >= 0.0)) throw LoadError("drift: rate must be >= 0", s.line());
  }

  if (r.has("micro_mc")) {
    MapReader s(r.child("micro_mc"), "micro_mc");
    sc.micro_mc.mu = s.real("mu", sc.micro_mc.mu);
    sc.micro_mc.cycles_per_point = s.integer("cycles_per_point", sc.micro_mc.cycles_per_point);
    s.finish();
    if (!(sc.micro_mc.mu > 0.0) || sc.micro_mc.cycles_per_point < 1)
      throw LoadError("micro_mc: mu and cycles_per_point must be positive", s.line());
  }
  r.finish();

  sc.config_hash = detail::fnv1a_hex(YAML::Dump(root));
  return sc;
}

inline Scenario load_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw LoadError(e.msg, e.mark.line + 1);
  }
  if (!root || !root.IsMap()) throw LoadError("scenario: expected a mapping at top level", 1);
  return load_scenario(root);
}

/// Sets a scalar addressed by a dotted path ("arms.*.spdc.mu",
/// "relay.relative_jitter_ps", "arms.0.spans.0.length_km"). Missing map keys
/// are created; the loader then decides whether they are valid.
inline void set_scalar(YAML::Node node, const std::vector<std::string>& path, std::size_t at,
                       const std::string& value, const std::string& full) {
  if (at == path.size()) {
    if (node.IsMap() || node.IsSequence())
      throw std::invalid_argument("override: '" + full + "' is not a scalar field");
    node = value;
    return;
  }
  const auto& key = path[at];
  if (node.IsSequence()) {
    if (key == "*") {
      for (std::size_t i = 0; i < node.size(); ++i) set_scalar(node[i], path, at + 1, value, full);
      return;
    }
    std::size_t idx = 0;
    try {
      idx = std::stoul(key);
    } catch (const std::exception&) {
      throw std::invalid_argument("override: '" + key + "' is not a list index in '" + full + "'");
    }
    if (idx >= node.size()) throw std::invalid_argument("override: index out of range in '" + full + "'");
    set_scalar(node[idx], path, at + 1, value, full);
    return;
  }
  if (!node.IsMap()) throw std::invalid_argument("override: '" + full + "' descends into a scalar");
  if (key == "*") {
    for (auto it = node.begin(); it != node.end(); ++it) set_scalar(it->second, path, at + 1, value, full);
    return;
  }
  if (!node[key]) {
    if (at + 1 != path.size()) node[key] = YAML::Node(YAML::NodeType::Map);
  }
  set_scalar(node[key], path, at + 1, value, full);
}

inline Scenario with_override(const Scenario& base, const std::string& path, double value) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw std::invalid_argument("override: empty component in '" + path + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw std::invalid_argument("override: empty path");
  YAML::Node root = YAML::Clone(base.source);
  set_scalar(root, parts, 0, fmt::format("{}", value), path);
  Scenario out = load_scenario(root);
  out.seed = base.seed;
  return out;
}

}  // namespace qsync
