#pragma once

// Run configuration file (JSON, schema version 1). See docs/config_schema.md.

#include "stirap/sweep.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stirap {

inline constexpr int kSchemaVersion = 1;

struct SweepSection {
  AxisRange axis1;
  AxisRange axis2;
  double tau_over_T = 0.7;
  std::optional<double> gT;
  double window_margin = PulsePair::kDefaultMargin;
  std::vector<std::pair<double, double>> kappa_table;
  std::size_t output_points = 201;

  friend bool operator==(const SweepSection&, const SweepSection&) = default;
};

enum class ConvergeObservable { efficiency, peak_leakage };

struct ConvergeSection {
  int start_nmax = 4;
  double rel_tol = 1e-6;
  int ladder_step = 4;
  int max_nmax = 32;
  ConvergeObservable observable = ConvergeObservable::efficiency;

  friend bool operator==(const ConvergeSection&, const ConvergeSection&) = default;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  SystemParams system{};
  PulsePair pulses{};
  StateSpec initial_state{{labels::k0ge, cplx{1.0, 0.0}}};
  int n_max = 8;
  IntegratorOptions integrator{};
  std::size_t output_points = 801;
  std::string trajectory_csv = "trajectory.csv";
  std::string sweep_csv = "sweep.csv";
  std::string converge_csv = "converge.csv";
  std::optional<SweepSection> sweep;
  ConvergeSection converge{};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  [[nodiscard]] SweepSpec sweep_spec() const {
    if (!sweep) throw std::invalid_argument("config has no sweep section");
    SweepSpec s;
    s.axis1 = sweep->axis1;
    s.axis2 = sweep->axis2;
    s.params = system;
    s.g_peak = pulses.g_peak;
    s.T = pulses.T;
    s.tau_over_T = sweep->tau_over_T;
    s.gT = sweep->gT;
    s.window_margin = sweep->window_margin;
    s.kappa_table = sweep->kappa_table;
    s.psi0 = initial_state;
    s.n_max = n_max;
    s.integrator = integrator;
    s.output_points = sweep->output_points;
    return s;
  }
};

/// Schema violation; one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  [[nodiscard]] const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
  }
  std::vector<std::string> issues_;
};

struct LoadedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

using nlohmann::json;

// Collects field-level problems instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> issues;

  template <typename T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& path,
                       bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) issues.push_back(path + ": missing required field");
      return std::nullopt;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      issues.push_back(path + ": wrong type");
      return std::nullopt;
    }
  }

  template <typename T>
  void read(const json& obj, const std::string& key, const std::string& path, T& out,
            bool required = false) {
    if (auto v = get<T>(obj, key, path, required)) out = *v;
  }

  void check(bool ok, const std::string& path, const std::string& what) {
    if (!ok) issues.push_back(path + ": " + what);
  }

  void reject_unknown(const json& obj, const std::string& path,
                      std::initializer_list<const char*> known) {
    if (!obj.is_object()) return;
    for (const auto& [key, _] : obj.items()) {
      bool found = false;
      for (const char* k : known) found = found || key == k;
      if (!found) issues.push_back((path.empty() ? key : path + "." + key) + ": unknown field");
    }
  }
};

inline AxisRange read_axis(Reader& r, const json& j, const std::string& path) {
  AxisRange ax;
  if (!j.is_object()) {
    r.issues.push_back(path + ": must be an object");
    return ax;
  }
  r.reject_unknown(j, path, {"name", "min", "max", "points"});
  if (auto name = r.get<std::string>(j, "name", path + ".name", true)) {
    try {
      ax.name = parse_axis(*name);
    } catch (const std::invalid_argument& e) {
      r.issues.push_back(path + ".name: " + e.what());
    }
  }
  r.read(j, "min", path + ".min", ax.min, true);
  r.read(j, "max", path + ".max", ax.max, true);
  r.read(j, "points", path + ".points", ax.points, true);
  r.check(ax.points >= 2, path + ".points", "must be >= 2");
  r.check(ax.max >= ax.min, path + ".max", "must be >= min");
  return ax;
}

inline json axis_to_json(const AxisRange& ax) {
  return {{"name", to_string(ax.name)}, {"min", ax.min}, {"max", ax.max}, {"points", ax.points}};
}

}  // namespace detail

inline LoadedConfig parse_config(const nlohmann::json& j) {
  using detail::json;
  detail::Reader r;
  LoadedConfig out;
  RunConfig& c = out.config;

  if (!j.is_object()) throw ConfigError({"<root>: config must be a JSON object"});
  r.reject_unknown(j, "", {"schema_version", "system", "pulses", "initial_state", "n_max",
                           "integrator", "output", "sweep", "converge"});

  r.read(j, "schema_version", "schema_version", c.schema_version, true);
  r.check(c.schema_version == kSchemaVersion, "schema_version",
          "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");

  // system
  if (auto sys = r.get<json>(j, "system", "system", true)) {
    r.reject_unknown(*sys, "system",
                     {"omega_c", "delta_p", "delta", "kappa", "variant", "loss_halving"});
    r.read(*sys, "omega_c", "system.omega_c", c.system.omega_c);
    r.check(c.system.omega_c == 1.0, "system.omega_c",
            "all quantities are in units of omega_c, which must be 1");
    r.read(*sys, "delta_p", "system.delta_p", c.system.delta_p);
    r.read(*sys, "delta", "system.delta", c.system.delta);
    r.read(*sys, "kappa", "system.kappa", c.system.kappa);
    r.check(c.system.kappa >= 0.0, "system.kappa", "must be >= 0");
    r.read(*sys, "loss_halving", "system.loss_halving", c.system.loss_halving);
    if (auto v = r.get<std::string>(*sys, "variant", "system.variant", true)) {
      try {
        c.system.variant = parse_variant(*v);
      } catch (const std::invalid_argument& e) {
        r.issues.push_back(std::string("system.variant: ") + e.what());
      }
    }
  }

  // pulses
  if (auto pj = r.get<json>(j, "pulses", "pulses", true)) {
    r.reject_unknown(*pj, "pulses",
                     {"g_peak", "T", "tau", "tau_over_T", "t_start", "t_end", "window_margin"});
    PulsePair& p = c.pulses;
    r.read(*pj, "g_peak", "pulses.g_peak", p.g_peak, true);
    r.read(*pj, "T", "pulses.T", p.T, true);
    r.check(p.g_peak >= 0.0, "pulses.g_peak", "must be >= 0");
    r.check(p.T > 0.0, "pulses.T", "must be > 0");
    const bool has_tau = pj->contains("tau");
    const bool has_ratio = pj->contains("tau_over_T");
    r.check(has_tau != has_ratio, "pulses.tau", "give exactly one of tau or tau_over_T");
    if (has_tau) r.read(*pj, "tau", "pulses.tau", p.tau);
    if (has_ratio) {
      double ratio = 0.7;
      r.read(*pj, "tau_over_T", "pulses.tau_over_T", ratio);
      p.tau = ratio * p.T;
    }
    r.check(p.tau > 0.0, "pulses.tau", "must be > 0");

    const bool explicit_window = pj->contains("t_start") || pj->contains("t_end");
    double margin = PulsePair::kDefaultMargin;
    r.read(*pj, "window_margin", "pulses.window_margin", margin);
    r.check(margin > 0.0, "pulses.window_margin", "must be > 0");
    if (explicit_window) {
      r.check(!pj->contains("window_margin"), "pulses.window_margin",
              "cannot be combined with t_start/t_end");
      r.read(*pj, "t_start", "pulses.t_start", p.t_start, true);
      r.read(*pj, "t_end", "pulses.t_end", p.t_end, true);
      r.check(p.t_end > p.t_start, "pulses.t_end", "must be > t_start");
    } else {
      p.t_start = -p.tau - margin * p.T;
      p.t_end = p.tau + margin * p.T;
    }
    if (r.issues.empty()) {
      if (auto w = p.window_warning()) out.warnings.push_back("pulses: " + *w);
    }
  }

  r.read(j, "n_max", "n_max", c.n_max);
  r.check(c.n_max >= 1, "n_max", "must be >= 1");

  // initial_state
  if (auto st = r.get<json>(j, "initial_state", "initial_state", true)) {
    if (!st->is_array() || st->empty()) {
      r.issues.push_back("initial_state: must be a non-empty array");
    } else {
      c.initial_state.clear();
      for (std::size_t i = 0; i < st->size(); ++i) {
        const std::string path = "initial_state[" + std::to_string(i) + "]";
        const json& e = (*st)[i];
        r.reject_unknown(e, path, {"label", "amplitude"});
        Amplitude amp;
        if (auto lbl = r.get<std::string>(e, "label", path + ".label", true)) {
          try {
            amp.label = Label::parse(*lbl);
          } catch (const std::invalid_argument& ex) {
            r.issues.push_back(path + ".label: " + ex.what());
          }
        }
        if (e.is_object() && e.contains("amplitude")) {
          const json& a = e.at("amplitude");
          if (a.is_number()) {
            amp.value = a.get<double>();
          } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
            amp.value = {a[0].get<double>(), a[1].get<double>()};
          } else {
            r.issues.push_back(path + ".amplitude: expected a number or [re, im]");
          }
        } else {
          r.issues.push_back(path + ".amplitude: missing required field");
        }
        r.check(amp.label.n <= c.n_max, path + ".label", "photon number exceeds n_max");
        c.initial_state.push_back(amp);
      }
    }
  }

  // integrator
  if (auto ij = r.get<json>(j, "integrator", "integrator", false)) {
    r.reject_unknown(*ij, "integrator", {"rtol", "atol", "initial_step", "max_steps"});
    r.read(*ij, "rtol", "integrator.rtol", c.integrator.rtol);
    r.read(*ij, "atol", "integrator.atol", c.integrator.atol);
    r.read(*ij, "initial_step", "integrator.initial_step", c.integrator.initial_step);
    r.read(*ij, "max_steps", "integrator.max_steps", c.integrator.max_steps);
    r.check(c.integrator.rtol > 0.0, "integrator.rtol", "must be > 0");
    r.check(c.integrator.atol >= 0.0, "integrator.atol", "must be >= 0");
    r.check(c.integrator.max_steps > 0, "integrator.max_steps", "must be > 0");
  }

  // output
  if (auto oj = r.get<json>(j, "output", "output", false)) {
    r.reject_unknown(*oj, "output", {"points", "trajectory_csv", "sweep_csv", "converge_csv"});
    r.read(*oj, "points", "output.points", c.output_points);
    r.check(c.output_points >= 2, "output.points", "must be >= 2");
    r.read(*oj, "trajectory_csv", "output.trajectory_csv", c.trajectory_csv);
    r.read(*oj, "sweep_csv", "output.sweep_csv", c.sweep_csv);
    r.read(*oj, "converge_csv", "output.converge_csv", c.converge_csv);
  }

  // sweep
  if (auto sj = r.get<json>(j, "sweep", "sweep", false)) {
    r.reject_unknown(*sj, "sweep",
                     {"axis1", "axis2", "tau_over_T", "gT", "window_margin", "kappa_table",
                      "output_points"});
    SweepSection s;
    if (auto a = r.get<json>(*sj, "axis1", "sweep.axis1", true))
      s.axis1 = detail::read_axis(r, *a, "sweep.axis1");
    if (auto a = r.get<json>(*sj, "axis2", "sweep.axis2", true))
      s.axis2 = detail::read_axis(r, *a, "sweep.axis2");
    r.check(s.axis1.name != s.axis2.name, "sweep.axis2.name", "must differ from axis1");
    r.read(*sj, "tau_over_T", "sweep.tau_over_T", s.tau_over_T);
    r.check(s.tau_over_T > 0.0, "sweep.tau_over_T", "must be > 0");
    if (auto gt = r.get<double>(*sj, "gT", "sweep.gT", false)) {
      s.gT = *gt;
      r.check(*gt > 0.0, "sweep.gT", "must be > 0");
      r.check(s.axis1.name != Axis::T && s.axis2.name != Axis::T, "sweep.gT",
              "cannot derive T while sweeping T");
    }
    r.read(*sj, "window_margin", "sweep.window_margin", s.window_margin);
    r.check(s.window_margin > 0.0, "sweep.window_margin", "must be > 0");
    r.read(*sj, "kappa_table", "sweep.kappa_table", s.kappa_table);
    for (const auto& [g, k] : s.kappa_table) r.check(k >= 0.0, "sweep.kappa_table", "kappa must be >= 0");
    r.read(*sj, "output_points", "sweep.output_points", s.output_points);
    r.check(s.output_points >= 2, "sweep.output_points", "must be >= 2");
    c.sweep = s;
  }

  // converge
  if (auto cj = r.get<json>(j, "converge", "converge", false)) {
    r.reject_unknown(*cj, "converge",
                     {"start_nmax", "rel_tol", "ladder_step", "max_nmax", "observable"});
    r.read(*cj, "start_nmax", "converge.start_nmax", c.converge.start_nmax);
    r.read(*cj, "rel_tol", "converge.rel_tol", c.converge.rel_tol);
    r.read(*cj, "ladder_step", "converge.ladder_step", c.converge.ladder_step);
    r.read(*cj, "max_nmax", "converge.max_nmax", c.converge.max_nmax);
    r.check(c.converge.start_nmax >= 1, "converge.start_nmax", "must be >= 1");
    r.check(c.converge.rel_tol > 0.0, "converge.rel_tol", "must be > 0");
    r.check(c.converge.ladder_step >= 1, "converge.ladder_step", "must be >= 1");
    if (auto obs = r.get<std::string>(*cj, "observable", "converge.observable", false)) {
      if (*obs == "efficiency") {
        c.converge.observable = ConvergeObservable::efficiency;
      } else if (*obs == "peak_leakage") {
        c.converge.observable = ConvergeObservable::peak_leakage;
      } else {
        r.issues.push_back("converge.observable: expected efficiency or peak_leakage");
      }
    }
  }

  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));

  // Amplitudes are rescaled to unit norm; a visible mismatch is reported.
  double norm2 = 0.0;
  for (const auto& a : c.initial_state) norm2 += std::norm(a.value);
  if (!(norm2 > 0.0)) throw ConfigError({"initial_state: amplitudes have zero norm"});
  if (std::abs(norm2 - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "initial_state: squared norm " << norm2 << " rescaled to 1";
    out.warnings.push_back(msg.str());
  }
  if (std::abs(norm2 - 1.0) > 1e-12) {
    const double s = 1.0 / std::sqrt(norm2);
    for (auto& a : c.initial_state) a.value *= s;
  }
  return out;
}

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json state = json::array();
  for (const auto& a : c.initial_state)
    state.push_back({{"label", a.label.str()}, {"amplitude", {a.value.real(), a.value.imag()}}});

  json j = {
      {"schema_version", c.schema_version},
      {"system",
       {{"omega_c", c.system.omega_c},
        {"delta_p", c.system.delta_p},
        {"delta", c.system.delta},
        {"kappa", c.system.kappa},
        {"variant", to_string(c.system.variant)},
        {"loss_halving", c.system.loss_halving}}},
      {"pulses",
       {{"g_peak", c.pulses.g_peak},
        {"T", c.pulses.T},
        {"tau", c.pulses.tau},
        {"t_start", c.pulses.t_start},
        {"t_end", c.pulses.t_end}}},
      {"initial_state", state},
      {"n_max", c.n_max},
      {"integrator",
       {{"rtol", c.integrator.rtol},
        {"atol", c.integrator.atol},
        {"initial_step", c.integrator.initial_step},
        {"max_steps", c.integrator.max_steps}}},
      {"output",
       {{"points", c.output_points},
        {"trajectory_csv", c.trajectory_csv},
        {"sweep_csv", c.sweep_csv},
        {"converge_csv", c.converge_csv}}},
      {"converge",
       {{"start_nmax", c.converge.start_nmax},
        {"rel_tol", c.converge.rel_tol},
        {"ladder_step", c.converge.ladder_step},
        {"max_nmax", c.converge.max_nmax},
        {"observable", c.converge.observable == ConvergeObservable::efficiency
                           ? "efficiency"
                           : "peak_leakage"}}},
  };
  if (c.sweep) {
    const auto& s = *c.sweep;
    json sj = {{"axis1", detail::axis_to_json(s.axis1)},
               {"axis2", detail::axis_to_json(s.axis2)},
               {"tau_over_T", s.tau_over_T},
               {"window_margin", s.window_margin},
               {"kappa_table", s.kappa_table},
               {"output_points", s.output_points}};
    if (s.gT) sj["gT"] = *s.gT;
    j["sweep"] = sj;
  }
  return j;
}

inline LoadedConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("<file>: not valid JSON: ") + e.what()});
  }
  return parse_config(j);
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"<file>: cannot open '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline void save_config(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(c).dump(2) << '\n';
}

}  // namespace stirap
