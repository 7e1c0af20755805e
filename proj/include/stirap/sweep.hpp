#pragma once

// Two-axis parameter grids. Every grid point is an independent propagate
// call, so results do not depend on the number of workers.

#include "stirap/csv.hpp"
#include "stirap/observables.hpp"
#include "stirap/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace stirap {

enum class Axis { g_peak, T, delta, delta_p, kappa };

inline std::string to_string(Axis a) {
  switch (a) {
    case Axis::g_peak: return "g_peak";
    case Axis::T: return "T";
    case Axis::delta: return "delta";
    case Axis::delta_p: return "delta_p";
    case Axis::kappa: return "kappa";
  }
  return "?";
}

inline Axis parse_axis(const std::string& s) {
  for (Axis a : {Axis::g_peak, Axis::T, Axis::delta, Axis::delta_p, Axis::kappa}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown sweep axis '" + s +
                              "' (expected g_peak, T, delta, delta_p or kappa)");
}

struct AxisRange {
  Axis name = Axis::g_peak;
  double min = 0.0;
  double max = 1.0;
  int points = 2;

  [[nodiscard]] double at(int i) const {
    if (i == points - 1) return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(points - 1);
  }

  [[nodiscard]] std::vector<double> values() const {
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = at(i);
    return v;
  }

  friend bool operator==(const AxisRange&, const AxisRange&) = default;
};

struct SweepSpec {
  AxisRange axis1{Axis::g_peak, 0.01, 0.5, 41};
  AxisRange axis2{Axis::T, 10.0, 1000.0, 41};

  SystemParams params{};  ///< fixed values for axes not swept
  double g_peak = 0.15;
  double T = 10.0 / 0.15;

  // Per-point derived rules.
  double tau_over_T = 0.7;
  std::optional<double> gT;  ///< if set, T = gT / g at every point
  double window_margin = PulsePair::kDefaultMargin;
  /// (g, kappa) pairs; if non-empty, kappa is interpolated linearly in g.
  std::vector<std::pair<double, double>> kappa_table;

  StateSpec psi0{{labels::k0ge, cplx{1.0, 0.0}}};
  int n_max = 8;
  IntegratorOptions integrator{};
  std::size_t output_points = 201;

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(axis1.points) * static_cast<std::size_t>(axis2.points);
  }

  void validate() const {
    if (axis1.name == axis2.name) throw std::invalid_argument("sweep axes must be distinct");
    for (const auto* ax : {&axis1, &axis2}) {
      if (ax->points < 2)
        throw std::invalid_argument("axis " + to_string(ax->name) + " needs at least 2 points");
      if (!(ax->max >= ax->min))
        throw std::invalid_argument("axis " + to_string(ax->name) + " has max < min");
    }
    const bool sweeps_T = axis1.name == Axis::T || axis2.name == Axis::T;
    if (gT && sweeps_T) throw std::invalid_argument("T cannot be both swept and derived from gT");
    if (gT && !(*gT > 0.0)) throw std::invalid_argument("gT must be > 0");
    const bool sweeps_kappa = axis1.name == Axis::kappa || axis2.name == Axis::kappa;
    if (!kappa_table.empty() && sweeps_kappa)
      throw std::invalid_argument("kappa cannot be both swept and taken from kappa_table");
    if (!(tau_over_T > 0.0)) throw std::invalid_argument("tau_over_T must be > 0");
    if (!(window_margin > 0.0)) throw std::invalid_argument("window_margin must be > 0");
    if (output_points < 2) throw std::invalid_argument("output_points must be >= 2");
    if (psi0.empty()) throw std::invalid_argument("initial state is empty");
    Basis basis(n_max);
    for (const auto& a : psi0) {
      if (!basis.contains(a.label))
        throw std::invalid_argument("initial-state label " + a.label.str() + " exceeds n_max");
    }
  }

  [[nodiscard]] std::pair<double, double> axis_values(std::size_t index) const {
    const auto n2 = static_cast<std::size_t>(axis2.points);
    return {axis1.at(static_cast<int>(index / n2)), axis2.at(static_cast<int>(index % n2))};
  }

  /// System and pulse parameters at one grid point.
  [[nodiscard]] std::pair<SystemParams, PulsePair> point(double v1, double v2) const {
    SystemParams sp = params;
    double g = g_peak;
    double width = T;
    auto apply = [&](Axis a, double v) {
      switch (a) {
        case Axis::g_peak: g = v; break;
        case Axis::T: width = v; break;
        case Axis::delta: sp.delta = v; break;
        case Axis::delta_p: sp.delta_p = v; break;
        case Axis::kappa: sp.kappa = v; break;
      }
    };
    apply(axis1.name, v1);
    apply(axis2.name, v2);
    if (gT) width = *gT / g;
    if (!kappa_table.empty()) sp.kappa = interpolate_kappa(g);
    return {sp, PulsePair::with_window(g, width, tau_over_T * width, window_margin)};
  }

  [[nodiscard]] double interpolate_kappa(double g) const {
    auto table = kappa_table;
    std::sort(table.begin(), table.end());
    if (g <= table.front().first) return table.front().second;
    if (g >= table.back().first) return table.back().second;
    const auto hi = std::upper_bound(table.begin(), table.end(), std::make_pair(g, -HUGE_VAL));
    const auto lo = hi - 1;
    const double w = (g - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  }
};

struct SweepRecord {
  std::size_t index = 0;
  double axis1 = 0.0;
  double axis2 = 0.0;
  double efficiency = 0.0;
  double final_norm = 0.0;    ///< squared norm at t_end
  double peak_leakage = 0.0;  ///< max_t population with more than one excitation
  StepStats stats{};
  std::string status = "ok";
};

struct SweepMetadata {
  std::string version = kVersion;
  std::string config;  ///< caller-provided config snapshot
  double wall_seconds = 0.0;
  int workers = 1;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRecord> records;  ///< grid order, starting at the first computed index
  SweepMetadata metadata;
};

struct SweepOptions {
  /// Points with index below this are skipped (already on disk).
  std::size_t first_index = 0;
  /// Called in grid order, one record at a time, never concurrently.
  std::function<void(const SweepRecord&)> on_record;
};

inline SweepRecord evaluate_point(const SweepSpec& spec, std::size_t index) {
  SweepRecord rec;
  rec.index = index;
  std::tie(rec.axis1, rec.axis2) = spec.axis_values(index);
  try {
    const auto [sp, pulses] = spec.point(rec.axis1, rec.axis2);
    const Hamiltonian h(Basis(spec.n_max), sp);
    StateVector psi0 = make_state(h.basis(), spec.psi0);
    psi0 /= psi0.norm();
    const auto times = uniform_times(pulses, spec.output_points);
    const Trajectory traj = propagate(h, pulses, psi0, times, spec.integrator);
    rec.efficiency = transfer_efficiency(traj);
    rec.final_norm = traj.norms.back();
    rec.peak_leakage = peak_leakage(traj, ExcitationLeakage{1});
    rec.stats = traj.stats;
  } catch (const std::exception& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.efficiency = rec.final_norm = rec.peak_leakage = nan;
    rec.status = csv::sanitize(std::string("error: ") + e.what());
  }
  return rec;
}

/// Rows of the grid are dealt round-robin to `workers` threads. Completed
/// records are released to on_record strictly in grid order.
inline SweepResult run_sweep(const SweepSpec& spec, int workers, const SweepOptions& opt = {}) {
  spec.validate();
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t total = spec.size();
  const std::size_t first = std::min(opt.first_index, total);
  const auto n2 = static_cast<std::size_t>(spec.axis2.points);
  const auto rows = static_cast<std::size_t>(spec.axis1.points);

  SweepResult result;
  result.spec = spec;
  result.metadata.workers = workers;
  result.records.resize(total - first);

  std::mutex mutex;
  std::map<std::size_t, const SweepRecord*> pending;
  std::size_t next_out = first;

  auto publish = [&](SweepRecord rec) {
    std::lock_guard lock(mutex);
    const std::size_t slot = rec.index - first;
    result.records[slot] = std::move(rec);
    pending.emplace(result.records[slot].index, &result.records[slot]);
    while (!pending.empty() && pending.begin()->first == next_out) {
      if (opt.on_record) opt.on_record(*pending.begin()->second);
      pending.erase(pending.begin());
      ++next_out;
    }
  };

  auto work = [&](std::size_t worker) {
    for (std::size_t row = worker; row < rows; row += static_cast<std::size_t>(workers)) {
      for (std::size_t col = 0; col < n2; ++col) {
        const std::size_t index = row * n2 + col;
        if (index < first) continue;
        publish(evaluate_point(spec, index));
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
  }

  result.metadata.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

struct IsoPoint {
  double g = 0.0;
  double T = 0.0;  ///< grid value nearest to A/g
  double efficiency = 0.0;
};

/// Efficiencies along T = A/g, taking the nearest T on the grid for every g.
inline std::vector<IsoPoint> iso_gT_slice(const SweepResult& result, double A) {
  const auto& spec = result.spec;
  if (result.records.empty()) throw std::invalid_argument("iso_gT_slice: empty sweep result");
  const bool g_first = spec.axis1.name == Axis::g_peak && spec.axis2.name == Axis::T;
  const bool t_first = spec.axis1.name == Axis::T && spec.axis2.name == Axis::g_peak;
  if (!g_first && !t_first)
    throw std::invalid_argument("iso_gT_slice needs a sweep over g_peak and T");
  if (!(A > 0.0)) throw std::invalid_argument("iso_gT_slice: A must be > 0");

  const AxisRange& g_axis = g_first ? spec.axis1 : spec.axis2;
  const AxisRange& t_axis = g_first ? spec.axis2 : spec.axis1;
  const double half_step = 0.5 * (t_axis.max - t_axis.min) / (t_axis.points - 1);

  std::map<std::size_t, const SweepRecord*> by_index;
  for (const auto& r : result.records) by_index.emplace(r.index, &r);

  std::vector<IsoPoint> out;
  for (int i = 0; i < g_axis.points; ++i) {
    const double g = g_axis.at(i);
    if (!(g > 0.0)) continue;
    const double target = A / g;
    if (target < t_axis.min - half_step || target > t_axis.max + half_step) continue;
    int best = 0;
    for (int j = 1; j < t_axis.points; ++j) {
      if (std::abs(t_axis.at(j) - target) < std::abs(t_axis.at(best) - target)) best = j;
    }
    const auto [row, col] = g_first ? std::pair{i, best} : std::pair{best, i};
    const auto index = static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.axis2.points) +
                       static_cast<std::size_t>(col);
    const auto it = by_index.find(index);
    if (it == by_index.end()) continue;
    out.push_back({g, t_axis.at(best), it->second->efficiency});
  }
  if (out.empty()) throw std::out_of_range("iso_gT_slice: A outside grid coverage");
  return out;
}

namespace sweep_csv {

inline const std::vector<std::string>& columns() {
  static const std::vector<std::string> cols = {"axis1",        "axis2",  "efficiency",
                                                "final_norm",   "peak_leakage", "status"};
  return cols;
}

inline std::string header() { return csv::join(columns()); }

inline std::string format(const SweepRecord& r) {
  const std::vector<std::string> fields = {
      csv::format_double(r.axis1),      csv::format_double(r.axis2),
      csv::format_double(r.efficiency), csv::format_double(r.final_norm),
      csv::format_double(r.peak_leakage), r.status};
  return csv::join(fields);
}

}  // namespace sweep_csv

}  // namespace stirap
