#pragma once

// Populations and leakage read off (unnormalized) trajectories.

#include "stirap/propagator.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stirap {

namespace labels {
inline const Label k0gg{0, Level::g, Level::g};
inline const Label k0ge{0, Level::g, Level::e};  // qubit 1 excited
inline const Label k0eg{0, Level::e, Level::g};  // qubit 2 excited
inline const Label k1gg{1, Level::g, Level::g};
inline const std::array<Label, 4> kStirapSubspace{k0gg, k0ge, k0eg, k1gg};
}  // namespace labels

struct PopulationSeries {
  std::vector<Label> labels;
  std::vector<std::vector<double>> values;  ///< values[i][k] = P_{labels[i]}(t_k)
  std::vector<double> stirap_subspace;
  std::vector<std::vector<double>> by_excitation;  ///< by_excitation[N][k]
  std::vector<double> leakage;                     ///< ||psi||^2 - stirap_subspace

  [[nodiscard]] const std::vector<double>& of(const Label& l) const {
    const auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw std::out_of_range("label " + l.str() + " not tracked");
    return values[static_cast<std::size_t>(it - labels.begin())];
  }
};

inline double population(const Basis& basis, const StateVector& psi, const Label& l) {
  return std::norm(psi(basis.index(l)));
}

inline double stirap_subspace_population(const Basis& basis, const StateVector& psi) {
  double sum = 0.0;
  for (const auto& l : labels::kStirapSubspace) sum += population(basis, psi, l);
  return sum;
}

inline PopulationSeries populations(const Trajectory& traj, const std::vector<Label>& tracked) {
  const Basis& basis = traj.basis;
  for (const auto& l : tracked) {
    if (!basis.contains(l)) throw std::out_of_range("unknown label " + l.str());
  }
  const int max_excitation = basis.n_max() + 2;

  PopulationSeries out;
  out.labels = tracked;
  out.values.assign(tracked.size(), std::vector<double>(traj.size()));
  out.stirap_subspace.resize(traj.size());
  out.leakage.resize(traj.size());
  out.by_excitation.assign(static_cast<std::size_t>(max_excitation + 1),
                           std::vector<double>(traj.size(), 0.0));

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const StateVector& psi = traj.states[k];
    for (std::size_t i = 0; i < tracked.size(); ++i)
      out.values[i][k] = population(basis, psi, tracked[i]);
    for (int j = 0; j < basis.dim(); ++j)
      out.by_excitation[static_cast<std::size_t>(basis.label(j).excitations())][k] +=
          std::norm(psi(j));
    out.stirap_subspace[k] = stirap_subspace_population(basis, psi);
    out.leakage[k] = traj.norms[k] - out.stirap_subspace[k];
  }
  return out;
}

/// Final population of |0eg>, no renormalization.
inline double transfer_efficiency(const Trajectory& traj) {
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  return population(traj.basis, traj.final_state(), labels::k0eg);
}

/// Population outside span{|0gg>, |0ge>, |0eg>, |1gg>}.
struct StirapSubspaceLeakage {};
/// Population of basis states with more than `k` excitations.
struct ExcitationLeakage {
  int k = 1;
};
using LeakageMode = std::variant<StirapSubspaceLeakage, ExcitationLeakage>;

inline double leakage_at(const Basis& basis, const StateVector& psi, const LeakageMode& mode) {
  if (std::holds_alternative<StirapSubspaceLeakage>(mode))
    return psi.squaredNorm() - stirap_subspace_population(basis, psi);
  const int k = std::get<ExcitationLeakage>(mode).k;
  double sum = 0.0;
  for (int j = 0; j < basis.dim(); ++j) {
    if (basis.label(j).excitations() > k) sum += std::norm(psi(j));
  }
  return sum;
}

inline std::vector<double> leakage(const Trajectory& traj, const LeakageMode& mode) {
  std::vector<double> out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    out[k] = leakage_at(traj.basis, traj.states[k], mode);
  return out;
}

inline double peak_leakage(const Trajectory& traj, const LeakageMode& mode) {
  const auto series = leakage(traj, mode);
  return series.empty() ? 0.0 : *std::max_element(series.begin(), series.end());
}

/// <Pi>(t) series.
inline std::vector<double> parity_expectation(const Trajectory& traj) {
  std::vector<double> out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    double sum = 0.0;
    const auto& psi = traj.states[k];
    for (int j = 0; j < traj.basis.dim(); ++j)
      sum += (traj.basis.label(j).excitations() % 2 == 0 ? 1.0 : -1.0) * std::norm(psi(j));
    out[k] = sum;
  }
  return out;
}

}  // namespace stirap
