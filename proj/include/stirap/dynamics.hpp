#pragma once

// Pulse schedules and the time-dependent two-qubit Rabi Hamiltonian
//
//   H(t) = (w_c - i k) a^dag a - 1/2 sum_i eps_i sz_i
//        + sum_i g_i(t) (a^dag s-_i + a s+_i)                 rotating
//        + sum_i g_i(t) (a s-_i + a^dag s+_i)   [full Rabi]   counterrotating
//
// All quantities are in units of the cavity frequency.

#include "stirap/hilbert.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace stirap {

enum class Variant { rwa, full_rabi };

inline std::string to_string(Variant v) { return v == Variant::rwa ? "rwa" : "full_rabi"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "rwa" || s == "RWA") return Variant::rwa;
  if (s == "full_rabi" || s == "FullRabi") return Variant::full_rabi;
  throw std::invalid_argument("unknown model variant '" + s + "' (expected rwa or full_rabi)");
}

struct SystemParams {
  double omega_c = 1.0;
  double delta_p = 0.0;  ///< single-photon detuning eps1 - w_c
  double delta = 0.0;    ///< two-photon detuning eps1 - eps2
  double kappa = 0.0;
  Variant variant = Variant::full_rabi;
  /// Use -i(kappa/2) a^dag a instead of the literal w_c -> w_c - i kappa.
  bool loss_halving = false;

  [[nodiscard]] double loss_rate() const noexcept { return loss_halving ? 0.5 * kappa : kappa; }

  void validate() const {
    if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
    if (!std::isfinite(omega_c) || !std::isfinite(delta_p) || !std::isfinite(delta))
      throw std::invalid_argument("system frequencies must be finite");
  }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Qubit splittings (eps1, eps2) from the detunings.
inline std::pair<double, double> energy_splittings(const SystemParams& p) {
  const double eps1 = p.omega_c + p.delta_p;
  return {eps1, eps1 - p.delta};
}

/// Gaussian coupling envelopes. Qubit 2 peaks at -tau, qubit 1 at +tau, so
/// for tau > 0 the qubit-2 pulse comes first (counterintuitive order).
struct PulsePair {
  double g_peak = 0.0;
  double T = 1.0;
  double tau = 0.7;
  double t_start = -0.7 - 3.0;
  double t_end = 0.7 + 3.0;

  static constexpr double kDefaultMargin = 3.0;  // in units of T
  static constexpr double kMinMargin = 2.0;

  /// Window (-tau - margin*T, tau + margin*T).
  static PulsePair with_window(double g_peak, double T, double tau,
                               double margin = kDefaultMargin) {
    return {g_peak, T, tau, -tau - margin * T, tau + margin * T};
  }

  [[nodiscard]] double value(QubitId which, double t) const noexcept {
    const double center = which == QubitId::first ? tau : -tau;
    const double x = (t - center) / T;
    return g_peak * std::exp(-x * x);
  }

  [[nodiscard]] double duration() const noexcept { return t_end - t_start; }

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("pulse width T must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("pulse delay tau must be > 0");
    if (!(g_peak >= 0.0)) throw std::invalid_argument("g_peak must be >= 0");
    if (!(t_end > t_start)) throw std::invalid_argument("protocol window must have t_end > t_start");
  }

  /// Set when the window leaves less than 2T of margin around the pulse centers.
  [[nodiscard]] std::optional<std::string> window_warning() const {
    if (t_start <= -tau - kMinMargin * T && t_end >= tau + kMinMargin * T) return std::nullopt;
    return "protocol window [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
           "] leaves less than 2T margin around the pulse centers; envelopes are not "
           "negligible at the edges";
  }

  friend bool operator==(const PulsePair&, const PulsePair&) = default;
};

inline double pulse_value(const PulsePair& p, QubitId which, double t) { return p.value(which, t); }

/// Cached operator parts of H(t); evaluation is a few scaled additions.
class Hamiltonian {
 public:
  Hamiltonian(const Basis& basis, const SystemParams& params) : basis_(basis), params_(params) {
    params_.validate();
    const auto [eps1, eps2] = energy_splittings(params_);
    const Matrix a = annihilation(basis_).matrix();
    const Matrix ad = a.adjoint();
    const Matrix n_photon = ad * a;

    static_ = cplx{params_.omega_c, -params_.loss_rate()} * n_photon;
    static_ -= 0.5 * eps1 * qubit_op(basis_, QubitId::first, Pauli::z).matrix();
    static_ -= 0.5 * eps2 * qubit_op(basis_, QubitId::second, Pauli::z).matrix();

    static_diag_ = static_.diagonal();

    for (QubitId q : {QubitId::first, QubitId::second}) {
      const Matrix sp = qubit_op(basis_, q, Pauli::plus).matrix();
      const Matrix sm = qubit_op(basis_, q, Pauli::minus).matrix();
      rotating_[slot(q)] = ad * sm + a * sp;
      counter_[slot(q)] = a * sm + ad * sp;
      coupling_[slot(q)] = rotating_[slot(q)];
      if (params_.variant == Variant::full_rabi) coupling_[slot(q)] += counter_[slot(q)];
    }
  }

  [[nodiscard]] const Basis& basis() const noexcept { return basis_; }
  [[nodiscard]] const SystemParams& params() const noexcept { return params_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return basis_.dim(); }
  [[nodiscard]] bool hermitian() const noexcept { return params_.loss_rate() == 0.0; }

  [[nodiscard]] const Matrix& static_part() const noexcept { return static_; }
  /// The static part is diagonal in the product basis.
  [[nodiscard]] const StateVector& static_diagonal() const noexcept { return static_diag_; }
  /// g_i-weighted coupling operator for the configured variant.
  [[nodiscard]] const Matrix& coupling(QubitId q) const noexcept { return coupling_[slot(q)]; }
  [[nodiscard]] const Matrix& rotating(QubitId q) const noexcept { return rotating_[slot(q)]; }
  [[nodiscard]] const Matrix& counterrotating(QubitId q) const noexcept {
    return counter_[slot(q)];
  }

  void assemble(const PulsePair& p, double t, Matrix& out) const {
    out = static_;
    out.noalias() += p.value(QubitId::first, t) * coupling_[0];
    out.noalias() += p.value(QubitId::second, t) * coupling_[1];
  }

  [[nodiscard]] Operator at(const PulsePair& p, double t) const {
    Matrix h;
    assemble(p, t, h);
    return {std::move(h), hermitian()};
  }

 private:
  static constexpr std::size_t slot(QubitId q) noexcept { return q == QubitId::first ? 0 : 1; }

  Basis basis_;
  SystemParams params_;
  Matrix static_;
  StateVector static_diag_;
  std::array<Matrix, 2> coupling_;
  std::array<Matrix, 2> rotating_;
  std::array<Matrix, 2> counter_;
};

inline Operator assemble_hamiltonian(const SystemParams& params, const PulsePair& p, double t,
                                     const Basis& basis) {
  return Hamiltonian(basis, params).at(p, t);
}

inline Operator assemble_hamiltonian(const Hamiltonian& h, const PulsePair& p, double t,
                                     const Basis& basis) {
  if (basis.dim() != h.dim()) {
    throw std::invalid_argument("basis dimension " + std::to_string(basis.dim()) +
                                " does not match Hamiltonian dimension " +
                                std::to_string(h.dim()));
  }
  return h.at(p, t);
}

}  // namespace stirap
