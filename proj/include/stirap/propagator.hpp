#pragma once

// Time evolution i d(psi)/dt = H(t) psi with an embedded Dormand-Prince
// 5(4) pair. The state is never renormalized: with cavity loss the squared
// norm decays and that decay is the photon loss.

#include "stirap/dynamics.hpp"
#include "stirap/expm.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stirap {

struct IntegratorOptions {
  // Global norm drift runs at roughly 100x rtol over a full protocol;
  // 1e-11 keeps it below 1e-8.
  double rtol = 1e-11;
  double atol = 1e-12;
  double initial_step = 0.0;  ///< 0 picks a step from ||H(t_start)||
  std::int64_t max_steps = 100'000'000;

  friend bool operator==(const IntegratorOptions&, const IntegratorOptions&) = default;
};

struct StepStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  double max_error_estimate = 0.0;  ///< largest scaled error of an accepted step
};

struct Trajectory {
  Basis basis{1};
  std::vector<double> times;
  std::vector<StateVector> states;  ///< unnormalized when kappa > 0
  std::vector<double> norms;        ///< squared norms
  StepStats stats;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] const StateVector& final_state() const { return states.back(); }
};

class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  [[nodiscard]] double time() const noexcept { return t_; }

 private:
  double t_;
};

struct Amplitude {
  Label label;
  cplx value;

  friend bool operator==(const Amplitude&, const Amplitude&) = default;
};

using StateSpec = std::vector<Amplitude>;

/// State vector from (label, amplitude) pairs; repeated labels add up.
inline StateVector make_state(const Basis& basis, const StateSpec& spec) {
  StateVector psi = StateVector::Zero(basis.dim());
  for (const auto& [label, value] : spec) psi(basis.index(label)) += value;
  return psi;
}

/// n >= 2 equally spaced times with exact window endpoints.
inline std::vector<double> uniform_times(const PulsePair& p, std::size_t n) {
  if (n < 2) throw std::invalid_argument("need at least two output times");
  std::vector<double> t(n);
  const double step = p.duration() / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) t[k] = p.t_start + step * static_cast<double>(k);
  t.back() = p.t_end;
  return t;
}

namespace detail {

// Dormand-Prince 5(4) tableau; b5 equals the last stage row (FSAL).
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b5th - b4th
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// -i H(t) psi. The coupling operators have O(dim) entries, so they are
// applied in sparse form.
class SchrodingerRhs {
 public:
  SchrodingerRhs(const Hamiltonian& h, const PulsePair& p)
      : p_(p),
        diag_(h.static_diagonal()),
        coupling1_(h.coupling(QubitId::first).sparseView()),
        coupling2_(h.coupling(QubitId::second).sparseView()) {}

  [[nodiscard]] double spectral_radius() const { return diag_.cwiseAbs().maxCoeff(); }

  void operator()(double t, const StateVector& psi, StateVector& out) const {
    const double g1 = p_.value(QubitId::first, t);
    const double g2 = p_.value(QubitId::second, t);
    out = diag_.cwiseProduct(psi);
    if (g1 != 0.0) out.noalias() += g1 * (coupling1_ * psi);
    if (g2 != 0.0) out.noalias() += g2 * (coupling2_ * psi);
    out *= cplx{0.0, -1.0};
  }

 private:
  const PulsePair& p_;
  StateVector diag_;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> coupling1_;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> coupling2_;
};

}  // namespace detail

/// Integrates from p.t_start and records the state at every requested time.
inline Trajectory propagate(const Hamiltonian& h, const PulsePair& p, const StateVector& psi0,
                            std::span<const double> out_times, const IntegratorOptions& opt = {}) {
  p.validate();
  if (psi0.size() != h.dim()) {
    throw std::invalid_argument("initial state has dimension " + std::to_string(psi0.size()) +
                                ", Hamiltonian has " + std::to_string(h.dim()));
  }
  if (std::abs(psi0.squaredNorm() - 1.0) > 1e-10) {
    throw std::invalid_argument("initial state must be normalized (||psi0||^2 = " +
                                std::to_string(psi0.squaredNorm()) + ")");
  }
  if (out_times.empty()) throw std::invalid_argument("no output times requested");
  const double slack = 1e-12 * std::max(1.0, std::abs(p.t_start) + std::abs(p.t_end));
  for (std::size_t k = 0; k < out_times.size(); ++k) {
    if (out_times[k] < p.t_start - slack || out_times[k] > p.t_end + slack)
      throw std::invalid_argument("output time outside the protocol window");
    if (k > 0 && !(out_times[k] > out_times[k - 1]))
      throw std::invalid_argument("output times must be strictly increasing");
  }
  if (!(opt.rtol > 0.0) || !(opt.atol >= 0.0))
    throw std::invalid_argument("integrator tolerances must be positive");

  using D = detail::Dopri5;
  const detail::SchrodingerRhs f(h, p);
  const auto n = h.dim();

  Trajectory traj;
  traj.basis = h.basis();
  traj.times.assign(out_times.begin(), out_times.end());
  traj.states.reserve(out_times.size());
  traj.norms.reserve(out_times.size());

  StateVector y = psi0;
  StateVector y_new(n), y_stage(n), err(n);
  StateVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  double t = p.t_start;
  f(t, y, k1);

  double h_next = opt.initial_step;
  if (h_next <= 0.0) {
    const double scale = f.spectral_radius() +
                         2.0 * p.g_peak * std::sqrt(static_cast<double>(h.basis().n_max() + 1));
    h_next = std::min(0.01 / std::max(scale, 1e-3), 0.1 * p.duration());
  }

  constexpr double safety = 0.9;
  constexpr double beta = 0.04;
  constexpr double expo = 0.2 - 0.75 * beta;
  constexpr double fac_min = 0.2, fac_max = 10.0;
  double err_old = 1e-4;
  std::int64_t steps = 0;

  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << why << " at t=" << t << " (accepted " << traj.stats.accepted << ", rejected "
        << traj.stats.rejected << " steps, last step " << h_next << ")";
    throw PropagationError(msg.str(), t);
  };

  for (double target : out_times) {
    while (t < target) {
      if (++steps > opt.max_steps) fail("step budget exhausted");
      const double remaining = target - t;
      const bool landing = h_next >= remaining;
      const double dt = landing ? remaining : h_next;
      if (dt < 1e-14 * std::max(1.0, std::abs(t)) && !landing) fail("step size underflow");

      y_stage = y + dt * D::a21 * k1;
      f(t + D::c2 * dt, y_stage, k2);
      y_stage = y + dt * (D::a31 * k1 + D::a32 * k2);
      f(t + D::c3 * dt, y_stage, k3);
      y_stage = y + dt * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3);
      f(t + D::c4 * dt, y_stage, k4);
      y_stage = y + dt * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4);
      f(t + D::c5 * dt, y_stage, k5);
      y_stage = y + dt * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5);
      const double t_new = landing ? target : t + dt;
      f(t_new, y_stage, k6);
      y_new = y + dt * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
      f(t_new, y_new, k7);
      err = dt * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);

      if (!y_new.allFinite()) fail("non-finite state");

      const double scale = opt.atol + opt.rtol * std::max(y.norm(), y_new.norm());
      const double e = err.norm() / scale;
      const double fac_raw = std::pow(std::max(e, 1e-30), expo);

      if (e <= 1.0) {
        const double fac = std::clamp(fac_raw / std::pow(err_old, beta) / safety,
                                      1.0 / fac_max, 1.0 / fac_min);
        err_old = std::max(e, 1e-4);
        traj.stats.max_error_estimate = std::max(traj.stats.max_error_estimate, e);
        ++traj.stats.accepted;
        t = t_new;
        y.swap(y_new);
        k1.swap(k7);
        // A landing step is usually shorter than the controller wants;
        // keep the unclamped proposal unless the landing step failed to grow.
        const double proposal = dt / fac;
        h_next = landing ? std::max(h_next, proposal) : proposal;
      } else {
        ++traj.stats.rejected;
        h_next = dt / std::min(1.0 / fac_min, fac_raw / safety);
      }
    }
    traj.states.push_back(y);
    traj.norms.push_back(y.squaredNorm());
  }
  return traj;
}

/// Convenience overload; the cutoff follows from the size of psi0.
inline Trajectory propagate(const SystemParams& params, const PulsePair& p,
                            const StateVector& psi0, std::span<const double> out_times,
                            const IntegratorOptions& opt = {}) {
  if (psi0.size() < 8 || psi0.size() % 4 != 0)
    throw std::invalid_argument("state dimension must be 4*(n_max+1) with n_max >= 1");
  const Hamiltonian h(Basis(static_cast<int>(psi0.size() / 4) - 1), params);
  return propagate(h, p, psi0, out_times, opt);
}

/// Piecewise-constant midpoint evolution: n_slices dense exponentials
/// exp(-i H(t_mid) dt) across the window. Second order in dt.
inline StateVector propagate_oracle(const Hamiltonian& h, const PulsePair& p,
                                    const StateVector& psi0, int n_slices) {
  if (n_slices < 1) throw std::invalid_argument("n_slices must be >= 1");
  if (psi0.size() != h.dim()) throw std::invalid_argument("initial state dimension mismatch");
  const double dt = p.duration() / n_slices;
  StateVector psi = psi0;
  Matrix hm;
  for (int k = 0; k < n_slices; ++k) {
    const double t_mid = p.t_start + (k + 0.5) * dt;
    h.assemble(p, t_mid, hm);
    const Matrix u = expm(Matrix(cplx{0.0, -dt} * hm));
    psi = u * psi;
  }
  return psi;
}

struct CutoffLevel {
  int n_max;
  double value;
};

class CutoffNotConverged : public std::runtime_error {
 public:
  CutoffNotConverged(const std::string& what, std::vector<CutoffLevel> ladder)
      : std::runtime_error(what), ladder_(std::move(ladder)) {}
  [[nodiscard]] const std::vector<CutoffLevel>& ladder() const noexcept { return ladder_; }

 private:
  std::vector<CutoffLevel> ladder_;
};

struct CutoffOptions {
  int start_nmax = 4;
  double rel_tol = 1e-6;
  int ladder_step = 4;
  int max_nmax = 32;
  std::size_t output_points = 2;
  IntegratorOptions integrator{};
};

struct CutoffResult {
  int n_max;     ///< smallest ladder level agreeing with the next one
  double value;  ///< observable at n_max
  std::vector<CutoffLevel> ladder;
};

using TrajectoryObservable = std::function<double(const Trajectory&)>;

/// Walks n_max = start, start+4, ... and stops at the first level whose
/// observable agrees with the next level to rel_tol.
inline CutoffResult converge_cutoff(const SystemParams& params, const PulsePair& p,
                                    const StateSpec& psi0, const TrajectoryObservable& observable,
                                    const CutoffOptions& opt = {}) {
  if (opt.start_nmax < 1) throw std::invalid_argument("start_nmax must be >= 1");
  if (opt.ladder_step < 1) throw std::invalid_argument("ladder step must be >= 1");

  auto evaluate = [&](int n_max) {
    const Hamiltonian h(Basis(n_max), params);
    const auto times = uniform_times(p, std::max<std::size_t>(opt.output_points, 2));
    return observable(propagate(h, p, make_state(h.basis(), psi0), times, opt.integrator));
  };

  std::vector<CutoffLevel> ladder;
  ladder.push_back({opt.start_nmax, evaluate(opt.start_nmax)});
  for (int n = opt.start_nmax + opt.ladder_step; n <= opt.max_nmax; n += opt.ladder_step) {
    ladder.push_back({n, evaluate(n)});
    const auto& prev = ladder[ladder.size() - 2];
    const auto& cur = ladder.back();
    const double change = std::abs(cur.value - prev.value);
    const double ref = std::max(std::abs(cur.value), std::abs(prev.value));
    if (change == 0.0 || change < opt.rel_tol * ref) return {prev.n_max, prev.value, ladder};
  }
  std::ostringstream msg;
  msg << "observable did not converge by n_max=" << opt.max_nmax << ":";
  for (const auto& l : ladder) msg << " (" << l.n_max << ", " << l.value << ")";
  throw CutoffNotConverged(msg.str(), std::move(ladder));
}

}  // namespace stirap
