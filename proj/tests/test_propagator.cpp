#include "stirap/observables.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stirap;

namespace {

PulsePair iso_gt_pulses(double g, double A = 10.0) {
  const double T = A / g;
  return PulsePair::with_window(g, T, 0.7 * T);
}

SystemParams params(Variant v, double kappa = 0.0, double delta_p = 0.0, double delta = 0.0) {
  SystemParams sp;
  sp.variant = v;
  sp.kappa = kappa;
  sp.delta_p = delta_p;
  sp.delta = delta;
  return sp;
}

Trajectory run(const Hamiltonian& h, const PulsePair& p, const StateVector& psi0,
               std::size_t points = 201, const IntegratorOptions& opt = {}) {
  return propagate(h, p, psi0, uniform_times(p, points), opt);
}

double max_population_diff(const StateVector& a, const StateVector& b) {
  return (a.cwiseAbs2() - b.cwiseAbs2()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(UniformTimes, CoversWindow) {
  const PulsePair p = iso_gt_pulses(0.2);
  const auto t = uniform_times(p, 11);
  EXPECT_EQ(t.front(), p.t_start);
  EXPECT_EQ(t.back(), p.t_end);
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t[k], t[k - 1]);
  EXPECT_THROW(uniform_times(p, 1), std::invalid_argument);
}

TEST(Propagate, NoCouplingKeepsPopulations) {
  const Hamiltonian h(Basis(3), params(Variant::full_rabi, 0.0, 0.1, 0.03));
  const PulsePair p = iso_gt_pulses(0.2);
  PulsePair off = p;
  off.g_peak = 0.0;
  StateVector psi0 = make_state(h.basis(), {{Label::parse("0ge"), cplx{0.6, 0.0}},
                                            {Label::parse("1gg"), cplx{0.0, 0.8}}});
  const Trajectory tr = run(h, off, psi0);
  for (const auto& psi : tr.states) EXPECT_LT(max_population_diff(psi, psi0), 1e-8);
  // With constant H one exponential is exact.
  const StateVector exact = propagate_oracle(h, off, psi0, 1);
  EXPECT_LT((tr.final_state() - exact).norm(), 1e-7);
}

TEST(Propagate, RwaLeavesGroundStateUntouched) {
  const Hamiltonian h(Basis(4), params(Variant::rwa));
  for (double g : {0.05, 0.3, 1.0}) {
    const Trajectory tr = run(h, iso_gt_pulses(g), h.basis().unit(labels::k0gg));
    for (const auto& psi : tr.states) EXPECT_NEAR(population(h.basis(), psi, labels::k0gg), 1.0, 1e-8);
  }
}

TEST(Propagate, PhotonDecayMatchesClosedForm) {
  // |1gg> under H = (1 - i kappa) a^dag a - ... with no coupling picks up
  // exp(-kappa t), so ||psi||^2 = exp(-2 kappa dt).
  const double kappa = 0.005;
  const Hamiltonian h(Basis(3), params(Variant::full_rabi, kappa));
  PulsePair p = iso_gt_pulses(0.15);
  p.g_peak = 0.0;
  const Trajectory tr = run(h, p, h.basis().unit(labels::k1gg));
  for (std::size_t k = 0; k < tr.size(); ++k)
    EXPECT_NEAR(tr.norms[k], std::exp(-2.0 * kappa * (tr.times[k] - p.t_start)), 1e-8);
  EXPECT_NEAR(tr.norms.back(), std::exp(-2.0 * kappa * p.duration()), 1e-8);
}

TEST(Propagate, HalvedLossDecaysAtKappa) {
  SystemParams sp = params(Variant::rwa, 0.005);
  sp.loss_halving = true;
  const Hamiltonian h(Basis(2), sp);
  PulsePair p = iso_gt_pulses(0.15);
  p.g_peak = 0.0;
  const Trajectory tr = run(h, p, h.basis().unit(labels::k1gg), 3);
  EXPECT_NEAR(tr.norms.back(), std::exp(-0.005 * p.duration()), 1e-8);
}

TEST(Propagate, NormConservedWithoutLoss) {
  for (Variant v : {Variant::rwa, Variant::full_rabi}) {
    const Hamiltonian h(Basis(8), params(v, 0.0, 0.05, -0.02));
    const Trajectory tr = run(h, iso_gt_pulses(0.4), h.basis().unit(labels::k0ge), 401);
    for (double n : tr.norms) EXPECT_LT(std::abs(n - 1.0), 1e-8);
  }
}

TEST(Propagate, NormNonIncreasingWithLoss) {
  const Hamiltonian h(Basis(8), params(Variant::full_rabi, 0.005));
  const Trajectory tr = run(h, iso_gt_pulses(0.3), h.basis().unit(labels::k0ge), 401);
  for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_LE(tr.norms[k], tr.norms[k - 1] + 1e-10);
  EXPECT_LT(tr.norms.back(), 1.0);
}

TEST(Propagate, ParityConservedInFullRabi) {
  const Hamiltonian h(Basis(11), params(Variant::full_rabi));
  const Trajectory tr = run(h, iso_gt_pulses(0.5), h.basis().unit(labels::k0ge), 401);
  const auto parity = parity_expectation(tr);
  for (double p : parity) EXPECT_LT(std::abs(p - parity.front()), 1e-7);
}

TEST(Propagate, ExcitationNumberConservedInRwa) {
  const Hamiltonian h(Basis(6), params(Variant::rwa, 0.0, 0.02));
  const StateVector psi0 = make_state(
      h.basis(), {{labels::k0gg, std::sqrt(0.2)}, {labels::k0ge, cplx{0.0, std::sqrt(0.8)}}});
  const Trajectory tr = run(h, iso_gt_pulses(0.6), psi0);
  for (const auto& l : leakage(tr, ExcitationLeakage{1})) EXPECT_LT(l, 1e-8);
}

TEST(Propagate, RwaDependsOnlyOnGT) {
  const Hamiltonian h(Basis(4), params(Variant::rwa));
  const StateVector psi0 = h.basis().unit(labels::k0ge);
  const double g = 0.05;
  const Trajectory base = run(h, iso_gt_pulses(g), psi0, 2);
  for (double c : {2.0, 5.0}) {
    const Trajectory scaled = run(h, iso_gt_pulses(c * g), psi0, 2);
    EXPECT_LT(max_population_diff(base.final_state(), scaled.final_state()), 1e-4) << c;
  }
}

TEST(Propagate, StepStatsArePopulated) {
  const Hamiltonian h(Basis(4), params(Variant::full_rabi));
  const Trajectory tr = run(h, iso_gt_pulses(0.3), h.basis().unit(labels::k0ge), 3);
  EXPECT_GT(tr.stats.accepted, 10);
  EXPECT_LE(tr.stats.max_error_estimate, 1.0);
  EXPECT_GT(tr.stats.max_error_estimate, 0.0);
}

TEST(Propagate, RejectsBadInput) {
  const Hamiltonian h(Basis(2), params(Variant::rwa));
  const PulsePair p = iso_gt_pulses(0.3);
  const std::vector<double> ok{p.t_start, p.t_end};
  EXPECT_THROW(propagate(h, p, StateVector(2.0 * h.basis().unit(labels::k0ge)), ok),
               std::invalid_argument);
  EXPECT_THROW(propagate(h, p, Basis(3).unit(labels::k0ge), ok), std::invalid_argument);
  const std::vector<double> outside{p.t_start, p.t_end + 1.0};
  EXPECT_THROW(propagate(h, p, h.basis().unit(labels::k0ge), outside), std::invalid_argument);
  const std::vector<double> backwards{0.0, -1.0};
  EXPECT_THROW(propagate(h, p, h.basis().unit(labels::k0ge), backwards), std::invalid_argument);
}

TEST(Propagate, ReportsFailureTime) {
  const Hamiltonian h(Basis(2), params(Variant::full_rabi));
  const PulsePair p = iso_gt_pulses(0.3);
  IntegratorOptions opt;
  opt.max_steps = 5;
  try {
    (void)run(h, p, h.basis().unit(labels::k0ge), 2, opt);
    FAIL() << "expected PropagationError";
  } catch (const PropagationError& e) {
    EXPECT_GT(e.time(), p.t_start);
    EXPECT_LT(e.time(), p.t_end);
  }
}

TEST(Propagate, DetectsNonFiniteState) {
  SystemParams sp = params(Variant::rwa);
  sp.omega_c = 1e300;
  const Hamiltonian h(Basis(2), sp);
  PulsePair p = iso_gt_pulses(0.3);
  IntegratorOptions opt;
  opt.initial_step = 1.0;
  opt.max_steps = 1000;
  // |1gg> sits at zero energy; |0ee> carries the full 1e300.
  EXPECT_THROW((void)run(h, p, h.basis().unit(Label::parse("0ee")), 2, opt), PropagationError);
}

TEST(PropagateOracle, SecondOrderConvergence) {
  const Hamiltonian h(Basis(4), params(Variant::full_rabi, 0.005));
  const PulsePair p = iso_gt_pulses(0.3, 5.0);
  const StateVector psi0 = h.basis().unit(labels::k0ge);
  IntegratorOptions tight;
  tight.rtol = 1e-12;
  tight.atol = 1e-15;
  const StateVector ref = run(h, p, psi0, 2, tight).final_state();
  const double e1 = (propagate_oracle(h, p, psi0, 200) - ref).norm();
  const double e2 = (propagate_oracle(h, p, psi0, 400) - ref).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(PropagateOracle, AgreesWithIntegrator) {
  const Hamiltonian h(Basis(8), params(Variant::full_rabi, 0.005));
  const PulsePair p = iso_gt_pulses(0.15);
  const StateVector psi0 = make_state(
      h.basis(), {{labels::k0gg, std::sqrt(0.2)}, {labels::k0ge, cplx{0.0, std::sqrt(0.8)}}});
  const StateVector oracle = propagate_oracle(h, p, psi0, 4096);
  EXPECT_LT(max_population_diff(run(h, p, psi0, 2).final_state(), oracle), 1e-6);
}

TEST(PropagateOracle, RejectsZeroSlices) {
  const Hamiltonian h(Basis(2), SystemParams{});
  EXPECT_THROW(propagate_oracle(h, iso_gt_pulses(0.1), h.basis().unit(labels::k0ge), 0),
               std::invalid_argument);
}

namespace {

const TrajectoryObservable kEfficiency = [](const Trajectory& t) { return transfer_efficiency(t); };

}  // namespace

TEST(ConvergeCutoff, RwaConvergesAtFirstStep) {
  CutoffOptions opt;
  opt.start_nmax = 2;
  const auto res = converge_cutoff(params(Variant::rwa), iso_gt_pulses(0.3),
                                   {{labels::k0ge, 1.0}}, kEfficiency, opt);
  EXPECT_EQ(res.n_max, 2);
  EXPECT_EQ(res.ladder.size(), 2u);
}

TEST(ConvergeCutoff, NoCouplingConvergesImmediately) {
  PulsePair p = iso_gt_pulses(0.3);
  p.g_peak = 0.0;
  for (int start : {1, 5}) {
    CutoffOptions opt;
    opt.start_nmax = start;
    const auto res =
        converge_cutoff(params(Variant::full_rabi), p, {{labels::k0ge, 1.0}}, kEfficiency, opt);
    EXPECT_EQ(res.n_max, start);
    EXPECT_EQ(res.value, 0.0);
  }
}

TEST(ConvergeCutoff, StrongerCouplingNeedsLargerCutoff) {
  // Fixture from the ladder 1, 5, 9, ... at rel_tol 1e-6: g=0.15 settles at
  // n_max=5, g=0.5 at n_max=9.
  CutoffOptions opt;
  opt.start_nmax = 1;
  const auto weak = converge_cutoff(params(Variant::full_rabi), iso_gt_pulses(0.15),
                                    {{labels::k0ge, 1.0}}, kEfficiency, opt);
  const auto strong = converge_cutoff(params(Variant::full_rabi), iso_gt_pulses(0.5),
                                      {{labels::k0ge, 1.0}}, kEfficiency, opt);
  EXPECT_EQ(weak.n_max, 5);
  EXPECT_EQ(strong.n_max, 9);
  EXPECT_GT(strong.n_max, weak.n_max);
}

TEST(ConvergeCutoff, ReportsLadderOnFailure) {
  CutoffOptions opt;
  opt.start_nmax = 1;
  opt.max_nmax = 6;
  opt.ladder_step = 1;
  opt.rel_tol = 1e-15;
  try {
    (void)converge_cutoff(params(Variant::full_rabi), iso_gt_pulses(0.8),
                          {{labels::k0ge, 1.0}}, kEfficiency, opt);
    FAIL() << "expected CutoffNotConverged";
  } catch (const CutoffNotConverged& e) {
    ASSERT_EQ(e.ladder().size(), 6u);
    EXPECT_EQ(e.ladder().front().n_max, 1);
    EXPECT_EQ(e.ladder().back().n_max, 6);
  }
}
