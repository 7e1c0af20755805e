#pragma once

// Truncated product space |n, s2, s1> of one cavity mode and two qubits,
// plus the elementary operators acting on it.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stirap {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

/// Qubit level. |g> is the +1 eigenstate of sigma_z, |e> the -1 eigenstate.
enum class Level : int { g = 0, e = 1 };

/// Which of the two qubits an operator acts on.
enum class QubitId : int { first = 1, second = 2 };

enum class Pauli { z, plus, minus };

/// Product-state label |n, s2, s1>, written "0ge" for n=0, s2=g, s1=e.
struct Label {
  int n = 0;
  Level s2 = Level::g;
  Level s1 = Level::g;

  friend bool operator==(const Label&, const Label&) = default;

  /// Photons plus excited qubits.
  [[nodiscard]] int excitations() const noexcept {
    return n + static_cast<int>(s2) + static_cast<int>(s1);
  }

  [[nodiscard]] std::string str() const {
    std::string out = std::to_string(n);
    out += s2 == Level::e ? 'e' : 'g';
    out += s1 == Level::e ? 'e' : 'g';
    return out;
  }

  static Label parse(std::string_view text) {
    auto fail = [&] {
      return std::invalid_argument("invalid basis label '" + std::string(text) +
                                   "' (expected e.g. \"0ge\")");
    };
    if (text.size() < 3) throw fail();
    const auto digits = text.substr(0, text.size() - 2);
    Label label;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), label.n);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || label.n < 0) throw fail();
    auto level = [&](char c) {
      if (c == 'g') return Level::g;
      if (c == 'e') return Level::e;
      throw fail();
    };
    label.s2 = level(text[text.size() - 2]);
    label.s1 = level(text[text.size() - 1]);
    return label;
  }
};

/// Canonical ordering: index = 4*n + 2*s2 + s1 with g -> 0, e -> 1.
class Basis {
 public:
  explicit Basis(int n_max) : n_max_(n_max) {
    if (n_max < 1) {
      throw std::invalid_argument("Fock cutoff n_max must be >= 1 (got " +
                                  std::to_string(n_max) + ")");
    }
    states_.reserve(static_cast<std::size_t>(dim()));
    for (int n = 0; n <= n_max_; ++n) {
      for (Level s2 : {Level::g, Level::e}) {
        for (Level s1 : {Level::g, Level::e}) states_.push_back({n, s2, s1});
      }
    }
  }

  [[nodiscard]] int n_max() const noexcept { return n_max_; }
  [[nodiscard]] int dim() const noexcept { return 4 * (n_max_ + 1); }
  [[nodiscard]] const std::vector<Label>& states() const noexcept { return states_; }

  [[nodiscard]] bool contains(const Label& l) const noexcept { return l.n >= 0 && l.n <= n_max_; }

  [[nodiscard]] int index(const Label& l) const {
    if (!contains(l)) {
      throw std::out_of_range("label " + l.str() + " outside basis with n_max=" +
                              std::to_string(n_max_));
    }
    return 4 * l.n + 2 * static_cast<int>(l.s2) + static_cast<int>(l.s1);
  }

  [[nodiscard]] const Label& label(int index) const {
    return states_.at(static_cast<std::size_t>(index));
  }

  [[nodiscard]] StateVector unit(const Label& l) const {
    StateVector v = StateVector::Zero(dim());
    v(index(l)) = 1.0;
    return v;
  }

  friend bool operator==(const Basis& a, const Basis& b) noexcept { return a.n_max_ == b.n_max_; }

 private:
  int n_max_;
  std::vector<Label> states_;
};

inline Basis build_basis(int n_max) { return Basis(n_max); }

/// Dense operator on the truncated space. The hermitian flag is an
/// assertion, checked on construction.
class Operator {
 public:
  static constexpr double kHermitianTol = 1e-12;

  Operator() = default;
  Operator(Matrix m, bool hermitian) : m_(std::move(m)), hermitian_(hermitian) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("operator matrix must be square");
    if (hermitian_ && deviation_from_hermitian() >= kHermitianTol) {
      throw std::logic_error("operator flagged hermitian but ||M - M^dagger||_max = " +
                             std::to_string(deviation_from_hermitian()));
    }
  }

  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] bool hermitian() const noexcept { return hermitian_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }

  [[nodiscard]] cplx operator()(Eigen::Index row, Eigen::Index col) const { return m_(row, col); }

  [[nodiscard]] StateVector apply(const StateVector& psi) const { return m_ * psi; }

  [[nodiscard]] Operator adjoint() const { return {m_.adjoint(), hermitian_}; }

  [[nodiscard]] double deviation_from_hermitian() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  }

 private:
  Matrix m_;
  bool hermitian_ = false;
};

namespace detail {

template <typename F>
Operator diagonal_from(const Basis& basis, F&& eigenvalue) {
  Matrix m = Matrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i) m(i, i) = eigenvalue(basis.label(i));
  return {std::move(m), true};
}

}  // namespace detail

/// a|n,s2,s1> = sqrt(n)|n-1,s2,s1>.
inline Operator annihilation(const Basis& basis) {
  Matrix m = Matrix::Zero(basis.dim(), basis.dim());
  for (int col = 0; col < basis.dim(); ++col) {
    const Label& l = basis.label(col);
    if (l.n == 0) continue;
    m(basis.index({l.n - 1, l.s2, l.s1}), col) = std::sqrt(static_cast<double>(l.n));
  }
  return {std::move(m), false};
}

inline Operator creation(const Basis& basis) { return annihilation(basis).adjoint(); }

/// sigma_z, sigma_+ (g -> e) or sigma_- (e -> g) on one qubit.
inline Operator qubit_op(const Basis& basis, QubitId which, Pauli kind) {
  auto level_of = [which](const Label& l) { return which == QubitId::first ? l.s1 : l.s2; };
  auto with_level = [which](Label l, Level v) {
    (which == QubitId::first ? l.s1 : l.s2) = v;
    return l;
  };

  if (kind == Pauli::z) {
    return detail::diagonal_from(basis, [&](const Label& l) {
      return level_of(l) == Level::g ? cplx{1.0} : cplx{-1.0};
    });
  }

  const Level from = kind == Pauli::plus ? Level::g : Level::e;
  const Level to = kind == Pauli::plus ? Level::e : Level::g;
  Matrix m = Matrix::Zero(basis.dim(), basis.dim());
  for (int col = 0; col < basis.dim(); ++col) {
    const Label& l = basis.label(col);
    if (level_of(l) == from) m(basis.index(with_level(l, to)), col) = 1.0;
  }
  return {std::move(m), false};
}

/// N = a^dagger a + sum_i (1 - sigma_z^i)/2.
inline Operator number_op(const Basis& basis) {
  return detail::diagonal_from(
      basis, [](const Label& l) { return cplx{static_cast<double>(l.excitations())}; });
}

/// Z2 parity exp(i pi N).
inline Operator parity_op(const Basis& basis) {
  return detail::diagonal_from(
      basis, [](const Label& l) { return cplx{l.excitations() % 2 == 0 ? 1.0 : -1.0}; });
}

/// Largest |entry| of [A, B] restricted to rows and columns with n < n_limit.
inline double commutator_max(const Matrix& a, const Matrix& b, const Basis& basis, int n_limit) {
  const Matrix c = a * b - b * a;
  const Eigen::Index keep = 4 * std::min(n_limit, basis.n_max() + 1);
  if (keep <= 0) return 0.0;
  return c.topLeftCorner(keep, keep).cwiseAbs().maxCoeff();
}

}  // namespace stirap
