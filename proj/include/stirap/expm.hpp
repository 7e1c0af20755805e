#pragma once

// Dense matrix exponential by scaling and squaring with diagonal Pade
// approximants of degree 3, 5, 7, 9 or 13, selected from the 1-norm
// (Higham, SIAM J. Matrix Anal. Appl. 26 (2005) 1179).

#include <Eigen/Dense>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace stirap {

namespace detail {

template <typename Mat>
double one_norm(const Mat& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Odd part U and even part V of the degree-m approximant: r_m = (V - U)^-1 (V + U).
template <typename Mat, std::size_t N>
void pade_low(const Mat& a, const std::array<double, N>& b, Mat& u, Mat& v) {
  const auto n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  Mat odd = b[1] * id;
  Mat even = b[0] * id;
  Mat power = id;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    odd += b[k + 1] * power;
  }
  u.noalias() = a * odd;
  v = even;
}

template <typename Mat>
void pade13(const Mat& a, Mat& u, Mat& v) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const auto n = a.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  Mat tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  Mat inner = a6 * tmp;
  inner += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  u.noalias() = a * inner;
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * tmp;
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace detail

/// exp(A) for a square dense matrix.
template <typename Mat>
Mat expm(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
  const auto n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) throw std::domain_error("expm: non-finite matrix entries");

  static constexpr std::array<double, 4> b3 = {120.0, 60.0, 12.0, 1.0};
  static constexpr std::array<double, 6> b5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr std::array<double, 8> b7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                               25200.0,    1512.0,    56.0,      1.0};
  static constexpr std::array<double, 10> b9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                302702400.0,   30270240.0,   2162160.0,
                                                110880.0,      3960.0,       90.0,
                                                1.0};
  static constexpr std::array<double, 5> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                  9.504178996162932e-1, 2.097847961257068e0,
                                                  5.371920351148152e0};

  const double norm = detail::one_norm(a);
  Mat u(n, n), v(n, n);
  int squarings = 0;
  if (norm <= theta[0]) {
    detail::pade_low(a, b3, u, v);
  } else if (norm <= theta[1]) {
    detail::pade_low(a, b5, u, v);
  } else if (norm <= theta[2]) {
    detail::pade_low(a, b7, u, v);
  } else if (norm <= theta[3]) {
    detail::pade_low(a, b9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta[4]))));
    const Mat scaled = a * std::ldexp(1.0, -squarings);
    detail::pade13(scaled, u, v);
  }

  Mat result = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

}  // namespace stirap
