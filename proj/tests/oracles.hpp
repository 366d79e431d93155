#pragma once

// Independent reference computations and random generators for the tests.
// Nothing here calls into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvcert/gaussian.hpp"

namespace oracle {

using cvcert::Matrix;
using cvcert::Vector;

struct Eigen2 {
  Vector values;   // ascending
  Matrix vectors;  // columns
};

/// Cyclic Jacobi rotations; slow but simple and accurate to roundoff.
inline Eigen2 jacobi(Matrix a) {
  const auto n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) < a(y, y); });
  Eigen2 out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline double min_eig(const Matrix& a) { return jacobi(a).values(0); }

/// The 4n x 4n real form of gamma + (i/2) J >= 0, written out entry by entry
/// with ordering (x, x', p, p').
inline Matrix real_form(const Matrix& xx, const Matrix& xp, const Matrix& pp) {
  const auto n = xx.rows();
  Matrix m = Matrix::Zero(4 * n, 4 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = m(n + i, n + j) = xx(i, j);
      m(2 * n + i, 2 * n + j) = m(3 * n + i, 3 * n + j) = pp(i, j);
      m(i, 2 * n + j) = m(n + i, 3 * n + j) = xp(i, j);
      m(2 * n + j, i) = m(3 * n + j, n + i) = xp(i, j);
    }
    m(i, 3 * n + i) = m(3 * n + i, i) = -0.5;
    m(n + i, 2 * n + i) = m(2 * n + i, n + i) = 0.5;
  }
  return m;
}

/// Square root of a PSD matrix by the Jacobi oracle.
inline Matrix psd_sqrt(const Matrix& a) {
  const Eigen2 e = jacobi(a);
  return e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * e.vectors.transpose();
}

// ------------------------------------------------------------ generators

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vector vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Matrix matrix(int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }
  /// Well-conditioned random invertible matrix.
  Matrix invertible(int n) { return Matrix::Identity(n, n) + 0.3 * matrix(n, n); }
  Matrix psd(int n, double scale) {
    const Matrix a = matrix(n, n);
    return scale * a * a.transpose();
  }

  /// Random physical covariance matrix with zero xp block:
  /// (1/2) diag(A A^T, A^-T A^-1) plus PSD noise in each block.
  cvcert::CovarianceMatrix physical_block_diagonal(int n, double noise = 0.05) {
    const Matrix a = invertible(n);
    const Matrix ainv = a.inverse();
    Matrix xx = 0.5 * a * a.transpose() + psd(n, noise);
    Matrix pp = 0.5 * ainv.transpose() * ainv + psd(n, noise);
    return cvcert::CovarianceMatrix::block_diagonal(0.5 * (xx + xx.transpose()), 0.5 * (pp + pp.transpose()));
  }

  /// Random physical covariance matrix with xp correlations: (1/2) S S^T for a
  /// product of random symplectic maps, plus PSD noise.
  cvcert::CovarianceMatrix physical_general(int n, double noise = 0.05) {
    Matrix s = Matrix::Identity(2 * n, 2 * n);
    for (int k = 0; k < 2; ++k) {
      // Shear [[I, 0], [B, I]] with symmetric B is symplectic.
      Matrix b = 0.3 * matrix(n, n);
      b = 0.5 * (b + b.transpose()).eval();
      Matrix shear = Matrix::Identity(2 * n, 2 * n);
      shear.bottomLeftCorner(n, n) = b;
      // diag(A, A^-T) is symplectic.
      const Matrix a = invertible(n);
      Matrix scale = Matrix::Zero(2 * n, 2 * n);
      scale.topLeftCorner(n, n) = a;
      scale.bottomRightCorner(n, n) = a.inverse().transpose();
      s = shear * scale * s;
    }
    Matrix g = 0.5 * s * s.transpose() + psd(2 * n, noise);
    g = 0.5 * (g + g.transpose()).eval();
    return cvcert::CovarianceMatrix::from_full(g);
  }

  /// Separable state: direct sum of physical states on the two groups of
  /// a bipartition, then embedded back in mode order.
  cvcert::CovarianceMatrix separable(const cvcert::Bipartition& b) {
    const int n = b.modes();
    Matrix xx = Matrix::Zero(n, n), pp = Matrix::Zero(n, n);
    for (const auto* group : {&b.first(), &b.second()}) {
      const int k = static_cast<int>(group->size());
      const auto part = physical_block_diagonal(k, 0.05);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          xx((*group)[i] - 1, (*group)[j] - 1) = part.xx()(i, j);
          pp((*group)[i] - 1, (*group)[j] - 1) = part.pp()(i, j);
        }
    }
    return cvcert::CovarianceMatrix::block_diagonal(xx, pp);
  }

  cvcert::Bipartition bipartition(int n) {
    std::vector<int> side;
    while (side.empty() || static_cast<int>(side.size()) == n) {
      side.clear();
      for (int m = 1; m <= n; ++m)
        if (uniform(0, 1) < 0.5) side.push_back(m);
    }
    return cvcert::Bipartition(n, side);
  }

  cvcert::SigmaMatrix sigma(int n, double lo = 0.002, double hi = 0.05) {
    Matrix sxx(n, n), spp(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        sxx(i, j) = sxx(j, i) = uniform(lo, hi);
        spp(i, j) = spp(j, i) = uniform(lo, hi);
      }
    return cvcert::SigmaMatrix(sxx, spp);
  }

 private:
  std::mt19937_64 rng_;
};

/// Two-mode squeezed vacuum with squeezing r.
inline cvcert::CovarianceMatrix two_mode_squeezed(double r) {
  const double c = std::cosh(2 * r) / 2, s = std::sinh(2 * r) / 2;
  Matrix xx(2, 2), pp(2, 2);
  xx << c, s, s, c;
  pp << c, -s, -s, c;
  return cvcert::CovarianceMatrix::block_diagonal(xx, pp);
}

}  // namespace oracle
