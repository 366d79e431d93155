#include "cvcert/gaussian.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "cvcert/errors.hpp"

namespace cvcert {

namespace {

void require_square(const Matrix& m, int n, std::string_view what) {
  if (m.rows() != n || m.cols() != n) {
    std::ostringstream os;
    os << what << ": expected " << n << "x" << n << ", got " << m.rows() << "x" << m.cols();
    throw InvalidArgument(os.str());
  }
}

double symmetrize(Matrix& m) {
  const double defect = (m - m.transpose()).cwiseAbs().maxCoeff();
  m = 0.5 * (m + m.transpose()).eval();
  return defect;
}

PhysicalityReport lowest_eigenpair(const Matrix& test, double tol) {
  const SymmetricEigen eig = symmetric_eigen(test);
  PhysicalityReport report;
  report.min_eig = eig.values(0);
  report.eigvec = eig.vectors.col(0);
  report.is_physical = report.min_eig >= -tol;
  return report;
}

}  // namespace

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw InvalidData(std::string(what) + ": non-finite entry");
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidData("symmetric eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// CovarianceMatrix

CovarianceMatrix::CovarianceMatrix(Matrix xx, Matrix xp, Matrix pp)
    : xx_(std::move(xx)), xp_(std::move(xp)), pp_(std::move(pp)) {
  const int n = static_cast<int>(xx_.rows());
  if (n < 1) throw InvalidArgument("covariance matrix needs at least one mode");
  require_square(xx_, n, "gamma_xx");
  require_square(xp_, n, "gamma_xp");
  require_square(pp_, n, "gamma_pp");
  require_finite(xx_, "gamma_xx");
  require_finite(xp_, "gamma_xp");
  require_finite(pp_, "gamma_pp");
  asymmetry_defect_ = std::max(symmetrize(xx_), symmetrize(pp_));
}

CovarianceMatrix CovarianceMatrix::block_diagonal(Matrix xx, Matrix pp) {
  const auto n = xx.rows();
  return CovarianceMatrix(std::move(xx), Matrix::Zero(n, n), std::move(pp));
}

CovarianceMatrix CovarianceMatrix::from_full(const Matrix& gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() % 2 != 0 || gamma.rows() == 0) {
    throw InvalidArgument("full covariance matrix must be 2n x 2n");
  }
  const auto n = gamma.rows() / 2;
  return CovarianceMatrix(gamma.topLeftCorner(n, n), gamma.topRightCorner(n, n),
                          gamma.bottomRightCorner(n, n));
}

CovarianceMatrix CovarianceMatrix::vacuum(int modes) {
  if (modes < 1) throw InvalidArgument("vacuum needs at least one mode");
  const Matrix half = 0.5 * Matrix::Identity(modes, modes);
  return block_diagonal(half, half);
}

Matrix CovarianceMatrix::full() const {
  const int n = modes();
  Matrix g(2 * n, 2 * n);
  g << xx_, xp_, xp_.transpose(), pp_;
  return g;
}

// SigmaMatrix

SigmaMatrix::SigmaMatrix(Matrix sxx, Matrix spp) : sxx_(std::move(sxx)), spp_(std::move(spp)) {
  const int n = static_cast<int>(sxx_.rows());
  if (n < 1) throw InvalidArgument("sigma matrix needs at least one mode");
  require_square(sxx_, n, "sigma_xx");
  require_square(spp_, n, "sigma_pp");
  for (const Matrix* m : {&sxx_, &spp_}) {
    require_finite(*m, "sigma");
    if ((m->array() <= 0.0).any()) throw InvalidData("sigma entries must be strictly positive");
  }
  symmetrize(sxx_);
  symmetrize(spp_);
}

SigmaMatrix::SigmaMatrix(Matrix sxx, Matrix sxp, Matrix spp)
    : SigmaMatrix(std::move(sxx), std::move(spp)) {
  require_square(sxp, modes(), "sigma_xp");
  require_finite(sxp, "sigma_xp");
  if ((sxp.array() <= 0.0).any()) throw InvalidData("sigma entries must be strictly positive");
  sxp_ = std::move(sxp);
}

SigmaMatrix SigmaMatrix::uniform(int modes, double value) {
  const Matrix m = Matrix::Constant(modes, modes, value);
  return SigmaMatrix(m, m, m);
}

const Matrix& SigmaMatrix::xp() const {
  if (!has_xp()) throw InvalidArgument("sigma_xp block was not supplied");
  return sxp_;
}

Matrix SigmaMatrix::full() const {
  const int n = modes();
  Matrix s(2 * n, 2 * n);
  s << sxx_, xp(), xp().transpose(), spp_;
  return s;
}

// Bipartition

Bipartition::Bipartition(int modes, std::vector<int> side) : modes_(modes) {
  if (modes < 2) throw InvalidArgument("a bipartition needs at least two modes");
  std::sort(side.begin(), side.end());
  if (std::adjacent_find(side.begin(), side.end()) != side.end()) {
    throw InvalidArgument("bipartition lists a mode twice");
  }
  for (int m : side) {
    if (m < 1 || m > modes) {
      throw InvalidArgument("mode index " + std::to_string(m) + " out of range 1.." +
                            std::to_string(modes));
    }
  }
  std::vector<int> complement;
  for (int m = 1; m <= modes; ++m) {
    if (!std::binary_search(side.begin(), side.end(), m)) complement.push_back(m);
  }
  if (side.empty() || complement.empty()) {
    throw InvalidArgument("both groups of a bipartition must be nonempty");
  }
  if (side.front() == 1) {
    first_ = std::move(side);
    second_ = std::move(complement);
  } else {
    first_ = std::move(complement);
    second_ = std::move(side);
  }
}

Bipartition Bipartition::parse(int modes, std::string_view spec) {
  std::vector<int> side;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    std::string_view token = spec.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw InvalidArgument("malformed bipartition spec '" + std::string(spec) + "'");
    }
    side.push_back(value);
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  return Bipartition(modes, std::move(side));
}

bool Bipartition::in_first(int mode) const {
  return std::binary_search(first_.begin(), first_.end(), mode);
}

Vector Bipartition::signs() const {
  Vector e = -Vector::Ones(modes_);
  for (int m : first_) e(m - 1) = 1.0;
  return e;
}

namespace {
std::string join(const std::vector<int>& modes, bool commas) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i > 0 && commas) out += ',';
    out += std::to_string(modes[i]);
  }
  return out;
}
}  // namespace

std::string Bipartition::spec() const { return join(first_, true); }

std::string Bipartition::label() const {
  const bool commas = modes_ >= 10;
  const bool swap = second_.size() < first_.size();
  const auto& a = swap ? second_ : first_;
  const auto& b = swap ? first_ : second_;
  return join(a, commas) + "|" + join(b, commas);
}

// Operations

Matrix symplectic_form(int modes) {
  if (modes < 1) throw InvalidArgument("symplectic form needs at least one mode");
  Matrix j = Matrix::Zero(2 * modes, 2 * modes);
  j.topRightCorner(modes, modes).setIdentity();
  j.bottomLeftCorner(modes, modes) = -Matrix::Identity(modes, modes);
  return j;
}

Matrix real_form_matrix(const CovarianceMatrix& gamma) {
  // Rows/cols ordered (x, x', p, p'); the imaginary part of (i/2) J sits
  // in the off-diagonal copies.
  const int n = gamma.modes();
  const Matrix e = 0.5 * Matrix::Identity(n, n);
  Matrix m = Matrix::Zero(4 * n, 4 * n);
  m.block(0, 0, n, n) = gamma.xx();
  m.block(n, n, n, n) = gamma.xx();
  m.block(2 * n, 2 * n, n, n) = gamma.pp();
  m.block(3 * n, 3 * n, n, n) = gamma.pp();
  m.block(0, 2 * n, n, n) = gamma.xp();
  m.block(n, 3 * n, n, n) = gamma.xp();
  m.block(2 * n, 0, n, n) = gamma.xp().transpose();
  m.block(3 * n, n, n, n) = gamma.xp().transpose();
  m.block(0, 3 * n, n, n) = -e;
  m.block(3 * n, 0, n, n) = -e;
  m.block(n, 2 * n, n, n) = e;
  m.block(2 * n, n, n, n) = e;
  return m;
}

Matrix central_block_matrix(const CovarianceMatrix& gamma, const Vector& signs, int sign) {
  const int n = gamma.modes();
  if (signs.size() != n) throw InvalidArgument("sign vector length does not match mode count");
  const Matrix off = (0.5 * sign) * signs.asDiagonal().toDenseMatrix();
  Matrix m(2 * n, 2 * n);
  m << gamma.xx(), off, off, gamma.pp();
  return m;
}

PhysicalityReport physicality_defect(const CovarianceMatrix& gamma, double tol) {
  return lowest_eigenpair(real_form_matrix(gamma), tol);
}

PhysicalityReport weak_physicality_defect(const CovarianceMatrix& gamma, double tol) {
  return lowest_eigenpair(central_block_matrix(gamma, Vector::Ones(gamma.modes())), tol);
}

CovarianceMatrix partial_transpose(const CovarianceMatrix& gamma, const Bipartition& b) {
  if (b.modes() != gamma.modes()) {
    throw InvalidArgument("bipartition mode count does not match covariance matrix");
  }
  const Vector e = b.signs();
  Matrix xp = gamma.xp() * e.asDiagonal();
  Matrix pp = e.asDiagonal() * gamma.pp() * e.asDiagonal();
  return CovarianceMatrix(gamma.xx(), std::move(xp), std::move(pp));
}

double general_variance_test(const CovarianceMatrix& gamma, const Vector& h, const Vector& h_prime,
                             const Vector& g, const Vector& g_prime) {
  const int n = gamma.modes();
  for (const Vector* v : {&h, &h_prime, &g, &g_prime}) {
    if (v->size() != n) throw InvalidArgument("witness vector length does not match mode count");
  }
  const Matrix& xx = gamma.xx();
  const Matrix& xp = gamma.xp();
  const Matrix& pp = gamma.pp();
  const double variance = h.dot(xx * h) + g_prime.dot(pp * g_prime) + 2.0 * h.dot(xp * g_prime) +
                          h_prime.dot(xx * h_prime) + g.dot(pp * g) + 2.0 * h_prime.dot(xp * g);
  return variance - std::abs(h.dot(g) - h_prime.dot(g_prime));
}

}  // namespace cvcert
