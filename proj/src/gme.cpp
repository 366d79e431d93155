#include "cvcert/gme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvcert/errors.hpp"
#include "cvcert/parallel.hpp"

namespace cvcert {

namespace {

constexpr double kPsdTol = 1e-9;

double clip_tolerance(const SymmetricEigen& eig) {
  const double scale = eig.values.cwiseAbs().maxCoeff();
  return std::max(kPsdTol, 1e-8 * scale);
}

/// Eigenvalues with round-off set to zero: negatives within tolerance, and
/// positives below the eigensolver's noise floor. The square root would
/// otherwise turn 1e-17 noise into 1e-9 errors for rank-deficient inputs.
Vector clipped_spectrum(const SymmetricEigen& eig, const char* what) {
  const double tol = clip_tolerance(eig);
  if (eig.values(0) < -tol) {
    throw InvalidWitness(std::string(what) + " has eigenvalue " + std::to_string(eig.values(0)));
  }
  const double floor = 8.0 * static_cast<double>(eig.values.size()) *
                       std::numeric_limits<double>::epsilon() * eig.values.cwiseAbs().maxCoeff();
  return eig.values.unaryExpr([floor](double v) { return v <= floor ? 0.0 : v; });
}

Matrix submatrix(const Matrix& m, const std::vector<int>& group) {
  const auto k = static_cast<Eigen::Index>(group.size());
  Matrix out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out(a, b) = m(group[static_cast<std::size_t>(a)] - 1, group[static_cast<std::size_t>(b)] - 1);
    }
  }
  return out;
}

}  // namespace

MatrixWitness::MatrixWitness(Matrix x, Matrix p) : x_(std::move(x)), p_(std::move(p)) {
  const auto n = x_.rows();
  if (n < 1 || x_.cols() != n || p_.rows() != n || p_.cols() != n) {
    throw InvalidArgument("witness matrices must be square and of equal size");
  }
  require_finite(x_, "witness X");
  require_finite(p_, "witness P");
  asymmetry_defect_ = std::max((x_ - x_.transpose()).cwiseAbs().maxCoeff(),
                               (p_ - p_.transpose()).cwiseAbs().maxCoeff());
  x_ = 0.5 * (x_ + x_.transpose()).eval();
  p_ = 0.5 * (p_ + p_.transpose()).eval();
  if (x_.isZero(0.0) && p_.isZero(0.0)) throw InvalidWitness("witness matrices are both zero");
  for (const Matrix* m : {&x_, &p_}) {
    const double lmin = symmetric_eigen(*m).values(0);
    if (lmin < -kPsdTol) {
      throw InvalidWitness("witness matrix is not positive semidefinite (eigenvalue " +
                           std::to_string(lmin) + ")");
    }
  }
}

MatrixWitness MatrixWitness::rank_one(const Vector& h, const Vector& g) {
  if (h.size() != g.size()) throw InvalidArgument("h and g lengths differ");
  return MatrixWitness(h * h.transpose(), g * g.transpose());
}

double trace_sqrt_pair(const Matrix& x, const Matrix& p, const std::vector<int>& group) {
  if (group.empty()) throw InvalidArgument("trace_sqrt_pair needs a nonempty group");
  for (int m : group) {
    if (m < 1 || m > x.rows()) throw InvalidArgument("mode index out of range");
  }
  const Matrix x_sub = submatrix(x, group);
  const Matrix p_sub = submatrix(p, group);

  const SymmetricEigen ex = symmetric_eigen(x_sub);
  const Vector root = clipped_spectrum(ex, "X submatrix").cwiseSqrt();
  const Matrix sqrt_x = ex.vectors * root.asDiagonal() * ex.vectors.transpose();
  Matrix inner = sqrt_x * p_sub * sqrt_x;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const SymmetricEigen ei = symmetric_eigen(inner);
  return clipped_spectrum(ei, "sqrt(X) P sqrt(X)").cwiseSqrt().sum();
}

double measured_G(const MatrixWitness& w, const CovarianceMatrix& gamma) {
  if (w.modes() != gamma.modes()) throw InvalidArgument("witness and gamma mode counts differ");
  if (!gamma.is_block_diagonal()) throw UnsupportedShape("measured_G needs a zero xp block");
  return gamma.xx().cwiseProduct(w.x()).sum() + gamma.pp().cwiseProduct(w.p()).sum();
}

double sigma_XP(const MatrixWitness& w, const SigmaMatrix& sigma) {
  if (w.modes() != sigma.modes()) throw InvalidArgument("witness and sigma mode counts differ");
  const double v = sigma.xx().cwiseProduct(w.x()).squaredNorm() +
                   sigma.pp().cwiseProduct(w.p()).squaredNorm();
  return std::sqrt(v);
}

std::vector<GmeVerdict> evaluate(const MatrixWitness& witness,
                                 const std::optional<MaximizerMap>& maximizers,
                                 const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                                 const std::vector<Bipartition>& bipartitions, bool strict) {
  const double g = measured_G(witness, gamma);
  const double s = sigma_XP(witness, sigma);
  if (!(s > 0.0)) throw DegenerateSigma("witness standard deviation is zero");
  for (const auto& b : bipartitions) {
    if (b.modes() != gamma.modes()) throw InvalidArgument("bipartition mode count mismatch");
    if (strict && maximizers && !maximizers->contains(b)) {
      throw InvalidArgument("no maximizer supplied for bipartition " + b.label());
    }
  }

  std::vector<std::optional<GmeVerdict>> slots(bipartitions.size());
  parallel_for(bipartitions.size(), [&](std::size_t i) {
    const Bipartition& b = bipartitions[i];
    std::optional<MatrixWitness> at;
    if (maximizers) {
      if (auto it = maximizers->find(b); it != maximizers->end()) at = it->second;
    }
    const MatrixWitness& pair = at ? *at : witness;
    const double bound = trace_sqrt_pair(pair.x(), pair.p(), b.first()) +
                         trace_sqrt_pair(pair.x(), pair.p(), b.second());
    slots[i] = GmeVerdict{b, bound, g, s, (bound - g) / s, at, !at.has_value()};
  });

  std::vector<GmeVerdict> out;
  out.reserve(slots.size());
  for (auto& v : slots) out.push_back(std::move(*v));
  return out;
}

bool certifies_genuine(const std::vector<GmeVerdict>& verdicts, double threshold) {
  return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [&](const auto& v) {
    return v.violation >= threshold;
  });
}

}  // namespace cvcert
