#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cvcert/gaussian.hpp"

namespace cvcert {

/// Pair of positive semidefinite n x n matrices weighting the x and p
/// second moments. A rank-one pair X = h h^T, P = g g^T reproduces the
/// vector witness (h, g).
class MatrixWitness {
 public:
  /// Symmetrizes both matrices (the discarded asymmetry is kept in
  /// asymmetry_defect()) and rejects eigenvalues below -1e-9.
  MatrixWitness(Matrix x, Matrix p);

  static MatrixWitness rank_one(const Vector& h, const Vector& g);

  const Matrix& x() const { return x_; }
  const Matrix& p() const { return p_; }
  int modes() const { return static_cast<int>(x_.rows()); }
  double asymmetry_defect() const { return asymmetry_defect_; }

 private:
  Matrix x_;
  Matrix p_;
  double asymmetry_defect_ = 0.0;
};

using MaximizerMap = std::map<Bipartition, MatrixWitness>;

struct GmeVerdict {
  Bipartition bipartition;
  double bound_B = 0.0;
  double measured_G = 0.0;
  double sigma_XP = 0.0;
  /// (bound_B - measured_G) / sigma_XP
  double violation = 0.0;
  /// Pair at which the bound was evaluated, when one was supplied.
  std::optional<MatrixWitness> maximizer;
  /// No maximizer was supplied; bound_B was evaluated at the base pair.
  bool lower_bound_only = false;
};

/// tr sqrt(sqrt(X_I) P_I sqrt(X_I)) over the 1-based modes in `group`.
/// Throws InvalidWitness when X_I or the inner product has an eigenvalue
/// below -max(1e-9, 1e-8 |M|).
double trace_sqrt_pair(const Matrix& x, const Matrix& p, const std::vector<int>& group);

/// sum_ij gamma_xx,ij X_ij + gamma_pp,ij P_ij. Requires a zero xp block.
double measured_G(const MatrixWitness& w, const CovarianceMatrix& gamma);

/// (sum_ij sigma_xx,ij^2 X_ij^2 + sigma_pp,ij^2 P_ij^2)^(1/2)
double sigma_XP(const MatrixWitness& w, const SigmaMatrix& sigma);

/// One verdict per requested bipartition, in input order. With maximizers,
/// bound_B is evaluated at the pair for that bipartition; measured_G and
/// sigma_XP always use the base pair. In strict mode a missing maximizer is
/// an error; otherwise that verdict falls back to lower_bound_only.
std::vector<GmeVerdict> evaluate(const MatrixWitness& witness,
                                 const std::optional<MaximizerMap>& maximizers,
                                 const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                                 const std::vector<Bipartition>& bipartitions, bool strict = true);

/// Genuine multipartite entanglement needs every violation >= threshold.
bool certifies_genuine(const std::vector<GmeVerdict>& verdicts, double threshold);

}  // namespace cvcert
