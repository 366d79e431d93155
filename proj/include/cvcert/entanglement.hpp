#pragma once

#include <optional>
#include <vector>

#include "cvcert/gaussian.hpp"

namespace cvcert {

/// Coefficients of u = (h, x) and v = (g, p). Normalized to
/// |h|^2 + |g|^2 = 1 with the largest-magnitude component positive.
class WitnessVector {
 public:
  WitnessVector(Vector h, Vector g);

  /// Splits z = (h, g) of length 2n.
  static WitnessVector from_eigenvector(const Vector& z);

  const Vector& h() const { return h_; }
  const Vector& g() const { return g_; }
  int modes() const { return static_cast<int>(h_.size()); }

 private:
  Vector h_;
  Vector g_;
};

/// Numbers entering the confidence level of a witness.
struct WitnessEvaluation {
  /// |(h_I, g_I)| + |(h_J, g_J)|
  double bound = 0.0;
  /// h^T gamma_xx h + g^T gamma_pp g
  double measured = 0.0;
  double sigma_hg = 0.0;
  /// (bound - measured) / sigma_hg
  double s0 = 0.0;
};

struct BipartitionVerdict {
  Bipartition bipartition;
  double ppt_min_eig = 0.0;
  /// Multiplicity of the most negative eigenvalue; > 1 means the witness is
  /// one arbitrary choice from the eigenspace.
  int eigen_multiplicity = 1;
  std::optional<WitnessVector> witness;
  std::optional<WitnessEvaluation> evaluation;
  bool certified = false;
};

/// Default certification level.
inline constexpr double kDefaultConfidence = 3.0;

/// [[gamma_xx, (s/2) E_I], [(s/2) E_I, gamma_pp]] with E_I = +1 on
/// b.first(), -1 on b.second(), s = +1 or -1. Requires a zero xp block; use
/// partial_transpose + physicality_defect for general matrices.
Matrix ppt_matrix(const CovarianceMatrix& gamma, const Bipartition& b, int sign = 1);

/// Witness from the eigenvector of the most negative eigenvalue of
/// ppt_matrix; empty when that eigenvalue is >= -tol.
std::optional<WitnessVector> extract_witness(const CovarianceMatrix& gamma, const Bipartition& b,
                                             double tol = kPhysicalityTol);

/// Bound, measured value, standard deviation and s0 for a witness.
/// Requires a zero xp block. Throws DegenerateSigma when sigma_hg = 0.
WitnessEvaluation evaluate_witness(const WitnessVector& w, const Bipartition& b,
                                   const CovarianceMatrix& gamma, const SigmaMatrix& sigma);

/// Full verdict for a supplied witness; certified iff s0 >= threshold.
BipartitionVerdict confidence(const WitnessVector& w, const Bipartition& b,
                              const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                              double threshold = kDefaultConfidence);

/// All 2^(n-1) - 1 bipartitions, ordered by the size of the smaller group,
/// then lexicographically by the smaller group (the group holding mode 1
/// when both have equal size).
std::vector<Bipartition> enumerate_bipartitions(int modes);

/// Eigenvector-witness verdict for each bipartition (all of them when
/// `bipartitions` is empty). Results follow the input order.
std::vector<BipartitionVerdict> scan(const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                                     double threshold = kDefaultConfidence,
                                     std::vector<Bipartition> bipartitions = {},
                                     double tol = kPhysicalityTol);

}  // namespace cvcert
