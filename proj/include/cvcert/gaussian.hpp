#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cvcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default absolute tolerance on eigenvalues for physicality verdicts.
inline constexpr double kPhysicalityTol = 1e-9;

/// Asymmetry defect above which loaders should warn the user.
inline constexpr double kAsymmetryWarning = 1e-6;

/// Second moments of an n-mode state in (xx, xp, pp) block form, with the
/// vacuum variance equal to 1/2. The xx and pp blocks are symmetrized on
/// construction; the largest discarded asymmetry is kept in
/// asymmetry_defect().
class CovarianceMatrix {
 public:
  CovarianceMatrix(Matrix xx, Matrix xp, Matrix pp);

  /// Block-diagonal state: xp = 0.
  static CovarianceMatrix block_diagonal(Matrix xx, Matrix pp);
  /// Splits an assembled 2n x 2n matrix into blocks.
  static CovarianceMatrix from_full(const Matrix& gamma);
  static CovarianceMatrix vacuum(int modes);

  int modes() const { return static_cast<int>(xx_.rows()); }
  const Matrix& xx() const { return xx_; }
  const Matrix& xp() const { return xp_; }
  const Matrix& pp() const { return pp_; }

  /// True when every entry of the xp block is exactly zero.
  bool is_block_diagonal() const { return xp_.isZero(0.0); }
  double asymmetry_defect() const { return asymmetry_defect_; }

  /// The assembled matrix [[xx, xp], [xp^T, pp]].
  Matrix full() const;

 private:
  Matrix xx_;
  Matrix xp_;
  Matrix pp_;
  double asymmetry_defect_ = 0.0;
};

/// Per-element measurement standard deviations in the same block layout.
/// The xp block is optional; it is only needed when repairing a matrix with
/// nonzero xp correlations.
class SigmaMatrix {
 public:
  SigmaMatrix(Matrix sxx, Matrix spp);
  SigmaMatrix(Matrix sxx, Matrix sxp, Matrix spp);

  /// Every entry equal to `value` (value = 1 gives unweighted deviations).
  static SigmaMatrix uniform(int modes, double value);

  int modes() const { return static_cast<int>(sxx_.rows()); }
  const Matrix& xx() const { return sxx_; }
  const Matrix& pp() const { return spp_; }
  bool has_xp() const { return sxp_.size() > 0; }
  /// Throws InvalidArgument when the xp block was not supplied.
  const Matrix& xp() const;

  /// Assembled 2n x 2n matrix; requires has_xp().
  Matrix full() const;

 private:
  Matrix sxx_;
  Matrix sxp_;
  Matrix spp_;
};

/// Split of the modes {1..n} into two nonempty groups. Stored canonically:
/// mode 1 always belongs to first().
class Bipartition {
 public:
  /// `side` lists 1-based modes of one group; the other group is the
  /// complement. Either group may be given.
  Bipartition(int modes, std::vector<int> side);

  /// Parses a comma list such as "1,4" or "2".
  static Bipartition parse(int modes, std::string_view spec);

  int modes() const { return modes_; }
  const std::vector<int>& first() const { return first_; }
  const std::vector<int>& second() const { return second_; }

  bool in_first(int mode) const;
  /// +1 for modes in first(), -1 for modes in second(), indexed 0..n-1.
  Vector signs() const;

  /// Canonical comma list of first(), e.g. "1,3,4". Round-trips via parse().
  std::string spec() const;
  /// Smaller group first, e.g. "2|134"; commas are used when n >= 10.
  std::string label() const;

  friend bool operator==(const Bipartition&, const Bipartition&) = default;
  friend auto operator<=>(const Bipartition&, const Bipartition&) = default;

 private:
  int modes_;
  std::vector<int> first_;
  std::vector<int> second_;
};

struct PhysicalityReport {
  double min_eig = 0.0;
  bool is_physical = false;
  /// Eigenvector of min_eig in the test matrix basis.
  Vector eigvec;
};

/// The symplectic form [[0, E], [-E, 0]].
Matrix symplectic_form(int modes);

/// Real 4n x 4n equivalent of gamma + (i/2) J >= 0 (one sign choice).
Matrix real_form_matrix(const CovarianceMatrix& gamma);

/// [[xx, (s/2) diag(signs)], [(s/2) diag(signs), pp]] for s = +1 or -1.
Matrix central_block_matrix(const CovarianceMatrix& gamma, const Vector& signs, int sign = 1);

PhysicalityReport physicality_defect(const CovarianceMatrix& gamma, double tol = kPhysicalityTol);

/// Weaker necessary test on the central 2n x 2n submatrix
/// [[xx, E/2], [E/2, pp]].
PhysicalityReport weak_physicality_defect(const CovarianceMatrix& gamma,
                                          double tol = kPhysicalityTol);

/// Flips the sign of the momenta of the modes in b.second().
CovarianceMatrix partial_transpose(const CovarianceMatrix& gamma, const Bipartition& b);

/// LHS - RHS of the variance inequality
///   <(du + dv')^2 + (du' + dv)^2> >= |(h, g) - (h', g')|
/// with u = (h, x), u' = (h', x), v = (g, p), v' = (g', p).
double general_variance_test(const CovarianceMatrix& gamma, const Vector& h, const Vector& h_prime,
                             const Vector& g, const Vector& g_prime);

/// Ascending eigenpairs of a symmetric matrix.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Throws InvalidData if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

}  // namespace cvcert
