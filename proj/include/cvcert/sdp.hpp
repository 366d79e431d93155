#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cvcert/gaussian.hpp"

namespace cvcert::sdp {

/// One stored entry of a symmetric matrix. Only row <= col is stored; the
/// mirrored entry is implied.
struct Entry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

enum class BlockKind {
  dense,     ///< full symmetric block
  diagonal,  ///< a batch of independent scalar constraints
};

/// One diagonal block of the LMI: constant part and one sparse coefficient
/// matrix per variable.
struct Block {
  BlockKind kind = BlockKind::dense;
  int size = 0;
  std::vector<Entry> constant;
  std::vector<std::vector<Entry>> coefficients;  // indexed by variable
};

/// minimize c^T x  subject to  B_k - sum_i x_i A_{k,i} >= 0 for every block k.
class LmiProblem {
 public:
  explicit LmiProblem(int variables);

  int variables() const { return static_cast<int>(objective_.size()); }
  const Vector& objective() const { return objective_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  /// Sum of block sizes.
  int dimension() const;

  void set_objective(int variable, double value);
  /// Returns the new block's index.
  int add_block(BlockKind kind, int size);
  /// Adds `value` to B at (row, col) and its mirror; row/col may be given in
  /// either order. Diagonal blocks accept only row == col.
  void add_constant(int block, int row, int col, double value);
  /// Adds `value` to A_{block, variable} at (row, col) and its mirror.
  void add_coefficient(int block, int variable, int row, int col, double value);

  /// Dense constant block B_k.
  Matrix constant_matrix(int block) const;
  /// Dense B_k - sum_i x_i A_{k,i}.
  Matrix slack_matrix(int block, const Vector& x) const;

 private:
  void check_position(int block, int row, int col) const;

  Vector objective_;
  std::vector<Block> blocks_;
};

struct SolveOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  /// Phase-1 optimum above this means no feasible point exists.
  double infeasibility_threshold = 1e-7;
  /// Fraction of the distance to the cone boundary taken per step.
  double step_fraction = 0.95;
  /// Lower bound on the centering parameter. Keeping iterates close to the
  /// central path makes the limit the analytic center of the optimal set,
  /// so degenerate problems get a start-independent answer. 0 gives plain
  /// Mehrotra steps (fewer iterations, start-dependent limit).
  double centering_floor = 0.5;
};

enum class Status { optimal, infeasible, max_iterations, numerical_failure };

std::string to_string(Status status);

struct SdpSolution {
  Vector x;
  double objective = 0.0;
  Status status = Status::numerical_failure;
  double duality_gap = 0.0;
  /// Relative primal residual ||B - A(x) - S|| / (1 + ||B||).
  double primal_residual = 0.0;
  /// Relative dual residual ||c + A^*(Z)|| / (1 + ||c||).
  double dual_residual = 0.0;
  /// Phase-2 iterations.
  int iterations = 0;
  int phase1_iterations = 0;
};

/// Solves the problem with a primal-dual path-following method (HKM
/// direction, Mehrotra predictor-corrector). When `start` is absent or not
/// strictly feasible, a phase-1 problem with an identity shift finds one.
SdpSolution solve(const LmiProblem& problem, const SolveOptions& options = {},
                  const std::optional<Vector>& start = std::nullopt);

struct FeasibilityReport {
  /// Ascending eigenvalues of B_k - sum_i x_i A_{k,i}, per block.
  std::vector<Vector> block_eigenvalues;
  std::vector<double> block_min_eig;
  double min_eig = 0.0;
  double objective = 0.0;
};

/// Recomputes every slack block from scratch and reports its spectrum.
FeasibilityReport verify(const LmiProblem& problem, const Vector& x);

}  // namespace cvcert::sdp
