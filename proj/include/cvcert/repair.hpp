#pragma once

#include <optional>

#include "cvcert/gaussian.hpp"
#include "cvcert/sdp.hpp"

namespace cvcert {

/// The minimax repair problem together with its variable layout.
///
/// Variable 0 is the level s. It is followed by the upper triangle of the
/// xx block (row-major), the upper triangle of the pp block, and, unless the
/// measured xp block is exactly zero, all n^2 entries of the xp block.
///
/// Block 0 is the dense 4n x 4n real-form physicality matrix. Block 1 is a
/// diagonal block holding s >= 0 followed by the pair
///   s sigma_v + gamma_v - measured_v >= 0,  s sigma_v - gamma_v + measured_v >= 0
/// for every matrix variable v.
struct RepairProblem {
  int modes = 0;
  bool has_xp = false;
  sdp::LmiProblem lmi{1};

  int level_variable() const { return 0; }
  int xx_variable(int row, int col) const;
  int pp_variable(int row, int col) const;
  int xp_variable(int row, int col) const;

  /// Reads gamma back from a solution vector.
  CovarianceMatrix extract(const Vector& x) const;
  /// Solution vector encoding (level, gamma).
  Vector encode(double level, const CovarianceMatrix& gamma) const;
};

/// Builds the problem. Without sigma every weight is 1 (plain max-norm).
RepairProblem assemble(const CovarianceMatrix& measured, const std::optional<SigmaMatrix>& sigma);

struct RepairResult {
  double s_star = 0.0;
  CovarianceMatrix gamma_star;
  sdp::SdpSolution solution;
  bool weighted = false;
};

/// Most probable physical covariance matrix: minimizes the largest
/// sigma-weighted elementwise deviation from `measured`. Throws SolverFailure
/// unless the solver reports an optimal point.
RepairResult repair(const CovarianceMatrix& measured, const std::optional<SigmaMatrix>& sigma,
                    const sdp::SolveOptions& options = {});

/// Adds 1.001 |lambda_min| to every diagonal element when gamma is not
/// physical at `tol`; returns gamma unchanged otherwise.
CovarianceMatrix baseline_shift(const CovarianceMatrix& gamma, double tol = kPhysicalityTol);

struct DeviationReport {
  /// |gamma_ij - measured_ij| / sigma_ij over the assembled 2n x 2n layout.
  Matrix ratios;
  double max_ratio = 0.0;
  /// 0-based position in the assembled matrix, row <= col.
  int argmax_row = 0;
  int argmax_col = 0;
  double threshold = 0.0;
  /// Independent elements with ratio >= threshold: the upper triangles of xx
  /// and pp, plus every xp entry when either matrix carries xp correlations.
  int count_above = 0;
  int independent_elements = 0;
};

/// Without sigma the ratios are absolute deviations.
DeviationReport deviation_report(const CovarianceMatrix& measured, const CovarianceMatrix& gamma,
                                 const std::optional<SigmaMatrix>& sigma, double threshold);

}  // namespace cvcert
