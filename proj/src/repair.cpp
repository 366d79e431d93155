#include "cvcert/repair.hpp"

#include <cmath>

#include "cvcert/errors.hpp"

namespace cvcert {

namespace {

int triangle_index(int n, int row, int col) {
  if (row > col) std::swap(row, col);
  // Row-major upper triangle: rows before `row` hold n + (n-1) + ... entries.
  return row * n - row * (row - 1) / 2 + (col - row);
}

}  // namespace

int RepairProblem::xx_variable(int row, int col) const {
  return 1 + triangle_index(modes, row, col);
}

int RepairProblem::pp_variable(int row, int col) const {
  return 1 + modes * (modes + 1) / 2 + triangle_index(modes, row, col);
}

int RepairProblem::xp_variable(int row, int col) const {
  if (!has_xp) throw InvalidArgument("repair problem has no xp variables");
  return 1 + modes * (modes + 1) + row * modes + col;
}

CovarianceMatrix RepairProblem::extract(const Vector& x) const {
  const int n = modes;
  Matrix xx(n, n), pp(n, n), xp = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      xx(i, j) = x(xx_variable(i, j));
      pp(i, j) = x(pp_variable(i, j));
      if (has_xp) xp(i, j) = x(xp_variable(i, j));
    }
  }
  return CovarianceMatrix(std::move(xx), std::move(xp), std::move(pp));
}

Vector RepairProblem::encode(double level, const CovarianceMatrix& gamma) const {
  const int n = modes;
  if (gamma.modes() != n) throw InvalidArgument("mode count mismatch");
  Vector x(lmi.variables());
  x(0) = level;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      x(xx_variable(i, j)) = gamma.xx()(i, j);
      x(pp_variable(i, j)) = gamma.pp()(i, j);
    }
    if (has_xp) {
      for (int j = 0; j < n; ++j) x(xp_variable(i, j)) = gamma.xp()(i, j);
    }
  }
  return x;
}

RepairProblem assemble(const CovarianceMatrix& measured, const std::optional<SigmaMatrix>& sigma) {
  const int n = measured.modes();
  if (sigma && sigma->modes() != n) throw InvalidArgument("sigma and gamma mode counts differ");

  RepairProblem rp;
  rp.modes = n;
  rp.has_xp = !measured.is_block_diagonal();
  if (rp.has_xp && sigma && !sigma->has_xp()) {
    throw InvalidArgument("measured gamma has xp correlations but sigma_xp is missing");
  }
  const int variables = 1 + n * (n + 1) + (rp.has_xp ? n * n : 0);
  rp.lmi = sdp::LmiProblem(variables);
  auto& lmi = rp.lmi;
  lmi.set_objective(rp.level_variable(), 1.0);

  // Physicality block; the constant part is the symplectic coupling.
  const int phys = lmi.add_block(sdp::BlockKind::dense, 4 * n);
  for (int i = 0; i < n; ++i) {
    lmi.add_constant(phys, i, 3 * n + i, -0.5);
    lmi.add_constant(phys, n + i, 2 * n + i, 0.5);
    for (int j = i; j < n; ++j) {
      lmi.add_coefficient(phys, rp.xx_variable(i, j), i, j, -1.0);
      lmi.add_coefficient(phys, rp.xx_variable(i, j), n + i, n + j, -1.0);
      lmi.add_coefficient(phys, rp.pp_variable(i, j), 2 * n + i, 2 * n + j, -1.0);
      lmi.add_coefficient(phys, rp.pp_variable(i, j), 3 * n + i, 3 * n + j, -1.0);
    }
    if (rp.has_xp) {
      for (int j = 0; j < n; ++j) {
        lmi.add_coefficient(phys, rp.xp_variable(i, j), i, 2 * n + j, -1.0);
        lmi.add_coefficient(phys, rp.xp_variable(i, j), n + i, 3 * n + j, -1.0);
      }
    }
  }

  const int bounds = lmi.add_block(sdp::BlockKind::diagonal, 1 + 2 * (variables - 1));
  lmi.add_coefficient(bounds, rp.level_variable(), 0, 0, -1.0);
  int row = 1;
  auto add_pair = [&](int variable, double target, double weight) {
    lmi.add_constant(bounds, row, row, -target);
    lmi.add_coefficient(bounds, rp.level_variable(), row, row, -weight);
    lmi.add_coefficient(bounds, variable, row, row, -1.0);
    ++row;
    lmi.add_constant(bounds, row, row, target);
    lmi.add_coefficient(bounds, rp.level_variable(), row, row, -weight);
    lmi.add_coefficient(bounds, variable, row, row, 1.0);
    ++row;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      add_pair(rp.xx_variable(i, j), measured.xx()(i, j), sigma ? sigma->xx()(i, j) : 1.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      add_pair(rp.pp_variable(i, j), measured.pp()(i, j), sigma ? sigma->pp()(i, j) : 1.0);
    }
  }
  if (rp.has_xp) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        add_pair(rp.xp_variable(i, j), measured.xp()(i, j), sigma ? sigma->xp()(i, j) : 1.0);
      }
    }
  }
  return rp;
}

RepairResult repair(const CovarianceMatrix& measured, const std::optional<SigmaMatrix>& sigma,
                    const sdp::SolveOptions& options) {
  const RepairProblem problem = assemble(measured, sigma);
  sdp::SdpSolution solution = sdp::solve(problem.lmi, options);
  if (solution.status != sdp::Status::optimal) {
    throw SolverFailure("repair solve ended with status " + sdp::to_string(solution.status));
  }
  const double level = solution.x(problem.level_variable());
  CovarianceMatrix gamma_star = problem.extract(solution.x);
  return RepairResult{level, std::move(gamma_star), std::move(solution), sigma.has_value()};
}

CovarianceMatrix baseline_shift(const CovarianceMatrix& gamma, double tol) {
  const PhysicalityReport report = physicality_defect(gamma, tol);
  if (report.is_physical) return gamma;
  const double shift = 1.001 * std::abs(report.min_eig);
  const int n = gamma.modes();
  const Matrix bump = shift * Matrix::Identity(n, n);
  return CovarianceMatrix(gamma.xx() + bump, gamma.xp(), gamma.pp() + bump);
}

DeviationReport deviation_report(const CovarianceMatrix& measured, const CovarianceMatrix& gamma,
                                 const std::optional<SigmaMatrix>& sigma, double threshold) {
  const int n = measured.modes();
  if (gamma.modes() != n || (sigma && sigma->modes() != n)) {
    throw InvalidArgument("deviation report: mode counts differ");
  }
  const bool with_xp = !measured.is_block_diagonal() || !gamma.is_block_diagonal();
  Matrix scale = Matrix::Ones(2 * n, 2 * n);
  if (sigma) {
    scale.topLeftCorner(n, n) = sigma->xx();
    scale.bottomRightCorner(n, n) = sigma->pp();
    if (with_xp) {
      scale.topRightCorner(n, n) = sigma->xp();
      scale.bottomLeftCorner(n, n) = sigma->xp().transpose();
    }
  }

  DeviationReport report;
  report.threshold = threshold;
  report.ratios = (gamma.full() - measured.full()).cwiseAbs().cwiseQuotient(scale);
  report.max_ratio = -1.0;
  auto visit = [&](int r, int c) {
    const double v = report.ratios(r, c);
    ++report.independent_elements;
    if (v >= threshold) ++report.count_above;
    if (v > report.max_ratio) {
      report.max_ratio = v;
      report.argmax_row = r;
      report.argmax_col = c;
    }
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) visit(i, j);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) visit(n + i, n + j);
  }
  if (with_xp) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) visit(i, n + j);
    }
  }
  return report;
}

}  // namespace cvcert
