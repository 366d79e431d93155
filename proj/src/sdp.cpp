#include "cvcert/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvcert/errors.hpp"

namespace cvcert::sdp {

// LmiProblem

LmiProblem::LmiProblem(int variables) {
  if (variables < 1) throw InvalidArgument("an LMI problem needs at least one variable");
  objective_ = Vector::Zero(variables);
}

int LmiProblem::dimension() const {
  int total = 0;
  for (const auto& b : blocks_) total += b.size;
  return total;
}

void LmiProblem::set_objective(int variable, double value) {
  if (variable < 0 || variable >= variables()) throw InvalidArgument("variable index out of range");
  objective_(variable) = value;
}

int LmiProblem::add_block(BlockKind kind, int size) {
  if (size < 1) throw InvalidArgument("block size must be positive");
  Block b;
  b.kind = kind;
  b.size = size;
  b.coefficients.resize(static_cast<std::size_t>(variables()));
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

void LmiProblem::check_position(int block, int row, int col) const {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) {
    throw InvalidArgument("block index out of range");
  }
  const Block& b = blocks_[static_cast<std::size_t>(block)];
  if (row < 0 || col < 0 || row >= b.size || col >= b.size) {
    throw InvalidArgument("entry position outside block");
  }
  if (b.kind == BlockKind::diagonal && row != col) {
    throw InvalidArgument("diagonal blocks hold only diagonal entries");
  }
}

void LmiProblem::add_constant(int block, int row, int col, double value) {
  check_position(block, row, col);
  blocks_[static_cast<std::size_t>(block)].constant.push_back(
      {std::min(row, col), std::max(row, col), value});
}

void LmiProblem::add_coefficient(int block, int variable, int row, int col, double value) {
  check_position(block, row, col);
  if (variable < 0 || variable >= variables()) throw InvalidArgument("variable index out of range");
  blocks_[static_cast<std::size_t>(block)].coefficients[static_cast<std::size_t>(variable)].push_back(
      {std::min(row, col), std::max(row, col), value});
}

namespace {

void accumulate(Matrix& m, const std::vector<Entry>& entries, double scale) {
  for (const Entry& e : entries) {
    m(e.row, e.col) += scale * e.value;
    if (e.row != e.col) m(e.col, e.row) += scale * e.value;
  }
}

}  // namespace

Matrix LmiProblem::constant_matrix(int block) const {
  const Block& b = blocks_.at(static_cast<std::size_t>(block));
  Matrix m = Matrix::Zero(b.size, b.size);
  accumulate(m, b.constant, 1.0);
  return m;
}

Matrix LmiProblem::slack_matrix(int block, const Vector& x) const {
  if (x.size() != variables()) throw InvalidArgument("x has wrong length");
  const Block& b = blocks_.at(static_cast<std::size_t>(block));
  Matrix m = constant_matrix(block);
  for (int i = 0; i < variables(); ++i) {
    if (x(i) != 0.0) accumulate(m, b.coefficients[static_cast<std::size_t>(i)], -x(i));
  }
  return m;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iterations: return "max-iterations";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

// Solver internals. Dense blocks hold size x size matrices; diagonal blocks
// hold size x 1 columns.

namespace {

struct Term {
  int row;
  int col;
  double value;
};

struct VarTerm {
  int variable;
  double value;
};

struct BlockData {
  BlockKind kind;
  int size;
  Matrix constant;
  std::vector<int> active;                  // variables with nonzero coefficients
  std::vector<std::vector<Term>> terms;     // per variable, mirrored entries expanded
  std::vector<std::vector<VarTerm>> rows;   // diagonal blocks: per row, contributing variables
};

using BlockMatrices = std::vector<Matrix>;

class Structure {
 public:
  explicit Structure(const LmiProblem& p) : m_(p.variables()), c_(p.objective()) {
    std::vector<bool> used(static_cast<std::size_t>(m_), false);
    for (const Block& b : p.blocks()) {
      BlockData d;
      d.kind = b.kind;
      d.size = b.size;
      d.constant = b.kind == BlockKind::dense ? Matrix::Zero(b.size, b.size) : Matrix::Zero(b.size, 1);
      for (const Entry& e : b.constant) add(d.constant, d.kind, e.row, e.col, e.value);
      d.terms.resize(static_cast<std::size_t>(m_));
      if (d.kind == BlockKind::diagonal) d.rows.resize(static_cast<std::size_t>(b.size));
      for (int i = 0; i < m_; ++i) {
        // Merge duplicates so that every (row, col) appears once.
        Matrix acc = d.kind == BlockKind::dense ? Matrix::Zero(b.size, b.size) : Matrix::Zero(b.size, 1);
        const auto& entries = b.coefficients[static_cast<std::size_t>(i)];
        if (entries.empty()) continue;
        for (const Entry& e : entries) add(acc, d.kind, e.row, e.col, e.value);
        auto& t = d.terms[static_cast<std::size_t>(i)];
        if (d.kind == BlockKind::dense) {
          for (const Entry& e : entries) {
            const double v = acc(e.row, e.col);
            if (v == 0.0) continue;
            acc(e.row, e.col) = 0.0;
            t.push_back({e.row, e.col, v});
            if (e.row != e.col) {
              acc(e.col, e.row) = 0.0;
              t.push_back({e.col, e.row, v});
            }
          }
        } else {
          for (const Entry& e : entries) {
            const double v = acc(e.row, 0);
            if (v == 0.0) continue;
            acc(e.row, 0) = 0.0;
            t.push_back({e.row, e.row, v});
            d.rows[static_cast<std::size_t>(e.row)].push_back({i, v});
          }
        }
        if (!t.empty()) {
          d.active.push_back(i);
          used[static_cast<std::size_t>(i)] = true;
        }
      }
      blocks_.push_back(std::move(d));
    }
    for (int i = 0; i < m_; ++i) {
      if (!used[static_cast<std::size_t>(i)]) {
        throw InvalidArgument("variable " + std::to_string(i) + " appears in no constraint");
      }
    }
    double bnorm = 0.0;
    for (const auto& d : blocks_) bnorm += d.constant.squaredNorm();
    b_norm_ = std::sqrt(bnorm);
  }

  int variables() const { return m_; }
  const Vector& objective() const { return c_; }
  const std::vector<BlockData>& blocks() const { return blocks_; }
  double constant_norm() const { return b_norm_; }

  int dimension() const {
    int n = 0;
    for (const auto& d : blocks_) n += d.size;
    return n;
  }

  BlockMatrices zeros() const {
    BlockMatrices out;
    for (const auto& d : blocks_) {
      out.push_back(d.kind == BlockKind::dense ? Matrix::Zero(d.size, d.size) : Matrix::Zero(d.size, 1));
    }
    return out;
  }

  BlockMatrices identity(double scale) const {
    BlockMatrices out;
    for (const auto& d : blocks_) {
      out.push_back(d.kind == BlockKind::dense ? Matrix(scale * Matrix::Identity(d.size, d.size))
                                               : Matrix::Constant(d.size, 1, scale));
    }
    return out;
  }

  /// sum_i x_i A_i
  BlockMatrices apply(const Vector& x) const {
    BlockMatrices out = zeros();
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& d = blocks_[k];
      for (int i : d.active) {
        const double xi = x(i);
        if (xi == 0.0) continue;
        const int col_of_diag = 0;
        for (const Term& t : d.terms[static_cast<std::size_t>(i)]) {
          out[k](t.row, d.kind == BlockKind::diagonal ? col_of_diag : t.col) += xi * t.value;
        }
      }
    }
    return out;
  }

  /// (<A_i, Y>)_i
  Vector adjoint(const BlockMatrices& y) const {
    Vector out = Vector::Zero(m_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& d = blocks_[k];
      for (int i : d.active) {
        double s = 0.0;
        if (d.kind == BlockKind::dense) {
          for (const Term& t : d.terms[static_cast<std::size_t>(i)]) s += t.value * y[k](t.row, t.col);
        } else {
          for (const Term& t : d.terms[static_cast<std::size_t>(i)]) s += t.value * y[k](t.row, 0);
        }
        out(i) += s;
      }
    }
    return out;
  }

  /// Schur complement M_ij = <A_i, Z A_j S^{-1}>.
  Matrix schur(const BlockMatrices& z, const BlockMatrices& s_inv) const {
    Matrix m = Matrix::Zero(m_, m_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& d = blocks_[k];
      if (d.kind == BlockKind::dense) {
        Matrix w(d.size, d.size);
        for (int j : d.active) {
          w.setZero();
          for (const Term& t : d.terms[static_cast<std::size_t>(j)]) {
            w.noalias() += t.value * z[k].col(t.row) * s_inv[k].row(t.col);
          }
          for (int i : d.active) {
            double s = 0.0;
            for (const Term& t : d.terms[static_cast<std::size_t>(i)]) s += t.value * w(t.col, t.row);
            m(i, j) += s;
          }
        }
      } else {
        for (int r = 0; r < d.size; ++r) {
          const double weight = z[k](r, 0) * s_inv[k](r, 0);
          const auto& vars = d.rows[static_cast<std::size_t>(r)];
          for (const VarTerm& a : vars) {
            for (const VarTerm& b : vars) m(a.variable, b.variable) += weight * a.value * b.value;
          }
        }
      }
    }
    return 0.5 * (m + m.transpose());
  }

 private:
  static void add(Matrix& m, BlockKind kind, int row, int col, double v) {
    if (kind == BlockKind::diagonal) {
      m(row, 0) += v;
    } else {
      m(row, col) += v;
      if (row != col) m(col, row) += v;
    }
  }

  int m_;
  Vector c_;
  std::vector<BlockData> blocks_;
  double b_norm_ = 0.0;
};

double inner(const BlockMatrices& a, const BlockMatrices& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double norm(const BlockMatrices& a) { return std::sqrt(inner(a, a)); }

BlockMatrices minus(const BlockMatrices& a, const BlockMatrices& b) {
  BlockMatrices out = a;
  for (std::size_t k = 0; k < a.size(); ++k) out[k] -= b[k];
  return out;
}

/// Largest alpha with x + alpha * dx still in the cone (infinity if
/// unbounded). Returns NaN when x itself is not positive definite.
double max_step(const Structure& st, const BlockMatrices& x, const BlockMatrices& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (st.blocks()[k].kind == BlockKind::diagonal) {
      for (Eigen::Index r = 0; r < x[k].rows(); ++r) {
        if (dx[k](r, 0) < 0.0) alpha = std::min(alpha, -x[k](r, 0) / dx[k](r, 0));
      }
    } else {
      Eigen::LLT<Matrix> llt(x[k]);
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
      const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(x[k].rows(), x[k].cols()));
      const Matrix scaled = l_inv * dx[k] * l_inv.transpose();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (scaled + scaled.transpose()),
                                                Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues()(0);
      if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
  }
  return alpha;
}

bool invert(const Structure& st, const BlockMatrices& s, BlockMatrices& s_inv) {
  s_inv.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (st.blocks()[k].kind == BlockKind::diagonal) {
      if ((s[k].array() <= 0.0).any()) return false;
      s_inv[k] = s[k].cwiseInverse();
    } else {
      Eigen::LLT<Matrix> llt(s[k]);
      if (llt.info() != Eigen::Success) return false;
      s_inv[k] = llt.solve(Matrix::Identity(s[k].rows(), s[k].cols()));
      s_inv[k] = 0.5 * (s_inv[k] + s_inv[k].transpose()).eval();
    }
  }
  return true;
}

double block_min_eig(const Structure& st, const BlockMatrices& s) {
  double lmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (st.blocks()[k].kind == BlockKind::diagonal) {
      lmin = std::min(lmin, s[k].minCoeff());
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(s[k], Eigen::EigenvaluesOnly);
      lmin = std::min(lmin, eig.eigenvalues()(0));
    }
  }
  return lmin;
}

BlockMatrices slack_at(const Structure& st, const Vector& x) {
  BlockMatrices s = st.apply(x);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = st.blocks()[k].constant - s[k];
  return s;
}

/// Newton direction for a given R (see solve()).
void direction(const Structure& st, const Eigen::LDLT<Matrix>& schur, const BlockMatrices& z,
               const BlockMatrices& s_inv, const BlockMatrices& rp, const Vector& rd,
               const BlockMatrices& r, Vector& dx, BlockMatrices& ds, BlockMatrices& dz) {
  // T = R - sym(Z Rp S^{-1})
  BlockMatrices t = r;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (st.blocks()[k].kind == BlockKind::diagonal) {
      t[k] -= z[k].cwiseProduct(rp[k]).cwiseProduct(s_inv[k]);
    } else {
      const Matrix zrs = z[k] * rp[k] * s_inv[k];
      t[k] -= 0.5 * (zrs + zrs.transpose());
    }
  }
  const Vector rhs = rd - st.adjoint(t);
  dx = schur.solve(rhs);
  ds = minus(rp, st.apply(dx));
  dz = r;
  for (std::size_t k = 0; k < dz.size(); ++k) {
    if (st.blocks()[k].kind == BlockKind::diagonal) {
      dz[k] -= z[k].cwiseProduct(ds[k]).cwiseProduct(s_inv[k]);
    } else {
      const Matrix zds = z[k] * ds[k] * s_inv[k];
      dz[k] -= zds;
      dz[k] = 0.5 * (dz[k] + dz[k].transpose()).eval();
    }
  }
}

using StopRule = bool (*)(const Vector& x);

/// Path-following loop from a strictly feasible primal point.
SdpSolution run(const Structure& st, const SolveOptions& opt, Vector x, BlockMatrices s,
                StopRule early_stop = nullptr) {
  const Vector& c = st.objective();
  const double n_total = st.dimension();

  double zeta = 1.0;
  for (std::size_t k = 0; k < st.blocks().size(); ++k) {
    const auto& d = st.blocks()[k];
    for (int i : d.active) {
      double a = 0.0;
      for (const Term& t : d.terms[static_cast<std::size_t>(i)]) a += t.value * t.value;
      zeta = std::max(zeta, (1.0 + std::abs(c(i))) / (1.0 + std::sqrt(a)));
    }
  }
  BlockMatrices z = st.identity(zeta);

  SdpSolution sol;
  sol.x = x;
  BlockMatrices s_inv;

  for (int iter = 0;; ++iter) {
    BlockMatrices rp = minus(slack_at(st, x), s);
    const Vector rd = -c - st.adjoint(z);
    const double gap = inner(z, s);
    const double mu = gap / n_total;
    const double pobj = c.dot(x);

    sol.x = x;
    sol.objective = pobj;
    sol.duality_gap = gap;
    sol.primal_residual = norm(rp) / (1.0 + st.constant_norm());
    sol.dual_residual = rd.norm() / (1.0 + c.norm());
    sol.iterations = iter;

    if (early_stop != nullptr && early_stop(x)) {
      sol.status = Status::optimal;
      return sol;
    }
    if (sol.primal_residual <= opt.feas_tol && sol.dual_residual <= opt.feas_tol &&
        gap <= opt.gap_tol * (1.0 + std::abs(pobj))) {
      sol.status = Status::optimal;
      return sol;
    }
    if (iter >= opt.max_iterations) {
      sol.status = Status::max_iterations;
      return sol;
    }
    if (!invert(st, s, s_inv)) {
      sol.status = Status::numerical_failure;
      return sol;
    }

    Matrix schur_matrix = st.schur(z, s_inv);
    Eigen::LDLT<Matrix> schur(schur_matrix);
    if (schur.info() != Eigen::Success || !(schur.vectorD().array() > 0.0).all()) {
      sol.status = Status::numerical_failure;
      return sol;
    }

    // Predictor: R = -Z.
    BlockMatrices r = z;
    for (auto& b : r) b = -b;
    Vector dx;
    BlockMatrices ds, dz;
    direction(st, schur, z, s_inv, rp, rd, r, dx, ds, dz);
    const double ap_aff = std::min(1.0, max_step(st, s, ds));
    const double ad_aff = std::min(1.0, max_step(st, z, dz));
    if (std::isnan(ap_aff) || std::isnan(ad_aff)) {
      sol.status = Status::numerical_failure;
      return sol;
    }
    BlockMatrices s_aff = s, z_aff = z;
    for (std::size_t k = 0; k < s.size(); ++k) {
      s_aff[k] += ap_aff * ds[k];
      z_aff[k] += ad_aff * dz[k];
    }
    const double mu_aff = inner(z_aff, s_aff) / n_total;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), opt.centering_floor, 1.0);

    // Corrector: R = sigma mu S^{-1} - Z - dZa dSa S^{-1}.
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (st.blocks()[k].kind == BlockKind::diagonal) {
        r[k] = sigma * mu * s_inv[k] - z[k] - dz[k].cwiseProduct(ds[k]).cwiseProduct(s_inv[k]);
      } else {
        r[k] = sigma * mu * s_inv[k] - z[k] - dz[k] * ds[k] * s_inv[k];
      }
    }
    direction(st, schur, z, s_inv, rp, rd, r, dx, ds, dz);
    const double ap = std::min(1.0, opt.step_fraction * max_step(st, s, ds));
    const double ad = std::min(1.0, opt.step_fraction * max_step(st, z, dz));
    if (std::isnan(ap) || std::isnan(ad) || (ap < 1e-12 && ad < 1e-12)) {
      sol.status = Status::numerical_failure;
      return sol;
    }
    x += ap * dx;
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k] += ap * ds[k];
      z[k] += ad * dz[k];
    }
  }
}

bool phase1_done(const Vector& x) { return x(x.size() - 1) <= -0.25; }

/// Finds x with B - A(x) > 0 by minimizing t subject to
/// B - A(x) + t I >= 0 and t >= -1.
SdpSolution phase1(const LmiProblem& p, const SolveOptions& opt, const Vector& x0) {
  const int m = p.variables();
  LmiProblem aux(m + 1);
  aux.set_objective(m, 1.0);
  for (const Block& b : p.blocks()) {
    const int k = aux.add_block(b.kind, b.size);
    for (const Entry& e : b.constant) aux.add_constant(k, e.row, e.col, e.value);
    for (int i = 0; i < m; ++i) {
      for (const Entry& e : b.coefficients[static_cast<std::size_t>(i)]) {
        aux.add_coefficient(k, i, e.row, e.col, e.value);
      }
    }
    for (int r = 0; r < b.size; ++r) aux.add_coefficient(k, m, r, r, -1.0);
  }
  const int floor_block = aux.add_block(BlockKind::diagonal, 1);
  aux.add_constant(floor_block, 0, 0, 1.0);
  aux.add_coefficient(floor_block, m, 0, 0, -1.0);

  const Structure st(aux);
  Vector start(m + 1);
  start.head(m) = x0;
  start(m) = 0.0;
  const double lmin = block_min_eig(st, slack_at(st, start));
  start(m) = std::max(0.0, -lmin) + 1.0;
  SdpSolution sol = run(st, opt, start, slack_at(st, start), &phase1_done);
  return sol;
}

}  // namespace

SdpSolution solve(const LmiProblem& problem, const SolveOptions& options,
                  const std::optional<Vector>& start) {
  const Structure st(problem);
  const int m = problem.variables();
  if (start && start->size() != m) throw InvalidArgument("start point has wrong length");

  Vector x = start ? *start : Vector::Zero(m);
  int phase1_iterations = 0;
  if (block_min_eig(st, slack_at(st, x)) <= 0.0) {
    const SdpSolution aux = phase1(problem, options, x);
    phase1_iterations = aux.iterations;
    const double t = aux.x(m);
    if (aux.status == Status::optimal && t > options.infeasibility_threshold) {
      SdpSolution out;
      out.x = aux.x.head(m);
      out.objective = problem.objective().dot(out.x);
      out.status = Status::infeasible;
      out.phase1_iterations = phase1_iterations;
      return out;
    }
    if (aux.status != Status::optimal || t >= 0.0) {
      SdpSolution out;
      out.x = aux.x.head(m);
      out.objective = problem.objective().dot(out.x);
      out.status = aux.status == Status::optimal ? Status::numerical_failure : aux.status;
      out.phase1_iterations = phase1_iterations;
      return out;
    }
    x = aux.x.head(m);
  }
  SdpSolution sol = run(st, options, x, slack_at(st, x));
  sol.phase1_iterations = phase1_iterations;
  return sol;
}

FeasibilityReport verify(const LmiProblem& problem, const Vector& x) {
  if (x.size() != problem.variables()) throw InvalidArgument("x has wrong length");
  FeasibilityReport report;
  report.min_eig = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(problem.blocks().size()); ++k) {
    const Matrix slack = problem.slack_matrix(k, x);
    Vector values;
    if (problem.blocks()[static_cast<std::size_t>(k)].kind == BlockKind::diagonal) {
      values = slack.diagonal();
      std::sort(values.begin(), values.end());
    } else {
      values = symmetric_eigen(slack).values;
    }
    report.block_min_eig.push_back(values(0));
    report.min_eig = std::min(report.min_eig, values(0));
    report.block_eigenvalues.push_back(std::move(values));
  }
  report.objective = problem.objective().dot(x);
  return report;
}

}  // namespace cvcert::sdp
