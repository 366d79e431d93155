#include "cvcert/entanglement.hpp"

#include <cmath>

#include "cvcert/errors.hpp"
#include "cvcert/parallel.hpp"

namespace cvcert {

namespace {

void require_block_diagonal(const CovarianceMatrix& gamma, const char* what) {
  if (!gamma.is_block_diagonal()) {
    throw UnsupportedShape(std::string(what) +
                           " needs a zero xp block; apply partial_transpose and "
                           "physicality_defect for matrices with xp correlations");
  }
}

void require_modes(const CovarianceMatrix& gamma, const Bipartition& b) {
  if (gamma.modes() != b.modes()) {
    throw InvalidArgument("bipartition mode count does not match covariance matrix");
  }
}

struct PptSpectrum {
  double min_eig;
  int multiplicity;
  Vector eigvec;
};

PptSpectrum ppt_spectrum(const CovarianceMatrix& gamma, const Bipartition& b) {
  const SymmetricEigen eig = symmetric_eigen(ppt_matrix(gamma, b));
  const double lmin = eig.values(0);
  const double spread = 1e-9 * std::max(1.0, std::abs(lmin));
  int multiplicity = 1;
  while (multiplicity < eig.values.size() && eig.values(multiplicity) - lmin <= spread) {
    ++multiplicity;
  }
  return {lmin, multiplicity, eig.vectors.col(0)};
}

double group_overlap(const Vector& h, const Vector& g, const std::vector<int>& modes) {
  double s = 0.0;
  for (int m : modes) s += h(m - 1) * g(m - 1);
  return s;
}

}  // namespace

WitnessVector::WitnessVector(Vector h, Vector g) : h_(std::move(h)), g_(std::move(g)) {
  if (h_.size() != g_.size() || h_.size() == 0) {
    throw InvalidArgument("witness vectors h and g must have the same nonzero length");
  }
  const double norm = std::sqrt(h_.squaredNorm() + g_.squaredNorm());
  if (norm == 0.0) throw InvalidArgument("witness vectors are both zero");
  h_ /= norm;
  g_ /= norm;
  // Pin the overall sign: first largest-magnitude component positive.
  double pivot = 0.0;
  for (const Vector* v : {&h_, &g_}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      if (std::abs((*v)(i)) > std::abs(pivot) + 1e-12) pivot = (*v)(i);
    }
  }
  if (pivot < 0.0) {
    h_ = -h_;
    g_ = -g_;
  }
}

WitnessVector WitnessVector::from_eigenvector(const Vector& z) {
  if (z.size() % 2 != 0) throw InvalidArgument("eigenvector length must be even");
  const auto n = z.size() / 2;
  return WitnessVector(z.head(n), z.tail(n));
}

Matrix ppt_matrix(const CovarianceMatrix& gamma, const Bipartition& b, int sign) {
  require_modes(gamma, b);
  require_block_diagonal(gamma, "ppt_matrix");
  return central_block_matrix(gamma, b.signs(), sign);
}

std::optional<WitnessVector> extract_witness(const CovarianceMatrix& gamma, const Bipartition& b,
                                             double tol) {
  const PptSpectrum spec = ppt_spectrum(gamma, b);
  if (spec.min_eig >= -tol) return std::nullopt;
  return WitnessVector::from_eigenvector(spec.eigvec);
}

WitnessEvaluation evaluate_witness(const WitnessVector& w, const Bipartition& b,
                                   const CovarianceMatrix& gamma, const SigmaMatrix& sigma) {
  require_modes(gamma, b);
  require_block_diagonal(gamma, "confidence");
  if (w.modes() != gamma.modes() || sigma.modes() != gamma.modes()) {
    throw InvalidArgument("witness, sigma and gamma mode counts differ");
  }
  const Vector& h = w.h();
  const Vector& g = w.g();

  WitnessEvaluation ev;
  ev.bound = std::abs(group_overlap(h, g, b.first())) + std::abs(group_overlap(h, g, b.second()));
  ev.measured = h.dot(gamma.xx() * h) + g.dot(gamma.pp() * g);

  const Vector h2 = h.cwiseAbs2();
  const Vector g2 = g.cwiseAbs2();
  const double variance =
      h2.dot(sigma.xx().cwiseAbs2() * h2) + g2.dot(sigma.pp().cwiseAbs2() * g2);
  ev.sigma_hg = std::sqrt(variance);
  if (!(ev.sigma_hg > 0.0)) throw DegenerateSigma("witness standard deviation is zero");
  ev.s0 = (ev.bound - ev.measured) / ev.sigma_hg;
  return ev;
}

BipartitionVerdict confidence(const WitnessVector& w, const Bipartition& b,
                              const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                              double threshold) {
  const WitnessEvaluation ev = evaluate_witness(w, b, gamma, sigma);
  const PptSpectrum spec = ppt_spectrum(gamma, b);
  return BipartitionVerdict{b, spec.min_eig, spec.multiplicity, w, ev, ev.s0 >= threshold};
}

std::vector<Bipartition> enumerate_bipartitions(int modes) {
  if (modes < 2) throw InvalidArgument("bipartitions need at least two modes");
  std::vector<Bipartition> out;
  for (int k = 1; 2 * k <= modes; ++k) {
    // Lexicographic k-subsets of {1..modes}.
    std::vector<int> subset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i + 1;
    while (true) {
      if (2 * k < modes || subset.front() == 1) out.emplace_back(modes, subset);
      int i = k - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] == modes - k + i + 1) --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) {
        subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

std::vector<BipartitionVerdict> scan(const CovarianceMatrix& gamma, const SigmaMatrix& sigma,
                                     double threshold, std::vector<Bipartition> bipartitions,
                                     double tol) {
  require_block_diagonal(gamma, "scan");
  if (bipartitions.empty()) bipartitions = enumerate_bipartitions(gamma.modes());

  std::vector<std::optional<BipartitionVerdict>> slots(bipartitions.size());
  parallel_for(bipartitions.size(), [&](std::size_t i) {
    const Bipartition& b = bipartitions[i];
    const PptSpectrum spec = ppt_spectrum(gamma, b);
    BipartitionVerdict v{b, spec.min_eig, spec.multiplicity, std::nullopt, std::nullopt, false};
    if (spec.min_eig < -tol) {
      v.witness = WitnessVector::from_eigenvector(spec.eigvec);
      v.evaluation = evaluate_witness(*v.witness, b, gamma, sigma);
      v.certified = v.evaluation->s0 >= threshold;
    }
    slots[i] = std::move(v);
  });

  std::vector<BipartitionVerdict> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace cvcert
