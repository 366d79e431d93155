#include <doctest.h>

#include "cvcert/entanglement.hpp"
#include "cvcert/errors.hpp"
#include "cvcert/gme.hpp"
#include "fourpartite_data.hpp"
#include "oracles.hpp"

using namespace cvcert;

namespace {

Matrix sub(const Matrix& m, const std::vector<int>& group) {
  const auto k = static_cast<Eigen::Index>(group.size());
  Matrix out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(group[a] - 1, group[b] - 1);
  return out;
}

/// tr sqrt(sqrt(X_I) P_I sqrt(X_I)) with Jacobi square roots.
double oracle_trace_sqrt(const Matrix& x, const Matrix& p, const std::vector<int>& group) {
  const Matrix r = oracle::psd_sqrt(sub(x, group));
  const Matrix inner = r * sub(p, group) * r;
  return oracle::jacobi(0.5 * (inner + inner.transpose())).values.cwiseMax(0.0).cwiseSqrt().sum();
}

MaximizerMap appendix_maximizers() {
  MaximizerMap out;
  for (int row = 0; row < 7; ++row) {
    auto [x, p] = fourpartite::maximizer(row);
    out.emplace(Bipartition::parse(4, fourpartite::kRows[static_cast<std::size_t>(row)].second),
                MatrixWitness(x, p));
  }
  return out;
}

}  // namespace

TEST_CASE("matrix witness validation") {
  const Matrix e1 = (Vector(2) << 1, 0).finished() * (Vector(2) << 1, 0).finished().transpose();
  CHECK_NOTHROW(MatrixWitness(e1, Matrix::Zero(2, 2)));
  CHECK_THROWS_AS(MatrixWitness(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), InvalidWitness);
  Matrix neg = Matrix::Identity(2, 2);
  neg(1, 1) = -0.01;
  CHECK_THROWS_AS(MatrixWitness(neg, Matrix::Identity(2, 2)), InvalidWitness);
  CHECK_THROWS_AS(MatrixWitness(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), InvalidArgument);

  auto [x, p] = fourpartite::maximizer(0);
  const MatrixWitness w(x, p);
  CHECK(w.asymmetry_defect() == doctest::Approx(1e-5).epsilon(1e-6));
  CHECK(w.p()(1, 2) == w.p()(2, 1));
  CHECK(w.p()(1, 2) == doctest::Approx(-0.158635));
}

TEST_CASE("trace of the square-root pair") {
  Matrix e1 = Matrix::Zero(4, 4);
  e1(0, 0) = 1;
  CHECK(trace_sqrt_pair(e1, e1, {1}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trace_sqrt_pair(e1, e1, {2, 3}) == 0.0);

  auto [x, p] = fourpartite::maximizer(0);
  CHECK(trace_sqrt_pair(x, p, {1}) == doctest::Approx(std::sqrt(0.29331 * 0.20468)).epsilon(1e-12));

  CHECK_THROWS_AS(trace_sqrt_pair(e1, e1, {}), InvalidArgument);
  CHECK_THROWS_AS(trace_sqrt_pair(e1, e1, {5}), InvalidArgument);
  Matrix neg = Matrix::Identity(2, 2);
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(trace_sqrt_pair(neg, Matrix::Identity(2, 2), {1, 2}), InvalidWitness);
  // Round-off sized negatives are clipped.
  Matrix tiny = Matrix::Identity(2, 2);
  tiny(1, 1) = -1e-12;
  CHECK(trace_sqrt_pair(tiny, Matrix::Identity(2, 2), {1, 2}) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("property: rank-one identities") {
  oracle::Gen gen(51);
  double worst_trace = 0, worst_g = 0, worst_sigma = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = gen.integer(2, 6);
    const Vector h = gen.vector(n), g = gen.vector(n);
    const Bipartition b = gen.bipartition(n);
    const std::vector<int>& group = trial % 2 ? b.first() : b.second();
    double dot = 0;
    for (int m : group) dot += h(m - 1) * g(m - 1);
    const Matrix x = h * h.transpose(), p = g * g.transpose();
    worst_trace = std::max(worst_trace, std::abs(trace_sqrt_pair(x, p, group) - std::abs(dot)));

    const CovarianceMatrix gamma = gen.physical_block_diagonal(n);
    const SigmaMatrix sigma = gen.sigma(n);
    const MatrixWitness w = MatrixWitness::rank_one(h, g);
    const double quad = h.dot(gamma.xx() * h) + g.dot(gamma.pp() * g);
    worst_g = std::max(worst_g, std::abs(measured_G(w, gamma) - quad));
    const Vector h2 = h.cwiseAbs2(), g2 = g.cwiseAbs2();
    const double sd = std::sqrt(h2.dot(sigma.xx().cwiseAbs2() * h2) + g2.dot(sigma.pp().cwiseAbs2() * g2));
    worst_sigma = std::max(worst_sigma, std::abs(sigma_XP(w, sigma) - sd));
  }
  CHECK(worst_trace <= 1e-8);
  CHECK(worst_g <= 1e-8);
  CHECK(worst_sigma <= 1e-8);
}

TEST_CASE("property: trace-sqrt pair is symmetric and matches the oracle") {
  oracle::Gen gen(52);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(1, 6);
    const Matrix x = gen.psd(n, 0.3), p = gen.psd(n, 0.3);
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i + 1;
    const std::vector<int> group = n > 1 ? gen.bipartition(n).second() : all;
    const double t = trace_sqrt_pair(x, p, group);
    CHECK(std::abs(t - trace_sqrt_pair(p, x, group)) <= 1e-9);
    CHECK(std::abs(t - oracle_trace_sqrt(x, p, group)) <= 1e-9);
  }
}

TEST_CASE("measured value and its standard deviation") {
  const MatrixWitness id(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  CHECK(measured_G(id, CovarianceMatrix::vacuum(1)) == doctest::Approx(1.0));

  Matrix e1 = Matrix::Zero(2, 2);
  e1(0, 0) = 1;
  const MatrixWitness w(e1, Matrix::Zero(2, 2));
  Matrix sxx(2, 2), spp = Matrix::Constant(2, 2, 0.3);
  sxx << 0.07, 0.1, 0.1, 0.2;
  CHECK(sigma_XP(w, SigmaMatrix(sxx, spp)) == doctest::Approx(0.07).epsilon(1e-14));

  const CovarianceMatrix with_xp(Matrix::Identity(2, 2), Matrix::Constant(2, 2, 0.1), Matrix::Identity(2, 2));
  CHECK_THROWS_AS(measured_G(w, with_xp), UnsupportedShape);
  CHECK_THROWS_AS(measured_G(w, CovarianceMatrix::vacuum(3)), InvalidArgument);
}

TEST_CASE("property: rank-one witness without maximizers equals the vector confidence") {
  oracle::Gen gen(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(2, 6);
    const CovarianceMatrix gamma = gen.physical_block_diagonal(n);
    const SigmaMatrix sigma = gen.sigma(n);
    const Bipartition b = gen.bipartition(n);
    const WitnessVector v(gen.vector(n), gen.vector(n));
    const auto verdicts = evaluate(MatrixWitness::rank_one(v.h(), v.g()), std::nullopt, gamma, sigma, {b});
    REQUIRE(verdicts.size() == 1);
    CHECK(verdicts[0].lower_bound_only);
    CHECK(std::abs(verdicts[0].violation - evaluate_witness(v, b, gamma, sigma).s0) <= 1e-9);
  }
}

TEST_CASE("property: the vacuum never violates") {
  oracle::Gen gen(54);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(2, 5);
    const MatrixWitness w(gen.psd(n, 0.2), gen.psd(n, 0.2));
    for (const auto& v : evaluate(w, std::nullopt, CovarianceMatrix::vacuum(n),
                                  SigmaMatrix::uniform(n, 0.01), enumerate_bipartitions(n))) {
      CHECK(v.bound_B <= v.measured_G + 1e-12);
    }
  }
}

TEST_CASE("four-partite genuine entanglement witness") {
  const MatrixWitness w(fourpartite::witness_x(), fourpartite::witness_p());
  const auto verdicts = evaluate(w, appendix_maximizers(), fourpartite::published_repair(),
                                 fourpartite::sigma(), enumerate_bipartitions(4));
  REQUIRE(verdicts.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CAPTURE(i);
    CHECK(verdicts[i].bipartition.label() == fourpartite::kRows[i].first);
    CHECK_FALSE(verdicts[i].lower_bound_only);
    REQUIRE(verdicts[i].maximizer.has_value());
    CHECK(std::abs(verdicts[i].violation / fourpartite::kGmeViolations[i] - 1.0) <= 0.05);
    CHECK(verdicts[i].violation ==
          doctest::Approx((verdicts[i].bound_B - verdicts[i].measured_G) / verdicts[i].sigma_XP));
    // B is evaluated at the maximizer, independently recomputed.
    auto [x, p] = fourpartite::maximizer(static_cast<int>(i));
    const MatrixWitness m(x, p);
    const double b = oracle_trace_sqrt(m.x(), m.p(), verdicts[i].bipartition.first()) +
                     oracle_trace_sqrt(m.x(), m.p(), verdicts[i].bipartition.second());
    CHECK(verdicts[i].bound_B == doctest::Approx(b).epsilon(1e-10));
  }
  CHECK(certifies_genuine(verdicts, 3.0));
  CHECK_FALSE(certifies_genuine(verdicts, 3.1));
  CHECK_FALSE(certifies_genuine({}, 3.0));
}

TEST_CASE("missing maximizers") {
  const MatrixWitness w(fourpartite::witness_x(), fourpartite::witness_p());
  MaximizerMap partial = appendix_maximizers();
  partial.erase(Bipartition::parse(4, "1,4"));
  const auto bps = enumerate_bipartitions(4);
  CHECK_THROWS_AS(evaluate(w, partial, fourpartite::published_repair(), fourpartite::sigma(), bps, true),
                  InvalidArgument);
  const auto lenient = evaluate(w, partial, fourpartite::published_repair(), fourpartite::sigma(), bps, false);
  CHECK(lenient[6].lower_bound_only);
  CHECK_FALSE(lenient[0].lower_bound_only);
  // The base pair gives a weaker bound than the maximizer.
  const auto full = evaluate(w, appendix_maximizers(), fourpartite::published_repair(), fourpartite::sigma(), bps);
  CHECK(lenient[6].bound_B <= full[6].bound_B + 1e-12);
}
