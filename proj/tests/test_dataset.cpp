#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvcert/dataset.hpp"
#include "cvcert/errors.hpp"
#include "fourpartite_data.hpp"

using namespace cvcert;

namespace {

const std::filesystem::path kData = CVCERT_DATA_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kMinimal = R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]]})";

}  // namespace

TEST_CASE("bundled four-partite dataset") {
  const Dataset d = load_dataset(kData / "fourpartite.json");
  CHECK(d.n == 4);
  CHECK(d.name == "fourpartite");
  CHECK(d.gamma_xx(0, 0) == 1.09921);
  CHECK(d.gamma_xx(3, 3) == 1.064185);
  CHECK_FALSE(d.gamma_xp.has_value());
  CHECK(d.covariance().is_block_diagonal());

  // Matches the independent transcription in the tests.
  CHECK(d.gamma_xx == fourpartite::gamma_xx());
  CHECK(d.gamma_pp == fourpartite::gamma_pp());
  CHECK(*d.sigma_xx == fourpartite::sigma_xx());
  CHECK(*d.sigma_pp == fourpartite::sigma_pp());
  CHECK(*d.gamma_star_xx == fourpartite::star_xx());
  CHECK(*d.gamma_star_pp == fourpartite::star_pp());
  CHECK(*d.witness_x == fourpartite::witness_x());
  CHECK(*d.witness_p == fourpartite::witness_p());
  REQUIRE(d.maximizers.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(d.maximizers[i].spec == fourpartite::kRows[i].second);
    auto [x, p] = fourpartite::maximizer(static_cast<int>(i));
    CHECK(d.maximizers[i].x == x);
    CHECK(d.maximizers[i].p == p);
  }
  CHECK(d.maximizer_map().size() == 7);
  CHECK(d.maximizer_map().contains(Bipartition::parse(4, "2")));
  CHECK(d.witness().has_value());
  CHECK(d.reference_repair().has_value());
}

TEST_CASE("save after load reproduces the bundled files byte for byte") {
  for (const char* name : {"fourpartite.json", "vacuum2.json"}) {
    CAPTURE(name);
    const std::string text = slurp(kData / name);
    CHECK(format_dataset(parse_dataset(text)) == text);

    const auto tmp = std::filesystem::temp_directory_path() / (std::string("cvcert_rt_") + name);
    save_dataset(load_dataset(kData / name), tmp);
    CHECK(slurp(tmp) == text);
    std::filesystem::remove(tmp);
  }
}

TEST_CASE("shortest decimal round trip") {
  for (double v : {1.09921, -0.1606, 0.5, 0.0, 1e-5, 1.064185, 0.1 + 0.2, -123456.789, 6.02e23}) {
    CHECK(std::stod(shortest_decimal(v)) == v);
  }
  CHECK(shortest_decimal(0.021) == "0.021");
  CHECK(shortest_decimal(-0.15864) == "-0.15864");
}

TEST_CASE("syntax errors carry line and column") {
  const std::string text = slurp(kData / "fourpartite.json");
  const std::string truncated = text.substr(0, text.size() / 2);
  try {
    parse_dataset(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() > 1);
    CHECK(e.column() >= 1);
  }

  try {
    parse_dataset("{\n  \"n\": 1,\n  \"gamma_xx\": [[0.5]] oops\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 23);  // the 'o' of oops
  }
  CHECK_THROWS_AS(parse_dataset(""), ParseError);
}

TEST_CASE("content errors") {
  CHECK_NOTHROW(parse_dataset(kMinimal));
  CHECK_FALSE(parse_dataset(kMinimal).has_sigma());
  CHECK_THROWS_AS(parse_dataset(kMinimal).sigma(), InvalidArgument);

  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]]})"), InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 0, "gamma_xx": [], "gamma_pp": []})"), InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1.5, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]]})"), InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 2, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]]})"), InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [["a"]], "gamma_pp": [[0.5]]})"), InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]], "extra": 1})"),
                  InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"([1, 2])"), InvalidData);
  // Negative and zero sigma.
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]],
                                    "sigma_xx": [[-0.1]], "sigma_pp": [[0.1]]})"),
                  InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]],
                                    "sigma_xx": [[0.1]], "sigma_pp": [[0]]})"),
                  InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]],
                                    "sigma_xx": [[0.1]]})"),
                  InvalidData);
  // Witness problems.
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]],
                                    "witness_X": [[1]]})"),
                  InvalidData);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 1, "gamma_xx": [[0.5]], "gamma_pp": [[0.5]],
                                    "witness_X": [[-1]], "witness_P": [[1]]})"),
                  InvalidWitness);
  CHECK_THROWS_AS(parse_dataset(R"({"n": 2, "gamma_xx": [[0.5, 0], [0, 0.5]], "gamma_pp": [[0.5, 0], [0, 0.5]],
                                    "witness_X": [[1, 0], [0, 1]], "witness_P": [[1, 0], [0, 1]],
                                    "maximizers": {"1": {"X": [[1, 0], [0, 1]], "P": [[1, 0], [0, 1]]},
                                                   "2": {"X": [[1, 0], [0, 1]], "P": [[1, 0], [0, 1]]}}})"),
                  InvalidData);  // "1" and "2" are the same bipartition of two modes
  CHECK_THROWS_AS(parse_dataset(R"({"n": 2, "gamma_xx": [[0.5, 0], [0, 0.5]], "gamma_pp": [[0.5, 0], [0, 0.5]],
                                    "witness_X": [[1, 0], [0, 1]], "witness_P": [[1, 0], [0, 1]],
                                    "maximizers": {"1,2": {"X": [[1, 0], [0, 1]], "P": [[1, 0], [0, 1]]}}})"),
                  InvalidArgument);
  CHECK_THROWS_AS(load_dataset(kData / "does-not-exist.json"), InvalidArgument);
}

TEST_CASE("xp blocks and edits survive a round trip") {
  Dataset d = parse_dataset(kMinimal);
  d.gamma_xp = Matrix::Constant(1, 1, 0.125);
  d.sigma_xx = Matrix::Constant(1, 1, 0.01);
  d.sigma_pp = Matrix::Constant(1, 1, 0.02);
  d.sigma_xp = Matrix::Constant(1, 1, 0.03);
  d.name = "edited \"quoted\"";
  const Dataset back = parse_dataset(format_dataset(d));
  CHECK(back.name == d.name);
  CHECK(*back.gamma_xp == *d.gamma_xp);
  CHECK(back.sigma().has_xp());
  CHECK_FALSE(back.covariance().is_block_diagonal());
  CHECK(format_dataset(back) == format_dataset(d));
}
