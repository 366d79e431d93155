#include "cvcert/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cvcert/errors.hpp"

namespace cvcert {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array kKnownKeys = {
    "name",          "provenance",    "n",         "gamma_xx",  "gamma_xp",
    "gamma_pp",      "sigma_xx",      "sigma_xp",  "sigma_pp",  "gamma_star_xx",
    "gamma_star_pp", "witness_X",     "witness_P", "maximizers"};

void position_of(std::string_view text, std::size_t offset, int& line, int& column) {
  offset = std::min(offset, text.size());
  line = 1;
  column = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
}

Matrix read_matrix(const Json& j, int n, const std::string& key) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw InvalidData(key + ": expected " + std::to_string(n) + " rows");
  }
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw InvalidData(key + ": row " + std::to_string(r + 1) + " must hold " +
                        std::to_string(n) + " numbers");
    }
    for (int c = 0; c < n; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw InvalidData(key + ": entry (" + std::to_string(r + 1) + "," +
                          std::to_string(c + 1) + ") is not a number");
      }
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

std::optional<Matrix> optional_matrix(const Json& doc, const char* key, int n) {
  if (!doc.contains(key)) return std::nullopt;
  return read_matrix(doc.at(key), n, key);
}

std::string optional_string(const Json& doc, const char* key) {
  if (!doc.contains(key)) return {};
  if (!doc.at(key).is_string()) throw InvalidData(std::string(key) + " must be a string");
  return doc.at(key).get<std::string>();
}

void write_matrix(std::ostringstream& out, const Matrix& m, const std::string& indent) {
  out << "[\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << indent << "  [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ", ";
      out << shortest_decimal(m(r, c));
    }
    out << "]" << (r + 1 < m.rows() ? ",\n" : "\n");
  }
  out << indent << "]";
}

}  // namespace

std::string shortest_decimal(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

CovarianceMatrix Dataset::covariance() const {
  return CovarianceMatrix(gamma_xx, gamma_xp.value_or(Matrix::Zero(n, n)), gamma_pp);
}

SigmaMatrix Dataset::sigma() const {
  if (!has_sigma()) throw InvalidArgument("dataset '" + name + "' carries no sigma matrices");
  if (sigma_xp) return SigmaMatrix(*sigma_xx, *sigma_xp, *sigma_pp);
  return SigmaMatrix(*sigma_xx, *sigma_pp);
}

std::optional<CovarianceMatrix> Dataset::reference_repair() const {
  if (!gamma_star_xx) return std::nullopt;
  return CovarianceMatrix::block_diagonal(*gamma_star_xx, *gamma_star_pp);
}

std::optional<MatrixWitness> Dataset::witness() const {
  if (!witness_x) return std::nullopt;
  return MatrixWitness(*witness_x, *witness_p);
}

MaximizerMap Dataset::maximizer_map() const {
  MaximizerMap out;
  for (const auto& m : maximizers) {
    const Bipartition b = Bipartition::parse(n, m.spec);
    if (!out.emplace(b, MatrixWitness(m.x, m.p)).second) {
      throw InvalidData("duplicate maximizer for bipartition " + b.label());
    }
  }
  return out;
}

void Dataset::validate() const {
  if (n < 1) throw InvalidData("n must be a positive integer");
  if (sigma_xx.has_value() != sigma_pp.has_value()) {
    throw InvalidData("sigma_xx and sigma_pp must be given together");
  }
  if (sigma_xp && !sigma_xx) throw InvalidData("sigma_xp given without sigma_xx and sigma_pp");
  if (gamma_star_xx.has_value() != gamma_star_pp.has_value()) {
    throw InvalidData("gamma_star_xx and gamma_star_pp must be given together");
  }
  if (witness_x.has_value() != witness_p.has_value()) {
    throw InvalidData("witness_X and witness_P must be given together");
  }
  if (!maximizers.empty() && !witness_x) throw InvalidData("maximizers given without a witness");
  (void)covariance();
  if (has_sigma()) (void)sigma();
  (void)reference_repair();
  (void)witness();
  (void)maximizer_map();
}

Dataset parse_dataset(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    int line = 0;
    int column = 0;
    // byte is the 1-based position just past the offending character.
    position_of(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
    // Drop nlohmann's "[json.exception...] parse error at line L, column C: " prefix.
    std::string detail = e.what();
    if (const auto pos = detail.find(": "); pos != std::string::npos) detail.erase(0, pos + 2);
    throw ParseError("malformed JSON at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + detail,
                     line, column);
  }
  if (!doc.is_object()) throw InvalidData("dataset must be a JSON object");
  for (const auto& item : doc.items()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), item.key()) == kKnownKeys.end()) {
      throw InvalidData("unknown key '" + item.key() + "'");
    }
  }
  for (const char* key : {"n", "gamma_xx", "gamma_pp"}) {
    if (!doc.contains(key)) throw InvalidData(std::string("missing required key '") + key + "'");
  }
  if (!doc.at("n").is_number_integer() || doc.at("n").get<long long>() < 1 ||
      doc.at("n").get<long long>() > 4096) {
    throw InvalidData("n must be a positive integer");
  }

  Dataset d;
  d.n = doc.at("n").get<int>();
  d.name = optional_string(doc, "name");
  d.provenance = optional_string(doc, "provenance");
  d.gamma_xx = read_matrix(doc.at("gamma_xx"), d.n, "gamma_xx");
  d.gamma_pp = read_matrix(doc.at("gamma_pp"), d.n, "gamma_pp");
  d.gamma_xp = optional_matrix(doc, "gamma_xp", d.n);
  d.sigma_xx = optional_matrix(doc, "sigma_xx", d.n);
  d.sigma_xp = optional_matrix(doc, "sigma_xp", d.n);
  d.sigma_pp = optional_matrix(doc, "sigma_pp", d.n);
  d.gamma_star_xx = optional_matrix(doc, "gamma_star_xx", d.n);
  d.gamma_star_pp = optional_matrix(doc, "gamma_star_pp", d.n);
  d.witness_x = optional_matrix(doc, "witness_X", d.n);
  d.witness_p = optional_matrix(doc, "witness_P", d.n);
  if (doc.contains("maximizers")) {
    const Json& maxi = doc.at("maximizers");
    if (!maxi.is_object()) throw InvalidData("maximizers must be an object");
    for (const auto& item : maxi.items()) {
      const Json& pair = item.value();
      if (!pair.is_object() || !pair.contains("X") || !pair.contains("P") || pair.size() != 2) {
        throw InvalidData("maximizer '" + item.key() + "' must hold exactly X and P");
      }
      d.maximizers.push_back({item.key(), read_matrix(pair.at("X"), d.n, "maximizers." + item.key() + ".X"),
                              read_matrix(pair.at("P"), d.n, "maximizers." + item.key() + ".P")});
    }
  }
  d.validate();
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string format_dataset(const Dataset& d) {
  std::ostringstream out;
  bool first = true;
  auto key = [&](const char* k) {
    out << (first ? "{\n" : ",\n") << "  \"" << k << "\": ";
    first = false;
  };
  auto matrix = [&](const char* k, const std::optional<Matrix>& m) {
    if (!m) return;
    key(k);
    write_matrix(out, *m, "  ");
  };
  if (!d.name.empty()) {
    key("name");
    out << Json(d.name).dump();
  }
  if (!d.provenance.empty()) {
    key("provenance");
    out << Json(d.provenance).dump();
  }
  key("n");
  out << d.n;
  matrix("gamma_xx", d.gamma_xx);
  matrix("gamma_xp", d.gamma_xp);
  matrix("gamma_pp", d.gamma_pp);
  matrix("sigma_xx", d.sigma_xx);
  matrix("sigma_xp", d.sigma_xp);
  matrix("sigma_pp", d.sigma_pp);
  matrix("gamma_star_xx", d.gamma_star_xx);
  matrix("gamma_star_pp", d.gamma_star_pp);
  matrix("witness_X", d.witness_x);
  matrix("witness_P", d.witness_p);
  if (!d.maximizers.empty()) {
    key("maximizers");
    out << "{\n";
    for (std::size_t i = 0; i < d.maximizers.size(); ++i) {
      const auto& m = d.maximizers[i];
      out << "    " << Json(m.spec).dump() << ": {\n      \"X\": ";
      write_matrix(out, m.x, "      ");
      out << ",\n      \"P\": ";
      write_matrix(out, m.p, "      ");
      out << "\n    }" << (i + 1 < d.maximizers.size() ? ",\n" : "\n");
    }
    out << "  }";
  }
  out << "\n}\n";
  return out.str();
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << format_dataset(data);
  if (!out) throw InvalidArgument("write failed for " + path.string());
}

}  // namespace cvcert
