#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvcert/gaussian.hpp"
#include "cvcert/gme.hpp"

namespace cvcert {

/// Contents of a dataset file, kept exactly as read so that a save after a
/// load reproduces the file. Domain objects are built on demand.
///
/// JSON keys: name, provenance, n, gamma_xx, gamma_xp, gamma_pp, sigma_xx,
/// sigma_xp, sigma_pp, gamma_star_xx, gamma_star_pp, witness_X, witness_P,
/// maximizers ({"<bipartition spec>": {"X": ..., "P": ...}}). Only n,
/// gamma_xx and gamma_pp are required. Matrices are arrays of rows.
struct Dataset {
  struct Maximizer {
    std::string spec;  // as written in the file
    Matrix x;
    Matrix p;
  };

  std::string name;
  std::string provenance;
  int n = 0;
  Matrix gamma_xx;
  std::optional<Matrix> gamma_xp;
  Matrix gamma_pp;
  std::optional<Matrix> sigma_xx;
  std::optional<Matrix> sigma_xp;
  std::optional<Matrix> sigma_pp;
  /// A published repaired matrix, kept for comparison.
  std::optional<Matrix> gamma_star_xx;
  std::optional<Matrix> gamma_star_pp;
  std::optional<Matrix> witness_x;
  std::optional<Matrix> witness_p;
  std::vector<Maximizer> maximizers;

  CovarianceMatrix covariance() const;
  bool has_sigma() const { return sigma_xx.has_value(); }
  /// Throws InvalidArgument when the dataset carries no sigma.
  SigmaMatrix sigma() const;
  std::optional<CovarianceMatrix> reference_repair() const;
  std::optional<MatrixWitness> witness() const;
  /// Keyed by canonical bipartition; empty map when none are stored.
  MaximizerMap maximizer_map() const;

  /// Builds every domain object once; throws on any inconsistency.
  void validate() const;
};

/// Parses and validates. Throws ParseError (with 1-based line and column)
/// for malformed JSON and InvalidData / InvalidArgument for content errors.
Dataset parse_dataset(std::string_view text);
Dataset load_dataset(const std::filesystem::path& path);

/// Canonical text: fixed key order, one matrix row per line, shortest
/// round-trip decimal numbers.
std::string format_dataset(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Shortest decimal string that parses back to the same double.
std::string shortest_decimal(double value);

}  // namespace cvcert
