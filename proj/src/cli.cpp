#include "cvcert/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvcert/dataset.hpp"
#include "cvcert/entanglement.hpp"
#include "cvcert/errors.hpp"
#include "cvcert/gme.hpp"
#include "cvcert/repair.hpp"

namespace cvcert {

namespace {

using Json = nlohmann::ordered_json;

/// A number as printed, plus the value JSON reports carry. Both come from
/// the same string, so text and JSON agree to the printed precision.
struct Num {
  std::string text;
  double value;
};

Num from_text(std::string text) {
  if (text == "-0" || text == "-0.000000") text.erase(0, 1);
  const double v = std::stod(text);
  return {std::move(text), v};
}

/// Six significant digits.
Num sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return from_text(buf);
}

/// Six digits after the decimal point.
Num fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return from_text(buf);
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(sig6(m(r, c)).value);
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_matrix(std::ostream& out, const std::string& title, const Matrix& m) {
  out << title << ":\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << " ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << " " << std::setw(11) << sig6(m(r, c)).text;
    out << "\n";
  }
}

/// Names a position of the assembled 2n x 2n matrix, e.g. "xx(1,4)".
std::string element_name(int n, int row, int col) {
  const char* block = row < n ? (col < n ? "xx" : "xp") : (col < n ? "px" : "pp");
  return std::string(block) + "(" + std::to_string(row % n + 1) + "," + std::to_string(col % n + 1) +
         ")";
}

std::string dataset_label(const Dataset& d) {
  return (d.name.empty() ? std::string("(unnamed)") : d.name) + " (n = " + std::to_string(d.n) + ")";
}

/// Tolerance used to decide whether the saturation count includes an
/// element: within this relative distance of s*.
constexpr double kSaturationSlack = 5e-3;

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool json = false;
};

Dataset open(const std::string& path, Context& ctx, bool uses_witness = false) {
  Dataset d = load_dataset(path);
  const CovarianceMatrix gamma = d.covariance();
  if (gamma.asymmetry_defect() > kAsymmetryWarning) {
    ctx.err << "warning: gamma blocks are asymmetric by up to " << sig6(gamma.asymmetry_defect()).text
            << "; using the symmetrized matrix\n";
  }
  if (!uses_witness) return d;
  if (auto w = d.witness(); w && w->asymmetry_defect() > kAsymmetryWarning) {
    ctx.err << "warning: witness matrices are asymmetric by up to "
            << sig6(w->asymmetry_defect()).text << "; using the symmetrized pair\n";
  }
  for (const auto& [b, m] : d.maximizer_map()) {
    if (m.asymmetry_defect() > kAsymmetryWarning) {
      ctx.err << "warning: maximizer for " << b.label() << " is asymmetric by up to "
              << sig6(m.asymmetry_defect()).text << "; using the symmetrized pair\n";
    }
  }
  return d;
}

SigmaMatrix require_sigma(const Dataset& d, const std::string& command) {
  if (!d.has_sigma()) {
    throw InvalidArgument(command +
                          " needs the measurement standard deviations sigma_xx and sigma_pp: "
                          "the confidence level divides the witness violation by the standard "
                          "deviation propagated from sigma, and the dataset has none");
  }
  return d.sigma();
}

void emit_json(Context& ctx, const Json& j) { ctx.out << j.dump(2) << "\n"; }

// ---------------------------------------------------------------- check

int cmd_check(Context& ctx, const std::string& path, double tol) {
  const Dataset d = open(path, ctx);
  const CovarianceMatrix gamma = d.covariance();
  const PhysicalityReport full = physicality_defect(gamma, tol);
  const PhysicalityReport weak = weak_physicality_defect(gamma, tol);
  const Num lmin = fixed6(full.min_eig);
  const Num weak_min = fixed6(weak.min_eig);
  if (ctx.json) {
    emit_json(ctx, Json{{"command", "check"},
                        {"dataset", d.name},
                        {"n", d.n},
                        {"tolerance", tol},
                        {"physical", full.is_physical},
                        {"min_eig", lmin.value},
                        {"weak_physical", weak.is_physical},
                        {"weak_min_eig", weak_min.value}});
    return kExitOk;
  }
  ctx.out << "dataset: " << dataset_label(d) << "\n";
  ctx.out << (full.is_physical ? "physical" : "not physical") << " (λmin = " << lmin.text << ")\n";
  ctx.out << "weak test: " << (weak.is_physical ? "passes" : "fails") << " (λmin = " << weak_min.text
          << ")\n";
  return kExitOk;
}

// --------------------------------------------------------------- repair

Json deviation_json(const DeviationReport& r, int n) {
  return Json{{"max_ratio", sig6(r.max_ratio).value},
              {"argmax", element_name(n, r.argmax_row, r.argmax_col)},
              {"threshold", sig6(r.threshold).value},
              {"count_above", r.count_above},
              {"independent_elements", r.independent_elements}};
}

void print_deviation(std::ostream& out, const DeviationReport& r, int n, bool weighted_by_sigma) {
  out << "deviation " << (weighted_by_sigma ? "|gamma - measured| / sigma" : "|gamma - measured|")
      << ":\n";
  out << "  max " << sig6(r.max_ratio).text << " at " << element_name(n, r.argmax_row, r.argmax_col)
      << "\n";
  out << "  " << r.count_above << " of " << r.independent_elements << " independent elements >= "
      << sig6(r.threshold).text << "\n";
}

int cmd_repair(Context& ctx, const std::string& path, bool unweighted, const std::string& out_path) {
  const Dataset d = open(path, ctx);
  const CovarianceMatrix measured = d.covariance();
  std::optional<SigmaMatrix> sigma;
  if (!unweighted) {
    if (!d.has_sigma()) {
      throw InvalidArgument("repair needs sigma_xx and sigma_pp to weight the deviations; "
                            "pass --unweighted to use plain absolute deviations");
    }
    sigma = d.sigma();
  }
  const RepairResult r = repair(measured, sigma);
  // Diagnostics always use the measured sigma when there is one.
  const std::optional<SigmaMatrix> diag_sigma = d.has_sigma() ? std::optional(d.sigma()) : sigma;
  const DeviationReport dev =
      deviation_report(measured, r.gamma_star, diag_sigma, r.s_star * (1.0 - kSaturationSlack));

  if (!out_path.empty()) {
    Dataset repaired = d;
    repaired.name = d.name.empty() ? "repaired" : d.name + "-repaired";
    repaired.provenance = "minimax repair (" + std::string(unweighted ? "unweighted" : "weighted") +
                          ") of " + (d.name.empty() ? path : d.name);
    repaired.gamma_xx = r.gamma_star.xx();
    repaired.gamma_pp = r.gamma_star.pp();
    repaired.gamma_xp = r.gamma_star.is_block_diagonal()
                            ? std::nullopt
                            : std::optional<Matrix>(r.gamma_star.xp());
    repaired.gamma_star_xx.reset();
    repaired.gamma_star_pp.reset();
    save_dataset(repaired, out_path);
  }

  const Num s_star = sig6(r.s_star);
  if (ctx.json) {
    Json g{{"xx", matrix_json(r.gamma_star.xx())}, {"pp", matrix_json(r.gamma_star.pp())}};
    if (!r.gamma_star.is_block_diagonal()) g["xp"] = matrix_json(r.gamma_star.xp());
    emit_json(ctx, Json{{"command", "repair"},
                        {"dataset", d.name},
                        {"n", d.n},
                        {"weighted", r.weighted},
                        {"status", sdp::to_string(r.solution.status)},
                        {"iterations", r.solution.iterations},
                        {"phase1_iterations", r.solution.phase1_iterations},
                        {"duality_gap", sig6(r.solution.duality_gap).value},
                        {"s_star", s_star.value},
                        {"gamma_star", g},
                        {"deviation", deviation_json(dev, d.n)}});
    return kExitOk;
  }
  ctx.out << "dataset: " << dataset_label(d) << "\n";
  ctx.out << "repair: " << (r.weighted ? "weighted" : "unweighted") << ", status "
          << sdp::to_string(r.solution.status) << ", " << r.solution.iterations << " iterations ("
          << r.solution.phase1_iterations << " phase-1), duality gap "
          << sig6(r.solution.duality_gap).text << "\n";
  ctx.out << "s* = " << s_star.text << "\n";
  print_matrix(ctx.out, "gamma*_xx", r.gamma_star.xx());
  if (!r.gamma_star.is_block_diagonal()) print_matrix(ctx.out, "gamma*_xp", r.gamma_star.xp());
  print_matrix(ctx.out, "gamma*_pp", r.gamma_star.pp());
  print_deviation(ctx.out, dev, d.n, diag_sigma.has_value());
  if (!out_path.empty()) ctx.out << "wrote " << out_path << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- baseline

int cmd_baseline(Context& ctx, const std::string& path) {
  const Dataset d = open(path, ctx);
  const CovarianceMatrix measured = d.covariance();
  const PhysicalityReport before = physicality_defect(measured);
  const CovarianceMatrix shifted = baseline_shift(measured);
  const double shift = before.is_physical ? 0.0 : 1.001 * std::abs(before.min_eig);
  const std::optional<SigmaMatrix> sigma = d.has_sigma() ? std::optional(d.sigma()) : std::nullopt;
  const DeviationReport dev = deviation_report(measured, shifted, sigma, 0.0);
  const int n = d.n;

  std::vector<Num> xx_ratios;
  std::vector<Num> pp_ratios;
  for (int i = 0; i < n; ++i) {
    xx_ratios.push_back(sig6(dev.ratios(i, i)));
    pp_ratios.push_back(sig6(dev.ratios(n + i, n + i)));
  }
  if (ctx.json) {
    Json xx = Json::array();
    Json pp = Json::array();
    for (int i = 0; i < n; ++i) {
      xx.push_back(xx_ratios[static_cast<std::size_t>(i)].value);
      pp.push_back(pp_ratios[static_cast<std::size_t>(i)].value);
    }
    emit_json(ctx, Json{{"command", "baseline"},
                        {"dataset", d.name},
                        {"n", n},
                        {"min_eig", sig6(before.min_eig).value},
                        {"shift", sig6(shift).value},
                        {"weighted_by_sigma", sigma.has_value()},
                        {"diagonal_ratios", Json{{"xx", xx}, {"pp", pp}}},
                        {"max_ratio", sig6(dev.max_ratio).value},
                        {"argmax", element_name(n, dev.argmax_row, dev.argmax_col)}});
    return kExitOk;
  }
  ctx.out << "dataset: " << dataset_label(d) << "\n";
  ctx.out << "λmin = " << sig6(before.min_eig).text << ", diagonal shift " << sig6(shift).text
          << "\n";
  ctx.out << "diagonal deviation" << (sigma ? " / sigma" : "") << ":\n  xx:";
  for (const auto& v : xx_ratios) ctx.out << " " << v.text;
  ctx.out << "\n  pp:";
  for (const auto& v : pp_ratios) ctx.out << " " << v.text;
  ctx.out << "\nmax " << sig6(dev.max_ratio).text << " at "
          << element_name(n, dev.argmax_row, dev.argmax_col) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- matrices

CovarianceMatrix select_matrix(const Dataset& d, const std::string& which, bool unweighted,
                               std::string& description) {
  const CovarianceMatrix measured = d.covariance();
  if (which == "raw") {
    description = "raw";
    return measured;
  }
  if (which == "baseline") {
    description = "baseline shift";
    return baseline_shift(measured);
  }
  if (which == "reference") {
    auto ref = d.reference_repair();
    if (!ref) throw InvalidArgument("dataset has no gamma_star_xx / gamma_star_pp");
    description = "stored reference repair";
    return *ref;
  }
  // repaired
  std::optional<SigmaMatrix> sigma;
  if (!unweighted) sigma = d.sigma();
  description = unweighted ? "repaired (unweighted)" : "repaired (weighted)";
  return repair(measured, sigma).gamma_star;
}

const std::vector<std::string> kMatrixChoices = {"raw", "repaired", "baseline", "reference"};

std::vector<Bipartition> parse_bipartitions(int n, const std::vector<std::string>& specs) {
  std::vector<Bipartition> out;
  for (const auto& s : specs) out.push_back(Bipartition::parse(n, s));
  return out;
}

// ------------------------------------------------------------- entangle

int cmd_entangle(Context& ctx, const std::string& path, const std::string& which, bool unweighted,
                 double threshold, const std::vector<std::string>& specs) {
  const Dataset d = open(path, ctx);
  const SigmaMatrix sigma = require_sigma(d, "entangle");
  std::string description;
  const CovarianceMatrix gamma = select_matrix(d, which, unweighted, description);
  const auto verdicts = scan(gamma, sigma, threshold, parse_bipartitions(d.n, specs));

  int certified = 0;
  for (const auto& v : verdicts) certified += v.certified ? 1 : 0;
  const bool all = certified == static_cast<int>(verdicts.size());

  if (ctx.json) {
    Json rows = Json::array();
    for (const auto& v : verdicts) {
      Json row{{"bipartition", v.bipartition.label()},
               {"spec", v.bipartition.spec()},
               {"ppt_min_eig", sig6(v.ppt_min_eig).value},
               {"eigen_multiplicity", v.eigen_multiplicity}};
      if (v.evaluation) {
        row["h"] = Json::array();
        row["g"] = Json::array();
        for (Eigen::Index i = 0; i < v.witness->h().size(); ++i) {
          row["h"].push_back(sig6(v.witness->h()(i)).value);
          row["g"].push_back(sig6(v.witness->g()(i)).value);
        }
        row["bound"] = sig6(v.evaluation->bound).value;
        row["measured"] = sig6(v.evaluation->measured).value;
        row["sigma_hg"] = sig6(v.evaluation->sigma_hg).value;
        row["s0"] = sig6(v.evaluation->s0).value;
      } else {
        row["s0"] = nullptr;
      }
      row["certified"] = v.certified;
      rows.push_back(std::move(row));
    }
    emit_json(ctx, Json{{"command", "entangle"},
                        {"dataset", d.name},
                        {"n", d.n},
                        {"matrix", description},
                        {"threshold", sig6(threshold).value},
                        {"bipartitions", rows},
                        {"certified", certified},
                        {"total", verdicts.size()}});
    return all ? kExitOk : kExitBelowThreshold;
  }

  ctx.out << "dataset: " << dataset_label(d) << ", matrix: " << description << "\n";
  ctx.out << std::left << std::setw(14) << "bipartition" << std::setw(14) << "ppt λmin"
          << std::setw(12) << "s0" << "certified\n";
  bool degenerate = false;
  for (const auto& v : verdicts) {
    std::string label = v.bipartition.label();
    if (v.eigen_multiplicity > 1) {
      label += "*";
      degenerate = true;
    }
    ctx.out << std::setw(14) << label << std::setw(14) << sig6(v.ppt_min_eig).text << std::setw(12)
            << (v.evaluation ? sig6(v.evaluation->s0).text : "-")
            << (v.certified ? "yes" : (v.evaluation ? "no" : "no (PPT)")) << "\n";
  }
  ctx.out << std::right;
  if (degenerate) ctx.out << "* most negative eigenvalue is degenerate; witness is one choice\n";
  ctx.out << certified << "/" << verdicts.size() << " certified at s0 >= " << sig6(threshold).text
          << "\n";
  return all ? kExitOk : kExitBelowThreshold;
}

// -------------------------------------------------------------- genuine

int cmd_genuine(Context& ctx, const std::string& path, const std::string& which, bool unweighted,
                double threshold) {
  const Dataset d = open(path, ctx, /*uses_witness=*/true);
  const SigmaMatrix sigma = require_sigma(d, "genuine");
  const auto witness = d.witness();
  if (!witness) throw InvalidArgument("genuine needs witness_X and witness_P in the dataset");
  std::string description;
  // The witness was built for one particular repaired matrix; when the
  // dataset stores it, that is the natural default.
  const std::string matrix = which.empty() ? (d.reference_repair() ? "reference" : "repaired") : which;
  const CovarianceMatrix gamma = select_matrix(d, matrix, unweighted, description);
  const MaximizerMap maxima = d.maximizer_map();
  const std::optional<MaximizerMap> supplied = maxima.empty() ? std::nullopt : std::optional(maxima);
  const auto verdicts =
      evaluate(*witness, supplied, gamma, sigma, enumerate_bipartitions(d.n), /*strict=*/true);
  const bool genuine = certifies_genuine(verdicts, threshold);
  double min_violation = verdicts.front().violation;
  for (const auto& v : verdicts) min_violation = std::min(min_violation, v.violation);

  if (ctx.json) {
    Json rows = Json::array();
    for (const auto& v : verdicts) {
      rows.push_back(Json{{"bipartition", v.bipartition.label()},
                          {"spec", v.bipartition.spec()},
                          {"bound_B", sig6(v.bound_B).value},
                          {"measured_G", sig6(v.measured_G).value},
                          {"sigma_XP", sig6(v.sigma_XP).value},
                          {"violation", sig6(v.violation).value},
                          {"lower_bound_only", v.lower_bound_only}});
    }
    emit_json(ctx, Json{{"command", "genuine"},
                        {"dataset", d.name},
                        {"n", d.n},
                        {"matrix", description},
                        {"threshold", sig6(threshold).value},
                        {"bipartitions", rows},
                        {"min_violation", sig6(min_violation).value},
                        {"certified", genuine}});
    return genuine ? kExitOk : kExitBelowThreshold;
  }

  ctx.out << "dataset: " << dataset_label(d) << ", matrix: " << description << "\n";
  ctx.out << std::left << std::setw(14) << "bipartition" << std::setw(12) << "B" << std::setw(12)
          << "G" << std::setw(12) << "sigma" << "violation\n";
  bool lower_only = false;
  for (const auto& v : verdicts) {
    ctx.out << std::setw(14) << v.bipartition.label() << std::setw(12) << sig6(v.bound_B).text
            << std::setw(12) << sig6(v.measured_G).text << std::setw(12) << sig6(v.sigma_XP).text
            << sig6(v.violation).text << (v.lower_bound_only ? " (lower bound)" : "") << "\n";
    lower_only = lower_only || v.lower_bound_only;
  }
  ctx.out << std::right;
  if (lower_only) ctx.out << "no maximizers supplied: B evaluated at (X, P) only\n";
  ctx.out << "genuine multipartite entanglement "
          << (genuine ? "certified" : "not certified") << " at " << sig6(threshold).text
          << " (min violation " << sig6(min_violation).text << ")\n";
  return genuine ? kExitOk : kExitBelowThreshold;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covariance-matrix repair and entanglement certification", "cvcert"};
  app.require_subcommand(1);

  std::string file;
  std::string format = "text";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "dataset JSON file")->required();
    sub->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
  };

  double tol = kPhysicalityTol;
  auto* check = app.add_subcommand("check", "physicality of the dataset's covariance matrix");
  add_common(check);
  check->add_option("--tol", tol, "eigenvalue tolerance")->capture_default_str();

  bool unweighted = false;
  std::string out_path;
  auto* rep = app.add_subcommand("repair", "most probable physical covariance matrix");
  add_common(rep);
  rep->add_flag("--unweighted", unweighted, "ignore sigma (all weights 1)");
  rep->add_option("--out", out_path, "write the repaired dataset here");

  auto* base = app.add_subcommand("baseline", "diagonal-shift repair and its deviations");
  add_common(base);

  std::string which = "raw";
  double threshold = kDefaultConfidence;
  std::vector<std::string> specs;
  auto* ent = app.add_subcommand("entangle", "PPT witness scan with confidence levels");
  add_common(ent);
  ent->add_option("--matrix", which, "covariance matrix to test")
      ->check(CLI::IsMember(kMatrixChoices))
      ->capture_default_str();
  ent->add_flag("--unweighted", unweighted, "with --matrix repaired: unweighted repair");
  ent->add_option("--threshold", threshold, "confidence needed to certify")->capture_default_str();
  ent->add_option("--bipartition", specs,
                  "modes of one side, comma separated (repeatable; default: all)");

  std::string genuine_matrix;
  auto* gen = app.add_subcommand("genuine", "genuine multipartite entanglement witness");
  add_common(gen);
  gen->add_option("--matrix", genuine_matrix,
                  "covariance matrix to test (default: the stored reference repair if present, "
                  "else repaired)")
      ->check(CLI::IsMember(kMatrixChoices));
  gen->add_flag("--unweighted", unweighted, "with --matrix repaired: unweighted repair");
  gen->add_option("--threshold", threshold, "violation needed for every bipartition")
      ->capture_default_str();

  std::vector<const char*> argv{"cvcert"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  Context ctx{out, err, format == "json"};
  try {
    if (*check) return cmd_check(ctx, file, tol);
    if (*rep) return cmd_repair(ctx, file, unweighted, out_path);
    if (*base) return cmd_baseline(ctx, file);
    if (*ent) return cmd_entangle(ctx, file, which, unweighted, threshold, specs);
    if (*gen) return cmd_genuine(ctx, file, genuine_matrix, unweighted, threshold);
  } catch (const ParseError& e) {
    err << "error: " << file << ": " << e.what() << "\n";
    return kExitError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace cvcert
