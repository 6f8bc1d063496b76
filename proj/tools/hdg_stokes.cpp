#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hdgstokes/studies.hpp"

namespace {

using namespace hdgstokes;

Variant parse_variant(const std::string& s) {
  if (s == "hdg") return Variant::HDG;
  if (s == "edg") return Variant::EDG;
  if (s == "edg-hdg") return Variant::EDG_HDG;
  throw CLI::ValidationError("variant", "expected one of hdg, edg, edg-hdg");
}

PreconConfig parse_precon(const std::string& s, double gamma, const StationarySettings& st) {
  // family:rd, e.g. pmbar:exact-ad, pbab:exact-agamma, p3x3:exact-agamma,
  // pmbar:cycles-agamma, pmbar:cycles-ad
  static const std::map<std::string, PreconFamily> fams = {
      {"pmbar", PreconFamily::PMbar}, {"pbab", PreconFamily::PBAB}, {"p3x3", PreconFamily::P3x3}};
  static const std::map<std::string, RdChoice> rds = {{"exact-ad", RdChoice::ExactAd},
                                                      {"exact-agamma", RdChoice::ExactAgamma},
                                                      {"cycles-agamma", RdChoice::InnerIterAgamma},
                                                      {"cycles-ad", RdChoice::InnerIterAd}};
  const auto colon = s.find(':');
  const std::string fam = s.substr(0, colon);
  const std::string rd = colon == std::string::npos ? "exact-ad" : s.substr(colon + 1);
  if (!fams.count(fam) || !rds.count(rd))
    throw CLI::ValidationError("precon", "unknown preconditioner spec: " + s);
  return PreconConfig{fams.at(fam), rds.at(rd), gamma, st, MassTreatment::ExactFactorization};
}

void print_table(const CsvTable& table) {
  const auto& header = table.header();
  for (size_t i = 0; i < header.size(); ++i) std::cout << (i ? "," : "") << header[i];
  std::cout << "\n";
  for (const auto& row : table.rows()) {
    for (size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << row[i];
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pressure-robust HDG/EDG Stokes solver: condensed systems, block preconditioners, "
               "and spectral diagnostics"};
  app.require_subcommand(1);

  StudySpec spec;
  std::string variant = "hdg";
  std::vector<std::string> precon_specs;
  StationarySettings stationary;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--levels", spec.levels, "number of uniform refinement levels");
    cmd->add_option("-k,--degree", spec.space.k, "polynomial degree (velocity)");
    cmd->add_option("--variant", variant, "discretization: hdg | edg | edg-hdg");
    cmd->add_option("--alpha", spec.alpha, "stabilization parameter (default 6k^2 / 4k^2)");
    cmd->add_option("--gamma", spec.gammas, "grad-div augmentation values");
    cmd->add_option("--tol", spec.tol, "MINRES relative true-residual tolerance");
    cmd->add_option("--max-iter", spec.max_iter, "MINRES iteration cap");
    cmd->add_option("--seed", spec.seed, "mesh generator seed");
    cmd->add_option("--target-h", spec.target_h0, "coarse-level target mesh size");
    cmd->add_option("-o,--outdir", spec.outdir, "output directory for CSV/JSON");
    cmd->add_option("--precon", precon_specs,
                    "preconditioner specs family:rd (pmbar|pbab|p3x3 : exact-ad|exact-agamma|"
                    "cycles-agamma|cycles-ad); repeatable");
    cmd->add_option("--cycles", stationary.cycles, "stationary cycles per inner solve");
    cmd->add_option("--sweeps", stationary.sweeps, "SGS sweeps per smoothing leg");
    cmd->add_flag("--no-coarse", [&](size_t) { stationary.coarse_correction = false; },
                  "disable the vertex-space coarse correction in stationary cycles");
    cmd->add_flag("--export-fields", spec.export_fields, "write sampled (u, p) CSV files");
    cmd->add_flag("--export-matrices", spec.export_matrices, "write Matrix Market files");
    cmd->add_flag("--export-residuals", spec.export_residuals, "write residual history CSVs");
  };

  auto* cavity = app.add_subcommand("cavity", "lid-driven cavity iteration study");
  auto* mms = app.add_subcommand("mms", "manufactured-solution accuracy and divergence study");
  auto* spectrum = app.add_subcommand("spectrum", "spectral-equivalence diagnostics");
  auto* compare = app.add_subcommand("compare", "HDG/EDG/EDG-HDG preconditioner comparison");
  for (auto* cmd : {cavity, mms, spectrum, compare}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    spec.space.variant = parse_variant(variant);
    for (const auto& ps : precon_specs) {
      for (double g : spec.gammas) spec.precons.push_back(parse_precon(ps, g, stationary));
    }

    CsvTable table({""});
    if (cavity->parsed()) {
      spec.kind = StudySpec::Kind::Cavity;
      table = run_cavity(spec);
    } else if (mms->parsed()) {
      spec.kind = StudySpec::Kind::Mms;
      table = run_mms(spec);
    } else if (spectrum->parsed()) {
      spec.kind = StudySpec::Kind::Spectrum;
      table = run_spectrum(spec);
    } else {
      spec.kind = StudySpec::Kind::Compare;
      table = run_compare(spec);
    }
    print_table(table);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
