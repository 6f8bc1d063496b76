#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hdgstokes/io.hpp"
#include "hdgstokes/krylov.hpp"
#include "hdgstokes/mms.hpp"
#include "hdgstokes/spectral.hpp"

namespace hdgstokes {

/// Driver configuration for the experiment reproductions. Results are
/// deterministic for a fixed (seed, spec) apart from timing columns.
struct StudySpec {
  enum class Kind { Cavity, Mms, Spectrum, Compare };
  Kind kind = Kind::Cavity;
  int levels = 4;
  SpaceConfig space;
  double alpha = 0.0;  ///< 0 selects the paper default for the variant
  std::vector<double> gammas = {0.0, 0.1};
  double tol = 1e-8;
  int max_iter = 500;
  unsigned seed = 0;
  double target_h0 = 0.0;  ///< 0 selects the kind default (about 200/128 elements)
  std::string outdir;      ///< empty: no files are written
  std::vector<PreconConfig> precons;  ///< empty selects kind defaults
  bool export_fields = false;
  bool export_matrices = false;
  bool export_residuals = false;
};

/// Lid-driven cavity iteration counts across a refinement hierarchy
/// (per preconditioner configuration).
CsvTable run_cavity(const StudySpec& spec);

/// Manufactured-solution accuracy and divergence study; both the two-field
/// and three-field paths are solved at every level.
CsvTable run_mms(const StudySpec& spec);

/// Spectral-equivalence diagnostics: (Sbar, Mbar), (Sbar, BAB), control rows,
/// H1-equivalence extremes of (Agamma, Abar), and the preconditioned-operator
/// intervals. Size-capped to coarse meshes.
CsvTable run_spectrum(const StudySpec& spec);

/// Normalized performance comparison over
/// {HDG, EDG, EDG-HDG} x {P3x3, PMbar, PBAB} x gammas on the manufactured
/// solution, mirroring the layout of the performance table.
CsvTable run_compare(const StudySpec& spec);

/// Mesh hierarchy used by the studies: seeded coarse Delaunay mesh plus
/// uniform refinements.
std::vector<Mesh> build_hierarchy(const Rect& domain, double target_h0, unsigned seed, int levels);

/// Default coarse resolutions (about 200 elements for the cavity square,
/// 128 for the unit square).
double default_cavity_target_h();
double default_mms_target_h();

}  // namespace hdgstokes
