#include "hdgstokes/studies.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hdgstokes {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate(const StudySpec& spec) {
  if (spec.levels < 1) throw std::invalid_argument("study: at least one mesh level required");
  if (!(spec.tol > 0.0 && spec.tol < 1.0)) throw std::invalid_argument("study: tol must be in (0,1)");
}

AssemblyConfig resolve_assembly(const StudySpec& spec) {
  AssemblyConfig cfg = make_assembly_config(spec.space);
  if (spec.alpha > 0.0) cfg.alpha = spec.alpha;
  return cfg;
}

struct LevelContext {
  Mesh mesh;
  DofLayout layout;
  GlobalMatrices gm;
  Condensation cond;
  std::optional<CondensedSystem> two, three;
  double t_assembly = 0.0, t_condensation = 0.0;

  LevelContext(Mesh m, const SpaceConfig& space, const AssemblyConfig& acfg,
               const VectorField& body_force, const VectorField& boundary_velocity)
      : mesh(std::move(m)), layout(build_layout(mesh, space)) {
    auto t0 = Clock::now();
    gm = assemble(mesh, layout, acfg, body_force, boundary_velocity);
    t_assembly = seconds_since(t0);
    t0 = Clock::now();
    cond = condense_locals(mesh, layout, gm);
    t_condensation = seconds_since(t0);
  }

  const CondensedSystem& system(SystemKind kind) {
    const auto t0 = Clock::now();
    if (kind == SystemKind::TwoField) {
      if (!two) {
        two = build_two_field(mesh, layout, cond, gm);
        t_condensation += seconds_since(t0);
      }
      return *two;
    }
    if (!three) {
      three = build_three_field(mesh, layout, cond, gm);
      t_condensation += seconds_since(t0);
    }
    return *three;
  }
};

struct ConfigResult {
  Eigen::VectorXd solution;
  SolveReport report;
};

ConfigResult solve_config(LevelContext& ctx, const PreconConfig& pcfg, const StudySpec& spec) {
  const SystemKind kind =
      pcfg.family == PreconFamily::P3x3 ? SystemKind::ThreeField : SystemKind::TwoField;
  const CondensedSystem& sys = ctx.system(kind);
  BlockPreconditioner precon(sys, ctx.mesh, ctx.layout, ctx.gm, ctx.cond, pcfg);
  MinresOptions opts;
  opts.tol = spec.tol;
  opts.max_iter = spec.max_iter;
  ConfigResult res;
  res.solution = minres(make_operator(sys.matrix), sys.rhs, precon.op(), {sys.null_vector}, opts,
                        res.report);
  res.report.t_assembly = ctx.t_assembly;
  res.report.t_condensation = ctx.t_condensation;
  res.report.t_precon_setup = precon.setup_seconds();
  return res;
}

std::string precon_label(const PreconConfig& p) {
  std::string s = family_name(p.family);
  s += "/";
  s += rd_name(p.rd);
  return s;
}

std::vector<PreconConfig> default_cavity_precons(const std::vector<double>& gammas) {
  std::vector<PreconConfig> out;
  for (PreconFamily fam : {PreconFamily::PMbar, PreconFamily::PBAB}) {
    out.push_back({fam, RdChoice::ExactAd, 0.0, {}, MassTreatment::ExactFactorization});
    for (double g : gammas)
      out.push_back({fam, RdChoice::ExactAgamma, g, {}, MassTreatment::ExactFactorization});
  }
  return out;
}

void maybe_write(const StudySpec& spec, const CsvTable& table, const std::string& name,
                 std::vector<std::string>& outputs) {
  if (spec.outdir.empty()) return;
  std::filesystem::create_directories(spec.outdir);
  const std::string path = spec.outdir + "/" + name;
  table.write(path);
  outputs.push_back(name);
}

const char* kind_name(StudySpec::Kind k) {
  switch (k) {
    case StudySpec::Kind::Cavity: return "cavity";
    case StudySpec::Kind::Mms: return "mms";
    case StudySpec::Kind::Spectrum: return "spectrum";
    case StudySpec::Kind::Compare: return "compare";
  }
  return "?";
}

void write_manifest(const StudySpec& spec, const std::vector<std::string>& outputs) {
  if (spec.outdir.empty()) return;
  nlohmann::json j;
  j["software"] = "hdg-stokes 1.0.0";
  j["study"]["kind"] = kind_name(spec.kind);
  j["study"]["levels"] = spec.levels;
  j["study"]["k"] = spec.space.k;
  j["study"]["variant"] = variant_name(spec.space.variant);
  j["study"]["alpha"] = spec.alpha > 0 ? spec.alpha : default_alpha(spec.space);
  j["study"]["gammas"] = spec.gammas;
  j["study"]["tol"] = spec.tol;
  j["study"]["max_iter"] = spec.max_iter;
  j["study"]["seed"] = spec.seed;
  j["study"]["target_h0"] = spec.target_h0;
  j["outputs"] = outputs;
  std::ofstream os(spec.outdir + "/manifest.json");
  os << j.dump(2) << "\n";
}

void export_level_matrices(const StudySpec& spec, LevelContext& ctx, int level,
                           std::vector<std::string>& outputs) {
  if (!spec.export_matrices || spec.outdir.empty()) return;
  std::filesystem::create_directories(spec.outdir);
  auto name = [&](const std::string& base) {
    return "level" + std::to_string(level) + "_" + base + ".mtx";
  };
  const CondensedSystem& two = ctx.system(SystemKind::TwoField);
  const CondensedSystem& three = ctx.system(SystemKind::ThreeField);
  FullSystem full = build_full_system(ctx.mesh, ctx.layout, ctx.gm);
  struct Item {
    std::string base;
    const SparseMat* mat;
  } items[] = {{"two_field", &two.matrix},   {"three_field", &three.matrix},
               {"full", &full.matrix},       {"mbar", &ctx.gm.Mbar},
               {"a_ubar_ubar", &ctx.gm.A_ubar_ubar}};
  for (const auto& item : items) {
    write_matrix_market(spec.outdir + "/" + name(item.base), *item.mat, true);
    outputs.push_back(name(item.base));
  }
  write_matrix_market(spec.outdir + "/" + name("two_field_rhs"), two.rhs);
  write_matrix_market(spec.outdir + "/" + name("three_field_rhs"), three.rhs);
  write_matrix_market(spec.outdir + "/" + name("full_rhs"), full.rhs);
  write_matrix_market(spec.outdir + "/" + name("two_field_null"), two.null_vector);
  write_matrix_market(spec.outdir + "/" + name("three_field_null"), three.null_vector);
  outputs.insert(outputs.end(), {name("two_field_rhs"), name("three_field_rhs"), name("full_rhs"),
                                 name("two_field_null"), name("three_field_null")});
}

}  // namespace

double default_cavity_target_h() { return 0.2 * std::sqrt(2.0); }
double default_mms_target_h() { return std::sqrt(2.0) / 8.0; }

std::vector<Mesh> build_hierarchy(const Rect& domain, double target_h0, unsigned seed, int levels) {
  std::vector<Mesh> meshes;
  meshes.push_back(generate_unstructured(domain, target_h0, seed));
  for (int l = 1; l < levels; ++l) meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

CsvTable run_cavity(const StudySpec& spec) {
  validate(spec);
  const CavityProblem cavity = make_lid_driven_cavity();
  const AssemblyConfig acfg = resolve_assembly(spec);
  const double h0 = spec.target_h0 > 0 ? spec.target_h0 : default_cavity_target_h();
  auto precons = spec.precons.empty() ? default_cavity_precons(spec.gammas) : spec.precons;

  CsvTable table({"level", "elements", "dofs", "dim", "variant", "precon", "gamma", "iterations",
                  "converged", "final_true_residual", "t_assembly", "t_condensation",
                  "t_precon_setup", "t_iterations"});
  std::vector<std::string> outputs;
  auto meshes = build_hierarchy(cavity.domain, h0, spec.seed, spec.levels);
  for (int level = 0; level < spec.levels; ++level) {
    LevelContext ctx(std::move(meshes[level]), spec.space, acfg, nullptr,
                     cavity.boundary_velocity);
    export_level_matrices(spec, ctx, level, outputs);
    for (const auto& pcfg : precons) {
      ConfigResult res = solve_config(ctx, pcfg, spec);
      const bool three = pcfg.family == PreconFamily::P3x3;
      const long dofs = three ? ctx.layout.dofs_three_field_reported()
                              : ctx.layout.dofs_two_field_reported();
      const long dim = three ? ctx.layout.dim_three_field() : ctx.layout.dim_two_field();
      table.add_row({std::to_string(level), std::to_string(ctx.mesh.num_elements()),
                     std::to_string(dofs), std::to_string(dim), variant_name(spec.space.variant),
                     precon_label(pcfg), format_double(pcfg.gamma),
                     std::to_string(res.report.iterations), res.report.converged ? "1" : "0",
                     format_double(res.report.true_residuals.empty()
                                       ? 0.0
                                       : res.report.true_residuals.back()),
                     format_double(res.report.t_assembly), format_double(res.report.t_condensation),
                     format_double(res.report.t_precon_setup),
                     format_double(res.report.t_iterations)});
      if (spec.export_residuals && !spec.outdir.empty()) {
        std::filesystem::create_directories(spec.outdir);
        const std::string name = "residuals_l" + std::to_string(level) + "_" +
                                 precon_label(pcfg) + "_g" + format_double(pcfg.gamma) + ".csv";
        std::string sanitized = name;
        for (auto& ch : sanitized)
          if (ch == '/') ch = '-';
        write_residual_history(spec.outdir + "/" + sanitized, res.report.true_residuals,
                               res.report.precon_residuals);
        outputs.push_back(sanitized);
      }
    }
  }
  maybe_write(spec, table, "cavity.csv", outputs);
  write_manifest(spec, outputs);
  return table;
}

CsvTable run_mms(const StudySpec& spec) {
  validate(spec);
  const MmsSolution mms = make_sine_mms();
  const AssemblyConfig acfg = resolve_assembly(spec);
  const double h0 = spec.target_h0 > 0 ? spec.target_h0 : default_mms_target_h();

  std::vector<PreconConfig> precons = spec.precons;
  if (precons.empty()) {
    precons.push_back({PreconFamily::PMbar, RdChoice::ExactAd, 0.0, {}, MassTreatment::ExactFactorization});
    precons.push_back({PreconFamily::P3x3, RdChoice::ExactAgamma, 0.0, {}, MassTreatment::ExactFactorization});
  }

  CsvTable table({"level", "h_max", "elements", "dofs", "variant", "precon", "gamma", "iterations",
                  "err_u", "err_p", "div_norm", "t_assembly", "t_condensation", "t_precon_setup",
                  "t_iterations", "t_backsub"});
  std::vector<std::string> outputs;
  auto meshes = build_hierarchy(mms.domain, h0, spec.seed, spec.levels);
  for (int level = 0; level < spec.levels; ++level) {
    LevelContext ctx(std::move(meshes[level]), spec.space, acfg, mms.body_force, mms.velocity);
    export_level_matrices(spec, ctx, level, outputs);
    for (const auto& pcfg : precons) {
      ConfigResult res = solve_config(ctx, pcfg, spec);
      const bool three = pcfg.family == PreconFamily::P3x3;
      const CondensedSystem& sys =
          ctx.system(three ? SystemKind::ThreeField : SystemKind::TwoField);
      const auto t0 = Clock::now();
      ElementFields fields = back_substitute(sys, res.solution, ctx.mesh, ctx.layout, ctx.cond);
      res.report.t_backsub = seconds_since(t0);

      // Fix the pressure gauge to zero mean before measuring errors.
      Eigen::VectorXd ones = pressure_constant_coefficients(ctx.mesh, ctx.layout);
      const double mean = fields.p.dot(ones) / ctx.mesh.total_area();
      fields.p -= mean * ones;

      const double err_u = velocity_l2_error(ctx.mesh, ctx.layout, fields.u, mms.velocity);
      const double err_p = pressure_l2_error(ctx.mesh, ctx.layout, fields.p, mms.pressure);
      const double divn = divergence_norm(ctx.mesh, ctx.layout, fields.u);
      table.add_row({std::to_string(level), format_double(ctx.mesh.max_h()),
                     std::to_string(ctx.mesh.num_elements()),
                     std::to_string(three ? ctx.layout.dofs_three_field_reported()
                                          : ctx.layout.dofs_two_field_reported()),
                     variant_name(spec.space.variant), precon_label(pcfg),
                     format_double(pcfg.gamma), std::to_string(res.report.iterations),
                     format_double(err_u), format_double(err_p), format_double(divn),
                     format_double(res.report.t_assembly), format_double(res.report.t_condensation),
                     format_double(res.report.t_precon_setup),
                     format_double(res.report.t_iterations), format_double(res.report.t_backsub)});
      if (spec.export_fields && !spec.outdir.empty()) {
        std::filesystem::create_directories(spec.outdir);
        Eigen::MatrixXd samples = sample_fields(ctx.mesh, ctx.layout, fields.u, fields.p);
        CsvTable field_table({"x", "y", "u0", "u1", "p"});
        for (long r = 0; r < samples.rows(); ++r) {
          field_table.add_row({format_double(samples(r, 0)), format_double(samples(r, 1)),
                               format_double(samples(r, 2)), format_double(samples(r, 3)),
                               format_double(samples(r, 4))});
        }
        std::string name = "fields_l" + std::to_string(level) + "_" +
                           std::string(three ? "three" : "two") + ".csv";
        field_table.write(spec.outdir + "/" + name);
        outputs.push_back(name);
      }
    }
  }
  maybe_write(spec, table, "mms.csv", outputs);
  write_manifest(spec, outputs);
  return table;
}

CsvTable run_spectrum(const StudySpec& spec) {
  validate(spec);
  const CavityProblem cavity = make_lid_driven_cavity();
  const AssemblyConfig acfg = resolve_assembly(spec);
  // Coarser start than the solver studies: dense diagnostics.
  const double h0 = spec.target_h0 > 0 ? spec.target_h0 : 2.0 * std::sqrt(2.0) / 3.0;

  CsvTable table({"level", "elements", "pair", "dim", "lambda_min", "lambda_max"});
  std::vector<std::string> outputs;
  nlohmann::json jreports = nlohmann::json::array();

  auto meshes = build_hierarchy(cavity.domain, h0, spec.seed, spec.levels);
  for (int level = 0; level < spec.levels; ++level) {
    LevelContext ctx(std::move(meshes[level]), spec.space, acfg, nullptr,
                     cavity.boundary_velocity);
    if (ctx.layout.n_qbar > kMaxDenseTracePressure)
      throw std::runtime_error("run_spectrum: mesh level exceeds the dense size cap");
    const CondensedSystem& two = ctx.system(SystemKind::TwoField);

    Eigen::MatrixXd sbar = build_schur_sbar(ctx.mesh, ctx.layout, ctx.cond, two);
    Eigen::MatrixXd mbar = Eigen::MatrixXd(ctx.gm.Mbar);
    Eigen::MatrixXd bab = Eigen::MatrixXd(build_bab(ctx.mesh, ctx.layout, ctx.cond));
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(ctx.layout.n_qbar);

    std::vector<SpectrumReport> reports;
    reports.push_back(generalized_extremes(mbar, mbar, nullptr, "(Mbar,Mbar)"));
    reports.push_back(generalized_extremes(sbar, mbar, &ones, "(Sbar,Mbar)"));
    reports.push_back(generalized_extremes(sbar, bab, &ones, "(Sbar,BAB)"));

    // H1-equivalence of Agamma against Abar = Agamma(0).
    Eigen::MatrixXd abar =
        Eigen::MatrixXd(build_agamma(ctx.mesh, ctx.layout, ctx.gm, ctx.cond, 0.0));
    for (double g : spec.gammas) {
      if (g == 0.0) continue;
      Eigen::MatrixXd ag =
          Eigen::MatrixXd(build_agamma(ctx.mesh, ctx.layout, ctx.gm, ctx.cond, g));
      reports.push_back(generalized_extremes(ag, abar, nullptr,
                                             "(Agamma" + format_double(g) + ",Abar)"));
    }

    // Preconditioned-operator spectrum (PMbar with exact velocity block).
    {
      PreconConfig pcfg{PreconFamily::PMbar, RdChoice::ExactAd, 0.0, {},
                        MassTreatment::ExactFactorization};
      BlockPreconditioner precon(two, ctx.mesh, ctx.layout, ctx.gm, ctx.cond, pcfg);
      Eigen::VectorXd eig = preconditioned_spectrum(two, precon);
      SpectrumReport rneg, rpos;
      rneg.pair_name = "precon-negative";
      rpos.pair_name = "precon-positive";
      rneg.dimension = rpos.dimension = static_cast<int>(eig.size());
      rneg.lambda_min = eig.minCoeff();
      rneg.lambda_max = (eig.array() < 0).any()
                            ? eig(static_cast<Eigen::Index>((eig.array() < 0).count()) - 1)
                            : 0.0;
      rpos.lambda_max = eig.maxCoeff();
      rpos.lambda_min = (eig.array() > 0).any()
                            ? eig(eig.size() - (eig.array() > 0).count())
                            : 0.0;
      reports.push_back(rneg);
      reports.push_back(rpos);
    }

    for (auto& rep : reports) {
      rep.mesh_level = level;
      table.add_row({std::to_string(level), std::to_string(ctx.mesh.num_elements()), rep.pair_name,
                     std::to_string(rep.dimension), format_double(rep.lambda_min),
                     format_double(rep.lambda_max)});
      nlohmann::json jr;
      jr["level"] = level;
      jr["pair"] = rep.pair_name;
      jr["dimension"] = rep.dimension;
      jr["lambda_min"] = rep.lambda_min;
      jr["lambda_max"] = rep.lambda_max;
      if (rep.spectrum.size() > 0)
        jr["spectrum"] = std::vector<double>(rep.spectrum.data(),
                                             rep.spectrum.data() + rep.spectrum.size());
      jreports.push_back(jr);
    }
  }
  if (!spec.outdir.empty()) {
    std::filesystem::create_directories(spec.outdir);
    std::ofstream os(spec.outdir + "/spectrum.json");
    os << jreports.dump(2) << "\n";
    outputs.push_back("spectrum.json");
  }
  maybe_write(spec, table, "spectrum.csv", outputs);
  write_manifest(spec, outputs);
  return table;
}

CsvTable run_compare(const StudySpec& spec) {
  validate(spec);
  const MmsSolution mms = make_sine_mms();
  const double h0 = spec.target_h0 > 0 ? spec.target_h0 : default_mms_target_h();

  CsvTable table({"variant", "precon", "gamma", "system", "elements", "dofs", "iterations",
                  "err_u", "err_p", "div_norm", "err_u_rel", "err_p_rel", "its_rel", "dofs_rel",
                  "cpu_s", "cpu_rel"});
  std::vector<std::string> outputs;

  struct Row {
    std::string variant, precon, system;
    double gamma = 0.0;
    long elements = 0, dofs = 0;
    int iterations = 0;
    double err_u = 0, err_p = 0, divn = 0, cpu = 0;
  };
  std::vector<Row> rows;

  auto meshes = build_hierarchy(mms.domain, h0, spec.seed, spec.levels);
  const Mesh& mesh = meshes.back();  // compare runs on the finest requested level

  for (Variant variant : {Variant::HDG, Variant::EDG, Variant::EDG_HDG}) {
    SpaceConfig space{spec.space.k, variant};
    AssemblyConfig acfg = make_assembly_config(space);
    if (spec.alpha > 0) acfg.alpha = spec.alpha;
    LevelContext ctx(mesh, space, acfg, mms.body_force, mms.velocity);

    auto run_one = [&](PreconFamily fam, double gamma) {
      PreconConfig pcfg{fam, RdChoice::ExactAgamma, gamma, {}, MassTreatment::ExactFactorization};
      const auto t0 = Clock::now();
      ConfigResult res = solve_config(ctx, pcfg, spec);
      const bool three = fam == PreconFamily::P3x3;
      const CondensedSystem& sys =
          ctx.system(three ? SystemKind::ThreeField : SystemKind::TwoField);
      ElementFields fields = back_substitute(sys, res.solution, ctx.mesh, ctx.layout, ctx.cond);
      const double cpu = seconds_since(t0);

      Eigen::VectorXd ones = pressure_constant_coefficients(ctx.mesh, ctx.layout);
      fields.p -= (fields.p.dot(ones) / ctx.mesh.total_area()) * ones;

      Row row;
      row.variant = variant_name(variant);
      row.precon = family_name(fam);
      row.gamma = gamma;
      row.system = three ? "three-field" : "two-field";
      row.elements = ctx.mesh.num_elements();
      row.dofs = three ? ctx.layout.dofs_three_field_reported()
                       : ctx.layout.dofs_two_field_reported();
      row.iterations = res.report.iterations;
      row.err_u = velocity_l2_error(ctx.mesh, ctx.layout, fields.u, mms.velocity);
      row.err_p = pressure_l2_error(ctx.mesh, ctx.layout, fields.p, mms.pressure);
      row.divn = divergence_norm(ctx.mesh, ctx.layout, fields.u);
      row.cpu = cpu;
      rows.push_back(row);
    };

    for (double g : spec.gammas) run_one(PreconFamily::P3x3, g);
    for (double g : spec.gammas) run_one(PreconFamily::PMbar, g);
    for (double g : spec.gammas) run_one(PreconFamily::PBAB, g);
  }

  // Normalization baseline: HDG with P3x3 at the first configured gamma.
  const Row* base = nullptr;
  for (const auto& row : rows)
    if (row.variant == std::string("HDG") && row.precon == std::string("P3x3")) {
      base = &row;
      break;
    }
  if (base == nullptr) throw std::logic_error("run_compare: missing baseline row");

  for (const auto& row : rows) {
    table.add_row({row.variant, row.precon, format_double(row.gamma), row.system,
                   std::to_string(row.elements), std::to_string(row.dofs),
                   std::to_string(row.iterations), format_double(row.err_u),
                   format_double(row.err_p), format_double(row.divn),
                   format_double(row.err_u / base->err_u), format_double(row.err_p / base->err_p),
                   format_double(static_cast<double>(row.iterations) / base->iterations),
                   format_double(static_cast<double>(row.dofs) / base->dofs),
                   format_double(row.cpu), format_double(row.cpu / base->cpu)});
  }
  maybe_write(spec, table, "compare.csv", outputs);
  write_manifest(spec, outputs);
  return table;
}

}  // namespace hdgstokes
