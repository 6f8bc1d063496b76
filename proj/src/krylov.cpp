#include "hdgstokes/krylov.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hdgstokes/quadrature.hpp"

namespace hdgstokes {

LinearOperator make_operator(const SparseMat& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("make_operator: square matrix required");
  return LinearOperator{A.rows(), [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; }};
}

LinearOperator identity_operator(Eigen::Index n) {
  return LinearOperator{n, [](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x; }};
}

const char* family_name(PreconFamily f) {
  switch (f) {
    case PreconFamily::PMbar: return "PMbar";
    case PreconFamily::PBAB: return "PBAB";
    case PreconFamily::P3x3: return "P3x3";
  }
  return "?";
}

const char* rd_name(RdChoice r) {
  switch (r) {
    case RdChoice::ExactAd: return "exact-Ad";
    case RdChoice::ExactAgamma: return "exact-Agamma";
    case RdChoice::InnerIterAgamma: return "cycles-Agamma";
    case RdChoice::InnerIterAd: return "cycles-Ad";
  }
  return "?";
}

namespace {

std::vector<Eigen::VectorXd> orthonormalize(const std::vector<Eigen::VectorXd>& basis) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& v : basis) {
    Eigen::VectorXd w = v;
    for (const auto& z : out) w -= z * z.dot(w);
    for (const auto& z : out) w -= z * z.dot(w);  // second pass
    double n = w.norm();
    if (n > 1e-14 * std::sqrt(static_cast<double>(w.size()))) out.push_back(w / n);
  }
  return out;
}

}  // namespace

Eigen::VectorXd minres(const LinearOperator& A, const Eigen::VectorXd& b,
                       const LinearOperator& precon, const std::vector<Eigen::VectorXd>& deflation,
                       const MinresOptions& options, SolveReport& report) {
  const Eigen::Index n = A.n;
  if (b.size() != n) throw std::invalid_argument("minres: size mismatch");
  const auto basis = orthonormalize(deflation);
  auto project = [&basis](Eigen::VectorXd& v) {
    for (const auto& z : basis) v -= z * z.dot(v);
  };
  auto apply_op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    A.apply(x, y);
    project(y);
  };
  auto apply_precon = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    precon.apply(x, y);
    project(y);
  };

  report = SolveReport{};
  const auto t0 = std::chrono::steady_clock::now();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rhs = b;
  project(rhs);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    report.converged = true;
    return x;
  }

  Eigen::VectorXd v_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v_cur = rhs;
  Eigen::VectorXd z_cur(n);
  apply_precon(v_cur, z_cur);
  double gz = v_cur.dot(z_cur);
  if (gz < 0.0) throw std::runtime_error("minres: preconditioner is not positive definite");
  double gamma_cur = std::sqrt(gz);
  double gamma_prev = 1.0;
  const double gamma1 = gamma_cur;

  double eta = gamma_cur;
  double s_prev = 0.0, s_cur = 0.0, c_prev = 1.0, c_cur = 1.0;
  Eigen::VectorXd w_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_cur = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd Az(n), rt(n);

  for (int j = 1; j <= options.max_iter; ++j) {
    Eigen::VectorXd z = z_cur / gamma_cur;
    apply_op(z, Az);
    const double delta = z.dot(Az);

    Eigen::VectorXd v_next = Az - (delta / gamma_cur) * v_cur;
    if (j > 1) v_next -= (gamma_cur / gamma_prev) * v_prev;
    Eigen::VectorXd z_next(n);
    apply_precon(v_next, z_next);
    gz = v_next.dot(z_next);
    if (gz < -1e-13 * v_next.squaredNorm())
      throw std::runtime_error("minres: preconditioner is not positive definite");
    const double gamma_next = std::sqrt(std::max(gz, 0.0));

    const double alpha0 = c_cur * delta - c_prev * s_cur * gamma_cur;
    const double alpha1 = std::hypot(alpha0, gamma_next);
    if (alpha1 == 0.0) {  // exact breakdown: current iterate is already optimal
      report.converged = report.true_residuals.empty() || report.true_residuals.back() <= options.tol;
      break;
    }
    const double alpha2 = s_cur * delta + c_prev * c_cur * gamma_cur;
    const double alpha3 = s_prev * gamma_cur;
    const double c_next = alpha0 / alpha1;
    const double s_next = gamma_next / alpha1;

    Eigen::VectorXd w_next = (z - alpha3 * w_prev - alpha2 * w_cur) / alpha1;
    x += (c_next * eta) * w_next;
    eta = -s_next * eta;

    v_prev.swap(v_cur);
    v_cur.swap(v_next);
    z_cur.swap(z_next);
    gamma_prev = gamma_cur;
    gamma_cur = gamma_next;
    c_prev = c_cur;
    c_cur = c_next;
    s_prev = s_cur;
    s_cur = s_next;
    w_prev.swap(w_cur);
    w_cur.swap(w_next);

    report.iterations = j;
    report.precon_residuals.push_back(std::abs(eta) / gamma1);
    apply_op(x, rt);
    rt = rhs - rt;
    const double true_rel = rt.norm() / bnorm;
    report.true_residuals.push_back(true_rel);

    const double crit = options.stop_on_preconditioned ? report.precon_residuals.back() : true_rel;
    if (crit <= options.tol) {
      report.converged = true;
      break;
    }
    if (gamma_next == 0.0) {
      report.converged = true_rel <= options.tol;
      break;
    }
  }

  project(x);
  report.t_iterations = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return x;
}

Eigen::VectorXd deflated_direct_solve(const SparseMat& A, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& null_vector) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd w = null_vector.normalized();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nonZeros() + 2 * n);
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMat::InnerIterator it(A, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i) != 0.0) {
      trips.emplace_back(i, n, w(i));
      trips.emplace_back(n, i, w(i));
    }
  }
  SparseMat aug(n + 1, n + 1);
  aug.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<SparseMat> lu(aug);
  if (lu.info() != Eigen::Success) throw std::runtime_error("deflated_direct_solve: factorization failed");
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = b - w * w.dot(b);
  rhs(n) = 0.0;
  Eigen::VectorXd sol = lu.solve(rhs);
  return sol.head(n);
}

ExactSpdSolver::ExactSpdSolver(const SparseMat& A) {
  ldlt_.compute(A);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("ExactSpdSolver: factorization failed (matrix not SPD?)");
}

ExactSpdSolver::ExactSpdSolver(const SparseMat& A, const Eigen::VectorXd& kernel) {
  kernel_ = kernel.normalized();
  // Pin the dof with the largest kernel weight and factorize the rest.
  Eigen::Index pin = 0;
  kernel_.cwiseAbs().maxCoeff(&pin);
  pinned_ = static_cast<int>(pin);
  const Eigen::Index n = A.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nonZeros());
  auto remap = [&](Eigen::Index i) { return i < pin ? i : i - 1; };
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      if (it.row() == pin || it.col() == pin) continue;
      trips.emplace_back(remap(it.row()), remap(it.col()), it.value());
    }
  }
  SparseMat reduced(n - 1, n - 1);
  reduced.setFromTriplets(trips.begin(), trips.end());
  ldlt_.compute(reduced);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("ExactSpdSolver: pinned factorization failed");
}

void ExactSpdSolver::solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  if (pinned_ < 0) {
    z = ldlt_.solve(r);
    return;
  }
  const Eigen::Index n = r.size();
  Eigen::VectorXd rr = r - kernel_ * kernel_.dot(r);
  Eigen::VectorXd reduced(n - 1);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != pinned_) reduced(k++) = rr(i);
  Eigen::VectorXd y = ldlt_.solve(reduced);
  z.setZero(n);
  k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != pinned_) z(i) = y(k++);
  z -= kernel_ * kernel_.dot(z);
}

StationaryCycleSolver::StationaryCycleSolver(const SparseMat& A, const SparseMat& prolongation,
                                             const StationarySettings& settings)
    : A_(A), settings_(settings) {
  diag_ = A_.diagonal();
  if ((diag_.array() <= 0).any())
    throw std::runtime_error("StationaryCycleSolver: nonpositive diagonal entry");
  if (settings.coarse_correction && prolongation.cols() > 0) {
    P_ = prolongation;
    SparseMat coarse = SparseMat(P_.transpose()) * A * P_;
    coarse_.compute(coarse);
    if (coarse_.info() != Eigen::Success)
      throw std::runtime_error("StationaryCycleSolver: coarse factorization failed");
    has_coarse_ = true;
  }
}

void StationaryCycleSolver::sgs_sweep(Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  const Eigen::Index n = A_.rows();
  // Forward Gauss-Seidel.
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = b(i);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A_, i); it; ++it)
      if (it.col() != i) s -= it.value() * x(it.col());
    x(i) = s / diag_(i);
  }
  // Backward.
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = b(i);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A_, i); it; ++it)
      if (it.col() != i) s -= it.value() * x(it.col());
    x(i) = s / diag_(i);
  }
}

void StationaryCycleSolver::solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  z.setZero(r.size());
  for (int cycle = 0; cycle < settings_.cycles; ++cycle) {
    for (int s = 0; s < settings_.sweeps; ++s) sgs_sweep(z, r);
    if (has_coarse_) {
      Eigen::VectorXd res = r - A_ * z;
      z += P_ * coarse_.solve(P_.transpose() * res);
    }
    for (int s = 0; s < settings_.sweeps; ++s) sgs_sweep(z, r);
  }
}

SparseMat build_p1_trace_prolongation(const Mesh& mesh, const DofLayout& layout) {
  // Interior vertices only; boundary hats vanish with the Dirichlet condition.
  std::vector<bool> on_boundary(mesh.num_vertices(), false);
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const Facet& fc = mesh.facet(f);
    if (fc.is_boundary()) {
      on_boundary[fc.vertices[0]] = true;
      on_boundary[fc.vertices[1]] = true;
    }
  }
  std::vector<int> vidx(mesh.num_vertices(), -1);
  int nc = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!on_boundary[v]) vidx[v] = nc++;

  std::vector<Eigen::Triplet<double>> trips;
  for (size_t node = 0; node < layout.u_nodes.size(); ++node) {
    if (layout.u_node_free[node] < 0) continue;
    const TraceNode& tn = layout.u_nodes[node];
    // Hat-function weights at the node position: vertex nodes coincide with a
    // vertex; facet nodes see only the two facet endpoints.
    std::vector<std::pair<int, double>> hats;
    if (tn.vertex >= 0) {
      hats.emplace_back(tn.vertex, 1.0);
    } else {
      const Facet& fc = mesh.facet(tn.facet);
      hats.emplace_back(fc.vertices[0], 1.0 - tn.t);
      hats.emplace_back(fc.vertices[1], tn.t);
    }
    for (auto [v, wgt] : hats) {
      if (vidx[v] < 0 || wgt == 0.0) continue;
      for (int c = 0; c < 2; ++c)
        trips.emplace_back(layout.ubar_dof(static_cast<int>(node), c), 2 * vidx[v] + c, wgt);
    }
  }
  SparseMat P(layout.n_ubar, 2 * nc);
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

SparseMat build_trace_h1_matrix(const Mesh& mesh, const DofLayout& layout) {
  const int k = layout.k();
  SegmentRule line = segment_rule(2 * k + 2);
  Eigen::MatrixXd TU = layout.u_facet_basis.values(line.points);
  Eigen::MatrixXd ref = TU.transpose() * line.weights.asDiagonal() * TU;
  Eigen::VectorXd ref_int = TU.transpose() * line.weights;

  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& et = layout.elements[e];
    const int nus = static_cast<int>(et.u_local.size());
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nus, nus);
    Eigen::VectorXd bvec = Eigen::VectorXd::Zero(nus);
    double perimeter = 0.0;
    for (int lf = 0; lf < 3; ++lf) {
      const Facet& fc = mesh.facet(mesh.element_facets(e)[lf]);
      const double len = (mesh.vertex(fc.vertices[1]) - mesh.vertex(fc.vertices[0])).norm();
      perimeter += len;
      for (int i = 0; i <= k; ++i) {
        const int si = et.u_facet_slot[lf][i];
        bvec(si) += len * ref_int(i);
        for (int j = 0; j <= k; ++j) mass(si, et.u_facet_slot[lf][j]) += len * ref(i, j);
      }
    }
    // |vbar - m_K(vbar)|^2 over the element boundary, h_K^{-1}-weighted.
    Eigen::MatrixXd local = (mass - bvec * bvec.transpose() / perimeter) / mesh.h(e);
    for (int si = 0; si < nus; ++si) {
      for (int sj = 0; sj < nus; ++sj) {
        for (int c = 0; c < 2; ++c) {
          const int di = layout.ubar_dof(et.u_local[si], c);
          const int dj = layout.ubar_dof(et.u_local[sj], c);
          if (di >= 0 && dj >= 0 && local(si, sj) != 0.0)
            trips.emplace_back(di, dj, local(si, sj));
        }
      }
    }
  }
  SparseMat out(layout.n_ubar, layout.n_ubar);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMat build_agamma(const Mesh& mesh, const DofLayout& layout, const GlobalMatrices& gm,
                       const Condensation& cond, double gamma) {
  if (gamma < 0) throw std::invalid_argument("build_agamma: gamma must be nonnegative");
  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    const LocalBlocks& blocks = gm.local[e];
    Eigen::MatrixXd Ahat = blocks.A_uu;
    if (gamma > 0) Ahat += assemble_graddiv(blocks, gamma);
    Eigen::LLT<Eigen::MatrixXd> llt(Ahat);
    if (llt.info() != Eigen::Success) throw std::runtime_error("build_agamma: factorization failed");
    Eigen::MatrixXd W = llt.solve(lc.A_ubar_u.transpose());
    Eigen::MatrixXd C = lc.A_ubar_u * W;
    C = 0.5 * (C + C.transpose()).eval();
    for (long i = 0; i < C.rows(); ++i)
      for (long j = 0; j < C.cols(); ++j)
        if (C(i, j) != 0.0) trips.emplace_back(lc.ubar_dofs[i], lc.ubar_dofs[j], -C(i, j));
  }
  for (int col = 0; col < gm.A_ubar_ubar.outerSize(); ++col)
    for (SparseMat::InnerIterator it(gm.A_ubar_ubar, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  SparseMat out(layout.n_ubar, layout.n_ubar);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMat build_bab(const Mesh& mesh, const DofLayout& layout, const Condensation& cond) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalCondensed& lc = cond.elems[e];
    Eigen::MatrixXd W = lc.A_uu.solve(lc.B_pbar_u.transpose());
    Eigen::MatrixXd C = lc.B_pbar_u * W;
    C = 0.5 * (C + C.transpose()).eval();
    for (long i = 0; i < C.rows(); ++i)
      for (long j = 0; j < C.cols(); ++j)
        if (C(i, j) != 0.0) trips.emplace_back(lc.qbar_dofs[i], lc.qbar_dofs[j], C(i, j));
  }
  SparseMat out(layout.n_qbar, layout.n_qbar);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

namespace {

SparseMat sparse_block(const SparseMat& A, long row0, long col0, long rows, long cols) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      if (it.row() >= row0 && it.row() < row0 + rows && it.col() >= col0 && it.col() < col0 + cols)
        trips.emplace_back(it.row() - row0, it.col() - col0, it.value());
    }
  }
  SparseMat out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

BlockPreconditioner::BlockPreconditioner(const CondensedSystem& system, const Mesh& mesh,
                                         const DofLayout& layout, const GlobalMatrices& gm,
                                         const Condensation& cond, const PreconConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  n_ubar_ = system.n_ubar;
  n_q_ = system.n_q;
  n_qbar_ = system.n_qbar;
  npq_ = layout.npq;

  if (cfg.family == PreconFamily::P3x3 && system.kind != SystemKind::ThreeField)
    throw std::invalid_argument("BlockPreconditioner: P3x3 requires a three-field system");
  if (cfg.family != PreconFamily::P3x3 && system.kind != SystemKind::TwoField)
    throw std::invalid_argument("BlockPreconditioner: PMbar/PBAB require a two-field system");

  // Velocity block.
  auto make_cycles = [&](const SparseMat& A) {
    const bool coarse = cfg.stationary.coarse_correction;
    return std::make_unique<StationaryCycleSolver>(
        A, coarse ? build_p1_trace_prolongation(mesh, layout) : SparseMat(), cfg.stationary);
  };
  switch (cfg.rd) {
    case RdChoice::ExactAd:
      velocity_ = std::make_unique<ExactSpdSolver>(
          sparse_block(system.matrix, 0, 0, n_ubar_, n_ubar_));
      break;
    case RdChoice::ExactAgamma:
      velocity_ = std::make_unique<ExactSpdSolver>(build_agamma(mesh, layout, gm, cond, cfg.gamma));
      break;
    case RdChoice::InnerIterAgamma:
      velocity_ = make_cycles(build_agamma(mesh, layout, gm, cond, cfg.gamma));
      break;
    case RdChoice::InnerIterAd:
      velocity_ = make_cycles(sparse_block(system.matrix, 0, 0, n_ubar_, n_ubar_));
      break;
  }

  // Trace pressure block: Mbar, or B_pbar_u A_uu^{-1} B_pbar_u^T (SPD).
  if (cfg.family == PreconFamily::PBAB) {
    pressure_ = std::make_unique<ExactSpdSolver>(build_bab(mesh, layout, cond));
  } else if (cfg.mass == MassTreatment::DiagonalScaling) {
    pressure_diag_inv_ = gm.Mbar.diagonal().cwiseInverse();
  } else {
    pressure_ = std::make_unique<ExactSpdSolver>(gm.Mbar);
  }

  // Element pressure block (three-field only).
  if (cfg.family == PreconFamily::P3x3) {
    m_llt_.reserve(gm.local.size());
    for (const auto& blocks : gm.local) m_llt_.emplace_back(blocks.M);
  }

  setup_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void BlockPreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  z.resize(r.size());
  Eigen::VectorXd zv(n_ubar_);
  velocity_->solve(r.head(n_ubar_), zv);
  z.head(n_ubar_) = zv;

  if (n_q_ > 0) {
    for (size_t e = 0; e < m_llt_.size(); ++e) {
      const long off = n_ubar_ + static_cast<long>(e) * npq_;
      z.segment(off, npq_) = m_llt_[e].solve(r.segment(off, npq_));
    }
  }

  const long offp = static_cast<long>(n_ubar_) + n_q_;
  if (pressure_) {
    Eigen::VectorXd zp(n_qbar_);
    pressure_->solve(r.segment(offp, n_qbar_), zp);
    z.segment(offp, n_qbar_) = zp;
  } else {
    z.segment(offp, n_qbar_) = pressure_diag_inv_.cwiseProduct(r.segment(offp, n_qbar_));
  }
}

LinearOperator BlockPreconditioner::op() const {
  return LinearOperator{static_cast<Eigen::Index>(n_ubar_) + n_q_ + n_qbar_,
                        [this](const Eigen::VectorXd& r, Eigen::VectorXd& z) { apply(r, z); }};
}

}  // namespace hdgstokes
