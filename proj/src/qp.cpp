#include "ensweight/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "ensweight/core.hpp"

namespace ensweight::qp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

std::string row_label(const std::vector<std::string>& labels, const char* kind,
                      Index k) {
  if (static_cast<std::size_t>(k) < labels.size() && !labels[k].empty()) {
    return labels[k];
  }
  std::ostringstream os;
  os << kind << "[" << k << "]";
  return os.str();
}

// Standard form used by the interior point method:
//   minimize 1/2 z' diag(h) z + g' z   s.t.  A z = b,  z >= 0.
struct StandardForm {
  VectorXd h;
  VectorXd g;
  MatrixXd A;
  VectorXd b;
};

struct IpmResult {
  VectorXd z;
  VectorXd y;
  VectorXd zl;  // bound multipliers
  int iterations = 0;
  bool converged = false;
};

// Largest step in (0, 1] keeping v + step * dv >= 0, scaled by eta.
double step_to_boundary(const VectorXd& v, const VectorXd& dv, double eta) {
  double alpha = 1.0;
  for (Index k = 0; k < v.size(); ++k) {
    if (dv[k] < 0.0) alpha = std::min(alpha, -eta * v[k] / dv[k]);
  }
  return alpha;
}

// Mehrotra predictor-corrector on the standard form. The Hessian is diagonal,
// so each Newton step reduces to the normal equations A D^-1 A' dy = r.
IpmResult interior_point(const StandardForm& sf, double tol, int max_iterations) {
  const Index nz = sf.g.size();
  const Index nr = sf.b.size();
  IpmResult res;
  res.z = VectorXd::Ones(nz);
  res.zl = VectorXd::Ones(nz);
  res.y = VectorXd::Zero(nr);
  if (nz == 0) {
    res.converged = inf_norm(sf.b) <= tol;
    return res;
  }
  const bool linear = (sf.h.array() == 0.0).all();

  VectorXd& z = res.z;
  VectorXd& zl = res.zl;
  VectorXd& y = res.y;

  VectorXd dz(nz), dzl(nz), dy(nr);
  // Factorization of the full (unreduced) Newton system, built only when the
  // normal equations fail to deliver an accurate step.
  std::optional<Eigen::PartialPivLU<MatrixXd>> augmented;
  auto newton = [&](const Eigen::LDLT<MatrixXd>& normal, const VectorXd& dinv,
                    const VectorXd& r_p, const VectorXd& r_d, const VectorXd& r_c) {
    // (h + zl/z) dz - A' dy = -r_d + r_c / z ;  A dz = -r_p
    const VectorXd r1 = -r_d + r_c.cwiseQuotient(z);
    if (nr > 0) {
      const VectorXd rhs = -r_p - sf.A * dinv.cwiseProduct(r1);
      dy = normal.solve(rhs);
      dz = dinv.cwiseProduct(r1 + sf.A.transpose() * dy);
      // The normal matrix loses accuracy as iterates approach the boundary;
      // a few refinement rounds restore A dz = -r_p.
      const double target = 1e-15 * (1.0 + inf_norm(r_p));
      double error = inf_norm(-r_p - sf.A * dz);
      for (int round = 0; round < 3 && error > target; ++round) {
        const VectorXd ddy = normal.solve(-r_p - sf.A * dz);
        dy += ddy;
        dz += dinv.cwiseProduct(sf.A.transpose() * ddy);
        error = inf_norm(-r_p - sf.A * dz);
      }
      if (error > 1e3 * target || !dz.allFinite()) {
        if (!augmented) {
          MatrixXd kkt = MatrixXd::Zero(nz + nr, nz + nr);
          kkt.topLeftCorner(nz, nz).diagonal() = dinv.cwiseInverse();
          kkt.topRightCorner(nz, nr) = -sf.A.transpose();
          kkt.bottomLeftCorner(nr, nz) = sf.A;
          augmented.emplace(kkt);
        }
        VectorXd full_rhs(nz + nr);
        full_rhs << r1, -r_p;
        const VectorXd step = augmented->solve(full_rhs);
        const VectorXd dz_full = step.head(nz);
        if (step.allFinite() && inf_norm(-r_p - sf.A * dz_full) < error) {
          dz = dz_full;
          dy = step.tail(nr);
        }
      }
    } else {
      dz = dinv.cwiseProduct(r1);
    }
    dzl = (r_c - zl.cwiseProduct(dz)).cwiseQuotient(z);
  };

  // Near a degenerate vertex the normal equations can lose accuracy and undo
  // progress, so the iterate with the smallest residuals is kept.
  double best_merit = kInf;
  VectorXd best_z = z, best_zl = zl, best_y = y;
  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    const VectorXd r_p = sf.A * z - sf.b;
    const VectorXd r_d = sf.h.cwiseProduct(z) + sf.g - sf.A.transpose() * y - zl;
    const double comp = z.cwiseProduct(zl).maxCoeff();
    if (inf_norm(r_p) <= tol && inf_norm(r_d) <= tol && comp <= tol) {
      res.converged = true;
      return res;
    }
    const double merit = std::max({inf_norm(r_p), inf_norm(r_d), comp});
    if (merit < best_merit) {
      best_merit = merit;
      best_z = z;
      best_zl = zl;
      best_y = y;
    }
    const double mu = z.dot(zl) / static_cast<double>(nz);
    if (!(mu > 0.0) || !std::isfinite(mu)) break;

    const VectorXd dinv = (sf.h + zl.cwiseQuotient(z)).cwiseInverse();
    augmented.reset();
    Eigen::LDLT<MatrixXd> normal;
    if (nr > 0) {
      MatrixXd M = sf.A * dinv.asDiagonal() * sf.A.transpose();
      // Regularize each row relative to its own scale. A shift tied to the
      // largest diagonal entry swamps rows whose entries are tiny.
      M.diagonal().array() += 1e-14 * M.diagonal().array().abs() + 1e-300;
      normal.compute(M);
    }

    // Predictor (affine scaling) direction.
    newton(normal, dinv, r_p, r_d, -z.cwiseProduct(zl));
    double ap = step_to_boundary(z, dz, 1.0);
    double ad = step_to_boundary(zl, dzl, 1.0);
    if (!linear) ap = ad = std::min(ap, ad);
    const double mu_aff =
        (z + ap * dz).dot(zl + ad * dzl) / static_cast<double>(nz);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector with centering.
    const VectorXd r_c = -z.cwiseProduct(zl) - dz.cwiseProduct(dzl) +
                         VectorXd::Constant(nz, sigma * mu);
    newton(normal, dinv, r_p, r_d, r_c);
    const double eta = std::max(0.9, 1.0 - 10.0 * mu);
    ap = step_to_boundary(z, dz, eta);
    ad = step_to_boundary(zl, dzl, eta);
    if (!linear) ap = ad = std::min(ap, ad);

    VectorXd z_next = z + ap * dz;
    VectorXd zl_next = zl + ad * dzl;
    VectorXd y_next = y + ad * dy;
    if (!z_next.allFinite() || !zl_next.allFinite() || !y_next.allFinite()) break;
    z = std::move(z_next);
    zl = std::move(zl_next);
    y = std::move(y_next);
  }
  const VectorXd r_p = sf.A * z - sf.b;
  const VectorXd r_d = sf.h.cwiseProduct(z) + sf.g - sf.A.transpose() * y - zl;
  const bool finite = z.allFinite() && zl.allFinite() && y.allFinite();
  if (!finite || std::max({inf_norm(r_p), inf_norm(r_d), z.cwiseProduct(zl).maxCoeff()}) > best_merit) {
    z = std::move(best_z);
    zl = std::move(best_zl);
    y = std::move(best_y);
  }
  return res;
}

// Indices of a maximal linearly independent subset of the rows of `A`,
// chosen greedily in row order.
std::vector<Index> independent_rows(const MatrixXd& A) {
  std::vector<Index> keep;
  MatrixXd basis(0, A.cols());
  for (Index r = 0; r < A.rows(); ++r) {
    MatrixXd trial(basis.rows() + 1, A.cols());
    trial << basis, A.row(r);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(trial.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.rows()) {
      basis = std::move(trial);
      keep.push_back(r);
    }
  }
  return keep;
}

struct Candidate {
  VectorXd w;
  VectorXd eq_duals;
  VectorXd ineq_duals;
  VectorXd bound_duals;
  KktResiduals kkt;
};

// Solves the equality-constrained QP obtained by fixing the bounds the
// interior point identified as active at zero and enforcing the active
// inequality rows as equalities. Returns false when the active set is
// degenerate or the resulting point fails a sign or feasibility check.
bool polish(const QpProblem& p, const Candidate& ipm, double tol, Candidate& out) {
  const Index nx = p.size();
  const Index ne = p.num_eq();
  const Index ni = p.num_ineq();

  std::vector<Index> free_vars;
  for (Index k = 0; k < nx; ++k) {
    if (ipm.w[k] >= ipm.bound_duals[k]) free_vars.push_back(k);
  }
  std::vector<Index> active_rows;
  const VectorXd slack0 = p.ineq_matrix * ipm.w - p.ineq_rhs;
  for (Index i = 0; i < ni; ++i) {
    if (slack0[i] < ipm.ineq_duals[i]) active_rows.push_back(i);
  }

  const auto nf = static_cast<Index>(free_vars.size());
  const Index nc = ne + static_cast<Index>(active_rows.size());
  MatrixXd B(nc, nx);
  VectorXd d(nc);
  B.topRows(ne) = p.eq_matrix;
  d.head(ne) = p.eq_rhs;
  for (std::size_t a = 0; a < active_rows.size(); ++a) {
    B.row(ne + static_cast<Index>(a)) = p.ineq_matrix.row(active_rows[a]);
    d[ne + static_cast<Index>(a)] = p.ineq_rhs[active_rows[a]];
  }

  // [H_F  -B_F'] [w_F   ]   [ c_F ]
  // [B_F    0  ] [lambda] = [  d  ]
  MatrixXd K = MatrixXd::Zero(nf + nc, nf + nc);
  VectorXd rhs(nf + nc);
  for (Index a = 0; a < nf; ++a) {
    const Index k = free_vars[static_cast<std::size_t>(a)];
    K(a, a) = 2.0 * p.quadratic[k];
    rhs[a] = p.linear[k];
    for (Index c = 0; c < nc; ++c) {
      K(a, nf + c) = -B(c, k);
      K(nf + c, a) = B(c, k);
    }
  }
  rhs.tail(nc) = d;
  if (K.rows() == 0) return false;
  Eigen::FullPivLU<MatrixXd> lu(K);
  lu.setThreshold(1e-11);
  if (lu.rank() < K.rows()) return false;
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;

  out.w = VectorXd::Zero(nx);
  for (Index a = 0; a < nf; ++a) out.w[free_vars[static_cast<std::size_t>(a)]] = sol[a];
  const VectorXd lambda = sol.tail(nc);
  out.eq_duals = lambda.head(ne);
  out.ineq_duals = VectorXd::Zero(ni);
  for (std::size_t a = 0; a < active_rows.size(); ++a) {
    out.ineq_duals[active_rows[a]] = lambda[ne + static_cast<Index>(a)];
  }
  const VectorXd grad = 2.0 * p.quadratic.cwiseProduct(out.w) - p.linear;
  out.bound_duals = grad - B.transpose() * lambda;
  for (Index a = 0; a < nf; ++a) out.bound_duals[free_vars[static_cast<std::size_t>(a)]] = 0.0;

  const double slop = 0.1 * tol;
  if (nx > 0 && out.w.minCoeff() < -slop) return false;
  if (ni > 0 && out.ineq_duals.minCoeff() < -slop) return false;
  if (nx > 0 && out.bound_duals.minCoeff() < -slop) return false;
  out.w = out.w.cwiseMax(0.0);
  if (p.max_violation(out.w) > slop) return false;
  out.kkt = kkt_residuals(p, out.w, out.eq_duals, out.ineq_duals, out.bound_duals);
  return true;
}

}  // namespace

QpProblem QpProblem::Unconstrained(int size) {
  QpProblem p;
  p.quadratic = VectorXd::Zero(size);
  p.linear = VectorXd::Zero(size);
  p.eq_matrix = MatrixXd(0, size);
  p.eq_rhs = VectorXd(0);
  p.ineq_matrix = MatrixXd(0, size);
  p.ineq_rhs = VectorXd(0);
  return p;
}

void QpProblem::add_eq(const VectorXd& row, double rhs, std::string label) {
  if (row.size() != size()) throw ShapeError("equality row has wrong length");
  eq_matrix.conservativeResize(eq_matrix.rows() + 1, size());
  eq_matrix.row(eq_matrix.rows() - 1) = row.transpose();
  eq_rhs.conservativeResize(eq_rhs.size() + 1);
  eq_rhs[eq_rhs.size() - 1] = rhs;
  eq_labels.resize(static_cast<std::size_t>(num_eq()) - 1);
  eq_labels.push_back(std::move(label));
}

void QpProblem::add_ineq(const VectorXd& row, double rhs, std::string label) {
  if (row.size() != size()) throw ShapeError("inequality row has wrong length");
  ineq_matrix.conservativeResize(ineq_matrix.rows() + 1, size());
  ineq_matrix.row(ineq_matrix.rows() - 1) = row.transpose();
  ineq_rhs.conservativeResize(ineq_rhs.size() + 1);
  ineq_rhs[ineq_rhs.size() - 1] = rhs;
  ineq_labels.resize(static_cast<std::size_t>(num_ineq()) - 1);
  ineq_labels.push_back(std::move(label));
}

double QpProblem::objective(const VectorXd& w) const {
  return linear.dot(w) - quadratic.dot(w.cwiseProduct(w));
}

double QpProblem::max_violation(const VectorXd& w) const {
  double v = 0.0;
  if (num_eq() > 0) v = std::max(v, inf_norm(eq_matrix * w - eq_rhs));
  if (num_ineq() > 0) v = std::max(v, (ineq_rhs - ineq_matrix * w).maxCoeff());
  if (w.size() > 0) v = std::max(v, -w.minCoeff());
  return v;
}

void QpProblem::validate() const {
  const Index n = linear.size();
  if (quadratic.size() != n) throw ShapeError("quadratic and linear sizes differ");
  if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) {
    throw ShapeError("equality constraint dimensions are inconsistent");
  }
  if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_rhs.size()) {
    throw ShapeError("inequality constraint dimensions are inconsistent");
  }
  if (!quadratic.allFinite() || !linear.allFinite() || !eq_matrix.allFinite() ||
      !eq_rhs.allFinite() || !ineq_matrix.allFinite() || !ineq_rhs.allFinite()) {
    throw DomainError("QP data must be finite");
  }
  if (n > 0 && quadratic.minCoeff() < 0.0) {
    throw DomainError("QP is not concave: negative quadratic coefficient");
  }
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& p, const VectorXd& w,
                           const VectorXd& eq_duals, const VectorXd& ineq_duals,
                           const VectorXd& bound_duals) {
  KktResiduals r;
  VectorXd station = 2.0 * p.quadratic.cwiseProduct(w) - p.linear - bound_duals;
  if (p.num_eq() > 0) station -= p.eq_matrix.transpose() * eq_duals;
  if (p.num_ineq() > 0) station -= p.ineq_matrix.transpose() * ineq_duals;
  r.stationarity = inf_norm(station);
  r.primal = p.max_violation(w);
  if (p.num_ineq() > 0) {
    r.dual = std::max(r.dual, -ineq_duals.minCoeff());
    const VectorXd slack = p.ineq_matrix * w - p.ineq_rhs;
    r.complementarity = inf_norm(slack.cwiseProduct(ineq_duals));
  }
  if (w.size() > 0) {
    r.dual = std::max(r.dual, -bound_duals.minCoeff());
    r.complementarity = std::max(r.complementarity, inf_norm(w.cwiseProduct(bound_duals)));
  }
  return r;
}

QpSolution solve_qp(const QpProblem& p, double tol) {
  QpOptions options;
  options.tol = tol;
  return solve_qp(p, options);
}

QpSolution solve_qp(const QpProblem& p, const QpOptions& options) {
  p.validate();
  if (!(options.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  const Index nx = p.size();
  const Index ne = p.num_eq();
  const Index ni = p.num_ineq();

  QpSolution out;

  // Phase 1: minimize the total constraint violation
  //   A_eq w + p - q = b_eq,  A_in w - s + t = b_in,  all variables >= 0.
  {
    const Index nz = nx + ni + 2 * ne + ni;
    StandardForm f1;
    f1.h = VectorXd::Zero(nz);
    f1.g = VectorXd::Zero(nz);
    f1.g.tail(2 * ne + ni).setOnes();
    f1.A = MatrixXd::Zero(ne + ni, nz);
    f1.b = VectorXd(ne + ni);
    f1.A.block(0, 0, ne, nx) = p.eq_matrix;
    f1.A.block(0, nx + ni, ne, ne) = MatrixXd::Identity(ne, ne);
    f1.A.block(0, nx + ni + ne, ne, ne) = -MatrixXd::Identity(ne, ne);
    f1.A.block(ne, 0, ni, nx) = p.ineq_matrix;
    f1.A.block(ne, nx, ni, ni) = -MatrixXd::Identity(ni, ni);
    f1.A.block(ne, nx + ni + 2 * ne, ni, ni) = MatrixXd::Identity(ni, ni);
    f1.b << p.eq_rhs, p.ineq_rhs;
    const IpmResult r1 = interior_point(f1, 1e-2 * options.tol, options.max_iterations);
    out.iterations = r1.iterations;
    const VectorXd witness = r1.z.head(nx).cwiseMax(0.0);
    if (!r1.z.allFinite() || p.max_violation(witness) > options.tol) {
      out.status = QpStatus::Infeasible;
      out.w = r1.z.allFinite() ? witness : VectorXd::Zero(nx);
      out.objective = p.objective(out.w);
      if (ne > 0) {
        const VectorXd res = p.eq_matrix * out.w - p.eq_rhs;
        for (Index k = 0; k < ne; ++k) {
          if (std::abs(res[k]) > options.tol) out.certificate.push_back(row_label(p.eq_labels, "eq", k));
        }
      }
      if (ni > 0) {
        const VectorXd res = p.ineq_rhs - p.ineq_matrix * out.w;
        for (Index k = 0; k < ni; ++k) {
          if (res[k] > options.tol) out.certificate.push_back(row_label(p.ineq_labels, "ineq", k));
        }
      }
      out.kkt.primal = p.max_violation(out.w);
      return out;
    }
  }

  // Phase 2 on [w | s] with redundant equality rows removed.
  const std::vector<Index> keep = independent_rows(p.eq_matrix);
  const auto nk = static_cast<Index>(keep.size());
  StandardForm f2;
  f2.h = VectorXd::Zero(nx + ni);
  f2.h.head(nx) = 2.0 * p.quadratic;
  f2.g = VectorXd::Zero(nx + ni);
  f2.g.head(nx) = -p.linear;
  f2.A = MatrixXd::Zero(nk + ni, nx + ni);
  f2.b = VectorXd(nk + ni);
  for (Index r = 0; r < nk; ++r) {
    f2.A.row(r).head(nx) = p.eq_matrix.row(keep[static_cast<std::size_t>(r)]);
    f2.b[r] = p.eq_rhs[keep[static_cast<std::size_t>(r)]];
  }
  f2.A.block(nk, 0, ni, nx) = p.ineq_matrix;
  f2.A.block(nk, nx, ni, ni) = -MatrixXd::Identity(ni, ni);
  f2.b.tail(ni) = p.ineq_rhs;
  const IpmResult r2 = interior_point(f2, 0.1 * options.tol, options.max_iterations);
  out.iterations += r2.iterations;

  Candidate ipm;
  ipm.w = r2.z.head(nx).cwiseMax(0.0);
  ipm.eq_duals = VectorXd::Zero(ne);
  for (Index r = 0; r < nk; ++r) ipm.eq_duals[keep[static_cast<std::size_t>(r)]] = r2.y[r];
  ipm.ineq_duals = r2.y.tail(ni);
  ipm.bound_duals = r2.zl.head(nx);
  ipm.kkt = kkt_residuals(p, ipm.w, ipm.eq_duals, ipm.ineq_duals, ipm.bound_duals);

  const Candidate* best = &ipm;
  Candidate polished;
  if (options.polish && ipm.w.allFinite() && polish(p, ipm, options.tol, polished)) {
    if (polished.kkt.max() <= options.tol || polished.kkt.max() < ipm.kkt.max()) {
      best = &polished;
    }
  }

  out.w = best->w;
  out.eq_duals = best->eq_duals;
  out.ineq_duals = best->ineq_duals;
  out.bound_duals = best->bound_duals;
  out.kkt = best->kkt;
  out.objective = p.objective(out.w);
  out.status = out.kkt.max() <= options.tol ? QpStatus::Optimal : QpStatus::MaxIterations;
  return out;
}

// ---------------------------------------------------------------------------
// Grid oracle

namespace {

struct DisjointSets {
  std::vector<Index> parent;
  explicit DisjointSets(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct Dependent {
  Index row;  // equality row index
  Index var;  // variable solved from that row
};

class GridSearch {
 public:
  GridSearch(const QpProblem& p, double step, double upper, int levels)
      : p_(p), step_(step), upper_(upper), tol_(step), levels_(levels),
        top_((levels - 1) * step), x_(VectorXd::Zero(p.size())) {}

  std::vector<Index> vars;
  std::vector<Index> free_vars;
  std::vector<Dependent> deps;
  std::vector<Index> check_eq;
  std::vector<Index> check_ineq;

  double points() const {
    return std::pow(static_cast<double>(levels_), static_cast<double>(free_vars.size()));
  }

  void run() {
    prepare();
    dfs(0);
  }

  bool found() const { return found_; }
  const VectorXd& best() const { return best_x_; }
  long long evaluated() const { return evaluated_; }

 private:
  void prepare() {
    const std::size_t nfree = free_vars.size();
    rem_lo_.assign(deps.size(), std::vector<double>(nfree + 1, 0.0));
    rem_hi_.assign(deps.size(), std::vector<double>(nfree + 1, 0.0));
    for (std::size_t d = 0; d < deps.size(); ++d) {
      for (std::size_t s = nfree; s-- > 0;) {
        const double a = p_.eq_matrix(deps[d].row, free_vars[s]) * top_;
        rem_lo_[d][s] = rem_lo_[d][s + 1] + std::min(0.0, a);
        rem_hi_[d][s] = rem_hi_[d][s + 1] + std::max(0.0, a);
      }
    }
    best_x_ = VectorXd::Zero(p_.size());
  }

  double assigned_sum(Index row, std::size_t depth) const {
    double s = 0.0;
    for (std::size_t t = 0; t < depth; ++t) {
      s += p_.eq_matrix(row, free_vars[t]) * x_[free_vars[t]];
    }
    return s;
  }

  // 0: feasible range, 1: infeasible, 2: infeasible and every larger value
  // of the current variable is infeasible too.
  int prune(std::size_t depth) const {
    int verdict = 0;
    const Index cur = free_vars[depth];
    for (std::size_t d = 0; d < deps.size(); ++d) {
      const Index row = deps[d].row;
      const double ap = p_.eq_matrix(row, deps[d].var);
      const double partial = assigned_sum(row, depth + 1);
      const double s_lo = partial + rem_lo_[d][depth + 1];
      const double s_hi = partial + rem_hi_[d][depth + 1];
      const double b = p_.eq_rhs[row];
      double lo = (b - s_hi) / ap;
      double hi = (b - s_lo) / ap;
      if (lo > hi) std::swap(lo, hi);
      if (hi < -1e-12) {
        const double a_cur = p_.eq_matrix(row, cur);
        if (a_cur != 0.0 && (a_cur > 0.0) == (ap > 0.0)) return 2;
        verdict = 1;
      } else if (lo > upper_ + 1e-12) {
        verdict = 1;
      }
    }
    return verdict;
  }

  void dfs(std::size_t depth) {
    if (depth == free_vars.size()) {
      leaf();
      return;
    }
    const Index var = free_vars[depth];
    for (int level = 0; level < levels_; ++level) {
      x_[var] = level * step_;
      const int verdict = deps.empty() ? 0 : prune(depth);
      if (verdict == 2) break;
      if (verdict == 1) continue;
      dfs(depth + 1);
    }
    x_[var] = 0.0;
  }

  void leaf() {
    ++evaluated_;
    for (const auto& dep : deps) {
      const double ap = p_.eq_matrix(dep.row, dep.var);
      double rest = 0.0;
      for (Index k : vars) {
        if (k != dep.var) rest += p_.eq_matrix(dep.row, k) * x_[k];
      }
      double value = (p_.eq_rhs[dep.row] - rest) / ap;
      if (value < -1e-12 || value > upper_ + 1e-12) return;
      x_[dep.var] = std::clamp(value, 0.0, upper_);
    }
    for (Index r : check_eq) {
      double lhs = 0.0;
      for (Index k : vars) lhs += p_.eq_matrix(r, k) * x_[k];
      if (std::abs(lhs - p_.eq_rhs[r]) > tol_) return;
    }
    for (Index r : check_ineq) {
      double lhs = 0.0;
      for (Index k : vars) lhs += p_.ineq_matrix(r, k) * x_[k];
      if (lhs < p_.ineq_rhs[r] - tol_) return;
    }
    double obj = 0.0;
    for (Index k : vars) obj += p_.linear[k] * x_[k] - p_.quadratic[k] * x_[k] * x_[k];
    if (!found_ || obj > best_obj_) {
      found_ = true;
      best_obj_ = obj;
      for (Index k : vars) best_x_[k] = x_[k];
    }
  }

  const QpProblem& p_;
  double step_;
  double upper_;
  double tol_;
  int levels_;
  double top_;
  VectorXd x_;
  VectorXd best_x_;
  double best_obj_ = -kInf;
  bool found_ = false;
  long long evaluated_ = 0;
  std::vector<std::vector<double>> rem_lo_;
  std::vector<std::vector<double>> rem_hi_;
};

// Picks one dependent variable per equality row where that variable appears
// in no other equality row; the remaining rows are checked within tolerance.
void assign_dependents(const QpProblem& p, const std::vector<Index>& rows,
                       const std::vector<Index>& vars, GridSearch& search) {
  std::vector<int> appearances(static_cast<std::size_t>(p.size()), 0);
  for (Index r = 0; r < p.num_eq(); ++r) {
    for (Index k = 0; k < p.size(); ++k) {
      if (p.eq_matrix(r, k) != 0.0) ++appearances[static_cast<std::size_t>(k)];
    }
  }
  std::vector<bool> dependent(static_cast<std::size_t>(p.size()), false);
  for (Index r : rows) {
    Index chosen = -1;
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
      const Index k = *it;
      if (std::abs(p.eq_matrix(r, k)) > 1e-12 && appearances[static_cast<std::size_t>(k)] == 1 &&
          !dependent[static_cast<std::size_t>(k)]) {
        chosen = k;
        break;
      }
    }
    if (chosen >= 0) {
      dependent[static_cast<std::size_t>(chosen)] = true;
      search.deps.push_back({r, chosen});
    } else {
      search.check_eq.push_back(r);
    }
  }
  search.vars = vars;
  for (Index k : vars) {
    if (!dependent[static_cast<std::size_t>(k)]) search.free_vars.push_back(k);
  }
}

}  // namespace

QpSolution grid_oracle(const QpProblem& p, double step, double upper, double max_points) {
  p.validate();
  if (!(step > 0.0) || !(upper > 0.0)) {
    throw DomainError("grid oracle needs a positive step and upper bound");
  }
  const Index nx = p.size();
  const int levels = static_cast<int>(std::floor(upper / step + 1e-9)) + 1;
  const double tol = step;

  // Inequality rows that every point of the box satisfies within tolerance.
  std::vector<Index> relevant;
  for (Index r = 0; r < p.num_ineq(); ++r) {
    double lowest = 0.0;
    for (Index k = 0; k < nx; ++k) lowest += std::min(0.0, p.ineq_matrix(r, k)) * upper;
    if (lowest < p.ineq_rhs[r] - tol) relevant.push_back(r);
  }

  DisjointSets sets(nx);
  for (Index r = 0; r < p.num_eq(); ++r) {
    Index first = -1;
    for (Index k = 0; k < nx; ++k) {
      if (p.eq_matrix(r, k) == 0.0) continue;
      if (first < 0) first = k; else sets.unite(first, k);
    }
  }
  std::vector<Index> roots;
  for (Index k = 0; k < nx; ++k) {
    if (sets.find(k) == k) roots.push_back(k);
  }
  const auto block_of = [&](Index k) {
    return static_cast<std::size_t>(
        std::lower_bound(roots.begin(), roots.end(), sets.find(k)) - roots.begin());
  };

  const std::size_t nblocks = roots.size();
  std::vector<std::vector<Index>> block_vars(nblocks);
  std::vector<std::vector<Index>> block_eq(nblocks);
  std::vector<std::vector<Index>> block_ineq(nblocks);
  std::vector<Index> coupling;
  for (Index k = 0; k < nx; ++k) block_vars[block_of(k)].push_back(k);
  for (Index r = 0; r < p.num_eq(); ++r) {
    Index first = -1;
    for (Index k = 0; k < nx && first < 0; ++k) {
      if (p.eq_matrix(r, k) != 0.0) first = k;
    }
    if (first < 0) {
      // 0 == b: no variables involved.
      if (std::abs(p.eq_rhs[r]) > tol) {
        QpSolution infeasible;
        infeasible.status = QpStatus::Infeasible;
        infeasible.w = VectorXd::Zero(nx);
        infeasible.certificate.push_back(row_label(p.eq_labels, "eq", r));
        return infeasible;
      }
      continue;
    }
    block_eq[block_of(first)].push_back(r);
  }
  for (Index r : relevant) {
    std::size_t owner = nblocks;
    bool spans = false;
    for (Index k = 0; k < nx; ++k) {
      if (p.ineq_matrix(r, k) == 0.0) continue;
      const std::size_t b = block_of(k);
      if (owner == nblocks) owner = b; else if (owner != b) spans = true;
    }
    if (owner == nblocks) {
      // 0 >= b - tol failed the box test above, so the row is unsatisfiable.
      QpSolution infeasible;
      infeasible.status = QpStatus::Infeasible;
      infeasible.w = VectorXd::Zero(nx);
      infeasible.certificate.push_back(row_label(p.ineq_labels, "ineq", r));
      return infeasible;
    }
    if (spans) coupling.push_back(r); else block_ineq[owner].push_back(r);
  }

  std::vector<GridSearch> searches;
  double total_points = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    searches.emplace_back(p, step, upper, levels);
    assign_dependents(p, block_eq[b], block_vars[b], searches.back());
    searches.back().check_ineq = block_ineq[b];
    total_points += searches.back().points();
  }
  if (total_points > max_points) {
    throw DomainError("grid oracle problem too large for exhaustive enumeration");
  }

  QpSolution out;
  out.w = VectorXd::Zero(nx);
  long long evaluated = 0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    searches[b].run();
    evaluated += searches[b].evaluated();
    if (!searches[b].found()) {
      out.status = QpStatus::Infeasible;
      for (Index r : block_eq[b]) out.certificate.push_back(row_label(p.eq_labels, "eq", r));
      for (Index r : block_ineq[b]) out.certificate.push_back(row_label(p.ineq_labels, "ineq", r));
      out.iterations = static_cast<int>(std::min<long long>(evaluated, std::numeric_limits<int>::max()));
      return out;
    }
    for (Index k : block_vars[b]) out.w[k] = searches[b].best()[k];
  }

  bool coupled_ok = true;
  for (Index r : coupling) {
    if (p.ineq_matrix.row(r).dot(out.w) < p.ineq_rhs[r] - tol) coupled_ok = false;
  }
  if (!coupled_ok) {
    // The block-wise optimum violates a coupling row: search jointly.
    std::vector<Index> all_vars(static_cast<std::size_t>(nx));
    std::iota(all_vars.begin(), all_vars.end(), Index{0});
    std::vector<Index> all_eq(static_cast<std::size_t>(p.num_eq()));
    std::iota(all_eq.begin(), all_eq.end(), Index{0});
    GridSearch joint(p, step, upper, levels);
    assign_dependents(p, all_eq, all_vars, joint);
    joint.check_ineq = relevant;
    if (joint.points() > max_points) {
      throw DomainError("grid oracle problem too large for joint enumeration");
    }
    joint.run();
    evaluated += joint.evaluated();
    if (!joint.found()) {
      out.status = QpStatus::Infeasible;
      for (Index r : coupling) out.certificate.push_back(row_label(p.ineq_labels, "ineq", r));
      out.w = VectorXd::Zero(nx);
      out.iterations = static_cast<int>(std::min<long long>(evaluated, std::numeric_limits<int>::max()));
      return out;
    }
    out.w = joint.best();
  }

  out.status = QpStatus::Optimal;
  out.objective = p.objective(out.w);
  out.iterations = static_cast<int>(std::min<long long>(evaluated, std::numeric_limits<int>::max()));
  return out;
}

}  // namespace ensweight::qp
