#pragma once

// Dense primal-dual interior-point solver for convex QPs
//     min 1/2 x'Qx + c'x   s.t.  G x <= h
// (Q = 0 gives an LP). Mehrotra predictor-corrector with an infeasible
// start. Problem sizes here are tiny (tens of variables, thousands of
// inequalities), so dense Eigen factorizations are more than enough.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace pmmctl {

struct QpProblem {
  Eigen::MatrixXd Q;  // n x n PSD (may be 0x0 for an LP)
  Eigen::VectorXd c;  // n
  Eigen::MatrixXd G;  // m x n
  Eigen::VectorXd h;  // m
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // inequality multipliers
  int iterations = 0;
  bool converged = false;
  double duality_gap = std::numeric_limits<double>::infinity();
  double primal_infeasibility = std::numeric_limits<double>::infinity();
};

struct QpOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;       // complementarity gap and primal residual
  double dual_tolerance = 1e-7;  // stationarity; limited by the conditioning
                                 // of the normal equations near the optimum
  double regularization = 1e-12;
};

inline QpResult solve_qp(const QpProblem& prob, const QpOptions& opt = {}) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const int n = static_cast<int>(prob.c.size());
  const int m = static_cast<int>(prob.h.size());
  const bool has_Q = prob.Q.size() > 0;

  QpResult res;
  VectorXd x = VectorXd::Zero(n);
  VectorXd s(m), lam(m);
  {
    const VectorXd gx = prob.G * x;
    for (int i = 0; i < m; ++i) s(i) = std::max(prob.h(i) - gx(i), 1.0);
    lam.setOnes();
  }

  const double scale =
      1.0 + prob.c.lpNorm<Eigen::Infinity>() +
      (m > 0 ? prob.h.lpNorm<Eigen::Infinity>() : 0.0);

  // The iterate with the smallest worst-case scaled residual is kept and
  // returned: near-degenerate LPs can lose dual accuracy again after the
  // complementarity gap collapses.
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const VectorXd rd =
        (has_Q ? VectorXd(prob.Q * x) : VectorXd(VectorXd::Zero(n))) + prob.c +
        prob.G.transpose() * lam;
    const VectorXd rp = prob.G * x + s - prob.h;
    const double mu = m > 0 ? s.dot(lam) / m : 0.0;

    const double err = std::max(
        {rd.lpNorm<Eigen::Infinity>() / (opt.dual_tolerance * scale),
         rp.lpNorm<Eigen::Infinity>() / (opt.tolerance * scale),
         mu / (opt.tolerance * scale)});
    if (err < best_err) {
      best_err = err;
      res.x = x;
      res.lambda = lam;
      res.iterations = it;
      res.duality_gap = mu;
      res.primal_infeasibility = m > 0 ? rp.cwiseMax(0.0).maxCoeff() : 0.0;
      res.converged = err <= 1.0;
    }
    if (res.converged) return res;
    // A gap far below tolerance cannot improve the solution further; the
    // scaling matrix only gets more singular from here.
    if (mu <= 1e-3 * opt.tolerance * scale && it > 0) return res;

    const VectorXd w = lam.cwiseQuotient(s);
    MatrixXd M = prob.G.transpose() * w.asDiagonal() * prob.G;
    if (has_Q) M += prob.Q;
    M.diagonal().array() += opt.regularization * (1.0 + M.diagonal().maxCoeff());
    Eigen::LDLT<MatrixXd> ldlt(M);

    auto kkt_solve = [&](const VectorXd& rc, VectorXd& dx, VectorXd& ds,
                         VectorXd& dlam) {
      // rc is the complementarity residual target: S*Lam*e - target.
      const VectorXd tmp = rc.cwiseQuotient(s) - w.cwiseProduct(rp);
      const VectorXd rhs = -rd + prob.G.transpose() * tmp;
      dx = ldlt.solve(rhs);
      dx -= ldlt.solve(M * dx - rhs);  // one round of iterative refinement
      ds = -rp - prob.G * dx;
      dlam = -rc.cwiseQuotient(s) - w.cwiseProduct(ds);
    };

    auto max_step = [&](const VectorXd& v, const VectorXd& dv) {
      double a = 1.0;
      for (int i = 0; i < m; ++i)
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      return a;
    };

    // Affine (predictor) step.
    VectorXd dx_a, ds_a, dlam_a;
    kkt_solve(s.cwiseProduct(lam), dx_a, ds_a, dlam_a);
    const double ap_a = max_step(s, ds_a);
    const double ad_a = max_step(lam, dlam_a);
    const double mu_aff =
        m > 0 ? (s + ap_a * ds_a).dot(lam + ad_a * dlam_a) / m : 0.0;
    const double sigma =
        mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

    // Corrector step.
    VectorXd rc = s.cwiseProduct(lam) + ds_a.cwiseProduct(dlam_a) -
                  VectorXd::Constant(m, sigma * mu);
    VectorXd dx, ds, dlam;
    kkt_solve(rc, dx, ds, dlam);

    const double frac = 0.995;
    const double ap = frac * max_step(s, ds);
    const double ad = frac * max_step(lam, dlam);
    x += ap * dx;
    s += ap * ds;
    lam += ad * dlam;
  }
  return res;
}

}  // namespace pmmctl
