#pragma once

// Control-waveform synthesis: build the harmonic-cancellation equalities,
// maximize the constant torque term under per-coil current bounds enforced
// as trigonometric nonnegativity constraints, and certify the result.
//
// The semi-infinite bounds are solved by cutting planes on top of a dense
// interior-point LP/QP (see ipm.hpp); the nonnegativity certificates are
// rank-one Gram matrices from spectral factorization (see gram.hpp).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmmctl/gram.hpp"
#include "pmmctl/ipm.hpp"
#include "pmmctl/model.hpp"
#include "pmmctl/trigpoly.hpp"

namespace pmmctl {

struct SynthesisError : std::runtime_error {
  std::string constraint_class;
  SynthesisError(const std::string& cls, const std::string& msg)
      : std::runtime_error(msg), constraint_class(cls) {}
};

struct ColLabel {
  int coil;      // 0-based coil index
  int harmonic;  // 0..M_ctrl
  bool is_sin;   // false: cos coefficient, true: sin coefficient
};

// Linear map from per-coil control coefficients to the coefficients of the
// total torque polynomial sum_j mul(g_j, f_j).
// Rows: [C_1..C_{M'}, S_1..S_{M'}, C_0] with M' = M_ctrl + max deg f_j;
// the final row is the constant (objective) term.
struct CancellationSystem {
  Eigen::MatrixXd matrix;
  std::vector<ColLabel> col_labels;
  int M_ctrl = 0;
  int M_total = 0;  // M'
  int n_coils = 0;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
  int objective_row() const { return rows() - 1; }

  // Torque-poly coefficients produced by a coefficient vector, in row order.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x; }
};

namespace detail {

// Coefficient layout of a degree-d trig poly as a flat vector
// [p_0..p_d, q_1..q_d].
inline Eigen::VectorXd poly_to_vec(const TrigPoly& p, int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * d + 1);
  for (int k = 0; k <= std::min(d, p.degree()); ++k) {
    v(k) = p.p(k);
    if (k >= 1) v(d + k) = p.q(k);
  }
  return v;
}

inline TrigPoly vec_to_poly(const Eigen::VectorXd& v) {
  const int d = static_cast<int>((v.size() - 1) / 2);
  TrigPoly p(d);
  for (int k = 0; k <= d; ++k) {
    p.p(k) = v(k);
    if (k >= 1) p.q(k) = v(d + k);
  }
  return p;
}

// Row vector evaluating a flat coefficient vector at theta.
inline Eigen::RowVectorXd eval_basis(int d, double theta) {
  Eigen::RowVectorXd r(2 * d + 1);
  r(0) = 1.0;
  for (int k = 1; k <= d; ++k) {
    r(k) = std::cos(k * theta);
    r(d + k) = std::sin(k * theta);
  }
  return r;
}

}  // namespace detail

inline CancellationSystem build_cancellation_system(const MotorParams& mp,
                                                    int M_ctrl) {
  if (M_ctrl < 1)
    throw std::invalid_argument("build_cancellation_system: M_ctrl < 1");
  if (mp.active_coils() == 0)
    throw SynthesisError("coils", "all coils are faulty");
  int max_f = 0;
  for (int j = 0; j < mp.n_coils; ++j)
    if (!mp.faulty[static_cast<std::size_t>(j)])
      max_f = std::max(max_f, mp.torque_fns[static_cast<std::size_t>(j)].degree());
  const int Mt = M_ctrl + max_f;

  CancellationSystem sys;
  sys.M_ctrl = M_ctrl;
  sys.M_total = Mt;
  sys.n_coils = mp.n_coils;
  std::vector<Eigen::VectorXd> cols;
  for (int j = 0; j < mp.n_coils; ++j) {
    if (mp.faulty[static_cast<std::size_t>(j)]) continue;
    const TrigPoly& fj = mp.torque_fns[static_cast<std::size_t>(j)];
    auto add_col = [&](const TrigPoly& basis, int k, bool is_sin) {
      const TrigPoly prod = mul(basis, fj);
      Eigen::VectorXd col = Eigen::VectorXd::Zero(2 * Mt + 1);
      for (int r = 1; r <= Mt; ++r) {
        col(r - 1) = r <= prod.degree() ? prod.p(r) : 0.0;       // C_r
        col(Mt + r - 1) = r <= prod.degree() ? prod.q(r) : 0.0;  // S_r
      }
      col(2 * Mt) = prod.p(0);  // C_0, objective row
      cols.push_back(col);
      sys.col_labels.push_back({j, k, is_sin});
    };
    add_col(TrigPoly::constant(1.0), 0, false);
    for (int k = 1; k <= M_ctrl; ++k) add_col(TrigPoly::harmonic_cos(k), k, false);
    for (int k = 1; k <= M_ctrl; ++k) add_col(TrigPoly::harmonic_sin(k), k, true);
  }
  sys.matrix.resize(2 * Mt + 1, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    sys.matrix.col(static_cast<Eigen::Index>(c)) = cols[c];
  return sys;
}

struct ConsistencyReport {
  bool consistent = false;
  int rank = 0;
  int nullity = 0;
  double residual = 0.0;
};

// Does the unit-constant-torque target lie in the range of the system?
inline ConsistencyReport check_consistency(const CancellationSystem& sys) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      sys.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double thresh = 1e-10 * std::max(smax, 1e-300);
  ConsistencyReport rep;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++rep.rank;
  rep.nullity = sys.cols() - rep.rank;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(sys.rows());
  target(sys.objective_row()) = 1.0;
  // Residual of the projection onto the numerical range.
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(sys.rows());
  for (int i = 0; i < rep.rank; ++i)
    proj += svd.matrixU().col(i).dot(target) * svd.matrixU().col(i);
  rep.residual = (target - proj).norm();
  rep.consistent = rep.residual <= 1e-8;
  return rep;
}

// One semi-infinite constraint: the trig poly with flat coefficient vector
// A x + b must be nonnegative for every angle.
struct AffineTrigConstraint {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  int degree;
  std::string label;
};

struct VerifyReport {
  double torque_constant = 0.0;
  double max_harmonic_residual = 0.0;   // max |C_k|, |S_k| for k >= 1
  double max_bound_violation = 0.0;     // scaled current excess over I_limit
  std::vector<double> coil_current_max; // grid max of |s_max * g_j|
  int grid_points = 0;
};

enum class SolverMode { Sdp, Sampled };

struct SynthOptions {
  SolverMode mode = SolverMode::Sdp;
  bool voltage_constraints = false;
  double V_min = 0.0;  // used only when voltage_constraints is on
  double V_max = 0.0;
  double K = 1.0;          // loop gain for the voltage envelope
  double omega_ref = 0.0;  // speed setpoint; normalizes speed to [0,1]
  int initial_grid = 720;
  int max_cut_rounds = 60;
  double cut_tolerance = 1e-9;
};

struct ControlSolution {
  std::vector<TrigPoly> waveforms;  // per coil; faulty coils are zero
  double t_opt = 0.0;
  double s_max = 1.0;
  double current_budget = 0.0;  // I_limit / s_max
  std::vector<GramCertificate> certificates;
  std::vector<std::string> certificate_labels;
  std::string status;
  std::string solver_mode;
  int lp_iterations = 0;
  int cut_rounds = 0;
  VerifyReport residuals;
};

inline std::vector<TrigPoly> waveforms_from_vector(const CancellationSystem& sys,
                                                   const Eigen::VectorXd& x) {
  std::vector<TrigPoly> w(static_cast<std::size_t>(sys.n_coils),
                          TrigPoly(sys.M_ctrl));
  for (std::size_t c = 0; c < sys.col_labels.size(); ++c) {
    const ColLabel& l = sys.col_labels[c];
    auto& poly = w[static_cast<std::size_t>(l.coil)];
    if (l.is_sin)
      poly.q(l.harmonic) += x(static_cast<Eigen::Index>(c));
    else
      poly.p(l.harmonic) += x(static_cast<Eigen::Index>(c));
  }
  return w;
}

inline VerifyReport verify_solution(const ControlSolution& sol,
                                    const MotorParams& mp, double s_max,
                                    int grid_points = 10000) {
  VerifyReport rep;
  rep.grid_points = grid_points;
  TrigPoly torque = TrigPoly::constant(-0.0);
  for (int j = 0; j < mp.n_coils; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (mp.faulty[ju]) {
      rep.coil_current_max.push_back(0.0);
      continue;
    }
    torque = torque + mul(sol.waveforms[ju], mp.torque_fns[ju]);
    const double cm = s_max * grid_abs_max(sol.waveforms[ju], grid_points);
    rep.coil_current_max.push_back(cm);
    rep.max_bound_violation = std::max(rep.max_bound_violation, cm - mp.I_limit);
  }
  rep.torque_constant = torque.p(0);
  for (int k = 1; k <= torque.degree(); ++k)
    rep.max_harmonic_residual = std::max(
        rep.max_harmonic_residual,
        std::max(std::abs(torque.p(k)), std::abs(torque.q(k))));
  return rep;
}

namespace detail {

// Current-bound constraint pair for one coil: B - g >= 0 and g + B >= 0,
// expressed over the full decision vector.
inline void add_current_constraints(const CancellationSystem& sys, int coil,
                                    double budget,
                                    std::vector<AffineTrigConstraint>* out) {
  const int d = sys.M_ctrl;
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(2 * d + 1, sys.cols());
  for (std::size_t c = 0; c < sys.col_labels.size(); ++c) {
    const ColLabel& l = sys.col_labels[c];
    if (l.coil != coil) continue;
    const int row = l.is_sin ? d + l.harmonic : l.harmonic;
    sel(row, static_cast<Eigen::Index>(c)) = 1.0;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * d + 1);
  b(0) = budget;
  out->push_back({-sel, b, d, "current_upper_coil" + std::to_string(coil + 1)});
  out->push_back({sel, b, d, "current_lower_coil" + std::to_string(coil + 1)});
}

// Bernstein voltage constraints for one coil, affine in the decision vector.
// With s(w) = a + b*wn scaled to normalized speed wn = x2/omega_ref, the
// steady voltage is wn^2 F1 + wn F2 + F3 (see controller.hpp for the same
// expansion at runtime).
inline void add_voltage_constraints(const CancellationSystem& sys,
                                    const MotorParams& mp, int coil,
                                    const SynthOptions& opt, double t_ref,
                                    std::vector<AffineTrigConstraint>* out) {
  const int d = sys.M_ctrl;
  const double wmax = opt.omega_ref;
  const double a = (opt.K * opt.omega_ref + mp.T_in) / t_ref;
  const double bb = -opt.K * wmax / t_ref;  // ds/dwn
  const auto ju = static_cast<std::size_t>(coil);
  const TrigPoly& g = mp.backemf_fns[ju];

  // Maps from x to the coefficient vectors of ghat and ghat'.
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(2 * d + 1, sys.cols());
  Eigen::MatrixXd dsel = Eigen::MatrixXd::Zero(2 * d + 1, sys.cols());
  for (std::size_t c = 0; c < sys.col_labels.size(); ++c) {
    const ColLabel& l = sys.col_labels[c];
    if (l.coil != coil) continue;
    const int k = l.harmonic;
    if (l.is_sin) {
      sel(d + k, static_cast<Eigen::Index>(c)) = 1.0;
      dsel(k, static_cast<Eigen::Index>(c)) = k;  // sin k -> k cos k
    } else {
      sel(k, static_cast<Eigen::Index>(c)) = 1.0;
      if (k >= 1) dsel(d + k, static_cast<Eigen::Index>(c)) = -k;  // cos k -> -k sin k
    }
  }
  // u(theta, wn) = wn^2 F1 + wn F2 + F3 with
  //   F1 = L*bb*wmax*ghat',  F2 = L*a*wmax*ghat' - L*bb*K*ghat + R*bb*ghat
  //        + wmax*g,         F3 = L*bb*K*omega_ref*ghat + R*a*ghat.
  const int dv = std::max(d, g.degree());
  auto pad = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * dv + 1, sys.cols());
    r.topRows(d + 1) = m.topRows(d + 1);
    r.middleRows(dv + 1, d) = m.middleRows(d + 1, d);
    return r;
  };
  const Eigen::MatrixXd S = pad(sel), D = pad(dsel);
  const Eigen::VectorXd gv = poly_to_vec(g, dv);
  const Eigen::MatrixXd F1 = mp.L * bb * wmax * D;
  const Eigen::MatrixXd F2m =
      mp.L * a * wmax * D + (-mp.L * bb * opt.K + mp.R * bb) * S;
  const Eigen::VectorXd F2v = wmax * gv;
  const Eigen::MatrixXd F3 = (mp.L * bb * opt.K * opt.omega_ref + mp.R * a) * S;

  Eigen::VectorXd vmin = Eigen::VectorXd::Zero(2 * dv + 1);
  vmin(0) = opt.V_min;
  Eigen::VectorXd vmax = Eigen::VectorXd::Zero(2 * dv + 1);
  vmax(0) = opt.V_max;
  const std::string tag = "_coil" + std::to_string(coil + 1);
  // Lower bound: F3 - Vmin, F2 + 2(F3 - Vmin), F1 + F2 + F3 - Vmin, all >= 0.
  out->push_back({F3, -vmin, dv, "voltage_lo_b0" + tag});
  out->push_back({F2m + 2.0 * F3, F2v - 2.0 * vmin, dv, "voltage_lo_b1" + tag});
  out->push_back({F1 + F2m + F3, F2v - vmin, dv, "voltage_lo_b2" + tag});
  // Upper bound: mirrored on Vmax - (wn^2 F1 + wn F2 + F3).
  out->push_back({-F3, vmax, dv, "voltage_hi_b0" + tag});
  out->push_back({-F2m - 2.0 * F3, -F2v + 2.0 * vmax, dv, "voltage_hi_b1" + tag});
  out->push_back({-F1 - F2m - F3, -F2v + vmax, dv, "voltage_hi_b2" + tag});
}

struct CutSet {
  std::vector<Eigen::RowVectorXd> rows;  // over reduced variable z
  std::vector<double> rhs;
};

inline void add_cut(const AffineTrigConstraint& con, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& N, double theta, CutSet* cuts) {
  const Eigen::RowVectorXd basis = eval_basis(con.degree, theta);
  const Eigen::RowVectorXd ba = basis * con.A;
  cuts->rows.emplace_back(-ba * N);
  cuts->rhs.push_back(basis.dot(con.b) + ba.dot(x0));
}

struct CutSolve {
  Eigen::VectorXd x;
  QpResult qp;
  int rounds = 0;
};

// Solve min 1/2 x'Qfull x + cfull'x over {x = x0 + N z} subject to every
// AffineTrigConstraint, generating cuts at exact minimizers until clean.
inline CutSolve solve_with_cuts(const Eigen::VectorXd& x0,
                                const Eigen::MatrixXd& N, bool quadratic,
                                const Eigen::VectorXd& cfull,
                                const std::vector<AffineTrigConstraint>& cons,
                                const SynthOptions& opt) {
  CutSet cuts;
  for (const auto& con : cons)
    for (int i = 0; i < opt.initial_grid; ++i)
      add_cut(con, x0, N, kTwoPi * i / opt.initial_grid, &cuts);

  CutSolve out;
  for (int round = 0; round < opt.max_cut_rounds; ++round) {
    QpProblem prob;
    if (quadratic) {
      prob.Q = N.transpose() * N;
      prob.c = N.transpose() * (x0 + cfull);
    } else {
      prob.c = N.transpose() * cfull;
    }
    prob.G.resize(static_cast<Eigen::Index>(cuts.rows.size()), N.cols());
    prob.h.resize(static_cast<Eigen::Index>(cuts.rhs.size()));
    for (std::size_t i = 0; i < cuts.rows.size(); ++i) {
      prob.G.row(static_cast<Eigen::Index>(i)) = cuts.rows[i];
      prob.h(static_cast<Eigen::Index>(i)) = cuts.rhs[i];
    }
    out.qp = solve_qp(prob);
    out.rounds = round + 1;
    const Eigen::VectorXd x = x0 + N * out.qp.x;
    out.x = x;
    if (opt.mode == SolverMode::Sampled) return out;
    bool clean = true;
    for (const auto& con : cons) {
      const TrigPoly poly = vec_to_poly(con.A * x + con.b);
      const TrigExtrema ex = trig_extrema(poly);
      const double scale = std::max(1.0, sup_bound(poly));
      if (ex.min_value < -opt.cut_tolerance * scale) {
        clean = false;
        add_cut(con, x0, N, ex.min_theta, &cuts);
      }
    }
    if (clean) return out;
  }
  return out;
}

}  // namespace detail

inline ControlSolution synthesize(const MotorParams& mp, int M_ctrl,
                                  double s_max,
                                  const SynthOptions& opt = {}) {
  mp.validate();
  if (!(s_max > 0.0))
    throw std::invalid_argument("synthesize: s_max must be positive");
  const CancellationSystem sys = build_cancellation_system(mp, M_ctrl);
  const ConsistencyReport cons = check_consistency(sys);
  if (!cons.consistent)
    throw SynthesisError(
        "cancellation",
        "harmonic cancellation system is inconsistent: constant torque is "
        "not reachable (residual " + std::to_string(cons.residual) + ")");

  const double budget = mp.I_limit / s_max;
  const int Mt = sys.M_total;

  // Equalities: C_k = S_k = 0 for k >= 1 (all rows but the objective row).
  const Eigen::MatrixXd A_eq = sys.matrix.topRows(sys.rows() - 1);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A_eq,
                                        Eigen::ComputeThinU | Eigen::ComputeFullV);
  const double smax_sv = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double thresh = 1e-10 * std::max(smax_sv, 1e-300);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++rank;
  const Eigen::MatrixXd N = svd.matrixV().rightCols(sys.cols() - rank);

  std::vector<AffineTrigConstraint> constraints;
  for (int j = 0; j < mp.n_coils; ++j)
    if (!mp.faulty[static_cast<std::size_t>(j)])
      detail::add_current_constraints(sys, j, budget, &constraints);

  // Stage 1: maximize the constant torque row.
  const Eigen::VectorXd obj = sys.matrix.row(sys.objective_row()).transpose();
  detail::CutSolve st1 = detail::solve_with_cuts(
      Eigen::VectorXd::Zero(sys.cols()), N, false, -obj, constraints, opt);
  if (!st1.qp.converged)
    throw SynthesisError("solver", "interior-point solve did not converge");
  double t_opt = obj.dot(st1.x);
  if (t_opt <= 1e-9)
    throw SynthesisError("objective",
                         "achievable constant torque is not positive");

  // Optional voltage constraints, second pass with the stage-1 torque as
  // the scale reference.
  if (opt.voltage_constraints) {
    for (int j = 0; j < mp.n_coils; ++j)
      if (!mp.faulty[static_cast<std::size_t>(j)])
        detail::add_voltage_constraints(sys, mp, j, opt, t_opt, &constraints);
    st1 = detail::solve_with_cuts(Eigen::VectorXd::Zero(sys.cols()), N, false,
                                  -obj, constraints, opt);
    if (!st1.qp.converged)
      throw SynthesisError("solver",
                           "interior-point solve did not converge (voltage)");
    t_opt = obj.dot(st1.x);
    if (t_opt <= 1e-9)
      throw SynthesisError("voltage",
                           "voltage constraints leave no positive torque");
  }

  // Stage 2 tie-break: minimum-norm coefficients at t fixed slightly below
  // the optimum. The fixed-t row joins the equality system.
  const double t_fix = t_opt * (1.0 - 1e-9);
  Eigen::MatrixXd A2(A_eq.rows() + 1, A_eq.cols());
  A2.topRows(A_eq.rows()) = A_eq;
  A2.bottomRows(1) = obj.transpose();
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(A2.rows());
  b2(A2.rows() - 1) = t_fix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd2(A2,
                                         Eigen::ComputeThinU | Eigen::ComputeFullV);
  int rank2 = 0;
  const double smax2 = svd2.singularValues().size() ? svd2.singularValues()(0) : 0.0;
  for (int i = 0; i < svd2.singularValues().size(); ++i)
    if (svd2.singularValues()(i) > 1e-10 * std::max(smax2, 1e-300)) ++rank2;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.cols());
  for (int i = 0; i < rank2; ++i)
    x0 += (svd2.matrixU().col(i).dot(b2) / svd2.singularValues()(i)) *
          svd2.matrixV().col(i);
  const Eigen::MatrixXd N2 = svd2.matrixV().rightCols(sys.cols() - rank2);
  detail::CutSolve st2 = detail::solve_with_cuts(
      x0, N2, true, Eigen::VectorXd::Zero(sys.cols()), constraints, opt);
  const Eigen::VectorXd x = st2.qp.converged ? st2.x : st1.x;

  ControlSolution sol;
  sol.waveforms = waveforms_from_vector(sys, x);
  sol.t_opt = obj.dot(x);
  sol.s_max = s_max;
  sol.current_budget = budget;
  sol.solver_mode = opt.mode == SolverMode::Sdp ? "sdp" : "sampled";
  sol.lp_iterations = st1.qp.iterations + st2.qp.iterations;
  sol.cut_rounds = st1.rounds + st2.rounds;
  sol.status = st2.qp.converged ? "optimal" : "optimal_no_tiebreak";
  for (const auto& con : constraints) {
    const TrigPoly poly = detail::vec_to_poly(con.A * x + con.b);
    sol.certificates.push_back(gram_certificate(poly, 1e-6));
    sol.certificate_labels.push_back(con.label);
  }
  sol.residuals = verify_solution(sol, mp, s_max);
  return sol;
}

}  // namespace pmmctl
