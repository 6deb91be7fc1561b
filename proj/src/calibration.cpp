#include "drfuse/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "drfuse/errors.hpp"
#include "drfuse/parallel.hpp"

namespace drfuse {

namespace {

bool is_entropy(const CressieRead& s) { return s.gamma == 0.0; }

// Dual objective, gradient and Hessian at λ for centered rows z.
// Entropy uses log-mean-exp, whose gradient is Σ w_i z_i directly.
struct DualState {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd weights;
  bool valid = false;
};

bool tilt_in_domain(const CressieRead& spec, const Eigen::VectorXd& t) {
  if (is_entropy(spec)) return true;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (!spec.in_domain(t(i))) return false;
  }
  return true;
}

double dual_value(const CressieRead& spec, const Eigen::VectorXd& t) {
  if (is_entropy(spec)) {
    const double mx = t.maxCoeff();
    return mx + std::log((t.array() - mx).exp().mean());
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) s += spec.rho_integral(t(i));
  return s / static_cast<double>(t.size());
}

DualState evaluate_dual(const CressieRead& spec, const Eigen::MatrixXd& z, const Eigen::VectorXd& lambda,
                        bool with_hessian) {
  DualState st;
  const Eigen::VectorXd t = z * lambda;
  if (!tilt_in_domain(spec, t)) return st;
  const double n = static_cast<double>(z.rows());
  Eigen::VectorXd r(t.size());
  if (is_entropy(spec)) {
    const double mx = t.maxCoeff();
    r = (t.array() - mx).exp().matrix();
    st.value = mx + std::log(r.mean());
    st.weights = r / r.sum();
    st.grad = z.transpose() * st.weights;
    if (with_hessian) {
      st.hess = z.transpose() * st.weights.asDiagonal() * z - st.grad * st.grad.transpose();
    }
  } else {
    Eigen::VectorXd dr(t.size());
    double v = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      r(i) = spec.rho(t(i));
      dr(i) = spec.rho_derivative(t(i));
      v += spec.rho_integral(t(i));
    }
    st.value = v / n;
    st.weights = r / r.sum();
    st.grad = z.transpose() * r / n;
    if (with_hessian) st.hess = z.transpose() * dr.asDiagonal() * z / n;
  }
  st.valid = st.weights.allFinite() && st.grad.allFinite();
  return st;
}

// Newton direction; the truncated pseudo-inverse keeps it usable when the
// Hessian is singular (collinear or constant calibration columns).
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad, bool& ill_conditioned) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double floor = top * 1e-12;
  ill_conditioned = ev.minCoeff() <= floor;
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv(i) = ev(i) > floor ? 1.0 / ev(i) : 0.0;
  const Eigen::MatrixXd& u = es.eigenvectors();
  return -(u * inv.asDiagonal() * (u.transpose() * grad));
}

double moment_residual(const Eigen::MatrixXd& z, const Eigen::VectorXd& w) {
  if (z.cols() == 0) return 0.0;
  return (z.transpose() * w).cwiseAbs().maxCoeff();
}

}  // namespace

bool CressieRead::in_domain(double x) const {
  if (!std::isfinite(x)) return false;
  if (gamma == 0.0) return true;
  return 1.0 + gamma * x > 0.0;
}

double CressieRead::rho(double x) const {
  if (!in_domain(x)) {
    std::ostringstream os;
    os << "tilt argument " << x << " outside the domain of rho for gamma=" << gamma;
    throw SolverError(SolverFailure::domain_violation, os.str());
  }
  if (gamma == 0.0) return std::exp(x);
  if (gamma == -1.0) return 1.0 / (1.0 - x);
  return std::pow(1.0 + gamma * x, 1.0 / gamma);
}

double CressieRead::rho_derivative(double x) const {
  if (gamma == 0.0) return std::exp(x);
  if (gamma == -1.0) return 1.0 / ((1.0 - x) * (1.0 - x));
  return std::pow(1.0 + gamma * x, 1.0 / gamma - 1.0);
}

double CressieRead::rho_integral(double x) const {
  if (gamma == 0.0) return std::exp(x);
  if (gamma == -1.0) return -std::log(1.0 - x);
  return std::pow(1.0 + gamma * x, 1.0 / gamma + 1.0) / (1.0 + gamma);
}

double CressieRead::discrepancy(const Eigen::VectorXd& weights) const {
  const double n = static_cast<double>(weights.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double nw = n * weights(i);
    if (gamma == 0.0) s += nw > 0.0 ? nw * std::log(nw) : 0.0;
    else if (gamma == -1.0) s += -std::log(nw);
    else s += (std::pow(nw, gamma + 1.0) - 1.0) / (gamma * (gamma + 1.0));
  }
  return s;
}

double rho(const CressieRead& spec, double x) { return spec.rho(x); }

Eigen::VectorXd tilted_weights(const Eigen::MatrixXd& x_arm, const Eigen::VectorXd& target,
                               const Eigen::VectorXd& lambda, const CressieRead& spec) {
  const Eigen::MatrixXd z = x_arm.rowwise() - target.transpose();
  const Eigen::VectorXd t = z * lambda;
  Eigen::VectorXd r(t.size());
  if (spec.gamma == 0.0) {
    r = (t.array() - t.maxCoeff()).exp().matrix();
  } else {
    for (Eigen::Index i = 0; i < t.size(); ++i) r(i) = spec.rho(t(i));
  }
  return r / r.sum();
}

ArmCalibration solve_arm(const Eigen::MatrixXd& x_arm, const Eigen::VectorXd& target, const CalibrationOptions& opts) {
  const Eigen::Index n = x_arm.rows();
  const Eigen::Index q = x_arm.cols();
  if (n < 2) throw ValidationError("calibration needs at least 2 units in the arm");
  if (target.size() != q) throw ValidationError("calibration target length does not match the covariate count");
  if (!x_arm.allFinite() || !target.allFinite()) throw ValidationError("calibration input is not finite");
  const CressieRead& spec = opts.divergence;
  const Eigen::MatrixXd z = x_arm.rowwise() - target.transpose();

  ArmCalibration out;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(q);
  DualState st = evaluate_dual(spec, z, lambda, true);
  double residual = moment_residual(z, st.weights);
  const double target_residual = 1e-2 * opts.tol;
  int iter = 0;
  bool stalled = false;
  while (residual > target_residual && iter < opts.max_iter) {
    ++iter;
    bool ill = false;
    Eigen::VectorXd dir = newton_direction(st.hess, st.grad, ill);
    if (!dir.allFinite() || st.grad.dot(dir) >= 0.0) {
      dir = -st.grad;
    }
    // Backtracking on the dual objective; a failed Newton search retries along -grad.
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double slope = st.grad.dot(dir);
      double step = 1.0;
      for (int h = 0; h < 80; ++h, step *= 0.5) {
        const Eigen::VectorXd cand = lambda + step * dir;
        const Eigen::VectorXd t = z * cand;
        if (!tilt_in_domain(spec, t)) continue;
        const double v = dual_value(spec, t);
        if (!std::isfinite(v)) continue;
        // Near the root the objective decrease drops below rounding, so a step that
        // keeps the objective flat but shrinks the moment residual is also accepted.
        bool ok = v <= st.value + 1e-4 * step * slope;
        if (!ok && v <= st.value + 1e-12 * std::max(1.0, std::abs(st.value))) {
          const DualState trial = evaluate_dual(spec, z, cand, false);
          ok = trial.valid && moment_residual(z, trial.weights) < residual;
        }
        if (ok) {
          lambda = cand;
          accepted = true;
          break;
        }
      }
      if (!accepted) dir = -st.grad;
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    st = evaluate_dual(spec, z, lambda, true);
    if (!st.valid) break;
    residual = moment_residual(z, st.weights);
  }

  const double max_w = st.valid ? st.weights.maxCoeff() : 1.0;
  if (!st.valid || residual > opts.tol) {
    const Eigen::VectorXd t = z * lambda;
    double margin = std::numeric_limits<double>::infinity();
    if (spec.gamma != 0.0) {
      for (Eigen::Index i = 0; i < t.size(); ++i) margin = std::min(margin, 1.0 + spec.gamma * t(i));
    }
    std::ostringstream os;
    os << "calibration did not converge (residual " << residual << ", max weight " << max_w << ", "
       << iter << " iterations)";
    if (max_w > opts.max_weight || !st.valid) throw SolverError(SolverFailure::no_overlap, os.str());
    if (spec.gamma > 0.0 && margin < 1e-6) throw SolverError(SolverFailure::domain_violation, os.str());
    if (stalled && spec.gamma > 0.0) throw SolverError(SolverFailure::domain_violation, os.str());
    if (stalled) throw SolverError(SolverFailure::no_overlap, os.str());
    throw SolverError(SolverFailure::max_iterations, os.str());
  }
  if (max_w > opts.max_weight) {
    std::ostringstream os;
    os << "calibration weight " << max_w << " exceeds " << opts.max_weight << "; covariate overlap is too weak";
    throw SolverError(SolverFailure::no_overlap, os.str());
  }
  out.weights = st.weights;
  out.lambda = lambda;
  out.residual = residual;
  out.iterations = iter;
  return out;
}

CalibrationResult calibrate_all(const Dataset& d, const CalibrationOptions& opts, std::vector<int> columns,
                                int threads) {
  if (columns.empty()) {
    for (int j = 1; j < d.p(); ++j) columns.push_back(j);
  }
  for (int c : columns) {
    if (c < 0 || c >= d.p()) throw ValidationError("calibration column " + std::to_string(c) + " out of range");
  }
  const Eigen::Index q = static_cast<Eigen::Index>(columns.size());
  Eigen::VectorXd target(q);
  for (Eigen::Index j = 0; j < q; ++j) target(j) = d.x.col(columns[static_cast<std::size_t>(j)]).mean();

  CalibrationResult res;
  res.columns = columns;
  res.weights = Eigen::VectorXd::Zero(d.n());
  res.lambda.assign(static_cast<std::size_t>(d.k), Eigen::VectorXd::Zero(q));
  res.residual.assign(static_cast<std::size_t>(d.k), 0.0);
  res.iterations.assign(static_cast<std::size_t>(d.k), 0);

  std::vector<std::vector<int>> units(static_cast<std::size_t>(d.k));
  for (int i = 0; i < d.n(); ++i) units[static_cast<std::size_t>(d.a[static_cast<std::size_t>(i)] - 1)].push_back(i);

  parallel_for(static_cast<std::size_t>(d.k), threads, [&](std::size_t arm_idx) {
    const auto& idx = units[arm_idx];
    const int arm = static_cast<int>(arm_idx) + 1;
    if (idx.empty()) return;
    if (idx.size() < 2) throw ValidationError("arm " + std::to_string(arm) + " has fewer than 2 units");
    Eigen::MatrixXd xa(static_cast<Eigen::Index>(idx.size()), q);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (Eigen::Index j = 0; j < q; ++j) xa(static_cast<Eigen::Index>(r), j) = d.x(idx[r], columns[static_cast<std::size_t>(j)]);
    }
    ArmCalibration sol;
    try {
      sol = solve_arm(xa, target, opts);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), e.what(), arm);
    }
    for (std::size_t r = 0; r < idx.size(); ++r) res.weights(idx[r]) = sol.weights(static_cast<Eigen::Index>(r));
    res.lambda[arm_idx] = sol.lambda;
    res.residual[arm_idx] = sol.residual;
    res.iterations[arm_idx] = sol.iterations;
  });
  return res;
}

CalibrationResult uniform_weights(const Dataset& d) {
  CalibrationResult res;
  const auto sizes = arm_sizes(d);
  res.weights.resize(d.n());
  for (int i = 0; i < d.n(); ++i) {
    res.weights(i) = 1.0 / sizes[static_cast<std::size_t>(d.a[static_cast<std::size_t>(i)] - 1)];
  }
  res.lambda.assign(static_cast<std::size_t>(d.k), Eigen::VectorXd());
  res.residual.assign(static_cast<std::size_t>(d.k), 0.0);
  res.iterations.assign(static_cast<std::size_t>(d.k), 0);
  return res;
}

}  // namespace drfuse
