#include "drfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"

namespace drfuse {

namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr int kLlaSteps = 20;

// Solves a symmetric positive semi-definite system, adding a small ridge when it is singular.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12) return ldlt.solve(b);
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1.0);
  Eigen::MatrixXd reg = a;
  reg.diagonal().array() += 1e-8 * scale;
  return reg.ldlt().solve(b);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

double mcp(double t, double lambda, double c) {
  t = std::abs(t);
  if (t <= c * lambda) return lambda * t - t * t / (2.0 * c);
  return c * lambda * lambda / 2.0;
}

}  // namespace

PenaltyKind parse_penalty(const std::string& s) {
  if (s == "l1") return PenaltyKind::l1;
  if (s == "mcp") return PenaltyKind::mcp;
  throw ValidationError("unknown penalty '" + s + "' (expected l1|mcp)");
}

const char* to_string(PenaltyKind k) noexcept { return k == PenaltyKind::l1 ? "l1" : "mcp"; }

MainEffectMode parse_main_effect(const std::string& s) {
  if (s == "pooled_ols") return MainEffectMode::pooled_ols;
  if (s == "zero") return MainEffectMode::zero;
  throw ValidationError("unknown main-effect mode '" + s + "' (expected pooled_ols|zero)");
}

const char* to_string(MainEffectMode m) noexcept { return m == MainEffectMode::pooled_ols ? "pooled_ols" : "zero"; }

double PenaltySpec::value(double t) const {
  if (kind == PenaltyKind::l1) return lambda * std::abs(t);
  return mcp(t, lambda, mcp_c);
}

double PenaltySpec::derivative(double t) const {
  if (kind == PenaltyKind::l1) return lambda;
  return std::max(lambda - std::abs(t) / mcp_c, 0.0);
}

Eigen::VectorXd prox_pairwise(const Eigen::VectorXd& z, const PenaltySpec& pen, double step) {
  const Eigen::Index p = z.size();
  auto shrink = [&](double tau) {
    Eigen::VectorXd out(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double m = std::abs(z(j)) - tau;
      out(j) = m > 0.0 ? std::copysign(m, z(j)) : 0.0;
    }
    return out;
  };
  if (pen.lambda <= 0.0 || step <= 0.0) return z;
  if (pen.kind == PenaltyKind::l1) return shrink(step * pen.lambda);

  // MCP of the l1 norm: the minimizer lies on the soft-threshold path S(z, τ), and
  // φ(τ) = ½Σmin(|z_j|,τ)² + step·P(Σ(|z_j|-τ)₊) is piecewise quadratic in τ, so the
  // global minimum is at a breakpoint or at a stationary point of one piece.
  std::vector<double> mag(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) mag[static_cast<std::size_t>(j)] = std::abs(z(j));
  std::sort(mag.begin(), mag.end(), std::greater<>());
  const double lam = pen.lambda;
  const double c = pen.mcp_c;
  auto phi = [&](double tau) {
    double quad = 0.0;
    double s = 0.0;
    for (double m : mag) {
      quad += std::min(m, tau) * std::min(m, tau);
      s += std::max(m - tau, 0.0);
    }
    return 0.5 * quad + step * mcp(s, lam, c);
  };
  std::vector<double> cand = {0.0};
  cand.insert(cand.end(), mag.begin(), mag.end());
  double top_sum = 0.0;
  for (std::size_t k = 1; k <= mag.size(); ++k) {
    top_sum += mag[k - 1];
    const double hi = mag[k - 1];
    const double lo = k < mag.size() ? mag[k] : 0.0;
    const double kd = static_cast<double>(k);
    const double boundary = (top_sum - c * lam) / kd;  // τ where Σ(|z|-τ)₊ = cλ
    if (boundary > lo && boundary < hi) cand.push_back(boundary);
    const double denom = 1.0 - step * kd / c;
    if (std::abs(denom) > 1e-14) {
      const double stationary = (step * lam - step * top_sum / c) / denom;
      if (stationary > lo && stationary < hi) cand.push_back(stationary);
    }
  }
  double best_tau = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (double tau : cand) {
    const double v = phi(tau);
    if (v < best - 1e-15 || (v <= best + 1e-15 && tau > best_tau)) {
      best = std::min(best, v);
      best_tau = tau;
    }
  }
  return shrink(best_tau);
}

Eigen::VectorXd fit_main_effect(const Dataset& d, MainEffectMode mode) {
  if (mode == MainEffectMode::zero) return Eigen::VectorXd::Zero(d.p());
  const Eigen::MatrixXd g = d.x.transpose() * d.x;
  return solve_spd(g, d.x.transpose() * d.y);
}

Eigen::VectorXd transform_outcome(const Dataset& d, const Eigen::VectorXd& m0) { return d.y - d.x * m0; }

FusedLassoSolver::FusedLassoSolver(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights)
    : k_(d.k), p_(d.p()), n_(d.n()) {
  if (ytilde.size() != d.n() || weights.size() != d.n()) {
    throw ValidationError("fused fit: outcome and weight vectors must have length n");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) >= 0.0) || !std::isfinite(weights(i))) throw ValidationError("fused fit: weights must be finite and >= 0");
  }
  gram_.assign(static_cast<std::size_t>(k_), Eigen::MatrixXd::Zero(p_, p_));
  xty_.assign(static_cast<std::size_t>(k_), Eigen::VectorXd::Zero(p_));
  std::vector<int> count(static_cast<std::size_t>(k_), 0);
  for (int i = 0; i < n_; ++i) {
    const auto a = static_cast<std::size_t>(d.a[static_cast<std::size_t>(i)] - 1);
    const Eigen::VectorXd xi = d.x.row(i).transpose();
    gram_[a].noalias() += weights(i) * xi * xi.transpose();
    xty_[a].noalias() += weights(i) * ytilde(i) * xi;
    wy2_ += weights(i) * ytilde(i) * ytilde(i);
    ++count[a];
  }
  for (int a = 0; a < k_; ++a) {
    if (count[static_cast<std::size_t>(a)] > 0 && count[static_cast<std::size_t>(a)] < p_) {
      diag::warn("arm " + std::to_string(a + 1) + " has " + std::to_string(count[static_cast<std::size_t>(a)]) +
                 " units for " + std::to_string(p_) + " coefficients; relying on fusion for regularization");
    }
  }
  for (int a = 0; a < k_; ++a) {
    for (int b = a + 1; b < k_; ++b) edges_.emplace_back(a, b);
  }
}

void FusedLassoSolver::factorize(double rho) {
  if (rho == factor_rho_) return;
  arm_inverse_.resize(static_cast<std::size_t>(k_));
  Eigen::MatrixXd sum_inv = Eigen::MatrixXd::Zero(p_, p_);
  const Eigen::MatrixXd shift = rho * k_ * Eigen::MatrixXd::Identity(p_, p_);
  for (int a = 0; a < k_; ++a) {
    arm_inverse_[static_cast<std::size_t>(a)] = (gram_[static_cast<std::size_t>(a)] + shift).llt().solve(Eigen::MatrixXd::Identity(p_, p_));
    sum_inv += arm_inverse_[static_cast<std::size_t>(a)];
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p_, p_) - rho * sum_inv;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) m.diagonal().array() += 1e-12;
  pooled_solve_ = m.fullPivLu().inverse();
  factor_rho_ = rho;
}

void FusedLassoSolver::reset_state() {
  beta_.resize(k_, p_);
  Eigen::MatrixXd pooled_g = Eigen::MatrixXd::Zero(p_, p_);
  Eigen::VectorXd pooled_r = Eigen::VectorXd::Zero(p_);
  for (int a = 0; a < k_; ++a) {
    pooled_g += gram_[static_cast<std::size_t>(a)];
    pooled_r += xty_[static_cast<std::size_t>(a)];
  }
  const Eigen::VectorXd pooled = solve_spd(pooled_g, pooled_r);
  // Cold start at the per-arm fits, shrunk slightly toward the pooled fit so that
  // arms with fewer units than coefficients stay solvable. A non-convex penalty
  // started from the pooled fit would stay at the all-fused stationary point.
  const double ridge = 1e-6 * std::max(pooled_g.diagonal().maxCoeff() / k_, 1e-12);
  for (int a = 0; a < k_; ++a) {
    Eigen::MatrixXd g = gram_[static_cast<std::size_t>(a)];
    g.diagonal().array() += ridge;
    beta_.row(a) = solve_spd(g, xty_[static_cast<std::size_t>(a)] + ridge * pooled).transpose();
  }
  const auto e = static_cast<Eigen::Index>(edges_.size());
  delta_.resize(p_, e);
  for (Eigen::Index j = 0; j < e; ++j) {
    const auto [a, b] = edges_[static_cast<std::size_t>(j)];
    delta_.col(j) = (beta_.row(a) - beta_.row(b)).transpose();
  }
  dual_ = Eigen::MatrixXd::Zero(p_, e);
  has_state_ = true;
}

Eigen::MatrixXd FusedLassoSolver::solve_beta(double rho) const {
  // (G_a + ρK I) β_a = r_a + ρ h_a + ρ S with S = Σ_a β_a.
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(k_));
  for (int a = 0; a < k_; ++a) rhs[static_cast<std::size_t>(a)] = xty_[static_cast<std::size_t>(a)];
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [a, b] = edges_[e];
    const Eigen::VectorXd c = rho * (delta_.col(static_cast<Eigen::Index>(e)) - dual_.col(static_cast<Eigen::Index>(e)));
    rhs[static_cast<std::size_t>(a)] += c;
    rhs[static_cast<std::size_t>(b)] -= c;
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p_);
  std::vector<Eigen::VectorXd> part(static_cast<std::size_t>(k_));
  for (int a = 0; a < k_; ++a) {
    part[static_cast<std::size_t>(a)] = arm_inverse_[static_cast<std::size_t>(a)] * rhs[static_cast<std::size_t>(a)];
    acc += part[static_cast<std::size_t>(a)];
  }
  const Eigen::VectorXd s = pooled_solve_ * acc;
  Eigen::MatrixXd beta(k_, p_);
  for (int a = 0; a < k_; ++a) {
    beta.row(a) = (part[static_cast<std::size_t>(a)] + rho * (arm_inverse_[static_cast<std::size_t>(a)] * s)).transpose();
  }
  return beta;
}

double FusedLassoSolver::objective(const Eigen::MatrixXd& beta, const PenaltySpec& pen) const {
  double loss = wy2_;
  for (int a = 0; a < k_; ++a) {
    const Eigen::VectorXd b = beta.row(a).transpose();
    loss += b.dot(gram_[static_cast<std::size_t>(a)] * b) - 2.0 * b.dot(xty_[static_cast<std::size_t>(a)]);
  }
  double penalty = 0.0;
  for (const auto& [a, b] : edges_) penalty += pen.value((beta.row(a) - beta.row(b)).lpNorm<1>());
  return loss / (2.0 * n_) + penalty;
}

double FusedLassoSolver::lambda_fuse_all() const {
  Eigen::MatrixXd pooled_g = Eigen::MatrixXd::Zero(p_, p_);
  Eigen::VectorXd pooled_r = Eigen::VectorXd::Zero(p_);
  for (int a = 0; a < k_; ++a) {
    pooled_g += gram_[static_cast<std::size_t>(a)];
    pooled_r += xty_[static_cast<std::size_t>(a)];
  }
  const Eigen::VectorXd pooled = solve_spd(pooled_g, pooled_r);
  std::vector<Eigen::VectorXd> grad(static_cast<std::size_t>(k_));
  for (int a = 0; a < k_; ++a) {
    grad[static_cast<std::size_t>(a)] = (gram_[static_cast<std::size_t>(a)] * pooled - xty_[static_cast<std::size_t>(a)]) / n_;
  }
  double worst = 0.0;
  for (const auto& [a, b] : edges_) {
    worst = std::max(worst, (grad[static_cast<std::size_t>(a)] - grad[static_cast<std::size_t>(b)]).lpNorm<Eigen::Infinity>());
  }
  return worst / k_;
}

FusedFit FusedLassoSolver::fit(const PenaltySpec& pen, const AdmmOptions& opts) {
  if (!(pen.lambda >= 0.0)) throw ValidationError("fusion lambda must be >= 0");
  if (pen.kind == PenaltyKind::mcp && !(pen.mcp_c > 1.0)) throw ValidationError("mcp_c must exceed 1");
  if (!has_state_) reset_state();
  trace_.clear();
  if (pen.kind == PenaltyKind::l1) return run_admm(std::vector<double>(edges_.size(), pen.lambda), pen, opts);

  FusedFit out;
  int total = 0;
  for (int step = 0; step < kLlaSteps; ++step) {
    std::vector<double> lam(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      lam[e] = pen.derivative((beta_.row(a) - beta_.row(b)).lpNorm<1>());
    }
    const Eigen::MatrixXd before = beta_;
    out = run_admm(lam, pen, opts);
    total += out.iterations;
    if (!out.converged || (beta_ - before).lpNorm<Eigen::Infinity>() <= opts.abs_tol) break;
  }
  out.iterations = total;
  return out;
}

FusedFit FusedLassoSolver::run_admm(const std::vector<double>& edge_lambda, const PenaltySpec& pen,
                                    const AdmmOptions& opts) {
  // Internally the objective is scaled by n, so the penalty carries a factor n.
  double rho = std::clamp(opts.rho, kRhoMin, kRhoMax);
  const auto ne = static_cast<Eigen::Index>(edges_.size());
  FusedFit out;
  Eigen::MatrixXd diff(p_, ne);
  for (int it = 1; it <= opts.max_iter; ++it) {
    factorize(rho);
    beta_ = solve_beta(rho);
    for (Eigen::Index e = 0; e < ne; ++e) {
      const auto [a, b] = edges_[static_cast<std::size_t>(e)];
      diff.col(e) = (beta_.row(a) - beta_.row(b)).transpose();
    }
    const Eigen::MatrixXd delta_old = delta_;
    for (Eigen::Index e = 0; e < ne; ++e) {
      const PenaltySpec edge{PenaltyKind::l1, edge_lambda[static_cast<std::size_t>(e)], pen.mcp_c};
      delta_.col(e) = prox_pairwise(diff.col(e) + dual_.col(e), edge, static_cast<double>(n_) / rho);
    }
    const Eigen::MatrixXd primal = diff - delta_;
    dual_ += primal;

    // Dual residual ρ Dᵀ(δ^k - δ^{k-1}) accumulated per arm.
    Eigen::MatrixXd dres = Eigen::MatrixXd::Zero(p_, k_);
    for (Eigen::Index e = 0; e < ne; ++e) {
      const auto [a, b] = edges_[static_cast<std::size_t>(e)];
      const Eigen::VectorXd step = delta_.col(e) - delta_old.col(e);
      dres.col(a) += step;
      dres.col(b) -= step;
    }
    out.primal_residual = primal.norm();
    out.dual_residual = rho * dres.norm();
    out.iterations = it;
    if (record_trace_) trace_.push_back(objective(beta_, pen));
    if (out.primal_residual <= opts.abs_tol && out.dual_residual <= opts.abs_tol) {
      out.converged = true;
      break;
    }
    if (opts.residual_balancing) {
      if (out.primal_residual > 10.0 * out.dual_residual && rho < kRhoMax) {
        rho *= 2.0;
        dual_ /= 2.0;
      } else if (out.dual_residual > 10.0 * out.primal_residual && rho > kRhoMin) {
        rho /= 2.0;
        dual_ *= 2.0;
      }
    }
  }
  out.beta = beta_;
  return out;
}

FusedFit weighted_fused_fit(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                            const PenaltySpec& pen, const AdmmOptions& opts) {
  FusedLassoSolver solver(d, ytilde, weights);
  FusedFit fit = solver.fit(pen, opts);
  if (!fit.converged) {
    std::ostringstream os;
    os << "fused ADMM stopped after " << fit.iterations << " iterations (primal " << fit.primal_residual << ", dual "
       << fit.dual_residual << "); returning the last iterate";
    diag::warn(os.str());
  }
  return fit;
}

GroupMapping extract_groups(const Eigen::MatrixXd& beta, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("grouping threshold must be >= 0");
  const int k = static_cast<int>(beta.rows());
  UnionFind uf(k);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      if ((beta.row(a) - beta.row(b)).norm() < threshold) uf.unite(a, b);
    }
  }
  std::vector<int> root(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) root[static_cast<std::size_t>(a)] = uf.find(a);
  return GroupMapping::from_labels(root);
}

Eigen::MatrixXd oracle_refit(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                             const GroupMapping& groups) {
  if (groups.k() != d.k) throw ValidationError("group mapping covers " + std::to_string(groups.k()) + " treatments, dataset has " + std::to_string(d.k));
  const int p = d.p();
  std::vector<Eigen::MatrixXd> g(static_cast<std::size_t>(groups.m), Eigen::MatrixXd::Zero(p, p));
  std::vector<Eigen::VectorXd> r(static_cast<std::size_t>(groups.m), Eigen::VectorXd::Zero(p));
  for (int i = 0; i < d.n(); ++i) {
    const auto b = static_cast<std::size_t>(groups.group_of(d.a[static_cast<std::size_t>(i)]) - 1);
    const Eigen::VectorXd xi = d.x.row(i).transpose();
    g[b].noalias() += weights(i) * xi * xi.transpose();
    r[b].noalias() += weights(i) * ytilde(i) * xi;
  }
  std::vector<Eigen::VectorXd> coef(static_cast<std::size_t>(groups.m));
  for (int b = 0; b < groups.m; ++b) coef[static_cast<std::size_t>(b)] = solve_spd(g[static_cast<std::size_t>(b)], r[static_cast<std::size_t>(b)]);
  Eigen::MatrixXd beta(d.k, p);
  for (int a = 1; a <= d.k; ++a) beta.row(a - 1) = coef[static_cast<std::size_t>(groups.group_of(a) - 1)].transpose();
  return beta;
}

double weighted_rss(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                    const Eigen::MatrixXd& beta) {
  double s = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    const double r = ytilde(i) - d.x.row(i).dot(beta.row(d.a[static_cast<std::size_t>(i)] - 1));
    s += weights(i) * r * r;
  }
  return s;
}

double ebic_value(int n, int k, int p, double wrss, int m_hat, double ebic_gamma) {
  const double df = static_cast<double>(m_hat) * p;
  const double nn = static_cast<double>(n);
  const double fit = wrss > 0.0 ? nn * std::log(wrss / nn) : -std::numeric_limits<double>::infinity();
  return fit + df * std::log(nn) + 2.0 * ebic_gamma * df * std::log(static_cast<double>(k) * p);
}

std::vector<double> default_lambda_grid(FusedLassoSolver& solver, const FusionOptions& opts) {
  PenaltySpec pen{opts.penalty, solver.lambda_fuse_all(), opts.mcp_c};
  if (!(pen.lambda > 0.0)) return {0.0};
  auto groups_at = [&](double lambda) {
    pen.lambda = lambda;
    return extract_groups(solver.fit(pen, opts.admm).beta, opts.threshold).m;
  };
  double lambda_max = pen.lambda;
  for (int up = 0; up < 20 && groups_at(lambda_max) != 1; ++up) lambda_max *= 2.0;
  for (int down = 0; down < 40; ++down) {
    const double next = lambda_max / 2.0;
    if (groups_at(next) != 1) break;
    lambda_max = next;
  }
  const int size = std::max(opts.grid_size, 1);
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const double frac = size == 1 ? 0.0 : static_cast<double>(i) / (size - 1);
    grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(opts.grid_ratio, frac);
  }
  return grid;
}

FusionResult ebic_select(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                         const FusionOptions& opts) {
  FusedLassoSolver solver(d, ytilde, weights);
  std::vector<double> grid = opts.lambda_grid.empty() ? default_lambda_grid(solver, opts) : opts.lambda_grid;
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("lambda grid values must be finite and >= 0");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  struct Point {
    EbicPoint info;
    Eigen::MatrixXd beta;
    Eigen::MatrixXd refit;
    GroupMapping groups;
  };
  std::vector<Point> pts;
  pts.reserve(grid.size());
  int unconverged = 0;
  for (double lambda : grid) {
    const FusedFit fit = solver.fit(PenaltySpec{opts.penalty, lambda, opts.mcp_c}, opts.admm);
    Point pt;
    pt.beta = fit.beta;
    pt.groups = extract_groups(fit.beta, opts.threshold);
    pt.refit = oracle_refit(d, ytilde, weights, pt.groups);
    pt.info.lambda = lambda;
    pt.info.m_hat = pt.groups.m;
    pt.info.wrss = weighted_rss(d, ytilde, weights, pt.refit);
    pt.info.ebic = ebic_value(d.n(), d.k, d.p(), pt.info.wrss, pt.groups.m, opts.ebic_gamma);
    pt.info.iterations = fit.iterations;
    pt.info.converged = fit.converged;
    if (!fit.converged) ++unconverged;
    pts.push_back(std::move(pt));
  }
  if (unconverged > 0) {
    diag::warn(std::to_string(unconverged) + " of " + std::to_string(pts.size()) +
               " lambda values hit the ADMM iteration limit");
  }

  // pts is in descending lambda; strict improvement keeps ties at the larger lambda.
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].info.ebic < pts[best].info.ebic) best = i;
  }
  if (opts.penalty == PenaltyKind::l1) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i - 1].info.m_hat > pts[i].info.m_hat) {
        std::ostringstream os;
        os << "number of groups is not monotone along the lambda path (" << pts[i].info.m_hat << " at lambda "
           << pts[i].info.lambda << ", " << pts[i - 1].info.m_hat << " at lambda " << pts[i - 1].info.lambda << ")";
        diag::warn(os.str());
        break;
      }
    }
  }

  FusionResult res;
  res.beta = pts[best].beta;
  res.refit_beta = pts[best].refit;
  res.groups = pts[best].groups;
  res.lambda_selected = pts[best].info.lambda;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) res.ebic_path.push_back(it->info);
  return res;
}

FusionResult fuse(const Dataset& d, const Eigen::VectorXd& weights, const FusionOptions& opts) {
  const Eigen::VectorXd m0 = fit_main_effect(d, opts.main_effect);
  const Eigen::VectorXd ytilde = transform_outcome(d, m0);
  FusionResult res = ebic_select(d, ytilde, weights, opts);
  res.m0_coefficients = m0;
  return res;
}

}  // namespace drfuse
