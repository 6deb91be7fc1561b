#include "drfuse/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "drfuse/parallel.hpp"

namespace drfuse {

std::vector<int> CrossFitPlan::units_in(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (fold_of[static_cast<std::size_t>(i)] == fold) out.push_back(i);
  return out;
}

std::vector<int> CrossFitPlan::units_not_in(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (fold_of[static_cast<std::size_t>(i)] != fold) out.push_back(i);
  return out;
}

CrossFitPlan make_folds(int n, const std::vector<int>& groups, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ValidationError("number of folds must be at least 2");
  if (n < n_folds) throw ValidationError("number of folds exceeds the number of units");
  if (!groups.empty() && static_cast<int>(groups.size()) != n)
    throw ValidationError("group labels do not match the number of units");

  CrossFitPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.fold_of.assign(static_cast<std::size_t>(n), 0);
  std::mt19937_64 rng(seed);

  std::vector<int> labels = groups.empty() ? std::vector<int>(static_cast<std::size_t>(n), 1) : groups;
  const int m = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<int>> strata(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) strata[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)] - 1)].push_back(i);

  bool stratify = true;
  for (const auto& s : strata)
    if (!s.empty() && static_cast<int>(s.size()) < n_folds) stratify = false;
  if (!stratify) {
    diag::warn("a group has fewer units than folds; using an unstratified split");
    strata.assign(1, std::vector<int>(static_cast<std::size_t>(n)));
    std::iota(strata[0].begin(), strata[0].end(), 0);
  }
  plan.stratified = stratify;

  // Deal shuffled strata round-robin, continuing the fold counter across strata
  // so overall fold sizes differ by at most one.
  int next = 0;
  for (auto& s : strata) {
    std::shuffle(s.begin(), s.end(), rng);
    for (int i : s) {
      plan.fold_of[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % n_folds;
    }
  }
  return plan;
}

OutcomeModel parse_outcome_model(const std::string& s) {
  if (s == "ridge_poly2") return OutcomeModel::ridge_poly2;
  if (s == "bagged_trees") return OutcomeModel::bagged_trees;
  throw ValidationError("unknown outcome model '" + s + "' (expected ridge_poly2 or bagged_trees)");
}

const char* to_string(OutcomeModel m) noexcept {
  return m == OutcomeModel::ridge_poly2 ? "ridge_poly2" : "bagged_trees";
}

namespace {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& z) {
    Standardizer s;
    s.mean = z.colwise().mean();
    s.scale.resize(z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double sd = std::sqrt((z.col(j).array() - s.mean(j)).square().mean());
      s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const {
    return (z.rowwise() - mean).array().rowwise() / scale.array();
  }
};

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(z.cols()) = z;
  return out;
}

// Row-wise softmax with the last class as the zero-logit reference.
Eigen::MatrixXd softmax_with_reference(const Eigen::MatrixXd& eta) {
  const Eigen::Index n = eta.rows();
  const Eigen::Index m1 = eta.cols();
  Eigen::MatrixXd p(n, m1 + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = std::max(0.0, eta.row(i).maxCoeff());
    double total = std::exp(-mx);
    for (Eigen::Index c = 0; c < m1; ++c) {
      p(i, c) = std::exp(eta(i, c) - mx);
      total += p(i, c);
    }
    p(i, m1) = std::exp(-mx);
    p.row(i) /= total;
  }
  return p;
}

}  // namespace

void MultinomialLogit::fit(const Eigen::MatrixXd& features, const std::vector<int>& labels, int m, double ridge) {
  if (m < 2) throw ValidationError("multinomial logistic regression needs at least two classes");
  const Eigen::Index n = features.rows();
  const Eigen::Index q1 = features.cols() + 1;
  const Eigen::Index m1 = m - 1;
  const Eigen::MatrixXd z = with_intercept(features);
  m_ = m;
  coef_ = Eigen::MatrixXd::Zero(q1, m1);
  converged_ = false;

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, m1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < m) onehot(i, c - 1) = 1.0;
  }

  // Mean negative log-likelihood plus (ridge/2)·‖θ‖².
  auto objective = [&](const Eigen::MatrixXd& coef) {
    const Eigen::MatrixXd eta = z * coef;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = std::max(0.0, eta.row(i).maxCoeff());
      double lse = std::exp(-mx);
      for (Eigen::Index c = 0; c < m1; ++c) lse += std::exp(eta(i, c) - mx);
      const int yc = labels[static_cast<std::size_t>(i)];
      total += mx + std::log(lse) - (yc < m ? eta(i, yc - 1) : 0.0);
    }
    return total / static_cast<double>(n) + 0.5 * ridge * coef.squaredNorm();
  };

  const Eigen::Index dim = q1 * m1;
  double value = objective(coef_);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::MatrixXd p = softmax_with_reference(z * coef_);
    const Eigen::MatrixXd resid = p.leftCols(m1) - onehot;
    const Eigen::MatrixXd grad_mat = z.transpose() * resid / static_cast<double>(n) + ridge * coef_;
    const Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(grad_mat.data(), dim);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-9) {
      converged_ = true;
      break;
    }

    // Hessian blocks (c, c') = Zᵀ diag(p_c(δ_cc' - p_c')) Z / n, column-major θ = vec(coef).
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index c = 0; c < m1; ++c) {
      for (Eigen::Index c2 = c; c2 < m1; ++c2) {
        Eigen::ArrayXd w = -p.col(c).array() * p.col(c2).array();
        if (c == c2) w += p.col(c).array();
        const Eigen::MatrixXd block = z.transpose() * (z.array().colwise() * w).matrix() / static_cast<double>(n);
        hess.block(c * q1, c2 * q1, q1, q1) = block;
        if (c2 != c) hess.block(c2 * q1, c * q1, q1, q1) = block.transpose();
      }
    }
    hess.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(grad) <= 0.0) step = grad;
    // Newton decrement below double resolution of the objective: nothing left to gain.
    if (step.dot(grad) < 1e-15 * (1.0 + std::abs(value))) {
      converged_ = true;
      break;
    }
    const Eigen::MatrixXd step_mat = Eigen::Map<const Eigen::MatrixXd>(step.data(), q1, m1);

    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::MatrixXd trial = coef_ - t * step_mat;
      const double v = objective(trial);
      if (v <= value - 1e-4 * t * step.dot(grad)) {
        coef_ = trial;
        value = v;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // No further decrease representable; accept when the gradient is already small.
      converged_ = grad.lpNorm<Eigen::Infinity>() < 1e-6;
      break;
    }
  }
}

Eigen::MatrixXd MultinomialLogit::predict(const Eigen::MatrixXd& features) const {
  return softmax_with_reference(with_intercept(features) * coef_);
}

Eigen::MatrixXd fit_propensity(const Eigen::MatrixXd& features, const std::vector<int>& groups, int m,
                               const CrossFitPlan& plan, const NuisanceOptions& opts) {
  const Eigen::Index n = features.rows();
  if (plan.n() != n || static_cast<Eigen::Index>(groups.size()) != n)
    throw ValidationError("fold plan, labels and features disagree on the number of units");
  Eigen::MatrixXd out(n, m);
  if (m == 1) {
    out.setOnes();
    return out;
  }
  std::vector<Eigen::MatrixXd> fold_pred(static_cast<std::size_t>(plan.n_folds));
  parallel_for(static_cast<std::size_t>(plan.n_folds), opts.threads, [&](std::size_t l) {
    const std::vector<int> train = plan.units_not_in(static_cast<int>(l));
    const std::vector<int> test = plan.units_in(static_cast<int>(l));
    const Eigen::MatrixXd xtr = rows_of(features, train);
    const Standardizer st = Standardizer::fit(xtr);
    std::vector<int> ytr;
    ytr.reserve(train.size());
    for (int i : train) ytr.push_back(groups[static_cast<std::size_t>(i)]);

    MultinomialLogit model;
    model.fit(st.apply(xtr), ytr, m, opts.propensity_ridge);
    if (!model.converged()) {
      model.fit(st.apply(xtr), ytr, m, opts.propensity_ridge * 100.0);
      if (!model.converged())
        throw SolverError(SolverFailure::non_convergence,
                          "propensity model did not converge on fold " + std::to_string(l + 1));
    }
    fold_pred[l] = model.predict(st.apply(rows_of(features, test)));
  });
  for (int l = 0; l < plan.n_folds; ++l) {
    const std::vector<int> test = plan.units_in(l);
    for (std::size_t r = 0; r < test.size(); ++r)
      out.row(test[r]) = fold_pred[static_cast<std::size_t>(l)].row(static_cast<Eigen::Index>(r));
  }
  return out;
}

Eigen::MatrixXd poly2_expand(const Eigen::MatrixXd& features) {
  const Eigen::Index q = features.cols();
  Eigen::MatrixXd out(features.rows(), q + q * (q + 1) / 2);
  out.leftCols(q) = features;
  Eigen::Index c = q;
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index k = j; k < q; ++k) out.col(c++) = features.col(j).cwiseProduct(features.col(k));
  return out;
}

namespace {

class RidgePoly2 {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge) {
    const Eigen::MatrixXd z = poly2_expand(x);
    st_ = Standardizer::fit(z);
    const Eigen::MatrixXd zs = st_.apply(z);
    const double n = static_cast<double>(x.rows());
    const double ybar = y.mean();
    Eigen::MatrixXd gram = zs.transpose() * zs / n;
    gram.diagonal().array() += ridge;
    beta_ = gram.ldlt().solve(zs.transpose() * (y.array() - ybar).matrix() / n);
    // Columns are centered, so the unpenalized intercept is the outcome mean.
    intercept_ = ybar;
  }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    return (st_.apply(poly2_expand(x)) * beta_).array() + intercept_;
  }

 private:
  Standardizer st_;
  Eigen::VectorXd beta_;
  double intercept_ = 0.0;
};

class RegressionTree {
 public:
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& idx, int depth, int min_leaf) {
    nodes_.clear();
    build(x, y, idx, depth, min_leaf);
  }
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(node)];
      node = row(nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  int build(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<int> idx, int depth, int min_leaf) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (int i : idx) sum += y(i);
    const double n = static_cast<double>(idx.size());
    nodes_[static_cast<std::size_t>(id)].value = sum / n;
    if (depth == 0 || static_cast<int>(idx.size()) < 2 * min_leaf) return id;

    // Best variance-reducing split: maximize S_L²/n_L + S_R²/n_R.
    double best_gain = sum * sum / n + 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order = idx;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::sort(order.begin(), order.end(), [&](int a, int b) { return x(a, j) < x(b, j); });
      double left = 0.0;
      for (std::size_t r = 0; r + 1 < order.size(); ++r) {
        left += y(order[r]);
        const int nl = static_cast<int>(r + 1);
        const int nr = static_cast<int>(order.size()) - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double xa = x(order[r], j);
        const double xb = x(order[r + 1], j);
        if (!(xa < xb)) continue;
        const double right = sum - left;
        const double gain = left * left / nl + right * right / nr;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(j);
          best_threshold = 0.5 * (xa + xb);
        }
      }
    }
    if (best_feature < 0) return id;
    std::vector<int> li;
    std::vector<int> ri;
    for (int i : idx) (x(i, best_feature) < best_threshold ? li : ri).push_back(i);
    const int l = build(x, y, std::move(li), depth - 1, min_leaf);
    const int r = build(x, y, std::move(ri), depth - 1, min_leaf);
    Node& nd = nodes_[static_cast<std::size_t>(id)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = r;
    return id;
  }

  std::vector<Node> nodes_;
};

Eigen::VectorXd bagged_tree_predict(const Eigen::MatrixXd& xtr, const Eigen::VectorXd& ytr, const Eigen::MatrixXd& xte,
                                    const NuisanceOptions& opts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(xtr.rows());
  std::uniform_int_distribution<int> pick(0, n - 1);
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(xte.rows());
  RegressionTree tree;
  std::vector<int> boot(static_cast<std::size_t>(n));
  for (int b = 0; b < opts.n_trees; ++b) {
    for (auto& v : boot) v = pick(rng);
    tree.fit(xtr, ytr, boot, opts.tree_depth, opts.min_leaf);
    for (Eigen::Index i = 0; i < xte.rows(); ++i) pred(i) += tree.predict(xte.row(i));
  }
  return pred / static_cast<double>(opts.n_trees);
}

}  // namespace

Eigen::MatrixXd fit_outcome(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const std::vector<int>& groups,
                            int m, const CrossFitPlan& plan, const NuisanceOptions& opts) {
  const Eigen::Index n = features.rows();
  if (plan.n() != n || y.size() != n || static_cast<Eigen::Index>(groups.size()) != n)
    throw ValidationError("fold plan, labels, outcome and features disagree on the number of units");
  const int folds = plan.n_folds;
  const std::size_t cells = static_cast<std::size_t>(folds) * static_cast<std::size_t>(m);
  std::vector<Eigen::VectorXd> cell_pred(cells);
  std::vector<std::string> cell_warning(cells);

  parallel_for(cells, opts.threads, [&](std::size_t cell) {
    const int l = static_cast<int>(cell) / m;
    const int b = static_cast<int>(cell) % m + 1;
    const std::vector<int> test = plan.units_in(l);
    std::vector<int> train;
    std::vector<int> all_train;
    for (int i = 0; i < static_cast<int>(n); ++i) {
      if (plan.fold_of[static_cast<std::size_t>(i)] == l) continue;
      all_train.push_back(i);
      if (groups[static_cast<std::size_t>(i)] == b) train.push_back(i);
    }
    const Eigen::MatrixXd xte = rows_of(features, test);
    if (train.empty()) {
      double mean = 0.0;
      for (int i : all_train) mean += y(i);
      mean /= static_cast<double>(std::max<std::size_t>(1, all_train.size()));
      cell_pred[cell] = Eigen::VectorXd::Constant(xte.rows(), mean);
      cell_warning[cell] = "group " + std::to_string(b) + " has no training units outside fold " +
                           std::to_string(l + 1) + "; predicting the training mean";
      return;
    }
    const Eigen::MatrixXd xtr = rows_of(features, train);
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) ytr(static_cast<Eigen::Index>(r)) = y(train[r]);
    if (opts.outcome_model == OutcomeModel::ridge_poly2) {
      RidgePoly2 model;
      model.fit(xtr, ytr, opts.outcome_ridge);
      cell_pred[cell] = model.predict(xte);
    } else {
      const std::uint64_t seed = opts.seed * 1000003ULL + cell;
      cell_pred[cell] = bagged_tree_predict(xtr, ytr, xte, opts, seed);
    }
  });

  for (const auto& w : cell_warning)
    if (!w.empty()) diag::warn(w);
  Eigen::MatrixXd out(n, m);
  for (int l = 0; l < folds; ++l) {
    const std::vector<int> test = plan.units_in(l);
    for (int b = 0; b < m; ++b) {
      const Eigen::VectorXd& pred = cell_pred[static_cast<std::size_t>(l * m + b)];
      for (std::size_t r = 0; r < test.size(); ++r) out(test[r], b) = pred(static_cast<Eigen::Index>(r));
    }
  }
  if (!out.allFinite()) throw SolverError(SolverFailure::non_convergence, "outcome model produced non-finite predictions");
  return out;
}

Eigen::MatrixXd clip_probabilities(const Eigen::MatrixXd& probs, double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw ValidationError("clipping bounds must satisfy 0 <= lo < hi <= 1");
  const Eigen::Index m = probs.cols();
  const double l = std::min(lo, 1.0 / static_cast<double>(m));
  const double h = std::max(hi, 1.0 / static_cast<double>(m));
  Eigen::MatrixXd out(probs.rows(), m);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const Eigen::RowVectorXd q = probs.row(i);
    auto mass = [&](double c) {
      double s = 0.0;
      for (Eigen::Index b = 0; b < m; ++b) s += std::clamp(c * q(b), l, h);
      return s;
    };
    // Σ clamp(c·q, l, h) is nondecreasing in c; bracket and bisect for mass 1.
    double c_lo = 0.0;
    double c_hi = 1.0;
    while (mass(c_hi) < 1.0 && c_hi < 1e300) c_hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (c_lo + c_hi);
      (mass(mid) < 1.0 ? c_lo : c_hi) = mid;
    }
    Eigen::RowVectorXd r(m);
    double fixed = 0.0;
    double free = 0.0;
    std::vector<bool> at_bound(static_cast<std::size_t>(m));
    for (Eigen::Index b = 0; b < m; ++b) {
      const double v = c_hi * q(b);
      at_bound[static_cast<std::size_t>(b)] = v <= l || v >= h;
      r(b) = std::clamp(v, l, h);
      (at_bound[static_cast<std::size_t>(b)] ? fixed : free) += r(b);
    }
    if (free > 0.0) {
      const double scale = (1.0 - fixed) / free;
      for (Eigen::Index b = 0; b < m; ++b)
        if (!at_bound[static_cast<std::size_t>(b)]) r(b) = std::clamp(r(b) * scale, l, h);
    }
    out.row(i) = r;
  }
  return out;
}

NuisanceEstimates estimate_nuisance(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                    const std::vector<int>& groups, int m, const CrossFitPlan& plan,
                                    const NuisanceOptions& opts) {
  NuisanceEstimates est;
  est.clip_lo = opts.clip_lo;
  est.clip_hi = opts.clip_hi;
  const Eigen::MatrixXd raw = fit_propensity(features, groups, m, plan, opts);
  est.pi_hat = m == 1 ? raw : clip_probabilities(raw, opts.clip_lo, opts.clip_hi);
  est.mu_hat = fit_outcome(features, y, groups, m, plan, opts);
  return est;
}

}  // namespace drfuse
