#include "drfuse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "drfuse/errors.hpp"
#include "drfuse/parallel.hpp"
#include "json.hpp"

namespace drfuse {

AipwScores aipw_scores(const Eigen::VectorXd& y, const std::vector<int>& groups, const NuisanceEstimates& nuis) {
  const Eigen::Index n = y.size();
  const Eigen::Index m = nuis.mu_hat.cols();
  if (nuis.pi_hat.rows() != n || nuis.mu_hat.rows() != n || nuis.pi_hat.cols() != m ||
      static_cast<Eigen::Index>(groups.size()) != n)
    throw ValidationError("AIPW inputs are not conformable");
  AipwScores s;
  s.gamma = nuis.mu_hat;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int b = groups[static_cast<std::size_t>(i)];
    if (b < 1 || b > m) throw ValidationError("group label out of range in AIPW scores");
    const double pi = nuis.pi_hat(i, b - 1);
    if (!(pi > 0.0)) throw ValidationError("zero propensity at unit " + std::to_string(i + 1));
    s.gamma(i, b - 1) += (y(i) - nuis.mu_hat(i, b - 1)) / pi;
  }
  if (!s.gamma.allFinite()) throw ValidationError("non-finite AIPW score");
  return s;
}

PolicyTree PolicyTree::leaf(int action, int n_actions) {
  PolicyTree t;
  Node nd;
  nd.action = action;
  t.nodes.push_back(nd);
  t.n_actions = n_actions;
  return t;
}

int PolicyTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& nd = nodes[static_cast<std::size_t>(node)];
    node = row(nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].action;
}

std::vector<int> PolicyTree::predict_all(const Eigen::MatrixXd& x_policy) const {
  std::vector<int> out(static_cast<std::size_t>(x_policy.rows()));
  for (Eigen::Index i = 0; i < x_policy.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(x_policy.row(i));
  return out;
}

int PolicyTree::predict_full(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& nd = nodes[static_cast<std::size_t>(node)];
    const double v = row(columns.at(static_cast<std::size_t>(nd.feature)));
    node = v < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].action;
}

int PolicyTree::height() const {
  std::function<int(int)> h = [&](int node) -> int {
    const Node& nd = nodes[static_cast<std::size_t>(node)];
    if (nd.feature < 0) return 0;
    return 1 + std::max(h(nd.left), h(nd.right));
  };
  return nodes.empty() ? 0 : h(0);
}

int PolicyTree::n_leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const Node& nd) { return nd.feature < 0; }));
}

namespace {

std::string feature_label(const PolicyTree& t, int f) {
  if (f >= 0 && f < static_cast<int>(t.feature_names.size())) return t.feature_names[static_cast<std::size_t>(f)];
  return "x" + std::to_string(f + 1);
}

}  // namespace

std::string PolicyTree::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["depth"] = depth;
  j["n_actions"] = n_actions;
  j["columns"] = columns;
  j["feature_names"] = feature_names;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    nlohmann::ordered_json e;
    e["id"] = i;
    if (nd.feature < 0) {
      e["action"] = nd.action;
    } else {
      e["feature"] = nd.feature;
      e["feature_name"] = feature_label(*this, nd.feature);
      e["threshold"] = nd.threshold;
      e["left"] = nd.left;
      e["right"] = nd.right;
    }
    arr.push_back(e);
  }
  j["nodes"] = arr;
  return j.dump(indent);
}

PolicyTree PolicyTree::from_json(const std::string& text) {
  PolicyTree t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.depth = j.at("depth").get<int>();
    t.n_actions = j.value("n_actions", 1);
    t.columns = j.value("columns", std::vector<int>{});
    t.feature_names = j.value("feature_names", std::vector<std::string>{});
    for (const auto& e : j.at("nodes")) {
      Node nd;
      if (e.contains("action")) {
        nd.action = e.at("action").get<int>();
      } else {
        nd.feature = e.at("feature").get<int>();
        nd.threshold = e.at("threshold").get<double>();
        nd.left = e.at("left").get<int>();
        nd.right = e.at("right").get<int>();
      }
      t.nodes.push_back(nd);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed policy tree: ") + e.what());
  }
  const int count = static_cast<int>(t.nodes.size());
  if (count == 0) throw ValidationError("malformed policy tree: no nodes");
  for (const Node& nd : t.nodes) {
    if (nd.feature < 0) continue;
    if (nd.left <= 0 || nd.left >= count || nd.right <= 0 || nd.right >= count)
      throw ValidationError("malformed policy tree: child index out of range");
  }
  return t;
}

std::string PolicyTree::to_dot() const {
  std::ostringstream out;
  out << "digraph policy {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    if (nd.feature < 0) {
      out << "  n" << i << " [label=\"group " << nd.action << "\", shape=ellipse];\n";
    } else {
      out << "  n" << i << " [label=\"" << feature_label(*this, nd.feature) << " < " << format_number(nd.threshold)
          << "\"];\n";
      out << "  n" << i << " -> n" << nd.left << " [label=\"yes\"];\n";
      out << "  n" << i << " -> n" << nd.right << " [label=\"no\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

double estimate_value(const AipwScores& scores, const std::vector<int>& actions) {
  if (static_cast<int>(actions.size()) != scores.n()) throw ValidationError("one action per unit is required");
  double total = 0.0;
  for (int i = 0; i < scores.n(); ++i) {
    const int b = actions[static_cast<std::size_t>(i)];
    if (b < 1 || b > scores.m()) throw ValidationError("action out of range");
    total += scores.gamma(i, b - 1);
  }
  return total / static_cast<double>(scores.n());
}

double estimate_value(const AipwScores& scores, const PolicyTree& tree, const Eigen::MatrixXd& x_policy) {
  return estimate_value(scores, tree.predict_all(x_policy));
}

double estimate_value(const AipwScores& scores, const std::function<int(const Eigen::RowVectorXd&)>& rule,
                      const Eigen::MatrixXd& x_policy) {
  std::vector<int> actions(static_cast<std::size_t>(x_policy.rows()));
  for (Eigen::Index i = 0; i < x_policy.rows(); ++i) actions[static_cast<std::size_t>(i)] = rule(x_policy.row(i));
  return estimate_value(scores, actions);
}

std::vector<std::vector<double>> make_split_candidates(const Eigen::MatrixXd& x_policy, int max_splits, bool exact) {
  if (!exact && max_splits < 1) throw ValidationError("max_splits must be positive");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(x_policy.cols()));
  for (Eigen::Index j = 0; j < x_policy.cols(); ++j) {
    std::vector<double> v(x_policy.col(j).data(), x_policy.col(j).data() + x_policy.rows());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<double> mids;
    for (std::size_t r = 0; r + 1 < v.size(); ++r) mids.push_back(0.5 * (v[r] + v[r + 1]));
    if (!exact && static_cast<int>(mids.size()) > max_splits) {
      std::vector<double> kept;
      const double total = static_cast<double>(mids.size());
      for (int c = 0; c < max_splits; ++c) {
        const auto idx = static_cast<std::size_t>(std::floor((c + 0.5) * total / max_splits));
        kept.push_back(mids[std::min(idx, mids.size() - 1)]);
      }
      kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
      mids = std::move(kept);
    }
    out[static_cast<std::size_t>(j)] = std::move(mids);
  }
  return out;
}

namespace {

// Subtree in search coordinates: feature index and cut index into the candidate list.
struct SNode {
  int feature = -1;
  int cut = -1;
  int left = -1;
  int right = -1;
  int action = 1;
};

struct Sub {
  double value = 0.0;
  std::vector<SNode> nodes;
};

Sub make_leaf(double value, int action) {
  Sub s;
  s.value = value;
  SNode nd;
  nd.action = action;
  s.nodes.push_back(nd);
  return s;
}

Sub make_split(int feature, int cut, const Sub& l, const Sub& r) {
  Sub s;
  s.value = l.value + r.value;
  SNode root;
  root.feature = feature;
  root.cut = cut;
  s.nodes.push_back(root);
  const int lo = 1;
  const int ro = 1 + static_cast<int>(l.nodes.size());
  for (SNode nd : l.nodes) {
    if (nd.feature >= 0) {
      nd.left += lo;
      nd.right += lo;
    }
    s.nodes.push_back(nd);
  }
  for (SNode nd : r.nodes) {
    if (nd.feature >= 0) {
      nd.left += ro;
      nd.right += ro;
    }
    s.nodes.push_back(nd);
  }
  s.nodes[0].left = lo;
  s.nodes[0].right = ro;
  return s;
}

// Best single action: strict improvement keeps the lowest index on ties.
inline void best_action(const double* t, int m, double& value, int& action) {
  value = t[0];
  action = 1;
  for (int b = 1; b < m; ++b)
    if (t[b] > value) {
      value = t[b];
      action = b + 1;
    }
}

class Searcher {
 public:
  Searcher(const AipwScores& scores, const Eigen::MatrixXd& x, const std::vector<std::vector<double>>& cand)
      : gamma_(scores.gamma), n_(scores.n()), m_(scores.m()), q_(static_cast<int>(x.cols())), cand_(cand) {
    bins_.assign(static_cast<std::size_t>(q_), std::vector<int>(static_cast<std::size_t>(n_)));
    offset_.assign(static_cast<std::size_t>(q_) + 1, 0);
    for (int f = 0; f < q_; ++f) {
      const auto& c = cand_[static_cast<std::size_t>(f)];
      for (int i = 0; i < n_; ++i)
        bins_[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] =
            static_cast<int>(std::upper_bound(c.begin(), c.end(), x(i, f)) - c.begin());
      offset_[static_cast<std::size_t>(f) + 1] = offset_[static_cast<std::size_t>(f)] + n_bins(f) * m_;
    }
    // Row-major copy of Γ for contiguous per-unit access.
    rows_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_));
    double abs_total = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int b = 0; b < m_; ++b) {
        rows_[static_cast<std::size_t>(i * m_ + b)] = gamma_(i, b);
        abs_total += std::abs(gamma_(i, b));
      }
    tol_ = 1e-13 * (1.0 + abs_total);
  }

  Sub search(const std::vector<int>& units, int depth, int threads) const {
    if (depth == 0) return leaf_of(units);
    if (depth == 1) return depth1(units);
    if (depth == 2) return depth2(units, threads);

    Sub best = leaf_of(units);
    std::vector<Sub> per_feature(static_cast<std::size_t>(q_));
    std::vector<bool> found(static_cast<std::size_t>(q_), false);
    parallel_for(static_cast<std::size_t>(q_), units.size() >= 256 ? threads : 1, [&](std::size_t fi) {
      const int f = static_cast<int>(fi);
      const std::vector<int> order = sorted_by(units, f);
      const auto& bin = bins_[fi];
      Sub local;
      local.value = best.value;
      bool any = false;
      std::size_t split = 0;
      for (int c = 0; c + 1 < n_bins(f); ++c) {
        const std::size_t before = split;
        while (split < order.size() && bin[static_cast<std::size_t>(order[split])] <= c) ++split;
        if (c > 0 && split == before) continue;  // same partition as the previous cut
        const std::vector<int> left(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(split));
        const std::vector<int> right(order.begin() + static_cast<std::ptrdiff_t>(split), order.end());
        Sub l = search(left, depth - 1, 1);
        Sub r = search(right, depth - 1, 1);
        if (l.value + r.value > local.value + tol_) {
          local = make_split(f, c, l, r);
          any = true;
        }
      }
      if (any) {
        per_feature[fi] = std::move(local);
        found[fi] = true;
      }
    });
    for (int f = 0; f < q_; ++f)
      if (found[static_cast<std::size_t>(f)] && per_feature[static_cast<std::size_t>(f)].value > best.value + tol_)
        best = per_feature[static_cast<std::size_t>(f)];
    return best;
  }

  PolicyTree to_tree(const Sub& s, int depth) const {
    PolicyTree t;
    t.depth = depth;
    t.n_actions = m_;
    for (const SNode& sn : s.nodes) {
      PolicyTree::Node nd;
      nd.feature = sn.feature;
      nd.left = sn.left;
      nd.right = sn.right;
      nd.action = sn.action;
      if (sn.feature >= 0) nd.threshold = cand_[static_cast<std::size_t>(sn.feature)][static_cast<std::size_t>(sn.cut)];
      t.nodes.push_back(nd);
    }
    return t;
  }

 private:
  int n_bins(int f) const { return static_cast<int>(cand_[static_cast<std::size_t>(f)].size()) + 1; }
  const double* row(int i) const { return rows_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(m_); }

  std::vector<int> sorted_by(const std::vector<int>& units, int f) const {
    const auto& bin = bins_[static_cast<std::size_t>(f)];
    std::vector<int> order = units;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return bin[static_cast<std::size_t>(a)] < bin[static_cast<std::size_t>(b)];
    });
    return order;
  }

  std::vector<double> totals(const std::vector<int>& units) const {
    std::vector<double> t(static_cast<std::size_t>(m_), 0.0);
    for (int i : units) {
      const double* g = row(i);
      for (int b = 0; b < m_; ++b) t[static_cast<std::size_t>(b)] += g[b];
    }
    return t;
  }

  Sub leaf_of(const std::vector<int>& units) const {
    const std::vector<double> t = totals(units);
    double v = 0.0;
    int a = 1;
    best_action(t.data(), m_, v, a);
    return make_leaf(v, a);
  }

  void add_unit(std::vector<double>& hist, int i, double sign) const {
    const double* g = row(i);
    for (int f = 0; f < q_; ++f) {
      double* h = hist.data() + offset_[static_cast<std::size_t>(f)] +
                  static_cast<std::size_t>(bins_[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] * m_);
      for (int b = 0; b < m_; ++b) h[b] += sign * g[b];
    }
  }

  // Best depth-≤1 tree from per-feature bin histograms and the column totals.
  Sub depth1_hist(const std::vector<double>& hist, const double* total, std::vector<double>& prefix) const {
    double best = 0.0;
    int leaf_action = 1;
    best_action(total, m_, best, leaf_action);
    const double leaf_value = best;
    int bf = -1, bc = -1, al = 1, ar = 1;
    double vl = 0.0, vr = 0.0;
    prefix.assign(static_cast<std::size_t>(m_), 0.0);
    for (int f = 0; f < q_; ++f) {
      std::fill(prefix.begin(), prefix.end(), 0.0);
      const double* h = hist.data() + offset_[static_cast<std::size_t>(f)];
      for (int c = 0; c + 1 < n_bins(f); ++c) {
        bool moved = false;
        for (int b = 0; b < m_; ++b) {
          const double v = h[c * m_ + b];
          if (v != 0.0) moved = true;
          prefix[static_cast<std::size_t>(b)] += v;
        }
        if (c > 0 && !moved) continue;
        double lv = prefix[0];
        int la = 1;
        double rv = total[0] - prefix[0];
        int ra = 1;
        for (int b = 1; b < m_; ++b) {
          if (prefix[static_cast<std::size_t>(b)] > lv) {
            lv = prefix[static_cast<std::size_t>(b)];
            la = b + 1;
          }
          const double r = total[b] - prefix[static_cast<std::size_t>(b)];
          if (r > rv) {
            rv = r;
            ra = b + 1;
          }
        }
        if (lv + rv > best + tol_) {
          best = lv + rv;
          bf = f;
          bc = c;
          al = la;
          ar = ra;
          vl = lv;
          vr = rv;
        }
      }
    }
    if (bf < 0) return make_leaf(leaf_value, leaf_action);
    return make_split(bf, bc, make_leaf(vl, al), make_leaf(vr, ar));
  }

  Sub depth1(const std::vector<int>& units) const {
    std::vector<double> hist(offset_.back(), 0.0);
    for (int i : units) add_unit(hist, i, 1.0);
    const std::vector<double> t = totals(units);
    std::vector<double> prefix;
    return depth1_hist(hist, t.data(), prefix);
  }

  // Depth 2: for each root feature, sweep cuts in order moving units between
  // incrementally maintained left/right histograms.
  Sub depth2(const std::vector<int>& units, int threads) const {
    Sub best = leaf_of(units);
    std::vector<double> full(offset_.back(), 0.0);
    for (int i : units) add_unit(full, i, 1.0);
    const std::vector<double> total = totals(units);

    std::vector<Sub> per_feature(static_cast<std::size_t>(q_));
    std::vector<bool> found(static_cast<std::size_t>(q_), false);
    parallel_for(static_cast<std::size_t>(q_), units.size() >= 256 ? threads : 1, [&](std::size_t fi) {
      const int f = static_cast<int>(fi);
      const std::vector<int> order = sorted_by(units, f);
      const auto& bin = bins_[fi];
      std::vector<double> left(offset_.back(), 0.0);
      std::vector<double> right = full;
      std::vector<double> tl(static_cast<std::size_t>(m_), 0.0);
      std::vector<double> tr = total;
      std::vector<double> prefix;
      Sub local;
      local.value = best.value;
      bool any = false;
      std::size_t split = 0;
      for (int c = 0; c + 1 < n_bins(f); ++c) {
        const std::size_t before = split;
        while (split < order.size() && bin[static_cast<std::size_t>(order[split])] <= c) {
          const int i = order[split];
          add_unit(left, i, 1.0);
          add_unit(right, i, -1.0);
          const double* g = row(i);
          for (int b = 0; b < m_; ++b) {
            tl[static_cast<std::size_t>(b)] += g[b];
            tr[static_cast<std::size_t>(b)] -= g[b];
          }
          ++split;
        }
        if (c > 0 && split == before) continue;
        Sub l = depth1_hist(left, tl.data(), prefix);
        Sub r = depth1_hist(right, tr.data(), prefix);
        if (l.value + r.value > local.value + tol_) {
          local = make_split(f, c, l, r);
          any = true;
        }
      }
      if (any) {
        per_feature[fi] = std::move(local);
        found[fi] = true;
      }
    });
    for (int f = 0; f < q_; ++f)
      if (found[static_cast<std::size_t>(f)] && per_feature[static_cast<std::size_t>(f)].value > best.value + tol_)
        best = per_feature[static_cast<std::size_t>(f)];
    return best;
  }

  const Eigen::MatrixXd& gamma_;
  int n_;
  int m_;
  int q_;
  const std::vector<std::vector<double>>& cand_;
  std::vector<std::vector<int>> bins_;
  std::vector<std::size_t> offset_;
  std::vector<double> rows_;
  double tol_ = 0.0;
};

}  // namespace

TreeSearchResult exact_tree_search(const AipwScores& scores, const Eigen::MatrixXd& x_policy, int depth,
                                   const std::vector<std::vector<double>>& candidates, int threads) {
  if (depth < 0) throw ValidationError("tree depth must be non-negative");
  if (x_policy.cols() < 1) throw ValidationError("at least one policy covariate is required");
  if (x_policy.rows() != scores.n()) throw ValidationError("policy covariates and scores disagree on n");
  if (static_cast<Eigen::Index>(candidates.size()) != x_policy.cols())
    throw ValidationError("one candidate list per policy covariate is required");
  for (const auto& c : candidates)
    if (!std::is_sorted(c.begin(), c.end())) throw ValidationError("split candidates must be sorted");

  const Searcher searcher(scores, x_policy, candidates);
  std::vector<int> all(static_cast<std::size_t>(scores.n()));
  for (int i = 0; i < scores.n(); ++i) all[static_cast<std::size_t>(i)] = i;
  const Sub best = searcher.search(all, depth, threads);
  TreeSearchResult out;
  out.tree = searcher.to_tree(best, depth);
  out.value = estimate_value(scores, out.tree, x_policy);
  return out;
}

std::vector<int> resolve_policy_columns(const Dataset& d, const std::vector<int>& requested) {
  std::vector<int> cols = requested;
  if (cols.empty())
    for (int j = 1; j < d.p(); ++j) cols.push_back(j);
  for (int c : cols)
    if (c < 1 || c >= d.p()) throw ValidationError("policy column " + std::to_string(c) + " is out of range");
  return cols;
}

PolicyResult learn_policy(const Dataset& d, const GroupMapping& groups, const PolicyConfig& cfg) {
  d.validate();
  groups.validate();
  if (groups.k() != d.k) throw ValidationError("grouping covers a different number of treatments than the data");
  if (cfg.depth < 0 || cfg.depth > 4) throw ValidationError("tree depth must be between 0 and 4");

  PolicyResult res;
  PolicyDiagnostics& diag = res.diagnostics;
  diag.group_of_unit = group_labels(d, groups);
  const int m = groups.m;
  const Eigen::MatrixXd features = d.x.rightCols(d.p() - 1);
  diag.plan = make_folds(d.n(), diag.group_of_unit, cfg.nuisance.folds, cfg.nuisance.seed);
  diag.nuisance = estimate_nuisance(features, d.y, diag.group_of_unit, m, diag.plan, cfg.nuisance);
  diag.scores = aipw_scores(d.y, diag.group_of_unit, diag.nuisance);
  if (m > 1) {
    const Eigen::Index total = diag.nuisance.pi_hat.size();
    const double lo = std::min(cfg.nuisance.clip_lo, 1.0 / m);
    const double hi = std::max(cfg.nuisance.clip_hi, 1.0 / m);
    const auto at_bound = (diag.nuisance.pi_hat.array() <= lo + 1e-15 || diag.nuisance.pi_hat.array() >= hi - 1e-15).count();
    diag.clipped_fraction = static_cast<double>(at_bound) / static_cast<double>(total);
  }

  const std::vector<int> cols = resolve_policy_columns(d, cfg.policy_columns);
  Eigen::MatrixXd xp(d.n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) xp.col(static_cast<Eigen::Index>(j)) = d.x.col(cols[j]);
  const auto cand = make_split_candidates(xp, cfg.max_splits, cfg.exact_splits);
  TreeSearchResult found = exact_tree_search(diag.scores, xp, cfg.depth, cand, cfg.nuisance.threads);
  res.tree = std::move(found.tree);
  res.tree.columns = cols;
  for (int c : cols) res.tree.feature_names.push_back(d.feature_names[static_cast<std::size_t>(c)]);
  res.value = found.value;
  return res;
}

std::vector<int> materialize_treatment(const std::vector<int>& group_actions, const GroupMapping& groups,
                                       std::uint64_t seed) {
  const auto members = groups.members();
  std::mt19937_64 rng(seed);
  std::vector<int> out;
  out.reserve(group_actions.size());
  for (int b : group_actions) {
    if (b < 1 || b > groups.m) throw ValidationError("group action out of range");
    const auto& mem = members[static_cast<std::size_t>(b - 1)];
    std::uniform_int_distribution<std::size_t> pick(0, mem.size() - 1);
    out.push_back(mem[pick(rng)]);
  }
  return out;
}

}  // namespace drfuse
