#include <cmath>
#include <set>

#include "doctest.h"
#include "drfuse/errors.hpp"
#include "drfuse/policy.hpp"
#include "drfuse/synth.hpp"
#include "oracles.hpp"

using namespace drfuse;

namespace {

NuisanceEstimates flat_nuisance(int n, int m, double pi) {
  NuisanceEstimates e;
  e.pi_hat = Eigen::MatrixXd::Constant(n, m, pi);
  e.mu_hat = Eigen::MatrixXd::Zero(n, m);
  return e;
}

// Integer covariates and integer scores so that ties are common.
struct TreeCase {
  AipwScores scores;
  Eigen::MatrixXd x;
};

TreeCase random_tree_case(oracle::Rng& rng, int n, int q, int m) {
  TreeCase c;
  c.x.resize(n, q);
  c.scores.gamma.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) c.x(i, j) = rng.integer(0, 4);
    for (int b = 0; b < m; ++b) c.scores.gamma(i, b) = rng.integer(-3, 3);
  }
  return c;
}

PolicyTree stump(double threshold) {
  PolicyTree t;
  t.depth = 1;
  t.n_actions = 2;
  t.columns = {2};
  t.feature_names = {"X2"};
  t.nodes.resize(3);
  t.nodes[0].feature = 0;
  t.nodes[0].threshold = threshold;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[1].action = 1;
  t.nodes[2].action = 2;
  return t;
}

}  // namespace

TEST_CASE("AIPW scores on a hand-computed instance") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const std::vector<int> g{1, 1, 2};
  const AipwScores s = aipw_scores(y, g, flat_nuisance(3, 2, 0.5));
  CHECK(s.gamma(0, 0) == 2.0);
  CHECK(s.gamma(1, 0) == 4.0);
  CHECK(s.gamma(2, 0) == 0.0);
  CHECK(s.gamma(0, 1) == 0.0);
  CHECK(s.gamma(1, 1) == 0.0);
  CHECK(s.gamma(2, 1) == 6.0);
  CHECK(estimate_value(s, std::vector<int>{1, 1, 1}) == doctest::Approx(2.0));
  CHECK(estimate_value(s, std::vector<int>{2, 2, 2}) == doctest::Approx(2.0));
  CHECK(estimate_value(s, g) == doctest::Approx(4.0));
  CHECK_THROWS_AS(estimate_value(s, std::vector<int>{1, 3, 1}), ValidationError);
  NuisanceEstimates bad = flat_nuisance(3, 2, 0.5);
  bad.pi_hat(0, 0) = 0.0;
  CHECK_THROWS_AS(aipw_scores(y, g, bad), ValidationError);
}

TEST_CASE("property: with a single group and unit propensity the score is the outcome") {
  oracle::Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rng.integer(1, 40);
    Eigen::VectorXd y(n);
    NuisanceEstimates e = flat_nuisance(n, 1, 1.0);
    for (int i = 0; i < n; ++i) {
      y(i) = rng.normal();
      e.mu_hat(i, 0) = rng.normal(0, 5);
    }
    const AipwScores s = aipw_scores(y, std::vector<int>(static_cast<std::size_t>(n), 1), e);
    CHECK((s.gamma.col(0) - y).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("split candidates are midpoints of distinct values") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 0, 2, 0, 2, 0, 3, 0, 1, 0;
  const auto c = make_split_candidates(x);
  CHECK(c[0] == std::vector<double>{1.5, 2.5});
  CHECK(c[1].empty());
  Eigen::MatrixXd many(1000, 1);
  for (int i = 0; i < 1000; ++i) many(i, 0) = i;
  const auto capped = make_split_candidates(many, 64);
  CHECK(capped[0].size() == 64);
  CHECK(std::is_sorted(capped[0].begin(), capped[0].end()));
  CHECK(make_split_candidates(many, 64, true)[0].size() == 999);
}

TEST_CASE("depth zero picks the best constant action") {
  oracle::Rng rng(4);
  const TreeCase c = random_tree_case(rng, 30, 2, 4);
  const auto r = exact_tree_search(c.scores, c.x, 0, make_split_candidates(c.x));
  CHECK(r.tree.n_leaves() == 1);
  CHECK(r.value == doctest::Approx(c.scores.gamma.colwise().mean().maxCoeff()));
}

TEST_CASE("property: exact search matches brute-force enumeration") {
  oracle::Rng rng(99);
  for (int rep = 0; rep < 120; ++rep) {
    const int n = rng.integer(1, 50);
    const int q = rng.integer(1, 3);
    const int m = rng.integer(1, 3);
    const int depth = rng.integer(0, 2);
    const TreeCase c = random_tree_case(rng, n, q, m);
    const auto cand = make_split_candidates(c.x, 64, true);
    const auto r = exact_tree_search(c.scores, c.x, depth, cand);
    CAPTURE(rep);
    CHECK(std::abs(r.value - oracle::brute_force_tree_value(c.scores.gamma, c.x, depth, cand)) <= 1e-10);
    CHECK(r.tree.height() <= depth);
    CHECK(std::abs(estimate_value(c.scores, r.tree, c.x) - r.value) <= 1e-12);
  }
}

TEST_CASE("property: shifting a unit's scores equally shifts the optimum by the mean shift") {
  oracle::Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const TreeCase c = random_tree_case(rng, rng.integer(5, 40), 2, 3);
    Eigen::VectorXd shift(c.scores.n());
    for (int i = 0; i < c.scores.n(); ++i) shift(i) = rng.normal(0, 3);
    AipwScores moved = c.scores;
    moved.gamma.colwise() += shift;
    const auto cand = make_split_candidates(c.x, 64, true);
    const double a = exact_tree_search(c.scores, c.x, 2, cand).value;
    const double b = exact_tree_search(moved, c.x, 2, cand).value;
    CHECK(std::abs(b - a - shift.mean()) <= 1e-10);
  }
}

TEST_CASE("property: a dominant action is chosen everywhere") {
  oracle::Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    TreeCase c = random_tree_case(rng, rng.integer(5, 40), 3, 3);
    const int best = rng.integer(1, 3);
    for (int i = 0; i < c.scores.n(); ++i) c.scores.gamma(i, best - 1) = c.scores.gamma.row(i).maxCoeff() + 0.5;
    const auto r = exact_tree_search(c.scores, c.x, 2, make_split_candidates(c.x));
    CHECK(r.value == doctest::Approx(c.scores.gamma.col(best - 1).mean()));
    for (int a : r.tree.predict_all(c.x)) CHECK(a == best);
  }
}

TEST_CASE("property: more depth or more covariates never lowers the optimum") {
  oracle::Rng rng(10);
  for (int rep = 0; rep < 30; ++rep) {
    const TreeCase c = random_tree_case(rng, rng.integer(5, 50), 3, 3);
    const auto cand = make_split_candidates(c.x);
    double prev = -1e300;
    for (int depth = 0; depth <= 3; ++depth) {
      const double v = exact_tree_search(c.scores, c.x, depth, cand).value;
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    const Eigen::MatrixXd sub = c.x.leftCols(1);
    const double v_sub = exact_tree_search(c.scores, sub, 2, {cand[0]}).value;
    CHECK(v_sub <= exact_tree_search(c.scores, c.x, 2, cand).value + 1e-12);
  }
}

TEST_CASE("threaded search returns the same tree") {
  oracle::Rng rng(12);
  TreeCase c = random_tree_case(rng, 600, 4, 3);
  for (int i = 0; i < 600; ++i) c.x(i, 1) = rng.normal();
  const auto cand = make_split_candidates(c.x);
  const auto a = exact_tree_search(c.scores, c.x, 2, cand, 1);
  const auto b = exact_tree_search(c.scores, c.x, 2, cand, 4);
  CHECK(a.value == b.value);
  CHECK(a.tree.to_json() == b.tree.to_json());
}

TEST_CASE("tree JSON round trip and DOT export") {
  const PolicyTree t = stump(0.25);
  const PolicyTree back = PolicyTree::from_json(t.to_json());
  CHECK(back.to_json() == t.to_json());
  CHECK(back.columns == std::vector<int>{2});
  Eigen::RowVectorXd row(4);
  row << 1, 0, 0.1, 0;
  CHECK(back.predict_full(row) == 1);
  row(2) = 0.25;
  CHECK(back.predict_full(row) == 2);
  CHECK(t.height() == 1);
  CHECK(t.n_leaves() == 2);
  const std::string dot = t.to_dot();
  CHECK(dot.find("X2 < 0.25") != std::string::npos);
  CHECK(dot.find("group 2") != std::string::npos);
  CHECK(PolicyTree::leaf(3, 4).to_dot().find("group 3") != std::string::npos);
  CHECK_THROWS_AS(PolicyTree::from_json("{}"), ValidationError);
  CHECK_THROWS_AS(PolicyTree::from_json("not json"), ValidationError);
  PolicyTree broken = t;
  broken.nodes[0].right = 7;
  CHECK_THROWS_AS(PolicyTree::from_json(broken.to_json()), ValidationError);
}

TEST_CASE("a single group learns the constant policy valued at the outcome mean") {
  synth::ScenarioConfig cfg;
  cfg.seed = 6;
  const auto s = synth::generate(cfg);
  PolicyConfig pc;
  pc.depth = 2;
  const PolicyResult r = learn_policy(s.dataset, GroupMapping::single(16), pc);
  CHECK(r.tree.n_leaves() == 1);
  CHECK(std::abs(r.value - s.dataset.y.mean()) < 1e-10);
  pc.depth = 5;
  CHECK_THROWS_AS(learn_policy(s.dataset, GroupMapping::single(16), pc), ValidationError);
  CHECK_THROWS_AS(learn_policy(s.dataset, GroupMapping::single(8), PolicyConfig{}), ValidationError);
}

TEST_CASE("learned policy on the true grouping is deterministic and uses policy columns") {
  synth::ScenarioConfig cfg;
  cfg.seed = 2;
  const auto s = synth::generate(cfg);
  PolicyConfig pc;
  pc.depth = 2;
  pc.policy_columns = {2, 3};
  const PolicyResult a = learn_policy(s.dataset, s.true_groups, pc);
  const PolicyResult b = learn_policy(s.dataset, s.true_groups, pc);
  CHECK(a.tree.to_json() == b.tree.to_json());
  CHECK(a.tree.columns == std::vector<int>{2, 3});
  CHECK(a.diagnostics.scores.m() == 4);
  CHECK(a.value == doctest::Approx(estimate_value(a.diagnostics.scores, a.tree, s.dataset.x(Eigen::all, pc.policy_columns))));
  CHECK_THROWS_AS(resolve_policy_columns(s.dataset, {0}), ValidationError);
}

TEST_CASE("materialized treatments belong to the recommended group") {
  const GroupMapping g = GroupMapping::from_labels({1, 1, 2, 2, 2, 3});
  const std::vector<int> actions{1, 2, 3, 2, 1, 2};
  const std::vector<int> t = materialize_treatment(actions, g, 5);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(g.group_of(t[i]) == actions[i]);
  CHECK(materialize_treatment(actions, g, 5) == t);
  std::set<int> seen;
  for (int a : materialize_treatment(std::vector<int>(200, 2), g, 1)) seen.insert(a);
  CHECK(seen == std::set<int>{3, 4, 5});
  CHECK_THROWS_AS(materialize_treatment({4}, g, 1), ValidationError);
}

TEST_CASE("AIPW value of a fixed policy is unbiased for its true value") {
  // Constant-group policy: the true value is the population mean of that group's outcome.
  const int seeds = 20;
  std::vector<double> err;
  synth::ScenarioConfig cfg;
  const Eigen::MatrixXd pop = synth::draw_population(cfg, 100000, 777);
  const double truth = synth::true_value([](const Eigen::RowVectorXd&) { return 2; }, cfg.kind, pop);
  for (int seed = 1; seed <= seeds; ++seed) {
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto s = synth::generate(cfg);
    PolicyConfig pc;
    pc.depth = 0;
    pc.nuisance.seed = static_cast<std::uint64_t>(seed);
    const PolicyResult r = learn_policy(s.dataset, s.true_groups, pc);
    err.push_back(estimate_value(r.diagnostics.scores, std::vector<int>(static_cast<std::size_t>(s.dataset.n()), 2)) -
                  truth);
  }
  double mean = 0.0, var = 0.0;
  for (double e : err) mean += e / seeds;
  for (double e : err) var += (e - mean) * (e - mean) / (seeds - 1);
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / seeds) + 1e-3);
}
