#include <cmath>
#include <limits>

#include "doctest.h"
#include "drfuse/calibration.hpp"
#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace drfuse;
using namespace fixtures;

TEST_CASE("l1 prox is soft-thresholding; MCP prox is the exact minimizer") {
  Eigen::VectorXd z(3);
  z << 2.0, -0.5, 0.1;
  const Eigen::VectorXd s = prox_pairwise(z, PenaltySpec{PenaltyKind::l1, 1.0, 3.0}, 0.3);
  CHECK(s(0) == doctest::Approx(1.7));
  CHECK(s(1) == doctest::Approx(-0.2));
  CHECK(s(2) == 0.0);

  // MCP on the l1 norm: compare with a grid over the 2-D argument.
  oracle::Rng rng(1);
  for (int rep = 0; rep < 40; ++rep) {
    Eigen::VectorXd v(2);
    v << rng.normal(0, 2), rng.normal(0, 2);
    const PenaltySpec pen{PenaltyKind::mcp, rng.uniform(0.2, 1.5), 3.0};
    const double step = rng.uniform(0.2, 1.0);
    const Eigen::VectorXd got = prox_pairwise(v, pen, step);
    auto obj = [&](double u0, double u1) {
      return 0.5 * ((u0 - v(0)) * (u0 - v(0)) + (u1 - v(1)) * (u1 - v(1))) +
             step * pen.value(std::abs(u0) + std::abs(u1));
    };
    double best = std::numeric_limits<double>::infinity();
    for (double u0 = -8; u0 <= 8; u0 += 0.005)
      for (double u1 : {0.0, v(1), v(1) - 0.5, v(1) + 0.5}) best = std::min(best, obj(u0, u1));
    // Refine the second coordinate along each line too.
    for (double u1 = -8; u1 <= 8; u1 += 0.005)
      for (double u0 : {0.0, v(0)}) best = std::min(best, obj(u0, u1));
    CAPTURE(rep);
    CHECK(obj(got(0), got(1)) <= best + 1e-9);
  }
}

TEST_CASE("MCP penalty shape") {
  const PenaltySpec pen{PenaltyKind::mcp, 1.0, 3.0};
  CHECK(pen.value(0.0) == 0.0);
  CHECK(pen.value(1.0) == doctest::Approx(1.0 - 1.0 / 6.0));
  CHECK(pen.value(3.0) == doctest::Approx(1.5));
  CHECK(pen.value(10.0) == doctest::Approx(1.5));
  const PenaltySpec l1{PenaltyKind::l1, 0.5, 3.0};
  CHECK(l1.value(4.0) == doctest::Approx(2.0));
  CHECK(parse_penalty("mcp") == PenaltyKind::mcp);
  CHECK_THROWS_AS(parse_penalty("scad"), ValidationError);
}

TEST_CASE("lambda = 0 reproduces per-arm weighted least squares") {
  oracle::Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const int k = rng.integer(2, 5);
    const int p = rng.integer(2, 4);
    Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(3, p, [&]() { return rng.normal(0, 2); });
    Eigen::VectorXd w;
    const Dataset d = random_problem(rng, k, p, rng.integer(p + 3, 25), centers, 0.5, &w);
    const FusedFit fit = weighted_fused_fit(d, d.y, w, PenaltySpec{PenaltyKind::l1, 0.0, 3.0}, tight());
    for (int arm = 1; arm <= k; ++arm) {
      Eigen::MatrixXd xa;
      const Eigen::VectorXd ya = arm_rows(d, arm, xa, d.y);
      Eigen::MatrixXd tmp;
      const Eigen::VectorXd wa = arm_rows(d, arm, tmp, w);
      const Eigen::VectorXd direct = oracle::wls(xa, ya, wa);
      CHECK((fit.beta.row(arm - 1).transpose() - direct).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }
}

TEST_CASE("large lambda fuses everything to the pooled weighted fit") {
  oracle::Rng rng(9);
  Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(4, 3, [&]() { return rng.normal(0, 2); });
  Eigen::VectorXd w;
  const Dataset d = random_problem(rng, 4, 3, 20, centers, 0.5, &w);
  FusedLassoSolver solver(d, d.y, w);
  const double lam = 1.5 * solver.lambda_fuse_all();
  const FusedFit fit = solver.fit(PenaltySpec{PenaltyKind::l1, lam, 3.0}, tight());
  const Eigen::VectorXd pooled = oracle::wls(d.x, d.y, w);
  for (int arm = 0; arm < 4; ++arm) CHECK((fit.beta.row(arm).transpose() - pooled).lpNorm<Eigen::Infinity>() < 1e-4);
  CHECK(extract_groups(fit.beta, 0.25).m == 1);
  // Just below the bound the pooled fit is no longer optimal.
  const FusedFit below = solver.fit(PenaltySpec{PenaltyKind::l1, 0.5 * solver.lambda_fuse_all(), 3.0}, tight());
  CHECK((below.beta.rowwise() - pooled.transpose()).norm() > 1e-4);
}

TEST_CASE("K=2, p=1 toy matches a two-dimensional grid search") {
  Eigen::MatrixXd cov(6, 0);
  const Dataset d = make_dataset(cov, {1, 1, 1, 2, 2, 2}, (Eigen::VectorXd(6) << 1.0, 2.0, 0.5, -1.0, 0.0, -1.5).finished(), {},
                                 2);
  const Eigen::VectorXd w = (Eigen::VectorXd(6) << 0.2, 0.5, 0.3, 0.25, 0.25, 0.5).finished();
  for (const PenaltySpec pen : {PenaltySpec{PenaltyKind::l1, 0.3, 3.0}, PenaltySpec{PenaltyKind::l1, 0.05, 3.0},
                                PenaltySpec{PenaltyKind::mcp, 0.2, 3.0}}) {
    const FusedFit fit = weighted_fused_fit(d, d.y, w, pen, tight());
    // Objective (1/2n) Σ w (y - β_a)² + p(|β1 - β2|) as quadratics in each β.
    double a1 = 0, b1 = 0, c1 = 0, a2 = 0, b2 = 0, c2 = 0;
    for (int i = 0; i < 6; ++i) {
      double& a = i < 3 ? a1 : a2;
      double& b = i < 3 ? b1 : b2;
      double& c = i < 3 ? c1 : c2;
      a += w(i);
      b += w(i) * d.y(i);
      c += w(i) * d.y(i) * d.y(i);
    }
    double best = std::numeric_limits<double>::infinity();
    double bx = 0, by = 0;
    for (int i = -5000; i <= 5000; ++i) {
      const double u = i * 1e-3;
      const double fu = (a1 * u * u - 2 * b1 * u + c1) / 12.0;
      for (int j = -5000; j <= 5000; ++j) {
        const double v = j * 1e-3;
        const double val = fu + (a2 * v * v - 2 * b2 * v + c2) / 12.0 + pen.value(std::abs(u - v));
        if (val < best) {
          best = val;
          bx = u;
          by = v;
        }
      }
    }
    CHECK(std::abs(fit.beta(0, 0) - bx) <= 1e-3);
    CHECK(std::abs(fit.beta(1, 0) - by) <= 1e-3);
  }
}

TEST_CASE("fused fit is a local minimum of the objective") {
  oracle::Rng rng(21);
  Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(2, 3, [&]() { return rng.normal(0, 1); });
  Eigen::VectorXd w;
  const Dataset d = random_problem(rng, 6, 3, 15, centers, 0.3, &w);
  FusedLassoSolver solver(d, d.y, w);
  const PenaltySpec pen{PenaltyKind::l1, 0.2 * solver.lambda_fuse_all(), 3.0};
  const FusedFit fit = solver.fit(pen, tight());
  CHECK(fit.converged);
  const double base = solver.objective(fit.beta, pen);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd delta = Eigen::MatrixXd::NullaryExpr(6, 3, [&]() { return rng.normal(0, 1e-3); });
    CHECK(solver.objective(fit.beta + delta, pen) >= base - 1e-8);
  }
}

TEST_CASE("refits are deterministic and warm starts do not change the answer") {
  oracle::Rng rng(3);
  Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(2, 2, [&]() { return rng.normal(0, 2); });
  Eigen::VectorXd w;
  const Dataset d = random_problem(rng, 4, 2, 20, centers, 0.3, &w);
  const PenaltySpec pen{PenaltyKind::l1, 0.01, 3.0};
  FusedLassoSolver warm(d, d.y, w);
  warm.fit(PenaltySpec{PenaltyKind::l1, 1.0, 3.0}, tight());
  const FusedFit a = warm.fit(pen, tight());
  const FusedFit b = weighted_fused_fit(d, d.y, w, pen, tight());
  CHECK((a.beta - b.beta).lpNorm<Eigen::Infinity>() < 1e-6);
  const FusedFit c = weighted_fused_fit(d, d.y, w, pen, tight());
  CHECK(b.beta == c.beta);
}

TEST_CASE("extract_groups uses single linkage with a strict threshold") {
  Eigen::MatrixXd beta(4, 1);
  beta << 0.0, 0.2, 0.4, 1.0;
  CHECK(extract_groups(beta, 0.25).delta == std::vector<int>{1, 1, 1, 2});
  CHECK(extract_groups(beta, 0.2).delta == std::vector<int>{1, 2, 3, 4});
  CHECK(extract_groups(beta, 10).m == 1);
}

TEST_CASE("oracle refit pools each group") {
  oracle::Rng rng(5);
  Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(2, 3, [&]() { return rng.normal(0, 2); });
  Eigen::VectorXd w;
  const Dataset d = random_problem(rng, 4, 3, 12, centers, 0.5, &w);
  const GroupMapping g = GroupMapping::from_labels({1, 2, 1, 2});
  const Eigen::MatrixXd refit = oracle_refit(d, d.y, w, g);
  CHECK(refit.row(0) == refit.row(2));
  std::vector<int> rows;
  for (int arm : {1, 3})
    for (int i : d.units_of(arm)) rows.push_back(i);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size())), ww(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = d.x.row(rows[r]);
    y(static_cast<Eigen::Index>(r)) = d.y(rows[r]);
    ww(static_cast<Eigen::Index>(r)) = w(rows[r]);
  }
  CHECK((refit.row(0).transpose() - oracle::wls(x, y, ww)).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("property: MCP recovers the true grouping and equals the oracle refit") {
  oracle::Rng rng(77);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd centers(2, 3);
    centers << 1.0, 2.0, -1.0, -1.0, 0.0, 1.5;
    Eigen::VectorXd w;
    const Dataset d = random_problem(rng, 6, 3, 60, centers, 0.1, &w);
    const GroupMapping truth = GroupMapping::from_labels({1, 2, 1, 2, 1, 2});
    const FusedFit fit = weighted_fused_fit(d, d.y, w, PenaltySpec{PenaltyKind::mcp, 0.05, 3.0}, tight());
    const GroupMapping got = extract_groups(fit.beta, 0.25);
    CHECK(got.delta == truth.delta);
    const Eigen::MatrixXd refit = oracle_refit(d, d.y, w, truth);
    CHECK((fit.beta - refit).lpNorm<Eigen::Infinity>() < 1e-3);
  }
}

TEST_CASE("EBIC selection") {
  CHECK(ebic_value(100, 4, 2, 50.0, 2, 0.5) ==
        doctest::Approx(100 * std::log(0.5) + 4 * std::log(100.0) + 2 * 0.5 * 4 * std::log(8.0)));

  synth::ScenarioConfig cfg;
  cfg.seed = 12;
  const auto s = synth::generate(cfg);
  const Dataset& d = s.dataset;
  std::vector<std::string> warnings;
  diag::ScopedCapture cap(warnings);
  const CalibrationResult cal = calibrate_all(d);
  FusionOptions opts;
  const FusionResult r = fuse(d, cal.weights, opts);
  REQUIRE(r.ebic_path.size() == 30);
  for (std::size_t i = 1; i < r.ebic_path.size(); ++i) CHECK(r.ebic_path[i - 1].lambda < r.ebic_path[i].lambda);
  CHECK(r.ebic_path.back().m_hat == 1);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : r.ebic_path) best = std::min(best, pt.ebic);
  bool found = false;
  for (const auto& pt : r.ebic_path)
    if (pt.lambda == r.lambda_selected) {
      CHECK(pt.ebic == best);
      CHECK(pt.m_hat == r.groups.m);
      found = true;
    }
  CHECK(found);
  CHECK(r.groups.m >= 2);
  CHECK(r.groups.m <= 8);
  CHECK(r.m0_coefficients.size() == 4);

  // Generic data: every arm has its own coefficients.
  oracle::Rng rng(12);
  const Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(10, 3, [&]() { return rng.normal(0, 3); });
  Eigen::VectorXd w;
  const Dataset generic = random_problem(rng, 10, 3, 30, centers, 0.3, &w);
  opts.lambda_grid = {0.0};
  const FusionResult none = fuse(generic, w, opts);
  CHECK(none.groups.m == 10);
  CHECK(none.lambda_selected == 0.0);
}

TEST_CASE("main effect modes") {
  oracle::Rng rng(4);
  Eigen::MatrixXd centers = Eigen::MatrixXd::NullaryExpr(2, 2, [&]() { return rng.normal(0, 2); });
  Eigen::VectorXd w;
  const Dataset d = random_problem(rng, 2, 2, 10, centers, 0.5, &w);
  CHECK(fit_main_effect(d, MainEffectMode::zero).isZero());
  const Eigen::VectorXd m0 = fit_main_effect(d, MainEffectMode::pooled_ols);
  CHECK((m0 - oracle::wls(d.x, d.y, Eigen::VectorXd::Ones(d.n()))).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((transform_outcome(d, m0) - (d.y - d.x * m0)).isZero());
  CHECK(parse_main_effect("zero") == MainEffectMode::zero);
}
