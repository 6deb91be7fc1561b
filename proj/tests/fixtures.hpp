#pragma once

// Problem generators shared by the fusion tests and the acceptance runner.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "drfuse/dataset.hpp"
#include "drfuse/fusion.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace drfuse;

// k arms, p-1 covariates, arm coefficients drawn from `centers` by arm % centers.rows().
inline Dataset random_problem(oracle::Rng& rng, int k, int p, int per_arm, const Eigen::MatrixXd& centers, double noise,
                       Eigen::VectorXd* weights) {
  const int n = k * per_arm;
  Eigen::MatrixXd cov(n, p - 1);
  std::vector<int> a;
  Eigen::VectorXd y(n);
  weights->resize(n);
  for (int arm = 1; arm <= k; ++arm) {
    const Eigen::RowVectorXd beta = centers.row((arm - 1) % centers.rows());
    double total = 0.0;
    for (int u = 0; u < per_arm; ++u) {
      const int i = (arm - 1) * per_arm + u;
      Eigen::RowVectorXd row(p);
      row(0) = 1.0;
      for (int j = 1; j < p; ++j) row(j) = cov(i, j - 1) = rng.normal();
      y(i) = row.dot(beta) + noise * rng.normal();
      a.push_back(arm);
      (*weights)(i) = rng.uniform(0.5, 1.5);
      total += (*weights)(i);
    }
    for (int u = 0; u < per_arm; ++u) (*weights)((arm - 1) * per_arm + u) /= total;
  }
  std::vector<std::string> names;
  for (int j = 1; j < p; ++j) names.push_back("v" + std::to_string(j));
  return make_dataset(cov, a, y, names, k);
}

inline AdmmOptions tight() {
  AdmmOptions o;
  o.abs_tol = 1e-9;
  o.max_iter = 200000;
  return o;
}

inline Eigen::VectorXd arm_rows(const Dataset& d, int arm, Eigen::MatrixXd& x, const Eigen::VectorXd& v) {
  const auto idx = d.units_of(arm);
  x.resize(static_cast<Eigen::Index>(idx.size()), d.p());
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = d.x.row(idx[r]);
    out(static_cast<Eigen::Index>(r)) = v(idx[r]);
  }
  return out;
}


}  // namespace fixtures
