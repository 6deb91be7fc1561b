#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace drfuse {

/// Observational dataset with many treatment arms.
///
/// `x` carries an explicit intercept in column 0; treatment labels are dense
/// integers 1..k. When the source file used string labels, `label_names[a-1]`
/// holds the original label of treatment `a`.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> a;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  int k = 0;
  std::vector<std::string> label_names;

  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }

  /// Throws ValidationError when any invariant is broken.
  void validate() const;

  /// Indices of units receiving treatment `arm` (1-based label), in row order.
  std::vector<int> units_of(int arm) const;

  /// Index of the named feature in `x`, or -1.
  int feature_index(const std::string& name) const;
};

/// Builds a dataset from covariates without the intercept; the intercept is prepended.
/// `k <= 0` infers k from the largest label.
Dataset make_dataset(const Eigen::MatrixXd& covariates, std::vector<int> a, Eigen::VectorXd y,
                     std::vector<std::string> covariate_names, int k = 0);

/// Treatment-to-group map δ with contiguous group ids 1..m.
struct GroupMapping {
  std::vector<int> delta;
  int m = 0;

  int k() const { return static_cast<int>(delta.size()); }
  int group_of(int arm) const { return delta.at(static_cast<std::size_t>(arm - 1)); }
  /// members()[b-1] lists the treatments of group b in increasing order.
  std::vector<std::vector<int>> members() const;
  void validate() const;

  static GroupMapping identity(int k);
  static GroupMapping single(int k);
  /// Relabels arbitrary ids so groups are numbered by their smallest member.
  static GroupMapping from_labels(const std::vector<int>& raw);
};

struct CsvSchema {
  std::string treatment = "a";
  std::string outcome = "y";
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset parse_csv(std::istream& in, const CsvSchema& schema = {}, const std::string& source = "<stream>");

/// Writes covariates (without intercept), treatment and outcome with 12 significant digits.
/// `header_comment`, when non-empty, is written first as a `#` line.
void save_csv(const Dataset& d, const std::filesystem::path& path, const CsvSchema& schema = {},
              const std::string& header_comment = {});
void write_csv(const Dataset& d, std::ostream& out, const CsvSchema& schema = {},
               const std::string& header_comment = {});

/// Sidecar metadata: n, k, feature names and label mapping as JSON text.
std::string metadata_json(const Dataset& d, int indent = 2);

std::vector<int> arm_sizes(const Dataset& d);
std::vector<int> group_labels(const Dataset& d, const GroupMapping& g);

/// 12 significant digits, shortest round-trippable at that precision.
std::string format_number(double v);

}  // namespace drfuse
