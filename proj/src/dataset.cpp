#include "drfuse/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "json.hpp"

namespace drfuse {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Comma-separated fields; double quotes group a field and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& s, long long& value) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string location(const std::string& source, std::size_t row, const std::string& column) {
  std::ostringstream os;
  os << source << ": row " << row << ", column '" << column << "'";
  return os.str();
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void Dataset::validate() const {
  const auto rows = x.rows();
  if (rows < 1) throw ValidationError("dataset is empty");
  if (static_cast<Eigen::Index>(a.size()) != rows || y.size() != rows) {
    throw ValidationError("dataset containers disagree on n");
  }
  if (x.cols() < 1) throw ValidationError("dataset has no intercept column");
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw ValidationError("feature_names length does not match the number of columns");
  }
  if (k < 1) throw ValidationError("dataset declares no treatments");
  if (!label_names.empty() && static_cast<int>(label_names.size()) != k) {
    throw ValidationError("label mapping length does not match k");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int ai = a[static_cast<std::size_t>(i)];
    if (ai < 1 || ai > k) {
      throw ValidationError("row " + std::to_string(i + 1) + ": treatment label " + std::to_string(ai) +
                            " outside 1.." + std::to_string(k));
    }
    if (x(i, 0) != 1.0) throw ValidationError("row " + std::to_string(i + 1) + ": intercept column is not 1");
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j))) {
        throw ValidationError("row " + std::to_string(i + 1) + ", column '" +
                              feature_names[static_cast<std::size_t>(j)] + "': non-finite covariate");
      }
    }
    if (!std::isfinite(y(i))) throw ValidationError("row " + std::to_string(i + 1) + ": non-finite outcome");
  }
}

std::vector<int> Dataset::units_of(int arm) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == arm) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

int Dataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  return it == feature_names.end() ? -1 : static_cast<int>(it - feature_names.begin());
}

Dataset make_dataset(const Eigen::MatrixXd& covariates, std::vector<int> a, Eigen::VectorXd y,
                     std::vector<std::string> covariate_names, int k) {
  Dataset d;
  const auto n = covariates.rows();
  d.x.resize(n, covariates.cols() + 1);
  d.x.col(0).setOnes();
  d.x.rightCols(covariates.cols()) = covariates;
  d.a = std::move(a);
  d.y = std::move(y);
  d.feature_names.reserve(covariate_names.size() + 1);
  d.feature_names.emplace_back("(Intercept)");
  for (auto& name : covariate_names) d.feature_names.push_back(std::move(name));
  d.k = k > 0 ? k : (d.a.empty() ? 0 : *std::max_element(d.a.begin(), d.a.end()));
  d.validate();
  return d;
}

std::vector<std::vector<int>> GroupMapping::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m));
  for (std::size_t a = 0; a < delta.size(); ++a) {
    out.at(static_cast<std::size_t>(delta[a] - 1)).push_back(static_cast<int>(a) + 1);
  }
  return out;
}

void GroupMapping::validate() const {
  if (m < 1 || m > k()) throw ValidationError("group count must lie in 1..k");
  std::vector<int> count(static_cast<std::size_t>(m), 0);
  for (int g : delta) {
    if (g < 1 || g > m) throw ValidationError("group id " + std::to_string(g) + " outside 1.." + std::to_string(m));
    ++count[static_cast<std::size_t>(g - 1)];
  }
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) throw ValidationError("group " + std::to_string(b + 1) + " is empty");
  }
}

GroupMapping GroupMapping::identity(int k) {
  GroupMapping g;
  g.delta.resize(static_cast<std::size_t>(k));
  std::iota(g.delta.begin(), g.delta.end(), 1);
  g.m = k;
  return g;
}

GroupMapping GroupMapping::single(int k) {
  GroupMapping g;
  g.delta.assign(static_cast<std::size_t>(k), 1);
  g.m = 1;
  return g;
}

GroupMapping GroupMapping::from_labels(const std::vector<int>& raw) {
  GroupMapping g;
  std::map<int, int> relabel;
  g.delta.reserve(raw.size());
  for (int r : raw) {
    auto [it, inserted] = relabel.try_emplace(r, static_cast<int>(relabel.size()) + 1);
    g.delta.push_back(it->second);
  }
  g.m = static_cast<int>(relabel.size());
  return g;
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw ValidationError(source + ": empty file");

  int t_col = -1;
  int y_col = -1;
  std::vector<int> x_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == schema.treatment) t_col = static_cast<int>(j);
    else if (header[j] == schema.outcome) y_col = static_cast<int>(j);
    else x_cols.push_back(static_cast<int>(j));
  }
  if (t_col < 0) throw ValidationError(source + ": missing treatment column '" + schema.treatment + "'");
  if (y_col < 0) throw ValidationError(source + ": missing outcome column '" + schema.outcome + "'");

  std::vector<std::vector<double>> xs;
  std::vector<std::string> raw_labels;
  std::vector<double> ys;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> xr;
    xr.reserve(x_cols.size());
    for (int j : x_cols) {
      double v = 0.0;
      const auto& f = fields[static_cast<std::size_t>(j)];
      if (!parse_double(f, v)) {
        throw ValidationError(location(source, row, header[static_cast<std::size_t>(j)]) + ": not a number '" + f + "'");
      }
      if (!std::isfinite(v)) {
        throw ValidationError(location(source, row, header[static_cast<std::size_t>(j)]) + ": non-finite value");
      }
      xr.push_back(v);
    }
    double yv = 0.0;
    const auto& yf = fields[static_cast<std::size_t>(y_col)];
    if (!parse_double(yf, yv)) throw ValidationError(location(source, row, schema.outcome) + ": not a number '" + yf + "'");
    if (!std::isfinite(yv)) throw ValidationError(location(source, row, schema.outcome) + ": non-finite value");
    xs.push_back(std::move(xr));
    ys.push_back(yv);
    raw_labels.push_back(fields[static_cast<std::size_t>(t_col)]);
  }
  if (row == 0) throw ValidationError(source + ": no data rows");

  // Integer-coded treatments are used as-is; anything else is mapped to 1..K in sorted order.
  bool integer_coded = true;
  std::vector<long long> int_labels(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size() && integer_coded; ++i) {
    integer_coded = parse_int(raw_labels[i], int_labels[i]);
  }

  std::vector<int> a(raw_labels.size());
  std::vector<std::string> label_names;
  int k = 0;
  if (integer_coded) {
    for (std::size_t i = 0; i < int_labels.size(); ++i) {
      if (int_labels[i] <= 0) {
        throw ValidationError(location(source, i + 1, schema.treatment) + ": treatment label must be positive");
      }
      if (int_labels[i] > std::numeric_limits<int>::max() / 2) {
        throw ValidationError(location(source, i + 1, schema.treatment) + ": treatment label too large");
      }
      a[i] = static_cast<int>(int_labels[i]);
      k = std::max(k, a[i]);
    }
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
    for (int ai : a) seen[static_cast<std::size_t>(ai)] = true;
    for (int lab = 1; lab <= k; ++lab) {
      if (!seen[static_cast<std::size_t>(lab)]) {
        diag::warn(source + ": treatment label " + std::to_string(lab) + " is unobserved");
      }
    }
  } else {
    std::set<std::string> unique(raw_labels.begin(), raw_labels.end());
    label_names.assign(unique.begin(), unique.end());
    std::map<std::string, int> index;
    for (std::size_t j = 0; j < label_names.size(); ++j) index[label_names[j]] = static_cast<int>(j) + 1;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) a[i] = index[raw_labels[i]];
    k = static_cast<int>(label_names.size());
  }

  Eigen::MatrixXd cov(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
    }
  }
  Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  std::vector<std::string> names;
  for (int j : x_cols) names.push_back(header[static_cast<std::size_t>(j)]);

  Dataset d = make_dataset(cov, std::move(a), std::move(yv), std::move(names), k);
  d.label_names = std::move(label_names);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, schema, path.string());
}

void write_csv(const Dataset& d, std::ostream& out, const CsvSchema& schema, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  for (int j = 1; j < d.p(); ++j) out << quote_field(d.feature_names[static_cast<std::size_t>(j)]) << ',';
  out << quote_field(schema.treatment) << ',' << quote_field(schema.outcome) << '\n';
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 1; j < d.p(); ++j) out << format_number(d.x(i, j)) << ',';
    const int ai = d.a[static_cast<std::size_t>(i)];
    if (d.label_names.empty()) out << ai;
    else out << quote_field(d.label_names[static_cast<std::size_t>(ai - 1)]);
    out << ',' << format_number(d.y(i)) << '\n';
  }
}

void save_csv(const Dataset& d, const std::filesystem::path& path, const CsvSchema& schema,
              const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(d, out, schema, header_comment);
  if (!out) throw IoError("write failed for " + path.string());
}

std::string metadata_json(const Dataset& d, int indent) {
  nlohmann::ordered_json j;
  j["n"] = d.n();
  j["k"] = d.k;
  j["feature_names"] = std::vector<std::string>(d.feature_names.begin() + 1, d.feature_names.end());
  nlohmann::ordered_json mapping = nlohmann::ordered_json::object();
  for (std::size_t lab = 0; lab < d.label_names.size(); ++lab) mapping[std::to_string(lab + 1)] = d.label_names[lab];
  j["label_mapping"] = mapping;
  return j.dump(indent);
}

std::vector<int> arm_sizes(const Dataset& d) {
  std::vector<int> counts(static_cast<std::size_t>(d.k), 0);
  for (int ai : d.a) ++counts.at(static_cast<std::size_t>(ai - 1));
  return counts;
}

std::vector<int> group_labels(const Dataset& d, const GroupMapping& g) {
  std::vector<int> b(d.a.size());
  for (std::size_t i = 0; i < d.a.size(); ++i) {
    const int ai = d.a[i];
    if (ai < 1 || ai > g.k()) {
      throw ValidationError("treatment label " + std::to_string(ai) + " not covered by the group mapping");
    }
    b[i] = g.delta[static_cast<std::size_t>(ai - 1)];
  }
  return b;
}

}  // namespace drfuse
