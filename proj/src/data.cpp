#include "transcp/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "transcp/error.hpp"
#include "transcp/stats.hpp"

namespace transcp {

CovariatePath::CovariatePath(Eigen::VectorXd constant)
    : breakpoints_{0.0}, values_{std::move(constant)} {}

CovariatePath::CovariatePath(std::vector<double> breakpoints, std::vector<Eigen::VectorXd> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw DomainError("covariate path needs one value per breakpoint");
  }
  if (breakpoints_.front() != 0.0) throw DomainError("covariate path must start at 0");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1])) {
      throw DomainError("covariate path breakpoints must be strictly ascending");
    }
  }
  for (const auto& v : values_) {
    if (v.size() != values_.front().size()) throw DomainError("covariate path dimension changes");
  }
}

std::size_t CovariatePath::piece(double t) const {
  // first breakpoint >= t; the piece ending there owns t
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const auto idx = static_cast<std::size_t>(it - breakpoints_.begin());
  return idx == 0 ? 0 : idx - 1;
}

double CovariatePath::total_variation(double horizon) const {
  double tv = 0.0;
  for (std::size_t k = 1; k < values_.size(); ++k) {
    if (breakpoints_[k] > horizon) break;
    tv += (values_[k] - values_[k - 1]).cwiseAbs().sum();
  }
  return tv;
}

bool operator==(const CovariatePath& lhs, const CovariatePath& rhs) {
  if (lhs.breakpoints_ != rhs.breakpoints_ || lhs.values_.size() != rhs.values_.size()) return false;
  for (std::size_t k = 0; k < lhs.values_.size(); ++k) {
    if (lhs.values_[k].size() != rhs.values_[k].size() || lhs.values_[k] != rhs.values_[k]) return false;
  }
  return true;
}

void Dataset::check() const {
  if (q < 1 || p < 0) throw DomainError("dataset needs q >= 1 and p >= 0");
  if (!(tau > 0.0)) throw DomainError("dataset horizon tau must be positive");
  for (const auto& s : subjects) {
    if (static_cast<int>(s.z.dim()) != d()) {
      throw DomainError("subject " + s.id + " has " + std::to_string(s.z.dim()) +
                        " covariates, expected " + std::to_string(d()));
    }
    if (!(s.v > 0.0) || s.v > tau) throw DomainError("subject " + s.id + " has time outside (0, tau]");
    if (s.delta != 0 && s.delta != 1) throw DomainError("subject " + s.id + " has bad status");
    if (!std::isfinite(s.y)) throw DomainError("subject " + s.id + " has non-finite y");
  }
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& what) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
      if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw IngestError(what + " line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw IngestError(what + ": missing header");
  return t;
}

double parse_number(const std::string& cell, const std::string& what, std::size_t lineno,
                    const std::string& column) {
  if (cell.empty()) {
    throw IngestError(what + " line " + std::to_string(lineno) + ": empty cell in column " + column);
  }
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
    throw IngestError(what + " line " + std::to_string(lineno) + ": non-numeric value '" + cell +
                      "' in column " + column);
  }
  return v;
}

// Verifies the fixed leading columns and returns the number of z columns.
int check_header(const Table& t, const std::vector<std::string>& leading, const std::string& what) {
  for (std::size_t j = 0; j < leading.size(); ++j) {
    if (j >= t.header.size() || t.header[j] != leading[j]) {
      throw IngestError(what + ": missing column '" + leading[j] + "'");
    }
  }
  const int d = static_cast<int>(t.header.size() - leading.size());
  for (int j = 0; j < d; ++j) {
    const std::string expected = "z" + std::to_string(j + 1);
    if (t.header[leading.size() + static_cast<std::size_t>(j)] != expected) {
      throw IngestError(what + ": missing column '" + expected + "'");
    }
  }
  if (d < 1) throw IngestError(what + ": missing column 'z1'");
  return d;
}

}  // namespace

Dataset load_dataset(std::istream& subjects, std::istream* covariates, const LoadOptions& opts) {
  const std::string what = "subjects table";
  const Table st = read_table(subjects, what);
  const int d = check_header(st, {"id", "time", "status", "y"}, what);

  Dataset ds;
  ds.q = opts.q.value_or(d);
  ds.p = d - ds.q;
  if (ds.q < 1 || ds.p < 0) throw IngestError("q must lie in [1, " + std::to_string(d) + "]");

  std::unordered_map<std::string, std::size_t> index;
  std::vector<Eigen::VectorXd> base(st.rows.size());
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& row = st.rows[r];
    const auto lineno = st.line_numbers[r];
    Subject s;
    s.id = row[0];
    if (s.id.empty()) throw IngestError(what + " line " + std::to_string(lineno) + ": empty id");
    s.v = parse_number(row[1], what, lineno, "time");
    const double status = parse_number(row[2], what, lineno, "status");
    s.y = parse_number(row[3], what, lineno, "y");
    if (status != 0.0 && status != 1.0) {
      throw IngestError(what + " line " + std::to_string(lineno) + ": status must be 0 or 1");
    }
    s.delta = static_cast<int>(status);
    if (!(s.v > 0.0)) throw IngestError(what + " line " + std::to_string(lineno) + ": time must be > 0");
    base[r].resize(d);
    for (int j = 0; j < d; ++j) {
      base[r][j] = parse_number(row[4 + static_cast<std::size_t>(j)], what, lineno, "z" + std::to_string(j + 1));
    }
    if (!index.emplace(s.id, r).second) {
      throw IngestError(what + " line " + std::to_string(lineno) + ": duplicate id '" + s.id + "'");
    }
    ds.subjects.push_back(std::move(s));
  }

  std::vector<std::map<double, Eigen::VectorXd>> steps(st.rows.size());
  if (covariates != nullptr) {
    const std::string cwhat = "covariate table";
    const Table ct = read_table(*covariates, cwhat);
    const int cd = check_header(ct, {"id", "start"}, cwhat);
    if (cd != d) throw IngestError(cwhat + ": has " + std::to_string(cd) + " covariates, subjects table has " + std::to_string(d));
    for (std::size_t r = 0; r < ct.rows.size(); ++r) {
      const auto& row = ct.rows[r];
      const auto lineno = ct.line_numbers[r];
      const auto it = index.find(row[0]);
      if (it == index.end()) {
        throw IngestError(cwhat + " line " + std::to_string(lineno) + ": unknown id '" + row[0] + "'");
      }
      const double start = parse_number(row[1], cwhat, lineno, "start");
      if (start < 0.0) throw IngestError(cwhat + " line " + std::to_string(lineno) + ": start must be >= 0");
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) {
        z[j] = parse_number(row[2 + static_cast<std::size_t>(j)], cwhat, lineno, "z" + std::to_string(j + 1));
      }
      if (!steps[it->second].emplace(start, std::move(z)).second) {
        throw IngestError(cwhat + " line " + std::to_string(lineno) + ": duplicate (id, start)");
      }
    }
  }

  for (std::size_t r = 0; r < ds.subjects.size(); ++r) {
    std::vector<double> bps{0.0};
    std::vector<Eigen::VectorXd> vals{base[r]};
    for (auto& [start, z] : steps[r]) {
      if (start == 0.0) {
        vals[0] = z;  // a row at time 0 replaces the baseline value
      } else {
        bps.push_back(start);
        vals.push_back(z);
      }
    }
    ds.subjects[r].z = CovariatePath(std::move(bps), std::move(vals));
  }

  double vmax = 0.0;
  for (const auto& s : ds.subjects) vmax = std::max(vmax, s.v);
  ds.tau = opts.tau.value_or(vmax);
  if (ds.subjects.empty()) throw IngestError(what + ": no rows");
  if (ds.tau < vmax) throw IngestError("tau is smaller than the largest observed time");
  return ds;
}

Dataset load_dataset_files(const std::string& subjects_path, const std::optional<std::string>& covariates_path,
                           const LoadOptions& opts) {
  std::ifstream sf(subjects_path);
  if (!sf) throw IngestError("cannot open subjects file '" + subjects_path + "'");
  if (covariates_path) {
    std::ifstream cf(*covariates_path);
    if (!cf) throw IngestError("cannot open covariate file '" + *covariates_path + "'");
    return load_dataset(sf, &cf, opts);
  }
  return load_dataset(sf, nullptr, opts);
}

void write_dataset(const Dataset& ds, std::ostream& subjects, std::ostream* covariates) {
  const int d = ds.d();
  subjects << std::setprecision(17);
  subjects << "id,time,status,y";
  for (int j = 0; j < d; ++j) subjects << ",z" << (j + 1);
  subjects << '\n';
  for (const auto& s : ds.subjects) {
    subjects << s.id << ',' << s.v << ',' << s.delta << ',' << s.y;
    for (int j = 0; j < d; ++j) subjects << ',' << s.z.values().front()[j];
    subjects << '\n';
  }
  if (covariates == nullptr) {
    for (const auto& s : ds.subjects) {
      if (!s.z.is_constant()) throw DomainError("time-dependent covariates need a covariate stream");
    }
    return;
  }
  *covariates << std::setprecision(17);
  *covariates << "id,start";
  for (int j = 0; j < d; ++j) *covariates << ",z" << (j + 1);
  *covariates << '\n';
  for (const auto& s : ds.subjects) {
    for (std::size_t k = 1; k < s.z.size(); ++k) {
      *covariates << s.id << ',' << s.z.breakpoints()[k];
      for (int j = 0; j < d; ++j) *covariates << ',' << s.z.values()[k][j];
      *covariates << '\n';
    }
  }
}

ValidationReport validate(const Dataset& ds, double a, double b) {
  if (!(a < b)) throw DomainError("validate needs a < b");
  ValidationReport rep;
  for (const auto& s : ds.subjects) {
    if (s.y < a) ++rep.below_a;
    if (s.y > b) ++rep.above_b;
    if (s.delta == 1) ++rep.events;
    rep.path_total_variation.push_back(s.z.total_variation(s.v));
  }
  if (rep.below_a == 0) rep.warnings.emplace_back("no observations below a");
  if (rep.above_b == 0) rep.warnings.emplace_back("no observations above b");
  if (rep.events == 0) rep.warnings.emplace_back("no uncensored events; A is unidentifiable");
  for (const auto& s : ds.subjects) {
    if (!(s.v > 0.0) || s.v > ds.tau) {
      rep.warnings.push_back("subject " + s.id + " has time outside (0, tau]");
    }
  }
  return rep;
}

std::vector<double> event_grid(const Dataset& ds) {
  std::vector<double> times;
  for (const auto& s : ds.subjects) {
    if (s.delta == 1) times.push_back(s.v);
  }
  if (times.empty()) throw DomainError("no uncensored events in the dataset");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

std::pair<double, double> default_threshold_range(const Dataset& ds, double inner_frac) {
  if (!(inner_frac > 0.0 && inner_frac < 1.0)) throw DomainError("inner fraction must lie in (0, 1)");
  std::vector<double> ys;
  ys.reserve(ds.n());
  for (const auto& s : ds.subjects) ys.push_back(s.y);
  const double tail = 0.5 * (1.0 - inner_frac);
  return {order_statistic_quantile(ys, tail), order_statistic_quantile(ys, 1.0 - tail)};
}

}  // namespace transcp
