#pragma once

// Ingestion of externally measured cross-evaluation loss tables and the
// reporting pipeline on top of them: fit each period's own learning curve
// from its diagonal rows, invert cross losses into equivalent sizes, and
// report effectiveness against the measured same-period equivalent size.
//
// Input schema (header is bit-exact):
//   train_period,test_period,train_size,loss,unit,replicate
// with unit one of {nats, bits}; bits are converted on ingest. Period ids
// are opaque strings; an optional sidecar table `period,period_index`
// overrides the default lexical ordering.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftval/csv.hpp"
#include "driftval/learning_curve.hpp"
#include "driftval/numeric.hpp"

namespace driftval {

struct LossRow {
  std::string train_period;
  std::string test_period;
  double train_size = 0.0;
  double loss_nats = 0.0;
  int replicate = 0;
};

struct LossTable {
  std::vector<LossRow> rows;
  std::vector<std::string> periods;  // in report order

  std::size_t period_index(const std::string& id) const {
    for (std::size_t i = 0; i < periods.size(); ++i) {
      if (periods[i] == id) return i;
    }
    throw std::invalid_argument("loss table: unknown period '" + id + "'");
  }
};

inline const std::vector<std::string>& loss_table_columns() {
  static const std::vector<std::string> cols = {
      "train_period", "test_period", "train_size", "loss", "unit", "replicate"};
  return cols;
}

inline constexpr std::size_t kMinDiagonalSizes = 4;

/// Parses and validates a loss table. Periods are ordered lexically unless
/// `period_order` maps ids to explicit indices.
inline LossTable ingest_loss_table(
    std::istream& in,
    const std::map<std::string, int>& period_order = {}) {
  const CsvTable csv = read_csv(in);
  for (const auto& col : loss_table_columns()) {
    bool found = false;
    for (const auto& h : csv.header) {
      if (h == col) { found = true; break; }
    }
    if (!found) {
      throw std::invalid_argument("loss table: missing column '" + col + "'");
    }
  }
  const std::size_t c_train = csv.column("train_period");
  const std::size_t c_test = csv.column("test_period");
  const std::size_t c_size = csv.column("train_size");
  const std::size_t c_loss = csv.column("loss");
  const std::size_t c_unit = csv.column("unit");
  const std::size_t c_rep = csv.column("replicate");

  LossTable table;
  std::set<std::string> period_set;
  for (const auto& row : csv.rows) {
    LossRow r;
    r.train_period = row[c_train];
    r.test_period = row[c_test];
    r.train_size = parse_double(row[c_size]);
    double loss = parse_double(row[c_loss]);
    const std::string& unit = row[c_unit];
    if (unit == "bits") {
      loss *= kLn2;
    } else if (unit != "nats") {
      throw std::invalid_argument("loss table: unknown unit '" + unit + "'");
    }
    if (!(loss > 0.0)) {
      throw std::invalid_argument("loss table: losses must be positive");
    }
    if (!(r.train_size > 0.0)) {
      throw std::invalid_argument("loss table: train_size must be positive");
    }
    r.loss_nats = loss;
    r.replicate = static_cast<int>(parse_int(row[c_rep]));
    period_set.insert(r.train_period);
    period_set.insert(r.test_period);
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty()) throw std::invalid_argument("loss table: no rows");

  table.periods.assign(period_set.begin(), period_set.end());
  if (!period_order.empty()) {
    std::stable_sort(table.periods.begin(), table.periods.end(),
                     [&](const std::string& a, const std::string& b) {
                       auto ia = period_order.find(a);
                       auto ib = period_order.find(b);
                       const int ka = ia == period_order.end() ? 0 : ia->second;
                       const int kb = ib == period_order.end() ? 0 : ib->second;
                       return ka < kb;
                     });
  }

  // every test period must carry enough diagonal rows for its own curve
  std::vector<std::string> missing;
  for (const auto& p : table.periods) {
    std::set<double> diagonal_sizes;
    for (const auto& r : table.rows) {
      if (r.train_period == p && r.test_period == p) diagonal_sizes.insert(r.train_size);
    }
    if (diagonal_sizes.size() < kMinDiagonalSizes) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::string msg = "loss table: cannot fit same-period curve for:";
    for (const auto& p : missing) msg += " " + p;
    throw std::invalid_argument(msg);
  }
  return table;
}

/// Sidecar ordering table with header `period,period_index`.
inline std::map<std::string, int> read_period_order(std::istream& in) {
  const CsvTable csv = read_csv(in);
  const std::size_t c_p = csv.column("period");
  const std::size_t c_i = csv.column("period_index");
  std::map<std::string, int> order;
  for (const auto& row : csv.rows) {
    order[row[c_p]] = static_cast<int>(parse_int(row[c_i]));
  }
  return order;
}

struct ReportRow {
  std::string train_period;
  std::string test_period;
  double train_size = 0.0;
  double mean_loss = 0.0;
  double equiv_size = 0.0;       // NaN when clamped
  double effectiveness = 0.0;    // NaN when clamped
  double clamped_fraction = 0.0;
};

struct PeriodReport {
  std::string test_period;
  LearningCurveFit fit;
  std::vector<ReportRow> rows;
};

struct ReportOptions {
  // Invert per replicate (Definition-1 order) when a cell carries at least
  // this many replicates; otherwise invert the mean loss.
  bool per_replicate_when_possible = false;
  int per_replicate_min = 3;
};

namespace detail {

struct CellKey {
  std::string train_period;
  double size;
  bool operator<(const CellKey& o) const {
    if (train_period != o.train_period) return train_period < o.train_period;
    return size < o.size;
  }
};

}  // namespace detail

/// Fits each period's own curve on its diagonal rows and inverts every
/// (train_period, test_period, size) cell. Effectiveness is the ratio to the
/// measured same-period equivalent size at the same train size.
inline std::vector<PeriodReport> build_reports(const LossTable& table,
                                               const ReportOptions& opt = {}) {
  std::vector<PeriodReport> reports;
  for (const auto& test_period : table.periods) {
    PeriodReport report;
    report.test_period = test_period;

    // diagonal learning curve
    std::map<double, std::vector<double>> diag;
    for (const auto& r : table.rows) {
      if (r.train_period == test_period && r.test_period == test_period) {
        diag[r.train_size].push_back(r.loss_nats);
      }
    }
    std::vector<LearningCurvePoint> points;
    for (const auto& [size, losses] : diag) {
      LearningCurvePoint p;
      p.n = static_cast<std::size_t>(std::llround(size));
      p.mean_loss = mean_of(losses);
      p.std_err = std_error_of(losses);
      p.replicates = static_cast<int>(losses.size());
      points.push_back(p);
    }
    report.fit = fit_power_law(points);

    // cross cells: (train_period, size) -> replicate losses
    std::map<detail::CellKey, std::vector<double>> cells;
    for (const auto& r : table.rows) {
      if (r.test_period == test_period) {
        cells[{r.train_period, r.train_size}].push_back(r.loss_nats);
      }
    }

    auto invert_cell = [&](const std::vector<double>& losses, double& equiv,
                           double& clamped) {
      const bool per_rep = opt.per_replicate_when_possible &&
                           static_cast<int>(losses.size()) >= opt.per_replicate_min;
      if (per_rep) {
        KahanSum sum;
        int kept = 0;
        for (double l : losses) {
          const auto n_bar = report.fit.try_invert(l);
          if (!n_bar) continue;
          sum.add(*n_bar);
          ++kept;
        }
        clamped = 1.0 - static_cast<double>(kept) / static_cast<double>(losses.size());
        equiv = kept > 0 ? sum.value() / kept
                         : std::numeric_limits<double>::quiet_NaN();
      } else {
        const auto n_bar = report.fit.try_invert(mean_of(losses));
        clamped = n_bar ? 0.0 : 1.0;
        equiv = n_bar ? *n_bar : std::numeric_limits<double>::quiet_NaN();
      }
    };

    // same-period references first
    std::map<double, double> reference;
    for (const auto& [key, losses] : cells) {
      if (key.train_period != test_period) continue;
      double equiv = 0.0, clamped = 0.0;
      invert_cell(losses, equiv, clamped);
      reference[key.size] = equiv;
    }

    for (const auto& [key, losses] : cells) {
      ReportRow row;
      row.train_period = key.train_period;
      row.test_period = test_period;
      row.train_size = key.size;
      row.mean_loss = mean_of(losses);
      invert_cell(losses, row.equiv_size, row.clamped_fraction);
      const auto ref = reference.find(key.size);
      if (key.train_period == test_period) {
        row.effectiveness = 1.0;  // measured value divided by itself
        if (std::isnan(row.equiv_size)) row.effectiveness = row.equiv_size;
      } else if (ref != reference.end() && ref->second > 0.0 &&
                 !std::isnan(ref->second) && !std::isnan(row.equiv_size)) {
        row.effectiveness = row.equiv_size / ref->second;
      } else {
        row.effectiveness = std::numeric_limits<double>::quiet_NaN();
      }
      report.rows.push_back(std::move(row));
    }

    // deterministic order: train period (table order), then size
    std::sort(report.rows.begin(), report.rows.end(),
              [&](const ReportRow& a, const ReportRow& b) {
                const auto ia = table.period_index(a.train_period);
                const auto ib = table.period_index(b.train_period);
                if (ia != ib) return ia < ib;
                return a.train_size < b.train_size;
              });
    reports.push_back(std::move(report));
  }
  return reports;
}

inline void write_reports_csv(std::ostream& os,
                              const std::vector<PeriodReport>& reports) {
  os << "train_period,test_period,train_size,equiv_size,effectiveness,clamped_fraction\n";
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      os << row.train_period << ',' << row.test_period << ','
         << format_double(row.train_size) << ',' << format_double(row.equiv_size)
         << ',' << format_double(row.effectiveness) << ','
         << format_double(row.clamped_fraction) << '\n';
    }
  }
}

inline nlohmann::json fits_json(const std::vector<PeriodReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rep : reports) {
    out.push_back({{"test_period", rep.test_period},
                   {"alpha", rep.fit.alpha},
                   {"beta", rep.fit.beta},
                   {"gamma", rep.fit.gamma},
                   {"r2", rep.fit.r_squared},
                   {"n_min", rep.fit.n_min},
                   {"n_max", rep.fit.n_max}});
  }
  return out;
}

}  // namespace driftval
