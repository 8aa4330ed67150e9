#pragma once

// Transaction-level auction panel: repeat-sale pairing, sale-state flags,
// lagged-price imputation and sample filters.

#include "artval/core.hpp"
#include "artval/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace artval::panel {

struct TransactionRecord {
  std::string lot_id;
  std::string object_id;
  std::optional<double> price;  // absent for bought-in lots
  std::optional<double> estimate_low;
  std::optional<double> estimate_high;
  bool sold = true;
  int sale_year = 0;
  int sale_month = 1;
  std::string artist;
  std::string house;
  std::string location = "unknown";
  std::string category;
  std::string medium;
  double height = 0;
  double width = 0;
  std::string shape;
  bool signed_ = false;
  bool dated = false;
  int n_exhibitions = 0;
  int n_citations = 0;
  std::optional<std::string> image_ref;
};

struct PanelRow : TransactionRecord {
  bool is_fresh = true;
  std::optional<double> prev_price;
  bool has_prev = false;
  // Midpoint of the presale estimate attached to the anchoring sale.
  std::optional<double> prev_estimate_mid;
  double log_price = std::numeric_limits<double>::quiet_NaN();
};

inline std::optional<double> estimate_mid(const TransactionRecord& r) {
  if (!r.estimate_low || !r.estimate_high) return std::nullopt;
  return 0.5 * (*r.estimate_low + *r.estimate_high);
}

inline void validate(const TransactionRecord& r) {
  const std::string ctx = "lot " + r.lot_id;
  if (r.sold) {
    if (!r.price || !(*r.price > 0))
      fail(ErrorKind::data, ctx + ": sold row requires a positive price");
  }
  if (r.sale_month < 1 || r.sale_month > 12)
    fail(ErrorKind::data, ctx + ": sale_month out of range");
  if (r.estimate_low && r.estimate_high && *r.estimate_low > *r.estimate_high)
    fail(ErrorKind::data, ctx + ": estimate_low exceeds estimate_high");
  if ((r.estimate_low && !(*r.estimate_low > 0)) || (r.estimate_high && !(*r.estimate_high > 0)))
    fail(ErrorKind::data, ctx + ": estimates must be positive");
}

// Chronological order within an object; ties broken by lot_id.
inline bool chrono_less(const TransactionRecord& a, const TransactionRecord& b) {
  return std::tie(a.object_id, a.sale_year, a.sale_month, a.lot_id) <
         std::tie(b.object_id, b.sale_year, b.sale_month, b.lot_id);
}

inline std::vector<PanelRow> build_panel(const std::vector<TransactionRecord>& records) {
  require(!records.empty(), ErrorKind::invalid_argument, "build_panel: no records");
  std::vector<PanelRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    validate(r);
    PanelRow row;
    static_cast<TransactionRecord&>(row) = r;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), chrono_less);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.object_id == b.object_id && a.sale_year == b.sale_year && a.sale_month == b.sale_month &&
        a.lot_id == b.lot_id)
      fail(ErrorKind::data, "build_panel: duplicate key (" + b.object_id + ", " +
                                std::to_string(b.sale_year) + ", " + std::to_string(b.sale_month) +
                                ", " + b.lot_id + ")");
  }
  std::optional<double> anchor;
  std::optional<double> anchor_mid;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    const bool first = i == 0 || rows[i - 1].object_id != row.object_id;
    if (first) {
      anchor.reset();
      anchor_mid.reset();
    }
    // Any prior appearance, sold or bought-in, makes the row non-fresh; only
    // realized prices serve as anchors.
    row.is_fresh = first;
    row.prev_price = anchor;
    row.prev_estimate_mid = anchor ? anchor_mid : std::nullopt;
    row.has_prev = anchor.has_value();
    row.log_price = row.sold ? std::log(*row.price) : std::numeric_limits<double>::quiet_NaN();
    if (row.sold) {
      anchor = row.price;
      anchor_mid = estimate_mid(row);
    }
  }
  return rows;
}

// Missing-indicator encoding: absent lagged price becomes 0, has_prev
// keeps recording whether a real prior sale exists.
inline std::vector<PanelRow> impute_prev_price(std::vector<PanelRow> rows) {
  for (auto& r : rows) {
    if (!r.has_prev) r.prev_price = 0.0;
  }
  return rows;
}

struct FilterOptions {
  double min_price = 10000.0;
  int min_cat_count = 20;
  int train_end_year = 0;
};

struct FilteredPanel {
  std::vector<PanelRow> rows;
  // Field name -> levels kept (all others are mapped to "OTHER").
  std::map<std::string, std::set<std::string>> kept_levels;
  int train_end_year = 0;
};

inline const std::vector<std::string>& remapped_fields() {
  static const std::vector<std::string> f = {"artist", "house", "medium"};
  return f;
}

inline std::string& field_ref(PanelRow& r, const std::string& field) {
  if (field == "artist") return r.artist;
  if (field == "house") return r.house;
  if (field == "medium") return r.medium;
  if (field == "category") return r.category;
  if (field == "location") return r.location;
  if (field == "shape") return r.shape;
  fail(ErrorKind::invalid_argument, "unknown categorical field " + field);
}

inline const std::string& field_ref(const PanelRow& r, const std::string& field) {
  return field_ref(const_cast<PanelRow&>(r), field);
}

inline FilteredPanel apply_filters(const std::vector<PanelRow>& input, const FilterOptions& opt) {
  require(!input.empty(), ErrorKind::invalid_argument, "apply_filters: empty panel");
  int lo = input.front().sale_year, hi = lo;
  for (const auto& r : input) {
    lo = std::min(lo, r.sale_year);
    hi = std::max(hi, r.sale_year);
  }
  if (opt.train_end_year < lo || opt.train_end_year > hi)
    fail(ErrorKind::invalid_argument, "apply_filters: train_end_year " +
                                          std::to_string(opt.train_end_year) +
                                          " outside data range [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
  FilteredPanel out;
  out.train_end_year = opt.train_end_year;
  for (const auto& r : input) {
    if (r.sold && *r.price < opt.min_price) continue;
    if (!r.image_ref || r.image_ref->empty()) continue;
    if (!r.estimate_low || !r.estimate_high) continue;
    out.rows.push_back(r);
  }
  if (out.rows.empty()) fail(ErrorKind::data, "apply_filters: no rows survive filtering");

  for (const auto& field : remapped_fields()) {
    std::map<std::string, int> counts;
    for (const auto& r : out.rows)
      if (r.sale_year <= opt.train_end_year) ++counts[field_ref(r, field)];
    auto& kept = out.kept_levels[field];
    for (const auto& [level, n] : counts)
      if (n >= opt.min_cat_count) kept.insert(level);
    for (auto& r : out.rows) {
      auto& v = field_ref(r, field);
      if (!kept.count(v)) v = "OTHER";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delimited text I/O

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> c = {
      "lot_id", "object_id", "price",  "estimate_low", "estimate_high", "sold",
      "sale_year", "sale_month", "artist", "house", "location", "category",
      "medium", "height", "width", "shape", "signed", "dated",
      "n_exhibitions", "n_citations", "image_ref"};
  return c;
}

inline const std::vector<std::string>& derived_columns() {
  static const std::vector<std::string> c = {"is_fresh", "prev_price", "has_prev", "log_price"};
  return c;
}

inline std::vector<TransactionRecord> records_from_table(const csv::Table& t) {
  std::vector<std::size_t> idx;
  for (const auto& name : record_columns()) {
    auto c = t.column(name);
    if (!c) fail(ErrorKind::schema, "panel csv: missing column '" + name + "'");
    idx.push_back(*c);
  }
  std::vector<TransactionRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    auto get = [&](int k) -> const std::string& { return f[idx[static_cast<std::size_t>(k)]]; };
    const std::string ctx = "panel csv row " + std::to_string(i + 1);
    auto opt_num = [&](int k) -> std::optional<double> {
      if (get(k).empty()) return std::nullopt;
      return csv::parse_double(get(k), ctx + " " + record_columns()[static_cast<std::size_t>(k)]);
    };
    TransactionRecord r;
    r.lot_id = get(0);
    r.object_id = get(1);
    r.price = opt_num(2);
    r.estimate_low = opt_num(3);
    r.estimate_high = opt_num(4);
    r.sold = csv::parse_bool(get(5), ctx + " sold");
    r.sale_year = static_cast<int>(csv::parse_int(get(6), ctx + " sale_year"));
    r.sale_month = static_cast<int>(csv::parse_int(get(7), ctx + " sale_month"));
    r.artist = get(8);
    r.house = get(9);
    r.location = get(10).empty() ? "unknown" : get(10);
    r.category = get(11);
    r.medium = get(12);
    r.height = csv::parse_double(get(13), ctx + " height");
    r.width = csv::parse_double(get(14), ctx + " width");
    r.shape = get(15);
    r.signed_ = csv::parse_bool(get(16), ctx + " signed");
    r.dated = csv::parse_bool(get(17), ctx + " dated");
    r.n_exhibitions = static_cast<int>(csv::parse_int(get(18), ctx + " n_exhibitions"));
    r.n_citations = static_cast<int>(csv::parse_int(get(19), ctx + " n_citations"));
    if (!get(20).empty()) r.image_ref = get(20);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TransactionRecord> read_records(const std::string& path) {
  return records_from_table(csv::read_file(path));
}

inline std::vector<std::string> record_fields(const TransactionRecord& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? csv::format_number(*v) : std::string();
  };
  return {r.lot_id,
          r.object_id,
          opt(r.price),
          opt(r.estimate_low),
          opt(r.estimate_high),
          r.sold ? "1" : "0",
          std::to_string(r.sale_year),
          std::to_string(r.sale_month),
          r.artist,
          r.house,
          r.location,
          r.category,
          r.medium,
          csv::format_number(r.height),
          csv::format_number(r.width),
          r.shape,
          r.signed_ ? "1" : "0",
          r.dated ? "1" : "0",
          std::to_string(r.n_exhibitions),
          std::to_string(r.n_citations),
          r.image_ref.value_or("")};
}

inline std::string records_to_csv(const std::vector<TransactionRecord>& records) {
  csv::Writer w(record_columns());
  for (const auto& r : records) w.row(record_fields(r));
  return w.str();
}

inline std::string panel_to_csv(const std::vector<PanelRow>& rows) {
  auto header = record_columns();
  header.insert(header.end(), derived_columns().begin(), derived_columns().end());
  header.push_back("prev_estimate_mid");
  csv::Writer w(header);
  for (const auto& r : rows) {
    auto f = record_fields(r);
    f.push_back(r.is_fresh ? "1" : "0");
    f.push_back(r.prev_price ? csv::format_number(*r.prev_price) : "");
    f.push_back(r.has_prev ? "1" : "0");
    f.push_back(r.sold ? csv::format_number(r.log_price) : "");
    f.push_back(r.prev_estimate_mid ? csv::format_number(*r.prev_estimate_mid) : "");
    w.row(std::move(f));
  }
  return w.str();
}

// Reads a panel written by panel_to_csv. Derived columns are taken as given;
// a file without them is rebuilt from scratch.
inline std::vector<PanelRow> read_panel(const std::string& path) {
  const auto table = csv::read_file(path);
  const auto records = records_from_table(table);
  const auto fresh_col = table.column("is_fresh");
  if (!fresh_col) return impute_prev_price(build_panel(records));
  const auto prev_col = table.column("prev_price");
  const auto has_col = table.column("has_prev");
  const auto mid_col = table.column("prev_estimate_mid");
  if (!prev_col || !has_col) fail(ErrorKind::schema, path + ": incomplete derived columns");
  std::vector<PanelRow> rows;
  rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    PanelRow row;
    static_cast<TransactionRecord&>(row) = records[i];
    const auto& f = table.rows[i];
    const std::string ctx = path + " row " + std::to_string(i + 1);
    row.is_fresh = csv::parse_bool(f[*fresh_col], ctx + " is_fresh");
    row.has_prev = csv::parse_bool(f[*has_col], ctx + " has_prev");
    if (!f[*prev_col].empty()) row.prev_price = csv::parse_double(f[*prev_col], ctx + " prev_price");
    if (mid_col && !f[*mid_col].empty())
      row.prev_estimate_mid = csv::parse_double(f[*mid_col], ctx + " prev_estimate_mid");
    row.log_price = row.sold ? std::log(*row.price) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace artval::panel
