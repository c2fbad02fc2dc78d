#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/common.hpp"

namespace l1o {

struct Dataset {
  Matrix x;
  Labels y;
  std::vector<std::string> feature_names;
  int n_classes = 0;
  std::vector<std::string> class_names;
  /// Source, encoding and generation details.
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return y.size(); }
  int n_features() const { return static_cast<int>(x.cols()); }

  bool has_missing() const { return !x.allFinite(); }

  /// Missing numeric cells are NaN until imputed; pass allow_missing for raw loads.
  void validate(bool allow_missing = false) const {
    if (y.empty() || x.cols() < 1) throw InputError("dataset must have N >= 1 rows and d >= 1 features");
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw ShapeError("dataset label count mismatch");
    if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) throw ShapeError("feature name count mismatch");
    for (auto v : y) {
      if (v < 0 || v >= n_classes) throw InputError("label out of range [0, n_classes)");
    }
    if (!allow_missing && !x.allFinite()) throw InputError("dataset contains non-finite values");
    if (allow_missing && x.array().isInf().any()) throw InputError("dataset contains infinite values");
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.x = take_rows(x, rows);
    d.y = take(y, rows);
    d.feature_names = feature_names;
    d.n_classes = n_classes;
    d.class_names = class_names;
    d.manifest = manifest;
    return d;
  }
};

// 2D parabola toy problem.

inline double parabola_boundary(double x) { return 5.0 * (x - 0.5) * (x - 0.5) + 0.4; }

inline bool in_parabola_band(double x, double y) {
  const double b = parabola_boundary(x);
  return y >= b - 0.2 && y <= b + 0.2;
}

enum class FlipMode {
  /// round(fraction * #band points) flips, drawn from the band.
  band_fraction,
  /// round(fraction * n) flips, drawn from the band (capped at its size).
  total_fraction,
};

/// n points uniform on [0,1]^2, positive above y = 5(x-0.5)^2 + 0.4, with a
/// share of the points in the +-0.2 band around the boundary flipped.
inline Dataset generate_parabola(std::size_t n, std::uint64_t seed, double flip_fraction = 0.10,
                                 FlipMode mode = FlipMode::band_fraction) {
  if (n < 1) throw InputError("generate_parabola: n must be >= 1");
  Rng rng(seed);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), 2);
  d.y.resize(n);
  std::vector<std::size_t> band;
  for (std::size_t i = 0; i < n; ++i) {
    const double px = rng.uniform();
    const double py = rng.uniform();
    d.x(static_cast<Eigen::Index>(i), 0) = px;
    d.x(static_cast<Eigen::Index>(i), 1) = py;
    d.y[i] = py > parabola_boundary(px) ? 1 : 0;
    if (in_parabola_band(px, py)) band.push_back(i);
  }
  const double base = mode == FlipMode::band_fraction ? static_cast<double>(band.size()) : static_cast<double>(n);
  const auto n_flip = std::min(band.size(), static_cast<std::size_t>(std::llround(flip_fraction * base)));
  std::vector<std::size_t> pool = band;
  rng.shuffle(pool);
  std::vector<std::size_t> flipped(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_flip));
  std::sort(flipped.begin(), flipped.end());
  for (auto i : flipped) d.y[i] = 1 - d.y[i];

  d.feature_names = {"x0", "x1"};
  d.n_classes = 2;
  d.class_names = {"negative", "positive"};
  d.manifest = {{"source", "generated:parabola"},
                {"n", n},
                {"seed", seed},
                {"flip_fraction", flip_fraction},
                {"flip_mode", mode == FlipMode::band_fraction ? "band_fraction" : "total_fraction"},
                {"band_count", band.size()},
                {"flipped", flipped}};
  return d;
}

// CSV ingestion.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated with a header row; double-quoted fields may contain commas,
/// newlines and "" escapes.
inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, field_started = false;
  char c;
  // Skip a UTF-8 byte-order mark.
  if (in.peek() == 0xEF) {
    char bom[3] = {};
    in.read(bom, 3);
    if (std::string(bom, static_cast<std::size_t>(in.gcount())) != "\xEF\xBB\xBF") throw ParseError("csv: bad leading bytes");
  }
  auto end_field = [&] {
    rec.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.size() == 1 && rec[0].empty())) records.push_back(rec);
    rec.clear();
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // CRLF line endings
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  if (!field.empty() || !rec.empty()) end_record();
  if (records.empty()) throw ParseError("csv: missing header row");
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool is_missing_token(const std::string& s) {
  const auto v = trim(s);
  return v.empty() || v == "NA" || v == "?" || v == "NaN" || v == "nan";
}

struct CsvOptions {
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> drop_columns;
};

inline Dataset load_csv(std::istream& in, const CsvOptions& opt, const std::string& source = "<stream>") {
  const CsvTable t = parse_csv(in);
  const auto col_of = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    return it == t.header.end() ? -1 : it - t.header.begin();
  };
  const auto label_col = col_of(opt.label_column);
  if (label_col < 0) throw SchemaError("label column '" + opt.label_column + "' not found in " + source);
  for (const auto& c : opt.categorical_columns) {
    if (col_of(c) < 0) throw SchemaError("categorical column '" + c + "' not found in " + source);
  }
  for (const auto& c : opt.drop_columns) {
    if (col_of(c) < 0) throw SchemaError("dropped column '" + c + "' not found in " + source);
  }
  const auto is_in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) {
      throw ParseError(source + " row " + std::to_string(r + 2) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(t.rows[r].size()));
    }
  }

  struct OutColumn {
    std::size_t src;
    bool categorical;
    std::string category;
  };
  std::vector<OutColumn> columns;
  std::vector<std::string> names;
  nlohmann::json encoding = nlohmann::json::object();
  std::vector<std::string> numeric_with_missing;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& name = t.header[c];
    if (static_cast<std::ptrdiff_t>(c) == label_col || is_in(opt.drop_columns, name)) continue;
    if (is_in(opt.categorical_columns, name)) {
      std::vector<std::string> cats;
      for (const auto& row : t.rows) {
        const std::string v = is_missing_token(row[c]) ? std::string("missing") : trim(row[c]);
        if (!is_in(cats, v)) cats.push_back(v);
      }
      encoding[name] = cats;
      for (const auto& v : cats) {
        columns.push_back({c, true, v});
        names.push_back(name + "_eq_" + v);
      }
    } else {
      columns.push_back({c, false, {}});
      names.push_back(name);
    }
  }
  if (columns.empty()) throw SchemaError(source + ": no feature columns");

  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(columns.size()));
  d.y.resize(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& col = columns[k];
      double v;
      if (col.categorical) {
        const std::string cell = is_missing_token(row[col.src]) ? std::string("missing") : trim(row[col.src]);
        v = cell == col.category ? 1.0 : 0.0;
      } else if (is_missing_token(row[col.src])) {
        v = std::numeric_limits<double>::quiet_NaN();
        if (!is_in(numeric_with_missing, t.header[col.src])) numeric_with_missing.push_back(t.header[col.src]);
      } else {
        const std::string cell = trim(row[col.src]);
        std::size_t used = 0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cell.size() || used == 0 || !std::isfinite(v)) {
          throw ParseError(source + " row " + std::to_string(r + 2) + ", column '" + t.header[col.src] +
                           "': cannot parse '" + cell + "' as a number");
        }
      }
      d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
    const std::string label = trim(row[static_cast<std::size_t>(label_col)]);
    if (is_missing_token(label)) {
      throw ParseError(source + " row " + std::to_string(r + 2) + ": missing label");
    }
    auto it = std::find(d.class_names.begin(), d.class_names.end(), label);
    if (it == d.class_names.end()) {
      d.class_names.push_back(label);
      it = d.class_names.end() - 1;
    }
    d.y[r] = static_cast<int>(it - d.class_names.begin());
  }
  d.feature_names = std::move(names);
  d.n_classes = static_cast<int>(d.class_names.size());
  d.manifest = {{"source", source},
                {"label_column", opt.label_column},
                {"class_names", d.class_names},
                {"one_hot", encoding},
                {"dropped_columns", opt.drop_columns},
                {"feature_names", d.feature_names},
                {"numeric_columns_with_missing", numeric_with_missing}};
  if (d.y.empty()) throw InputError(source + ": no data rows");
  d.validate(true);
  return d;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return load_csv(in, opt, path);
}

inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& categorical_columns = {}) {
  return load_csv(path, CsvOptions{label_column, categorical_columns, {}});
}

// Splitting, imputation and standardization.

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw ConfigError("split ratios must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;

  std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto* part : {&train, &val, &test}) {
      h = fnv1a(h, part->size());
      for (auto i : *part) h = fnv1a(h, i);
    }
    return h;
  }
};

/// Seeded shuffle, then contiguous train/val/test blocks.
inline SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw ConfigError("split needs at least 3 rows");
  auto order = iota_indices(n);
  Rng rng(spec.seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ConfigError("split of " + std::to_string(n) + " rows leaves an empty partition");
  }
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

struct DataSplits {
  Dataset train, val, test;
  SplitIndices indices;
};

inline DataSplits split(const Dataset& d, const SplitSpec& spec) {
  auto idx = split_indices(d.size(), spec);
  return {d.subset(idx.train), d.subset(idx.val), d.subset(idx.test), std::move(idx)};
}

/// Per-column medians of the non-missing training values (0 for all-missing).
inline Vector fit_imputation(const Matrix& train) {
  Vector med = Vector::Zero(train.cols());
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    std::vector<double> v;
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
      if (std::isfinite(train(r, c))) v.push_back(train(r, c));
    }
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    med(c) = v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
  }
  return med;
}

inline Matrix apply_imputation(const Vector& medians, Matrix x) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (std::isnan(x(r, c))) x(r, c) = medians(c);
    }
  }
  return x;
}

struct StandardizationStats {
  Vector mean;
  Vector std;
  std::vector<bool> zero_variance;
};

inline StandardizationStats standardize_fit(const Matrix& train) {
  if (train.rows() < 1) throw InputError("standardize_fit: empty training set");
  StandardizationStats s;
  s.mean = train.colwise().mean().transpose();
  s.std.resize(train.cols());
  s.zero_variance.resize(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const double var = (train.col(c).array() - s.mean(c)).square().mean();
    s.std(c) = std::sqrt(var);
    s.zero_variance[static_cast<std::size_t>(c)] = !(s.std(c) > 1e-12 * std::max(1.0, std::abs(s.mean(c))));
  }
  return s;
}

/// Zero-variance features pass through unchanged.
inline Matrix standardize_apply(const StandardizationStats& s, const Matrix& x) {
  if (x.cols() != s.mean.size()) throw ShapeError("standardize_apply: feature count mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (s.zero_variance[static_cast<std::size_t>(c)]) continue;
    out.col(c) = (x.col(c).array() - s.mean(c)) / s.std(c);
  }
  return out;
}

inline Matrix standardize_invert(const StandardizationStats& s, const Matrix& x) {
  if (x.cols() != s.mean.size()) throw ShapeError("standardize_invert: feature count mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (s.zero_variance[static_cast<std::size_t>(c)]) continue;
    out.col(c) = x.col(c).array() * s.std(c) + s.mean(c);
  }
  return out;
}

/// Everything a training run needs from one dataset and one split seed: raw
/// (imputed) partitions for the trees and standardized matrices for the network.
struct PreparedData {
  Dataset train, val, test;
  Matrix train_std, val_std, test_std;
  StandardizationStats stats;
  Vector imputation;
  SplitIndices indices;
  SplitSpec spec;

  std::uint64_t split_hash() const { return indices.hash(); }
  int n_features() const { return train.n_features(); }
  int n_classes() const { return train.n_classes; }
};

inline PreparedData prepare(const Dataset& d, const SplitSpec& spec) {
  d.validate(true);
  auto s = split(d, spec);
  PreparedData p;
  p.spec = spec;
  p.indices = std::move(s.indices);
  p.imputation = fit_imputation(s.train.x);
  for (auto* part : {&s.train, &s.val, &s.test}) part->x = apply_imputation(p.imputation, std::move(part->x));
  p.train = std::move(s.train);
  p.val = std::move(s.val);
  p.test = std::move(s.test);
  p.stats = standardize_fit(p.train.x);
  p.train_std = standardize_apply(p.stats, p.train.x);
  p.val_std = standardize_apply(p.stats, p.val.x);
  p.test_std = standardize_apply(p.stats, p.test.x);
  return p;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

/// Source, encoding map, imputation values and split seed: enough to rebuild
/// the partitions bit-identically from the same CSV.
inline nlohmann::json dataset_manifest(const PreparedData& p) {
  std::vector<double> imp(p.imputation.data(), p.imputation.data() + p.imputation.size());
  std::vector<double> mean(p.stats.mean.data(), p.stats.mean.data() + p.stats.mean.size());
  std::vector<double> sd(p.stats.std.data(), p.stats.std.data() + p.stats.std.size());
  std::vector<bool> zv = p.stats.zero_variance;
  return {{"format", "l1o-dataset-manifest"},
          {"version", 1},
          {"dataset", p.train.manifest},
          {"split", {{"train", p.spec.train}, {"val", p.spec.val}, {"test", p.spec.test}, {"seed", p.spec.seed}}},
          {"split_hash", hex64(p.split_hash())},
          {"sizes", {p.train.size(), p.val.size(), p.test.size()}},
          {"imputation_medians", imp},
          {"standardization", {{"mean", mean}, {"std", sd}, {"zero_variance", zv}}}};
}

}  // namespace l1o
