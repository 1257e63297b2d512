#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimgan/rng.hpp"

namespace mimgan {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major feature matrix with optional binary labels (1 = anomaly).
struct Dataset {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;       // n * d, row-major
  std::optional<std::vector<int>> labels;
  std::string provenance;
  std::vector<std::size_t> constant_columns;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * d, d};
  }

  std::size_t anomaly_count() const {
    if (!labels) return 0;
    std::size_t c = 0;
    for (const int l : *labels) c += l == 1;
    return c;
  }

  void flag_constant_columns() {
    constant_columns.clear();
    for (std::size_t j = 0; j < d; ++j) {
      bool constant = true;
      for (std::size_t i = 1; i < n && constant; ++i)
        constant = features[i * d + j] == features[j];
      if (constant && n > 0) constant_columns.push_back(j);
    }
  }

  nlohmann::json manifest() const {
    return nlohmann::json{{"name", name},
                          {"n", n},
                          {"d", d},
                          {"anomaly_count", labels ? anomaly_count() : 0}};
  }
};

struct SplitSpec {
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
};

// CSV with a header of feature columns f0..f{d-1} and an optional trailing
// "label" column in {0,1}.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  Dataset ds;
  ds.provenance = path;
  {
    const std::size_t slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
      base = base.substr(0, base.size() - 4);
    ds.name = base;
  }

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  // Strip a UTF-8 BOM and trailing CR if present.
  if (line.size() >= 3 && line[0] == '\xef') line = line.substr(3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty()) throw IoError(path + ": empty header");
  const bool has_label = header.back() == "label";
  ds.d = header.size() - (has_label ? 1 : 0);
  if (ds.d == 0) throw IoError(path + ": no feature columns");
  if (has_label) ds.labels.emplace();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": cannot parse value '" + cell + "'");
      }
      if (col < ds.d) {
        if (!std::isfinite(v))
          throw IoError(path + ":" + std::to_string(line_no) +
                        ": non-finite feature value");
        ds.features.push_back(v);
      } else if (has_label && col == ds.d) {
        if (v != 0.0 && v != 1.0)
          throw IoError(path + ":" + std::to_string(line_no) +
                        ": label must be 0 or 1");
        ds.labels->push_back(static_cast<int>(v));
      } else {
        throw IoError(path + ":" + std::to_string(line_no) + ": too many columns");
      }
      ++col;
    }
    if (col != ds.d + (has_label ? 1 : 0))
      throw IoError(path + ":" + std::to_string(line_no) + ": wrong column count");
    ++ds.n;
  }
  ds.flag_constant_columns();
  return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t j = 0; j < ds.d; ++j) out << (j ? ",f" : "f") << j;
  if (ds.labels) out << ",label";
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features[i * ds.d + j]);
      out << (j ? "," : "") << buf;
    }
    if (ds.labels) out << "," << (*ds.labels)[i];
    out << "\n";
  }
}

// Uniform label-blind shuffle by seed; first n_train rows become the
// training split.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.n_train == 0 || spec.n_train >= ds.n)
    throw std::invalid_argument("split: n_train out of range");
  std::vector<std::size_t> idx(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) idx[i] = i;
  Rng rng(mix_seed("split", spec.seed));
  for (std::size_t i = ds.n; i > 1; --i)  // Fisher-Yates
    std::swap(idx[i - 1], idx[rng.below(i)]);

  const auto take = [&](std::size_t begin, std::size_t end, const char* tag) {
    Dataset part;
    part.name = ds.name + "." + tag;
    part.d = ds.d;
    part.n = end - begin;
    part.provenance = ds.provenance;
    part.features.reserve(part.n * ds.d);
    if (ds.labels) part.labels.emplace();
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = ds.row(idx[i]);
      part.features.insert(part.features.end(), r.begin(), r.end());
      if (ds.labels) part.labels->push_back((*ds.labels)[idx[i]]);
    }
    return part;
  };
  return {take(0, spec.n_train, "train"), take(spec.n_train, ds.n, "test")};
}

// Per-feature min-max affine map fitted on the training split: train maps
// into [-1,1]; anything mapped later is clipped to [-1.5, 1.5] so
// out-of-range test values stay bounded. Constant features map to 0.
struct Scaler {
  std::vector<double> min;
  std::vector<double> max;

  nlohmann::json to_json() const {
    return nlohmann::json{{"min", min}, {"max", max}};
  }
  static Scaler from_json(const nlohmann::json& j) {
    Scaler s;
    s.min = j.at("min").get<std::vector<double>>();
    s.max = j.at("max").get<std::vector<double>>();
    return s;
  }
};

inline Scaler scale_fit(const Dataset& train) {
  if (train.n == 0) throw std::invalid_argument("scale_fit: empty dataset");
  Scaler s;
  s.min.assign(train.d, 0.0);
  s.max.assign(train.d, 0.0);
  for (std::size_t j = 0; j < train.d; ++j) {
    double lo = train.features[j], hi = train.features[j];
    for (std::size_t i = 1; i < train.n; ++i) {
      lo = std::min(lo, train.features[i * train.d + j]);
      hi = std::max(hi, train.features[i * train.d + j]);
    }
    s.min[j] = lo;
    s.max[j] = hi;
  }
  return s;
}

inline Dataset scale_apply(const Scaler& s, const Dataset& ds) {
  if (s.min.size() != ds.d) throw std::invalid_argument("scale_apply: dim mismatch");
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) {
      double& v = out.features[i * ds.d + j];
      const double range = s.max[j] - s.min[j];
      if (range == 0.0) {
        v = 0.0;
      } else {
        v = std::clamp(-1.0 + 2.0 * (v - s.min[j]) / range, -1.5, 1.5);
      }
    }
  }
  return out;
}

// Published reference figures for the converted repository datasets; the
// manifest check warns when a file claiming one of these names deviates.
struct KnownManifest {
  const char* name;
  std::size_t n, d, anomalies;
};
inline constexpr KnownManifest kKnownManifests[] = {
    {"cardio", 1831, 21, 176},
    {"thyroid", 3772, 6, 93},
    {"musk", 3062, 166, 97},
};

inline std::optional<std::string> manifest_warning(const Dataset& ds) {
  for (const KnownManifest& k : kKnownManifests) {
    if (ds.name.rfind(k.name, 0) != 0) continue;
    if (ds.n != k.n || ds.d != k.d || ds.anomaly_count() != k.anomalies) {
      std::ostringstream os;
      os << ds.name << ": expected n=" << k.n << " d=" << k.d
         << " anomalies=" << k.anomalies << ", found n=" << ds.n << " d=" << ds.d
         << " anomalies=" << ds.anomaly_count();
      return os.str();
    }
  }
  return std::nullopt;
}

}  // namespace mimgan
