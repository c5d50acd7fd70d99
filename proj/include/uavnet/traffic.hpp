#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uavnet/geometry.hpp"
#include "uavnet/rng.hpp"

namespace uavnet {

// One base station's hourly overflow entry (row of the traffic matrix).
struct TrafficRecord {
  std::int64_t hour_index = 0;  // hours since dataset start
  double bs_x_m = 0.0;
  double bs_y_m = 0.0;
  std::int64_t users = 0;
  double bytes = 0.0;
};

struct TrafficDataset {
  std::vector<TrafficRecord> records;
  int days = 0;
  double period_hours = 1.0;
  Region region;
  int day_offset = 0;  // first day's index in the parent dataset, for splits

  void validate() const {
    if (days <= 0) throw std::invalid_argument("dataset: days must be positive");
    if (!(period_hours > 0.0)) throw std::invalid_argument("dataset: period must be positive");
    const double max_index = 24.0 * days / period_hours;
    for (const auto& r : records) {
      if (r.users < 0 || r.bytes < 0.0) throw std::invalid_argument("dataset: negative demand");
      if (r.hour_index < 0 || static_cast<double>(r.hour_index) >= max_index)
        throw std::invalid_argument("dataset: hour_index outside the covered days");
      if (!region.contains({r.bs_x_m, r.bs_y_m}))
        throw std::invalid_argument("dataset: base station outside the region");
    }
  }
};

// Same shape as TrafficDataset, but users/bytes hold the per-BS overflow
// above the ground capacities (clamped at zero).
struct AerialDataset : TrafficDataset {};

// One hour-of-day bucket with per-day samples and day totals.
struct HourlySlice {
  struct Sample {
    Vec2 point;
    double bytes = 0.0;
    double users = 0.0;
  };

  int hour_of_day = 0;
  int days = 0;
  Region region;
  std::vector<std::vector<Sample>> per_day;    // size days
  std::vector<double> day_total_bytes;         // size days
  std::vector<double> day_total_users;         // size days

  bool no_demand() const {
    for (double v : day_total_bytes)
      if (v > 0.0) return false;
    return true;
  }
};

inline AerialDataset aerial_overflow(const TrafficDataset& raw, std::int64_t capacity_users,
                                     double capacity_bytes) {
  if (capacity_users < 0 || capacity_bytes < 0.0)
    throw std::invalid_argument("aerial_overflow: capacities must be >= 0");
  AerialDataset out;
  static_cast<TrafficDataset&>(out) = raw;
  for (auto& r : out.records) {
    r.users = std::max<std::int64_t>(0, r.users - capacity_users);
    r.bytes = std::max(0.0, r.bytes - capacity_bytes);
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T>
inline T parse_field(std::string_view s, std::size_t line_no, const char* name) {
  T value{};
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad field '" +
                             std::string(name) + "'");
  }
  return value;
}

}  // namespace detail

inline constexpr const char* kCsvHeader = "day,hour,bs_x_m,bs_y_m,users,bytes";

// Reads the `day,hour,bs_x_m,bs_y_m,users,bytes` CSV and applies the capacity
// truncation that turns raw traffic into aerial overflow.
inline AerialDataset ingest_csv(const std::string& path, std::int64_t capacity_users,
                                double capacity_bytes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  TrafficDataset data;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::int64_t max_day = -1;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first_point = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kCsvHeader)
        throw std::runtime_error("csv line 1: expected header '" + std::string(kCsvHeader) + "'");
      saw_header = true;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 6 fields, got " +
                               std::to_string(fields.size()));
    const auto day = detail::parse_field<std::int64_t>(fields[0], line_no, "day");
    const auto hour = detail::parse_field<std::int64_t>(fields[1], line_no, "hour");
    TrafficRecord r;
    r.bs_x_m = detail::parse_field<double>(fields[2], line_no, "bs_x_m");
    r.bs_y_m = detail::parse_field<double>(fields[3], line_no, "bs_y_m");
    r.users = detail::parse_field<std::int64_t>(fields[4], line_no, "users");
    r.bytes = detail::parse_field<double>(fields[5], line_no, "bytes");
    if (day < 0 || hour < 0 || hour >= 24)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": day/hour out of range");
    if (r.users < 0 || r.bytes < 0.0)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": negative demand");
    r.hour_index = day * 24 + hour;
    max_day = std::max(max_day, day);
    if (first_point) {
      xmin = xmax = r.bs_x_m;
      ymin = ymax = r.bs_y_m;
      first_point = false;
    } else {
      xmin = std::min(xmin, r.bs_x_m);
      xmax = std::max(xmax, r.bs_x_m);
      ymin = std::min(ymin, r.bs_y_m);
      ymax = std::max(ymax, r.bs_y_m);
    }
    data.records.push_back(r);
  }
  if (data.records.empty()) throw std::runtime_error("ingest_csv: no data rows in " + path);
  data.days = static_cast<int>(max_day + 1);
  data.period_hours = 1.0;
  // pad degenerate extents so the box is a valid region
  const double pad_x = (xmax - xmin) > 0 ? 0.0 : 1.0;
  const double pad_y = (ymax - ymin) > 0 ? 0.0 : 1.0;
  data.region = {xmin - pad_x, xmax + pad_x, ymin - pad_y, ymax + pad_y};
  return aerial_overflow(data, capacity_users, capacity_bytes);
}

// Writes a raw-traffic CSV; base loads are added back so that re-ingesting
// with the same capacities reproduces the aerial dataset.
inline void write_csv(const AerialDataset& data, const std::string& path,
                      std::int64_t base_users = 0, double base_bytes = 0.0) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << kCsvHeader << "\n";
  char buf[512];
  for (const auto& r : data.records) {
    const std::int64_t day = r.hour_index / 24;
    const std::int64_t hour = r.hour_index % 24;
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.12g,%.12g,%lld,%.12g\n",
                  static_cast<long long>(day), static_cast<long long>(hour), r.bs_x_m, r.bs_y_m,
                  static_cast<long long>(r.users + base_users), r.bytes + base_bytes);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

// Groups records by hour of day, merging the same hour across days.
inline std::array<HourlySlice, 24> hourly_slices(const AerialDataset& data) {
  if (data.records.empty()) throw std::invalid_argument("hourly_slices: empty dataset");
  std::array<HourlySlice, 24> slices;
  for (int h = 0; h < 24; ++h) {
    slices[h].hour_of_day = h;
    slices[h].days = data.days;
    slices[h].region = data.region;
    slices[h].per_day.resize(data.days);
    slices[h].day_total_bytes.assign(data.days, 0.0);
    slices[h].day_total_users.assign(data.days, 0.0);
  }
  for (const auto& r : data.records) {
    const int h = static_cast<int>(r.hour_index % 24);
    const int d = static_cast<int>(r.hour_index / 24);
    auto& s = slices[h];
    s.per_day[d].push_back(
        {{r.bs_x_m, r.bs_y_m}, r.bytes, static_cast<double>(r.users)});
    s.day_total_bytes[d] += r.bytes;
    s.day_total_users[d] += static_cast<double>(r.users);
  }
  return slices;
}

// Normalized per-BS weight map for one day of a slice.
inline std::vector<std::pair<Vec2, double>> spatial_density(const HourlySlice& slice, int day) {
  if (day < 0 || day >= slice.days) throw std::invalid_argument("spatial_density: day out of range");
  double total = 0.0;
  for (const auto& s : slice.per_day[day]) total += s.bytes;
  if (!(total > 0.0))
    throw std::runtime_error("spatial_density: no aerial demand in hour " +
                             std::to_string(slice.hour_of_day) + " day " + std::to_string(day));
  std::vector<std::pair<Vec2, double>> out;
  out.reserve(slice.per_day[day].size());
  for (const auto& s : slice.per_day[day]) out.emplace_back(s.point, s.bytes / total);
  return out;
}

// ---- synthetic data -------------------------------------------------------

struct GaussianComponentSpec {
  double weight = 1.0;
  Vec2 mean;
  Sym2 cov = Sym2::identity();
};

struct HourSpec {
  std::vector<GaussianComponentSpec> components;
  double total_bytes_mean = 0.0;
  double total_bytes_std = 0.0;
  double total_users_mean = 0.0;
  double total_users_std = 0.0;
  double center_jitter_std_m = 0.0;  // per-day random shift of each component mean
};

struct SyntheticSpec {
  int days = 8;
  int samples_per_hour = 64;
  Region region;
  std::int64_t base_users = 0;  // constant ground load added when exporting CSVs
  double base_bytes = 0.0;
  std::array<HourSpec, 24> hours;

  void validate() const {
    region.validate();
    if (days <= 0) throw std::invalid_argument("synthetic spec: days must be positive");
    if (samples_per_hour <= 0) throw std::invalid_argument("synthetic spec: samples_per_hour must be positive");
    for (int h = 0; h < 24; ++h) {
      const auto& hs = hours[h];
      if (hs.total_bytes_mean <= 0.0) continue;  // no-demand hour
      if (hs.components.empty())
        throw std::invalid_argument("synthetic spec: hour " + std::to_string(h) + " has no components");
      double sum = 0.0;
      for (const auto& c : hs.components) {
        if (c.weight < 0.0) throw std::invalid_argument("synthetic spec: negative component weight");
        if (!(c.cov.det() >= 0.0)) throw std::invalid_argument("synthetic spec: invalid covariance");
        sum += c.weight;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("synthetic spec: hour " + std::to_string(h) +
                                    " component weights sum to " + std::to_string(sum));
    }
  }
};

struct SyntheticResult {
  AerialDataset data;
  SyntheticSpec ground_truth;
};

namespace detail {

inline Vec2 sample_gaussian2(const Vec2& mean, const Sym2& cov, Rng& rng) {
  // Cholesky of [[a,b],[b,c]]
  const double a = std::max(cov.xx, 0.0);
  const double l11 = std::sqrt(a);
  const double l21 = l11 > 0.0 ? cov.xy / l11 : 0.0;
  const double rest = std::max(cov.yy - l21 * l21, 0.0);
  const double l22 = std::sqrt(rest);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {mean.x + l11 * z1, mean.y + l21 * z1 + l22 * z2};
}

inline int pick_component(const std::vector<GaussianComponentSpec>& comps, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    acc += comps[k].weight;
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(comps.size()) - 1;
}

}  // namespace detail

// Draws an aerial demand dataset from per-hour ground-truth mixtures.
// Deterministic for a given seed.
inline SyntheticResult synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticResult out;
  out.ground_truth = spec;
  out.data.days = spec.days;
  out.data.period_hours = 1.0;
  out.data.region = spec.region;
  const Rng base(seed);

  for (int day = 0; day < spec.days; ++day) {
    for (int hour = 0; hour < 24; ++hour) {
      const auto& hs = spec.hours[hour];
      if (hs.total_bytes_mean <= 0.0) continue;
      Rng rng = base.derive(static_cast<std::uint64_t>(day) * 24 + hour + 1);

      // per-day shifted copies of the component means
      std::vector<GaussianComponentSpec> comps = hs.components;
      for (auto& c : comps) {
        c.mean.x += rng.normal(0.0, hs.center_jitter_std_m);
        c.mean.y += rng.normal(0.0, hs.center_jitter_std_m);
      }

      const double total_bytes = std::max(0.0, rng.normal(hs.total_bytes_mean, hs.total_bytes_std));
      const double total_users_raw = std::max(0.0, rng.normal(hs.total_users_mean, hs.total_users_std));
      const auto total_users = static_cast<std::int64_t>(std::llround(total_users_raw));

      const int n = spec.samples_per_hour;
      const double bytes_each = total_bytes / n;
      const std::int64_t users_each = total_users / n;
      std::int64_t users_rem = total_users % n;

      for (int i = 0; i < n; ++i) {
        const int k = detail::pick_component(comps, rng);
        const Vec2 p = spec.region.clamp(detail::sample_gaussian2(comps[k].mean, comps[k].cov, rng));
        TrafficRecord r;
        r.hour_index = static_cast<std::int64_t>(day) * 24 + hour;
        r.bs_x_m = p.x;
        r.bs_y_m = p.y;
        r.bytes = bytes_each;
        r.users = users_each + (i < users_rem ? 1 : 0);
        out.data.records.push_back(r);
      }
    }
  }
  return out;
}

// ---- JSON snapshots ---------------------------------------------------------

inline constexpr int kDatasetSchemaVersion = 1;

// Round-trippable dataset snapshot. The CSV remains the interchange format;
// the snapshot additionally preserves the region box and day offset.
inline void save_dataset_json(const AerialDataset& data, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["days"] = data.days;
  j["day_offset"] = data.day_offset;
  j["period_hours"] = data.period_hours;
  j["region"] = {data.region.xmin, data.region.xmax, data.region.ymin, data.region.ymax};
  auto& records = j["records"] = nlohmann::json::array();
  for (const auto& r : data.records)
    records.push_back({r.hour_index, r.bs_x_m, r.bs_y_m, r.users, r.bytes});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_json: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_dataset_json: write failed for " + path);
}

inline AerialDataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != kDatasetSchemaVersion)
    throw std::runtime_error("load_dataset_json: unsupported schema_version");
  AerialDataset data;
  data.days = j.at("days").get<int>();
  data.day_offset = j.at("day_offset").get<int>();
  data.period_hours = j.at("period_hours").get<double>();
  const auto& reg = j.at("region");
  data.region = {reg[0].get<double>(), reg[1].get<double>(), reg[2].get<double>(),
                 reg[3].get<double>()};
  for (const auto& r : j.at("records")) {
    data.records.push_back({r[0].get<std::int64_t>(), r[1].get<double>(), r[2].get<double>(),
                            r[3].get<std::int64_t>(), r[4].get<double>()});
  }
  data.validate();
  return data;
}

// Splits by whole days; train gets ceil(fraction * days).
inline std::pair<AerialDataset, AerialDataset> train_test_split(const AerialDataset& data,
                                                                double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_test_split: fraction must be in (0,1)");
  if (data.days < 2) throw std::invalid_argument("train_test_split: need at least 2 days");
  int train_days = static_cast<int>(std::ceil(train_fraction * data.days));
  train_days = std::min(train_days, data.days - 1);

  AerialDataset train, test;
  train.days = train_days;
  test.days = data.days - train_days;
  train.period_hours = test.period_hours = data.period_hours;
  train.region = test.region = data.region;
  train.day_offset = data.day_offset;
  test.day_offset = data.day_offset + train_days;
  const std::int64_t split_index = static_cast<std::int64_t>(train_days) * 24;
  for (const auto& r : data.records) {
    if (r.hour_index < split_index) {
      train.records.push_back(r);
    } else {
      TrafficRecord moved = r;
      moved.hour_index -= split_index;
      test.records.push_back(moved);
    }
  }
  return {train, test};
}

}  // namespace uavnet
