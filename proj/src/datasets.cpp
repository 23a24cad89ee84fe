#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iqaforge/csv.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge {

std::string_view to_string(DistortionType type) noexcept {
  return type == DistortionType::Authentic ? "authentic" : "artificial";
}

std::string_view to_string(SplitPolicy policy) noexcept {
  switch (policy) {
    case SplitPolicy::Full: return "full";
    case SplitPolicy::TrainValOnly: return "train_val_only";
    case SplitPolicy::TestOnly: return "test_only";
  }
  return "full";
}

DistortionType parse_distortion_type(std::string_view text) {
  if (text == "authentic") return DistortionType::Authentic;
  if (text == "artificial") return DistortionType::Artificial;
  fail(ErrorCode::InvalidArgument, "distortion type must be authentic|artificial, got '" + std::string(text) + "'");
}

SplitPolicy parse_split_policy(std::string_view text) {
  if (text == "full") return SplitPolicy::Full;
  if (text == "train_val_only") return SplitPolicy::TrainValOnly;
  if (text == "test_only") return SplitPolicy::TestOnly;
  fail(ErrorCode::InvalidArgument,
       "split policy must be full|train_val_only|test_only, got '" + std::string(text) + "'");
}

void DatasetDescriptor::validate() const {
  if (name.empty()) fail(ErrorCode::InvalidArgument, "dataset name must not be empty");
  if (name.find_first_of("/,\"\n") != std::string::npos) {
    fail(ErrorCode::InvalidArgument, "dataset name '" + name + "' contains a reserved character");
  }
  if (!(std::isfinite(native_min) && std::isfinite(native_max) && native_min < native_max)) {
    fail(ErrorCode::InvalidArgument, "dataset '" + name + "': native range requires min < max");
  }
}

// --- manifest ------------------------------------------------------------

namespace {

std::optional<double> optional_double(const std::string& field, const CsvRow& row, std::string_view origin,
                                      std::string_view column) {
  const std::string t = trim(field);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  if (!parse_double(t, v)) {
    fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) + ": column '" +
                                       std::string(column) + "' is not a number: '" + t + "'");
  }
  return v;
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::vector<ImageRecord> parse_manifest(std::string_view text, std::string_view origin) {
  const CsvTable table = parse_csv(text, origin);
  const std::size_t c_id = table.column("id");
  const std::size_t c_subject = table.column("subject_id");
  const std::size_t c_path = table.column("path");
  const std::size_t c_source = table.column("source");
  const std::size_t c_family = table.column("family");
  const std::size_t c_level = table.column("level");
  const std::size_t c_mos = table.column("mos");
  const std::size_t c_min = table.column("native_min");
  const std::size_t c_max = table.column("native_max");

  std::vector<ImageRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ImageRecord r;
    r.id = trim(row.fields[c_id]);
    if (r.id.empty()) {
      fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) + ": empty id");
    }
    r.subject_id = trim(row.fields[c_subject]);
    if (r.subject_id.empty()) r.subject_id = r.id;
    r.path = row.fields[c_path];
    r.source = trim(row.fields[c_source]);
    r.family = trim(row.fields[c_family]);
    if (auto level = optional_double(row.fields[c_level], row, origin, "level")) {
      if (std::floor(*level) != *level || *level < 1) {
        fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) +
                                           ": level must be a positive integer");
      }
      r.level = static_cast<int>(*level);
    }
    r.mos = optional_double(row.fields[c_mos], row, origin, "mos");
    r.native_min = optional_double(row.fields[c_min], row, origin, "native_min");
    r.native_max = optional_double(row.fields[c_max], row, origin, "native_max");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ImageRecord> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.string());
}

std::string format_manifest(std::span<const ImageRecord> records) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    out += join_csv({r.id, r.subject_id, r.path, r.source, r.family, r.level ? std::to_string(*r.level) : "",
                     opt_str(r.mos), opt_str(r.native_min), opt_str(r.native_max)});
    out.push_back('\n');
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ImageRecord> records) {
  write_text_file(path, format_manifest(records));
}

std::map<std::string, std::vector<int>> parse_ratings(std::string_view text, std::string_view origin) {
  const CsvTable table = parse_csv(text, origin);
  const std::size_t c_img = table.column("image_id");
  table.column("observer_id");
  const std::size_t c_rating = table.column("rating");
  std::map<std::string, std::vector<int>> out;
  for (const auto& row : table.rows) {
    long long v = 0;
    const std::string t = trim(row.fields[c_rating]);
    if (!parse_int(t, v) || v < 1 || v > 10) {
      fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) +
                                         ": rating must be an integer in [1, 10], got '" + t + "'");
    }
    out[trim(row.fields[c_img])].push_back(static_cast<int>(v));
  }
  return out;
}

std::map<std::string, std::vector<int>> read_ratings(const std::filesystem::path& path) {
  return parse_ratings(read_text_file(path), path.string());
}

std::string format_ratings(const std::map<std::string, std::vector<int>>& ratings) {
  std::string out = "image_id,observer_id,rating\n";
  for (const auto& [id, values] : ratings) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out += join_csv({id, "obs" + std::to_string(i + 1), std::to_string(values[i])});
      out.push_back('\n');
    }
  }
  return out;
}

std::string format_descriptors(std::span<const DatasetDescriptor> descriptors) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : descriptors) {
    nlohmann::ordered_json j;
    j["name"] = d.name;
    j["native_range"] = {d.native_min, d.native_max};
    j["distortion_type"] = std::string(to_string(d.distortion_type));
    j["split_policy"] = std::string(to_string(d.split_policy));
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<DatasetDescriptor> parse_descriptors(std::string_view json_text) {
  std::vector<DatasetDescriptor> out;
  try {
    const auto arr = nlohmann::json::parse(json_text);
    const auto& list = arr.is_array() ? arr : arr.at("datasets");
    for (const auto& j : list) {
      DatasetDescriptor d;
      d.name = j.at("name").get<std::string>();
      d.native_min = j.at("native_range").at(0).get<double>();
      d.native_max = j.at("native_range").at(1).get<double>();
      d.distortion_type = parse_distortion_type(j.value("distortion_type", std::string("authentic")));
      d.split_policy = parse_split_policy(j.value("split_policy", std::string("full")));
      d.validate();
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, std::string("dataset descriptors: ") + e.what());
  }
  return out;
}

// --- harmonization -------------------------------------------------------

double aggregate_mos(std::span<const int> raw_ratings) {
  if (raw_ratings.empty()) fail(ErrorCode::EmptyRatings, "cannot aggregate an empty rating list");
  double sum = 0.0;
  for (int r : raw_ratings) sum += r;
  return sum / static_cast<double>(raw_ratings.size());
}

double rescale_mos(double value, double native_min, double native_max) {
  if (!(native_min < native_max)) fail(ErrorCode::InvalidArgument, "native range requires min < max");
  if (!(value >= native_min && value <= native_max)) {
    fail(ErrorCode::ValueOutsideNativeRange, format_double(value) + " outside [" + format_double(native_min) + ", " +
                                                 format_double(native_max) + "]");
  }
  const double out = kMosMin + (kMosMax - kMosMin) * (value - native_min) / (native_max - native_min);
  return std::clamp(out, kMosMin, kMosMax);
}

std::vector<ImageRecord> harmonize(std::vector<ImageRecord> records, const DatasetDescriptor& descriptor,
                                   const std::map<std::string, std::vector<int>>& ratings) {
  descriptor.validate();
  for (auto& r : records) {
    if (auto it = ratings.find(r.id); it != ratings.end()) r.raw_ratings = it->second;
    for (int v : r.raw_ratings) {
      if (v < 1 || v > 10) fail(ErrorCode::InvalidArgument, r.id + ": rating outside [1, 10]");
    }
    double native = 0.0;
    if (!r.raw_ratings.empty()) {
      native = aggregate_mos(r.raw_ratings);
    } else if (r.mos) {
      native = *r.mos;
    } else {
      fail(ErrorCode::EmptyRatings, "image '" + r.id + "' has neither ratings nor a MOS");
    }
    try {
      r.mos = rescale_mos(native, descriptor.native_min, descriptor.native_max);
    } catch (const Error& e) {
      fail(e.code(), "image '" + r.id + "': " + e.what());
    }
    r.native_min = descriptor.native_min;
    r.native_max = descriptor.native_max;
    r.source = descriptor.name;
  }
  return records;
}

std::vector<ImageRecord> merge_domains(
    std::span<const std::pair<DatasetDescriptor, std::vector<ImageRecord>>> datasets) {
  std::vector<ImageRecord> merged;
  std::set<std::string> seen;
  for (const auto& [descriptor, records] : datasets) {
    descriptor.validate();
    for (const auto& r : records) {
      if (!r.mos || *r.mos < kMosMin || *r.mos > kMosMax) {
        fail(ErrorCode::InvalidArgument, "record '" + r.id + "' of '" + descriptor.name + "' is not harmonized");
      }
      ImageRecord m = r;
      m.id = descriptor.name + "/" + r.id;
      m.subject_id = descriptor.name + "/" + r.subject_id;
      m.source = descriptor.name;
      if (!seen.insert(m.id).second) fail(ErrorCode::DuplicateId, "duplicate id '" + m.id + "' after prefixing");
      merged.push_back(std::move(m));
    }
  }
  return merged;
}

}  // namespace iqaforge
