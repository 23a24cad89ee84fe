#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iqaforge {

inline constexpr double kMosMin = 1.0;
inline constexpr double kMosMax = 10.0;

struct ImageRecord {
  std::string id;
  std::string subject_id;  // pristine id for artificial data, self otherwise
  std::string path;
  std::string source;
  std::string family;  // empty for pristine or authentic images
  std::optional<int> level;
  std::optional<double> mos;
  std::optional<double> native_min;
  std::optional<double> native_max;
  std::vector<int> raw_ratings;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

enum class DistortionType { Authentic, Artificial };
enum class SplitPolicy { Full, TrainValOnly, TestOnly };

std::string_view to_string(DistortionType type) noexcept;
std::string_view to_string(SplitPolicy policy) noexcept;
DistortionType parse_distortion_type(std::string_view text);
SplitPolicy parse_split_policy(std::string_view text);

struct DatasetDescriptor {
  std::string name;
  double native_min = kMosMin;
  double native_max = kMosMax;
  DistortionType distortion_type = DistortionType::Authentic;
  SplitPolicy split_policy = SplitPolicy::Full;

  void validate() const;
  friend bool operator==(const DatasetDescriptor&, const DatasetDescriptor&) = default;
};

// --- manifest / ratings / descriptor files -------------------------------

inline constexpr std::string_view kManifestHeader = "id,subject_id,path,source,family,level,mos,native_min,native_max";

std::vector<ImageRecord> parse_manifest(std::string_view text, std::string_view origin = "<memory>");
std::vector<ImageRecord> read_manifest(const std::filesystem::path& path);
std::string format_manifest(std::span<const ImageRecord> records);
void write_manifest(const std::filesystem::path& path, std::span<const ImageRecord> records);

// CSV `image_id,observer_id,rating`; returns ratings grouped per image in file order.
std::map<std::string, std::vector<int>> read_ratings(const std::filesystem::path& path);
std::map<std::string, std::vector<int>> parse_ratings(std::string_view text, std::string_view origin = "<memory>");
std::string format_ratings(const std::map<std::string, std::vector<int>>& ratings);

std::string format_descriptors(std::span<const DatasetDescriptor> descriptors);
std::vector<DatasetDescriptor> parse_descriptors(std::string_view json_text);

// --- harmonization -------------------------------------------------------

double aggregate_mos(std::span<const int> raw_ratings);
double rescale_mos(double value, double native_min, double native_max);

// Attaches ratings, aggregates raw ratings when present (they win over a
// precomputed MOS), and maps every MOS onto [1, 10].
std::vector<ImageRecord> harmonize(std::vector<ImageRecord> records, const DatasetDescriptor& descriptor,
                                   const std::map<std::string, std::vector<int>>& ratings = {});

// Concatenates datasets, prefixing ids and subject ids with "<source>/".
std::vector<ImageRecord> merge_domains(
    std::span<const std::pair<DatasetDescriptor, std::vector<ImageRecord>>> datasets);

// --- splits --------------------------------------------------------------

enum class Partition { Train, Val, Test };

std::string_view to_string(Partition p) noexcept;
Partition parse_partition(std::string_view text);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitPlan {
  int n_repetitions = 5;
  std::uint64_t seed = 0;
  // Per repetition, subject -> assigned partitions. Generated plans hold
  // exactly one partition per subject; plans read from disk may hold more,
  // which the leakage audit reports.
  std::vector<std::map<std::string, std::vector<Partition>>> assignments;

  // The subject's partition when it is assigned exactly once.
  std::optional<Partition> partition_of(int repetition, const std::string& subject_id) const;
  void assign(int repetition, const std::string& subject_id, Partition p);
};

inline constexpr std::uint64_t kDefaultSeed = 20240521;

SplitPlan make_splits(std::span<const ImageRecord> records, std::span<const DatasetDescriptor> descriptors,
                      int n_repetitions = 5, SplitRatios ratios = {}, std::uint64_t seed = kDefaultSeed);

// CSV `repetition,subject_id,partition`, rows sorted by repetition then subject.
std::string format_split_plan(const SplitPlan& plan);
SplitPlan parse_split_plan(std::string_view text, std::string_view origin = "<memory>");

enum class ViolationKind { SubjectInMultiplePartitions, PolicyBreach, DuplicateId, UnassignedSubject };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  int repetition = -1;  // -1 when not repetition specific
  std::string subject_or_id;
  std::string detail;
};

struct LeakageReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(ViolationKind kind) const noexcept;
};

LeakageReport verify_no_leakage(const SplitPlan& plan, std::span<const ImageRecord> records,
                                std::span<const DatasetDescriptor> descriptors);

std::string format_audit_json(const LeakageReport& report);

}  // namespace iqaforge
