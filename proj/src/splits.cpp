#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "iqaforge/csv.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/rng.hpp"

namespace iqaforge {

std::string_view to_string(Partition p) noexcept {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "train";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::Train;
  if (text == "val") return Partition::Val;
  if (text == "test") return Partition::Test;
  fail(ErrorCode::MalformedFile, "partition must be train|val|test, got '" + std::string(text) + "'");
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::SubjectInMultiplePartitions: return "subject_in_multiple_partitions";
    case ViolationKind::PolicyBreach: return "policy_breach";
    case ViolationKind::DuplicateId: return "duplicate_id";
    case ViolationKind::UnassignedSubject: return "unassigned_subject";
  }
  return "unknown";
}

std::optional<Partition> SplitPlan::partition_of(int repetition, const std::string& subject_id) const {
  if (repetition < 0 || repetition >= static_cast<int>(assignments.size())) return std::nullopt;
  const auto& rep = assignments[static_cast<std::size_t>(repetition)];
  const auto it = rep.find(subject_id);
  if (it == rep.end() || it->second.empty()) return std::nullopt;
  const auto& ps = it->second;
  if (std::any_of(ps.begin(), ps.end(), [&](Partition p) { return p != ps.front(); })) return std::nullopt;
  return ps.front();
}

void SplitPlan::assign(int repetition, const std::string& subject_id, Partition p) {
  if (repetition < 0) fail(ErrorCode::InvalidArgument, "negative repetition");
  if (static_cast<int>(assignments.size()) <= repetition) assignments.resize(static_cast<std::size_t>(repetition) + 1);
  auto& ps = assignments[static_cast<std::size_t>(repetition)][subject_id];
  if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
  n_repetitions = std::max(n_repetitions, static_cast<int>(assignments.size()));
}

std::size_t LeakageReport::count(ViolationKind kind) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

namespace {

const DatasetDescriptor* find_descriptor(std::span<const DatasetDescriptor> descriptors, const std::string& name) {
  for (const auto& d : descriptors) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace

SplitPlan make_splits(std::span<const ImageRecord> records, std::span<const DatasetDescriptor> descriptors,
                      int n_repetitions, SplitRatios ratios, std::uint64_t seed) {
  if (n_repetitions < 1) fail(ErrorCode::InvalidArgument, "n_repetitions must be >= 1");
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidArgument, "split ratios must be positive and sum to 1");
  }

  // dataset -> sorted subjects; subject -> dataset
  std::map<std::string, std::set<std::string>> subjects_by_dataset;
  std::map<std::string, std::string> dataset_of_subject;
  for (const auto& r : records) {
    if (!find_descriptor(descriptors, r.source)) {
      fail(ErrorCode::MissingDescriptor, "no descriptor for dataset '" + r.source + "' (image '" + r.id + "')");
    }
    auto [it, inserted] = dataset_of_subject.emplace(r.subject_id, r.source);
    if (!inserted && it->second != r.source) {
      fail(ErrorCode::InfeasiblePolicy,
           "subject '" + r.subject_id + "' spans datasets '" + it->second + "' and '" + r.source + "'");
    }
    subjects_by_dataset[r.source].insert(r.subject_id);
  }

  SplitPlan plan;
  plan.n_repetitions = n_repetitions;
  plan.seed = seed;
  plan.assignments.resize(static_cast<std::size_t>(n_repetitions));

  for (const auto& [name, subject_set] : subjects_by_dataset) {
    const DatasetDescriptor& d = *find_descriptor(descriptors, name);
    const std::vector<std::string> sorted(subject_set.begin(), subject_set.end());
    const auto n = static_cast<long>(sorted.size());
    long n_train = 0, n_val = 0, n_test = 0;
    switch (d.split_policy) {
      case SplitPolicy::Full:
        n_test = std::lround(static_cast<double>(n) * ratios.test);
        n_val = std::lround(static_cast<double>(n) * ratios.val);
        n_train = n - n_test - n_val;
        if (n < 3 || n_train < 1 || n_val < 1 || n_test < 1) {
          fail(ErrorCode::InfeasiblePolicy, "dataset '" + name + "' has " + std::to_string(n) +
                                                " subjects, too few for a train/val/test split");
        }
        break;
      case SplitPolicy::TrainValOnly:
        n_val = std::lround(static_cast<double>(n) * ratios.val / (ratios.train + ratios.val));
        n_train = n - n_val;
        if (n < 2 || n_train < 1 || n_val < 1) {
          fail(ErrorCode::InfeasiblePolicy, "dataset '" + name + "' has " + std::to_string(n) +
                                                " subjects, too few for a train/val split");
        }
        break;
      case SplitPolicy::TestOnly:
        n_test = n;
        break;
    }
    for (int rep = 0; rep < n_repetitions; ++rep) {
      std::vector<std::string> order = sorted;
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep), fnv1a(name)));
      rng.shuffle(std::span<std::string>(order));
      auto& map = plan.assignments[static_cast<std::size_t>(rep)];
      for (long i = 0; i < n; ++i) {
        const Partition p = i < n_train ? Partition::Train : (i < n_train + n_val ? Partition::Val : Partition::Test);
        map[order[static_cast<std::size_t>(i)]] = {p};
      }
    }
  }
  return plan;
}

std::string format_split_plan(const SplitPlan& plan) {
  std::string out = "repetition,subject_id,partition\n";
  for (std::size_t rep = 0; rep < plan.assignments.size(); ++rep) {
    for (const auto& [subject, parts] : plan.assignments[rep]) {
      for (Partition p : parts) {
        out += join_csv({std::to_string(rep), subject, std::string(to_string(p))});
        out.push_back('\n');
      }
    }
  }
  return out;
}

SplitPlan parse_split_plan(std::string_view text, std::string_view origin) {
  const CsvTable table = parse_csv(text, origin);
  const std::size_t c_rep = table.column("repetition");
  const std::size_t c_subject = table.column("subject_id");
  const std::size_t c_part = table.column("partition");
  SplitPlan plan;
  plan.n_repetitions = 0;
  for (const auto& row : table.rows) {
    long long rep = 0;
    if (!parse_int(trim(row.fields[c_rep]), rep) || rep < 0 || rep > 1000) {
      fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) + ": bad repetition");
    }
    try {
      plan.assign(static_cast<int>(rep), trim(row.fields[c_subject]), parse_partition(trim(row.fields[c_part])));
    } catch (const Error& e) {
      fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) + ": " + e.what());
    }
  }
  return plan;
}

LeakageReport verify_no_leakage(const SplitPlan& plan, std::span<const ImageRecord> records,
                                std::span<const DatasetDescriptor> descriptors) {
  LeakageReport report;

  std::map<std::string, int> id_counts;
  for (const auto& r : records) ++id_counts[r.id];
  for (const auto& [id, n] : id_counts) {
    if (n > 1) {
      report.violations.push_back({ViolationKind::DuplicateId, -1, id, std::to_string(n) + " records share this id"});
    }
  }

  // subject -> datasets its records belong to
  std::map<std::string, std::set<std::string>> subject_sources;
  for (const auto& r : records) subject_sources[r.subject_id].insert(r.source);

  for (std::size_t rep = 0; rep < plan.assignments.size(); ++rep) {
    const auto& map = plan.assignments[rep];
    const int irep = static_cast<int>(rep);
    for (const auto& [subject, sources] : subject_sources) {
      const auto it = map.find(subject);
      if (it == map.end() || it->second.empty()) {
        report.violations.push_back({ViolationKind::UnassignedSubject, irep, subject, "no partition assigned"});
        continue;
      }
      const auto& parts = it->second;
      if (parts.size() > 1) {
        std::string detail = "assigned to";
        for (Partition p : parts) detail += " " + std::string(to_string(p));
        report.violations.push_back({ViolationKind::SubjectInMultiplePartitions, irep, subject, detail});
      }
      for (const auto& source : sources) {
        const DatasetDescriptor* d = find_descriptor(descriptors, source);
        if (!d) {
          report.violations.push_back({ViolationKind::PolicyBreach, irep, subject, "no descriptor for '" + source + "'"});
          continue;
        }
        for (Partition p : parts) {
          const bool breach = (d->split_policy == SplitPolicy::TestOnly && p != Partition::Test) ||
                              (d->split_policy == SplitPolicy::TrainValOnly && p == Partition::Test);
          if (breach) {
            report.violations.push_back({ViolationKind::PolicyBreach, irep, subject,
                                         std::string(to_string(d->split_policy)) + " dataset '" + source +
                                             "' assigned to " + std::string(to_string(p))});
          }
        }
      }
    }
  }
  return report;
}

std::string format_audit_json(const LeakageReport& report) {
  nlohmann::ordered_json j;
  j["ok"] = report.ok();
  j["violation_count"] = report.violations.size();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    nlohmann::ordered_json e;
    e["kind"] = std::string(to_string(v.kind));
    if (v.repetition >= 0) e["repetition"] = v.repetition;
    e["subject_or_id"] = v.subject_or_id;
    e["detail"] = v.detail;
    arr.push_back(std::move(e));
  }
  j["violations"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace iqaforge
