#include <doctest.h>

#include <set>

#include "iqaforge/datasets.hpp"
#include "iqaforge/error.hpp"

using namespace iqaforge;

namespace {

// n_subjects subjects with `views` images each, MOS already on [1, 10].
std::vector<ImageRecord> grouped(const std::string& source, int n_subjects, int views) {
  std::vector<ImageRecord> out;
  for (int s = 0; s < n_subjects; ++s) {
    for (int v = 0; v < views; ++v) {
      ImageRecord r;
      r.subject_id = source + "-s" + std::to_string(s);
      r.id = r.subject_id + "-v" + std::to_string(v);
      r.source = source;
      r.mos = 1.0 + (s * 7 + v) % 10;
      out.push_back(r);
    }
  }
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an iqaforge::Error");
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("mos aggregation") {
  const std::vector<int> two{4, 6};
  CHECK(aggregate_mos(two) == 5.0);
  const std::vector<int> panel(40, 7);
  CHECK(aggregate_mos(panel) == 7.0);
  CHECK(code_of([] { aggregate_mos(std::vector<int>{}); }) == ErrorCode::EmptyRatings);
}

TEST_CASE("rescaling native ranges onto [1, 10]") {
  CHECK(rescale_mos(5.0, 1.0, 5.0) == doctest::Approx(10.0));
  CHECK(rescale_mos(50.0, 0.0, 100.0) == doctest::Approx(5.5));
  CHECK(rescale_mos(0.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(code_of([] { rescale_mos(1.5, 0.0, 1.0); }) == ErrorCode::ValueOutsideNativeRange);
}

TEST_CASE("harmonize prefers raw ratings and tags the source") {
  DatasetDescriptor d{"koniq", 1.0, 5.0, DistortionType::Authentic, SplitPolicy::Full};
  ImageRecord a;
  a.id = "a";
  a.subject_id = "a";
  ImageRecord b = a;
  b.id = b.subject_id = "b";
  b.mos = 3.0;
  const std::map<std::string, std::vector<int>> ratings{{"a", {5, 5}}};
  const auto out = harmonize({a, b}, d, ratings);
  CHECK(*out[0].mos == doctest::Approx(10.0));
  CHECK(*out[1].mos == doctest::Approx(5.5));
  CHECK(out[1].source == "koniq");
  ImageRecord c;
  c.id = c.subject_id = "c";
  CHECK(code_of([&] { harmonize({c}, d); }) == ErrorCode::EmptyRatings);
}

TEST_CASE("manifest, ratings, descriptors and plans round trip") {
  auto recs = grouped("tex", 6, 2);
  recs[1].family = "jpeg";
  recs[1].level = 2;
  recs[1].path = "images/x.png";
  CHECK(parse_manifest(format_manifest(recs)) == recs);
  CHECK_THROWS_AS(parse_manifest("id,subject_id\nx,y\n"), Error);

  const std::map<std::string, std::vector<int>> ratings{{"a", {1, 2, 3}}, {"b", {10}}};
  CHECK(parse_ratings(format_ratings(ratings)) == ratings);

  const std::vector<DatasetDescriptor> ds{{"tex", 1, 10, DistortionType::Artificial, SplitPolicy::Full},
                                          {"wild", 0, 100, DistortionType::Authentic, SplitPolicy::TestOnly}};
  CHECK(parse_descriptors(format_descriptors(ds)) == ds);

  const auto plan = make_splits(recs, std::vector<DatasetDescriptor>{ds[0]}, 2);
  const auto back = parse_split_plan(format_split_plan(plan));
  CHECK(back.n_repetitions == 2);
  CHECK(back.assignments == plan.assignments);
}

TEST_CASE("merging prefixes ids and keeps per-source counts") {
  const DatasetDescriptor a{"a", 1, 10, DistortionType::Artificial, SplitPolicy::Full};
  const DatasetDescriptor b{"b", 1, 10, DistortionType::Authentic, SplitPolicy::Full};
  const std::vector<std::pair<DatasetDescriptor, std::vector<ImageRecord>>> both{{a, grouped("a", 10, 1)},
                                                                                 {b, grouped("b", 10, 1)}};
  const auto merged = merge_domains(both);
  CHECK(merged.size() == 20);
  std::map<std::string, int> per;
  std::set<std::string> ids;
  for (const auto& r : merged) {
    per[r.source]++;
    ids.insert(r.id);
    CHECK(*r.mos >= kMosMin);
    CHECK(*r.mos <= kMosMax);
  }
  CHECK(per["a"] == 10);
  CHECK(per["b"] == 10);
  CHECK(ids.size() == 20);

  const auto single = merge_domains(std::span(both.data(), 1));
  REQUIRE(single.size() == 10);
  CHECK(single[3].id == "a/" + both[0].second[3].id);
}

TEST_CASE("subject grouping and split policies") {
  auto recs = grouped("diqa", 100, 19);
  const auto wild = grouped("wild", 30, 1);
  const auto big = grouped("big", 40, 1);
  recs.insert(recs.end(), wild.begin(), wild.end());
  recs.insert(recs.end(), big.begin(), big.end());
  const std::vector<DatasetDescriptor> ds{{"diqa", 1, 10, DistortionType::Artificial, SplitPolicy::Full},
                                          {"wild", 1, 10, DistortionType::Authentic, SplitPolicy::TestOnly},
                                          {"big", 1, 10, DistortionType::Authentic, SplitPolicy::TrainValOnly}};
  const auto plan = make_splits(recs, ds, 5);
  REQUIRE(plan.assignments.size() == 5);
  for (int rep = 0; rep < 5; ++rep) {
    std::map<Partition, int> diqa_counts;
    for (const auto& r : recs) {
      const auto p = plan.partition_of(rep, r.subject_id);
      REQUIRE(p.has_value());
      if (r.source == "wild") CHECK(*p == Partition::Test);
      if (r.source == "big") CHECK(*p != Partition::Test);
      if (r.source == "diqa") diqa_counts[*p]++;
    }
    // 70 / 15 / 15 subjects of 19 images each.
    CHECK(diqa_counts[Partition::Train] == 70 * 19);
    CHECK(diqa_counts[Partition::Val] == 15 * 19);
    CHECK(diqa_counts[Partition::Test] == 15 * 19);
  }
  CHECK(verify_no_leakage(plan, recs, ds).ok());
  CHECK(plan.assignments[0] != plan.assignments[1]);
  CHECK(make_splits(recs, ds, 5).assignments == plan.assignments);
}

TEST_CASE("split preconditions") {
  const auto recs = grouped("x", 10, 1);
  const std::vector<DatasetDescriptor> none;
  CHECK(code_of([&] { make_splits(recs, none); }) == ErrorCode::MissingDescriptor);
  const std::vector<DatasetDescriptor> tiny{{"x", 1, 10, DistortionType::Authentic, SplitPolicy::Full}};
  CHECK(code_of([&] { make_splits(grouped("x", 2, 1), tiny); }) == ErrorCode::InfeasiblePolicy);
}

TEST_CASE("leakage audit finds planted violations") {
  const auto recs = grouped("d", 20, 2);
  const std::vector<DatasetDescriptor> ds{{"d", 1, 10, DistortionType::Artificial, SplitPolicy::Full}};
  auto plan = make_splits(recs, ds, 2);
  CHECK(verify_no_leakage(plan, recs, ds).ok());

  SplitPlan leaky = plan;
  const std::string victim = recs[0].subject_id;
  const Partition original = *plan.partition_of(1, victim);
  leaky.assign(1, victim, original == Partition::Test ? Partition::Train : Partition::Test);
  const auto report = verify_no_leakage(leaky, recs, ds);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == ViolationKind::SubjectInMultiplePartitions);
  CHECK(report.violations[0].subject_or_id == victim);
  CHECK(report.violations[0].repetition == 1);

  auto dup = recs;
  dup.push_back(recs[3]);
  CHECK(verify_no_leakage(plan, dup, ds).count(ViolationKind::DuplicateId) == 1);
}
