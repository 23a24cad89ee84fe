// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Usage: acceptance [criterion numbers...]

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "iqaforge/csv.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/fixture.hpp"
#include "iqaforge/generate.hpp"
#include "iqaforge/metrics.hpp"
#include "iqaforge/mlp.hpp"
#include "iqaforge/optim.hpp"
#include "iqaforge/trainer.hpp"

#ifndef IQAFORGE_CLI_PATH
#error "IQAFORGE_CLI_PATH must name the command-line binary"
#endif

using namespace iqaforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class Scratch {
 public:
  explicit Scratch(const std::string& tag)
      : path_(fs::temp_directory_path() / ("iqaforge-acceptance-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// --- 1: metric oracles ----------------------------------------------------

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Rank of each value: 1 + number of smaller values + half the other equal ones.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1;
      else if (v[j] == v[i] && j != i) equal += 1;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

bool degenerate(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int with_ties = 0, checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const bool ties = trial % 2 == 1;
    std::vector<double> x(n), y(n);
    do {
      for (std::size_t i = 0; i < n; ++i) {
        // Tied vectors draw from a handful of values.
        x[i] = ties ? static_cast<double>(rng.below(4)) : rng.normal() * 10.0;
        y[i] = ties ? static_cast<double>(rng.below(3)) + 0.5 * x[i] : 0.3 * x[i] + rng.normal();
      }
    } while (degenerate(x) || degenerate(y));
    if (has_ties(x) || has_ties(y)) ++with_ties;
    worst = std::max(worst, std::abs(plcc(x, y) - oracle_pearson(x, y)));
    worst = std::max(worst, std::abs(srocc(x, y) - oracle_pearson(oracle_ranks(x), oracle_ranks(y))));
    ++checked;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 5.0,
          fmt::format("{} vector pairs ({} with ties), max |diff| {:.3g} (<= 1e-9), {:.2f}s (< 5s)", checked,
                      with_ties, worst, t)};
}

// --- 2: simplified Spearman --------------------------------------------------

Outcome criterion2() {
  double worst = 0.0;
  long pairs = 0;
  for (int n = 2; n <= 7; ++n) {
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 1.0);
    std::iota(y.begin(), y.end(), 1.0);
    do {
      const double simplified = spearman_tie_free(x, y);
      const double on_ranks = plcc(fractional_ranks(x), fractional_ranks(y));
      worst = std::max(worst, std::abs(simplified - on_ranks));
      ++pairs;
    } while (std::next_permutation(y.begin(), y.end()));
  }
  return {worst <= 1e-12, fmt::format("{} permutations of length 2..7, max |diff| {:.3g} (<= 1e-12)", pairs, worst)};
}

// --- 3: gradients ------------------------------------------------------------

Outcome criterion3() {
  Rng rng(303);
  double worst = 0.0;
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    auto m = MlpRegressor::initialized({34, 64, 16, 1}, rng);
    for (auto& p : m.parameters()) p += 0.05 * rng.normal();
    std::vector<double> x(34);
    for (auto& v : x) v = rng.normal();
    std::vector<std::vector<double>> masks{std::vector<double>(64), std::vector<double>(16)};
    for (auto& mask : masks)
      for (auto& v : mask) v = rng.bernoulli(0.5) ? 2.0 : 0.0;
    ForwardTrace trace;
    m.forward_masked(x, masks, &trace);
    std::vector<double> grad(m.parameter_count(), 0.0);
    const double upstream = rng.normal();
    m.backward(trace, upstream, grad);
    for (std::size_t i = 0; i < m.parameter_count(); ++i) {
      const double keep = m.parameters()[i];
      m.parameters()[i] = keep + h;
      const double up = m.forward_masked(x, masks, nullptr);
      m.parameters()[i] = keep - h;
      const double down = m.forward_masked(x, masks, nullptr);
      m.parameters()[i] = keep;
      const double numeric = upstream * (up - down) / (2.0 * h);
      // Relative to the gradient magnitude, floored so that exact zeros compare absolutely.
      const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-4});
      worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
    }
  }
  return {worst < 1e-4, fmt::format("100 random [34,64,16,1] nets, max relative error {:.3g} (< 1e-4)", worst)};
}

// --- 4: expansion cardinality and determinism -------------------------------

std::map<std::string, std::string> image_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir / "images")) out[e.path().filename().string()] = read_text_file(e.path());
  return out;
}

Outcome criterion4() {
  Scratch s("c4");
  const auto pristine = write_pristine_fixture(s.path() / "src", "tex", FixtureDomain::Texture, 100, 256, 404);
  const auto ladder = DistortionLadder::standard();
  auto t0 = Clock::now();
  const auto a = generate_dataset(pristine, s.path() / "src", ladder, s.path() / "a");
  const double ta = seconds_since(t0);
  t0 = Clock::now();
  const auto b = generate_dataset(pristine, s.path() / "src", ladder, s.path() / "b");
  const double tb = seconds_since(t0);
  const std::size_t rows = read_manifest(s.path() / "a" / "manifest.csv").size();
  const auto ia = image_bytes(s.path() / "a");
  const bool identical = ia == image_bytes(s.path() / "b") &&
                         read_text_file(s.path() / "a" / "manifest.csv") == read_text_file(s.path() / "b" / "manifest.csv");
  const bool pass = a.ok() && b.ok() && rows == 1900 && ia.size() == 1900 && identical && ta < 120.0;
  return {pass, fmt::format("{} manifest rows, {} images (expect 1900), byte-identical reruns: {}, {:.1f}s per run "
                            "(< 120s), second run {:.1f}s",
                            rows, ia.size(), identical ? "yes" : "no", ta, tb)};
}

// --- 5: severity monotonicity -------------------------------------------------

double mean_abs_diff(const PixelImage& a, const PixelImage& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) s += std::abs(int(a.pixels()[i]) - int(b.pixels()[i]));
  return s / static_cast<double>(a.pixels().size());
}

Outcome criterion5() {
  const auto ladder = DistortionLadder::standard();
  std::map<DistortionFamily, std::vector<DistortionSpec>> ordered;
  for (const auto& e : ladder.entries) ordered[e.family].push_back(e);
  auto& jpeg = ordered[DistortionFamily::JpegCompression];
  std::sort(jpeg.begin(), jpeg.end(), [](auto& a, auto& b) { return a.parameter > b.parameter; });
  auto& pix = ordered[DistortionFamily::Pixelation];
  std::sort(pix.begin(), pix.end(), [](auto& a, auto& b) { return a.parameter < b.parameter; });
  auto& con = ordered[DistortionFamily::Contrast];
  std::sort(con.begin(), con.end(),
            [](auto& a, auto& b) { return std::abs(a.parameter - 1.0) < std::abs(b.parameter - 1.0); });

  int violations = 0, checks = 0;
  for (int i = 0; i < 20; ++i) {
    const PixelImage img = texture_image(256, derive_seed(505, i));
    for (auto family : {DistortionFamily::JpegCompression, DistortionFamily::Pixelation, DistortionFamily::Contrast}) {
      double prev = 0.0;
      for (const auto& spec : ordered[family]) {
        const double d = mean_abs_diff(img, apply(img, spec));
        ++checks;
        if (d < prev) ++violations;
        prev = d;
      }
    }
  }
  return {violations == 0, fmt::format("20 textured 256^2 images, {} ordered steps (jpeg q40>20>7, pixelate 8<16, "
                                       "contrast |p-1| 0.5<0.7<0.8), {} decreases",
                                       checks, violations)};
}

// --- 6: leakage audit -----------------------------------------------------------

std::vector<ImageRecord> synthetic_dataset(const std::string& name, int subjects, int views) {
  std::vector<ImageRecord> out;
  for (int s = 0; s < subjects; ++s) {
    for (int v = 0; v < views; ++v) {
      ImageRecord r;
      r.subject_id = name + "/s" + std::to_string(s);
      r.id = r.subject_id + "/v" + std::to_string(v);
      r.source = name;
      r.mos = 5.0;
      out.push_back(r);
    }
  }
  return out;
}

Outcome criterion6() {
  std::vector<ImageRecord> records = synthetic_dataset("diqa", 100, 19);
  for (const auto& extra : {synthetic_dataset("wild", 40, 1), synthetic_dataset("big", 60, 1)})
    records.insert(records.end(), extra.begin(), extra.end());
  const std::vector<DatasetDescriptor> ds{{"diqa", 1, 10, DistortionType::Artificial, SplitPolicy::Full},
                                          {"wild", 1, 10, DistortionType::Authentic, SplitPolicy::TestOnly},
                                          {"big", 1, 10, DistortionType::Authentic, SplitPolicy::TrainValOnly}};
  const SplitPlan plan = make_splits(records, ds, 5);
  const std::size_t clean = verify_no_leakage(plan, records, ds).violations.size();

  // Planted: 3 subjects in two partitions, 2 policy breaches, 1 unassigned
  // subject, 2 duplicated ids.
  SplitPlan bad = plan;
  int planted_multi = 0;
  for (const auto& [rep, subject] : std::vector<std::pair<int, std::string>>{{0, "diqa/s3"}, {2, "diqa/s50"}, {4, "diqa/s99"}}) {
    const Partition p = *plan.partition_of(rep, subject);
    bad.assign(rep, subject, p == Partition::Train ? Partition::Test : Partition::Train);
    ++planted_multi;
  }
  bad.assignments[1]["wild/s7"] = {Partition::Train};
  bad.assignments[3]["big/s11"] = {Partition::Test};
  bad.assignments[2].erase("diqa/s20");
  auto dup_records = records;
  dup_records.push_back(records[5]);
  dup_records.push_back(records[900]);
  const auto report = verify_no_leakage(bad, dup_records, ds);
  const auto multi = report.count(ViolationKind::SubjectInMultiplePartitions);
  const auto breach = report.count(ViolationKind::PolicyBreach);
  const auto unassigned = report.count(ViolationKind::UnassignedSubject);
  const auto dups = report.count(ViolationKind::DuplicateId);
  const bool pass = clean == 0 && multi == static_cast<std::size_t>(planted_multi) && breach == 2 &&
                    unassigned == 1 && dups == 2 && report.violations.size() == 8;
  return {pass, fmt::format("generated plan (5 reps, 100x19 + test_only + train_val_only): {} violations; planted "
                            "3 multi / 2 policy / 1 unassigned / 2 duplicate -> found {} / {} / {} / {}",
                            clean, multi, breach, unassigned, dups)};
}

// --- 7: class weights -------------------------------------------------------------

Outcome criterion7() {
  double uniform_worst = 0.0;
  for (int per = 1; per <= 12; ++per) {
    std::vector<int> levels;
    for (int l = 1; l <= 10; ++l) levels.insert(levels.end(), static_cast<std::size_t>(per), l);
    for (const auto& [l, w] : class_weights(levels)) uniform_worst = std::max(uniform_worst, std::abs(w - 1.0));
  }
  Rng rng(707);
  double sum_worst = 0.0, rational_worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> levels;
    for (int l = 1; l <= 10; ++l) levels.push_back(l);  // every level populated
    const int extra = static_cast<int>(rng.below(500));
    for (int k = 0; k < extra; ++k) levels.push_back(1 + static_cast<int>(rng.below(10)));
    rng.shuffle(std::span<int>(levels));
    std::map<int, long long> counts;
    for (int l : levels) ++counts[l];
    const auto w = class_weights(levels);
    const long long total = static_cast<long long>(levels.size());
    double sum = 0.0;
    for (int l : levels) sum += w.at(l);
    sum_worst = std::max(sum_worst, std::abs(sum - static_cast<double>(total)) / static_cast<double>(total));
    for (const auto& [l, c] : counts) {
      // w_l is the rational |D| / (10 c_l).
      const double exact = static_cast<double>(total) / static_cast<double>(10 * c);
      rational_worst = std::max(rational_worst, std::abs(w.at(l) - exact) / exact);
    }
  }
  const bool pass = uniform_worst <= 1e-12 && sum_worst <= 1e-12 && rational_worst <= 1e-12;
  return {pass, fmt::format("uniform corpora max |w-1| {:.3g}; 50 populated corpora: max relative |sum w - |D|| "
                            "{:.3g}, max relative deviation from |D|/(10 c_l) {:.3g} (all <= 1e-12)",
                            uniform_worst, sum_worst, rational_worst)};
}

// --- 8: schedule ----------------------------------------------------------------

Outcome criterion8() {
  const long long total = 1000;
  const double first = onecycle_lr(0, total);
  const long long peak_step = onecycle_peak_step(total);
  const double peak = onecycle_lr(300, total);
  const double last = onecycle_lr(total - 1, total);
  double max_delta = 0.0;
  long long worst_step = 0;
  for (long long s = 1; s < total; ++s) {
    const double d = std::abs(onecycle_lr(s, total) - onecycle_lr(s - 1, total));
    if (d > max_delta) {
      max_delta = d;
      worst_step = s;
    }
  }
  const double bound = 2.0 * kMaxLearningRate / static_cast<double>(total);
  const bool start_ok = std::abs(first - 8e-6) <= 1e-18;
  const bool peak_ok = peak_step == 300 && peak == 2e-4;
  const bool end_ok = last <= 2.1e-8;
  const bool cont_ok = max_delta <= bound;
  return {start_ok && peak_ok && end_ok && cont_ok,
          fmt::format("lr(0) {:.6g} [{}], lr(300) {:.6g} at peak step {} [{}], lr(999) {:.4g} [{}], max adjacent "
                      "delta {:.4g} at step {} vs bound {:.4g} [{}]",
                      first, start_ok ? "ok" : "fail", peak, peak_step, peak_ok ? "ok" : "fail", last,
                      end_ok ? "ok" : "fail", max_delta, worst_step, bound, cont_ok ? "ok" : "fail")};
}

// --- 9: cross-domain matrix -------------------------------------------------------

// Chosen free parameters for the desk-scale run; the head, optimizer,
// learning rate, dropout and epoch budget stay at their fixed values.
constexpr int kDeskInputSize = 128;
constexpr int kDeskBatchSize = 1;

Outcome criterion9() {
  const auto t0 = Clock::now();
  ImageStore store;
  const auto ladder = DistortionLadder::standard();
  std::vector<std::pair<DatasetDescriptor, std::vector<ImageRecord>>> datasets;
  for (auto domain : {FixtureDomain::Texture, FixtureDomain::Shape}) {
    const std::string name = domain == FixtureDomain::Texture ? "textures" : "shapes";
    const DatasetDescriptor d{name, 1, 10, DistortionType::Artificial, SplitPolicy::Full};
    std::vector<ImageRecord> recs;
    for (int i = 0; i < 60; ++i) {
      const std::string pid = name + "-" + std::to_string(i);
      const PixelImage img = fixture_image(domain, 128, derive_seed(7, fnv1a(name), i));
      ImageRecord p;
      p.id = p.subject_id = p.path = pid;
      p.source = name;
      recs.push_back(p);
      store.put(name + "/" + pid, img);
      for (auto& [spec, out] : expand_pristine(img, ladder)) {
        ImageRecord r;
        r.id = r.path = distorted_id(pid, spec);
        r.subject_id = pid;
        r.source = name;
        r.family = std::string(family_token(spec.family));
        r.level = spec.level;
        store.put(name + "/" + r.id, std::move(out));
        recs.push_back(r);
      }
    }
    assign_pseudo_mos(recs, 11);
    datasets.emplace_back(d, harmonize(recs, d));
  }
  const auto merged = merge_domains(datasets);
  const std::vector<DatasetDescriptor> descs{datasets[0].first, datasets[1].first};
  const SplitPlan plan = make_splits(merged, descs, 5);

  TrainConfig cfg;
  cfg.input_size = kDeskInputSize;
  cfg.batch_size = kDeskBatchSize;
  const EvalReport report = run_experiment_matrix(cfg, plan, merged, descs, store, 5);
  const double elapsed = seconds_since(t0);

  std::map<std::pair<std::string, std::string>, double> m;
  bool complete = true;
  for (const auto& a : report.aggregates) {
    if (a.n != 5) complete = false;
    m[{a.train_corpus, a.test_dataset}] = a.plcc.mean;
  }
  const double tt = m[{"textures", "textures"}], ss = m[{"shapes", "shapes"}];
  const double at = m[{"All", "textures"}], as = m[{"All", "shapes"}];
  const double ts = m[{"textures", "shapes"}], st = m[{"shapes", "textures"}];
  const double same = (tt + ss) / 2.0, cross = (ts + st) / 2.0;
  const bool a_ok = tt >= 0.80 && ss >= 0.80;
  const bool b_ok = at >= 0.75 && as >= 0.75;
  const bool c_ok = same - cross >= 0.05;
  const bool t_ok = elapsed < 600.0;
  return {complete && a_ok && b_ok && c_ok && t_ok,
          fmt::format("mean test PLCC over 5 reps: (a) textures {:.4f}, shapes {:.4f} (>= 0.80) [{}]; (b) All->textures "
                      "{:.4f}, All->shapes {:.4f} (>= 0.75) [{}]; (c) same {:.4f} - cross {:.4f} = {:.4f} (>= 0.05) "
                      "[{}]; {:.0f}s (< 600s) [{}]",
                      tt, ss, a_ok ? "ok" : "fail", at, as, b_ok ? "ok" : "fail", same, cross, same - cross,
                      c_ok ? "ok" : "fail", elapsed, t_ok ? "ok" : "fail")};
}

// --- 10: CLI determinism ------------------------------------------------------------

int sh(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

// Runs the fixture pipeline into dir; returns the first failing step or "".
std::string cli_pipeline(const fs::path& dir) {
  const std::string cli = IQAFORGE_CLI_PATH;
  const std::string d = dir.string();
  const std::string seed = " --seed 1234";
  std::vector<std::string> steps{cli + " fixture --out " + d + "/fx --count 8 --size 64" + seed};
  for (const std::string dom : {"textures", "shapes"}) {
    steps.push_back(cli + " distort --pristine " + d + "/fx/" + dom + "/pristine.csv --out " + d + "/gen/" + dom + seed);
    steps.push_back(cli + " rate --manifest " + d + "/gen/" + dom + "/manifest.csv --out " + d + "/rate/" + dom + seed);
    steps.push_back(cli + " ingest --manifest " + d + "/gen/" + dom + "/manifest.csv --ratings " + d + "/rate/" + dom +
                    "/ratings.csv --name " + dom + " --type artificial --out " + d + "/ds/" + dom + seed);
  }
  steps.push_back(cli + " split --dataset " + d + "/ds/textures --dataset " + d + "/ds/shapes --repetitions 2 --out " +
                  d + "/corpus" + seed);
  steps.push_back(cli + " experiment --corpus " + d + "/corpus --epochs 2 --input-size 64 --batch-size 4 --out " + d +
                  "/exp" + seed);
  steps.push_back(cli + " report --eval " + d + "/exp/eval.csv --corpus " + d + "/corpus --out " + d + "/report" + seed);
  for (const auto& s : steps)
    if (sh(s) != 0) return s;
  return "";
}

Outcome criterion10() {
  Scratch s("c10");
  const std::string fa = cli_pipeline(s.path() / "a");
  const std::string fb = cli_pipeline(s.path() / "b");
  if (!fa.empty() || !fb.empty()) return {false, "pipeline step failed: " + (fa.empty() ? fb : fa)};
  std::vector<std::string> csvs;
  for (const auto& e : fs::recursive_directory_iterator(s.path() / "a")) {
    const auto rel = fs::relative(e.path(), s.path() / "a").generic_string();
    if (e.path().extension() == ".csv" && (rel.rfind("report/", 0) == 0 || rel.rfind("exp/", 0) == 0)) csvs.push_back(rel);
  }
  std::sort(csvs.begin(), csvs.end());
  int differing = 0;
  for (const auto& rel : csvs)
    if (read_text_file(s.path() / "a" / rel) != read_text_file(s.path() / "b" / rel)) ++differing;
  const bool has_core = std::count(csvs.begin(), csvs.end(), "report/aggregate.csv") == 1;
  std::string list;
  for (const auto& c : csvs) list += (list.empty() ? "" : ", ") + c;
  return {has_core && differing == 0,
          fmt::format("two seeded CLI runs, {} report CSVs compared ({}), {} differ", csvs.size(), list, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> all{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, run] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s : %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
