#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "iqaforge/csv.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/metrics.hpp"

namespace iqaforge {

std::vector<AggregateRow> aggregate_rows(std::span<const EvalRow> rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<double>> plccs, sroccs;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.model == r.model && a.train_corpus == r.train_corpus && a.test_dataset == r.test_dataset;
    });
    std::size_t idx;
    if (it == out.end()) {
      out.push_back({r.model, r.train_corpus, r.test_dataset, 0, {}, {}});
      plccs.emplace_back();
      sroccs.emplace_back();
      idx = out.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - out.begin());
    }
    if (r.plcc && r.srocc) {
      plccs[idx].push_back(*r.plcc);
      sroccs[idx].push_back(*r.srocc);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].n = static_cast<int>(plccs[i].size());
    if (!plccs[i].empty()) {
      out[i].plcc = aggregate(plccs[i]);
      out[i].srocc = aggregate(sroccs[i]);
    }
  }
  return out;
}

std::string format_eval_csv(std::span<const EvalRow> rows) {
  std::string out = std::string(kEvalHeader) + "\n";
  for (const auto& r : rows) {
    out += join_csv({r.model, r.train_corpus, r.test_dataset, std::to_string(r.repetition),
                     r.plcc ? format_double(*r.plcc) : "", r.srocc ? format_double(*r.srocc) : ""});
    out.push_back('\n');
  }
  return out;
}

std::vector<EvalRow> parse_eval_csv(std::string_view text, std::string_view origin) {
  const CsvTable table = parse_csv(text, origin);
  const auto c_model = table.column("model");
  const auto c_train = table.column("train_corpus");
  const auto c_test = table.column("test_dataset");
  const auto c_rep = table.column("repetition");
  const auto c_plcc = table.column("plcc");
  const auto c_srocc = table.column("srocc");
  std::vector<EvalRow> rows;
  for (const auto& row : table.rows) {
    EvalRow r;
    r.model = row.fields[c_model];
    r.train_corpus = row.fields[c_train];
    r.test_dataset = row.fields[c_test];
    long long rep = 0;
    if (!parse_int(trim(row.fields[c_rep]), rep)) {
      fail(ErrorCode::MalformedFile, std::string(origin) + ":" + std::to_string(row.line) + ": bad repetition");
    }
    r.repetition = static_cast<int>(rep);
    double v = 0.0;
    if (parse_double(trim(row.fields[c_plcc]), v)) r.plcc = v;
    if (parse_double(trim(row.fields[c_srocc]), v)) r.srocc = v;
    if (!r.plcc || !r.srocc) {
      r.plcc.reset();
      r.srocc.reset();
      r.error = "missing metric";
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_aggregate_csv(std::span<const AggregateRow> rows) {
  std::string out = std::string(kAggregateHeader) + "\n";
  for (const auto& a : rows) {
    const bool have = a.n > 0;
    out += join_csv({a.model, a.train_corpus, a.test_dataset, std::to_string(a.n),
                     have ? format_double(a.plcc.mean) : "", have ? format_double(a.plcc.std) : "",
                     have ? format_double(a.srocc.mean) : "", have ? format_double(a.srocc.std) : ""});
    out.push_back('\n');
  }
  return out;
}

std::string format_matrix_table(std::span<const AggregateRow> rows, const std::string& metric) {
  std::vector<std::string> train_order, test_order;
  for (const auto& a : rows) {
    const std::string train = a.model + " / " + a.train_corpus;
    if (std::find(train_order.begin(), train_order.end(), train) == train_order.end()) train_order.push_back(train);
    if (std::find(test_order.begin(), test_order.end(), a.test_dataset) == test_order.end()) {
      test_order.push_back(a.test_dataset);
    }
  }
  std::map<std::pair<std::string, std::string>, std::string> cells;
  for (const auto& a : rows) {
    const MeanStd& m = metric == "srocc" ? a.srocc : a.plcc;
    cells[{a.model + " / " + a.train_corpus, a.test_dataset}] =
        a.n > 0 ? format_fixed(m.mean, 4) + " ± " + format_fixed(m.std, 4) : "n/a";
  }

  // "±" is two bytes but one column wide.
  auto width_of = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::size_t first = std::string("train corpus").size();
  for (const auto& t : train_order) first = std::max(first, width_of(t));
  std::vector<std::size_t> widths;
  for (const auto& t : test_order) {
    std::size_t w = width_of(t);
    for (const auto& tr : train_order) {
      auto it = cells.find({tr, t});
      w = std::max(w, width_of(it == cells.end() ? std::string("-") : it->second));
    }
    widths.push_back(w);
  }
  auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - width_of(s), ' '); };

  std::ostringstream os;
  os << metric << " (mean ± standard deviation)\n";
  os << pad("train corpus", first);
  for (std::size_t i = 0; i < test_order.size(); ++i) os << " | " << pad(test_order[i], widths[i]);
  os << '\n' << std::string(first, '-');
  for (std::size_t w : widths) os << "-+-" << std::string(w, '-');
  os << '\n';
  for (const auto& tr : train_order) {
    os << pad(tr, first);
    for (std::size_t i = 0; i < test_order.size(); ++i) {
      auto it = cells.find({tr, test_order[i]});
      os << " | " << pad(it == cells.end() ? std::string("-") : it->second, widths[i]);
    }
    os << '\n';
  }
  return os.str();
}

std::string format_mos_histograms(std::span<const MosSample> samples) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<int>> bins;
  for (const auto& s : samples) {
    if (!bins.count(s.dataset)) {
      order.push_back(s.dataset);
      bins[s.dataset].assign(10, 0);
    }
    const double t = (std::clamp(s.mos, kMosMin, kMosMax) - kMosMin) / (kMosMax - kMosMin) * 10.0;
    const int b = std::min(9, static_cast<int>(std::floor(t)));
    ++bins[s.dataset][static_cast<std::size_t>(b)];
  }
  std::string out = "dataset,bin,lower,upper,count\n";
  const double width = (kMosMax - kMosMin) / 10.0;
  for (const auto& name : order) {
    for (int b = 0; b < 10; ++b) {
      out += join_csv({name, std::to_string(b), format_double(kMosMin + width * b),
                       format_double(kMosMin + width * (b + 1)), std::to_string(bins[name][static_cast<std::size_t>(b)])});
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace iqaforge
