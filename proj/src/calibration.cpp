#include "relia/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "relia/error.hpp"

namespace relia {

namespace {

using nlohmann::json;

int bin_index(double confidence, int n_bins) {
  if (confidence <= 0.0) return 0;  // left-open closure of the first interval
  int m = static_cast<int>(std::ceil(confidence * n_bins)) - 1;
  m = std::clamp(m, 0, n_bins - 1);
  // Fix up against the exact interval edges the bins are defined by.
  while (m > 0 && confidence <= static_cast<double>(m) / n_bins) --m;
  while (m < n_bins - 1 && confidence > static_cast<double>(m + 1) / n_bins) ++m;
  return m;
}

void check_inputs(std::span<const PredictionRecord> records, int n_bins) {
  if (n_bins < 1) throw ConfigError("bin count must be at least 1");
  if (records.empty()) throw DataError("no prediction records to calibrate");
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<CalibrationBin> bin(std::span<const PredictionRecord> records, int n_bins) {
  check_inputs(records, n_bins);
  std::vector<CalibrationBin> bins(n_bins);
  for (int m = 0; m < n_bins; ++m) {
    bins[m].lo = static_cast<double>(m) / n_bins;
    bins[m].hi = static_cast<double>(m + 1) / n_bins;
  }
  std::vector<double> acc_sum(n_bins, 0.0), conf_sum(n_bins, 0.0);
  for (const auto& r : records) {
    const int m = bin_index(r.confidence, n_bins);
    ++bins[m].count;
    acc_sum[m] += r.correct ? 1.0 : 0.0;
    conf_sum[m] += r.confidence;
  }
  for (int m = 0; m < n_bins; ++m) {
    if (bins[m].count > 0) {
      bins[m].empty = false;
      bins[m].acc = acc_sum[m] / static_cast<double>(bins[m].count);
      bins[m].conf = conf_sum[m] / static_cast<double>(bins[m].count);
    }
  }
  return bins;
}

double ece(std::span<const PredictionRecord> records, int n_bins) {
  const auto bins = bin(records, n_bins);
  const double n = static_cast<double>(records.size());
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.empty) continue;
    total += (static_cast<double>(b.count) / n) * std::abs(b.acc - b.conf);
  }
  return total;
}

double mce(std::span<const PredictionRecord> records, int n_bins) {
  const auto bins = bin(records, n_bins);
  double worst = 0.0;
  for (const auto& b : bins) {
    if (b.empty) continue;
    worst = std::max(worst, std::abs(b.acc - b.conf));
  }
  return worst;
}

double brier(std::span<const PredictionRecord> records) {
  if (records.empty()) throw DataError("no prediction records to score");
  double total = 0.0;
  for (const auto& r : records) {
    for (std::size_t k = 0; k < r.probs.size(); ++k) {
      const double y = static_cast<int>(k) == r.true_index ? 1.0 : 0.0;
      const double diff = r.probs[k] - y;
      total += diff * diff;
    }
  }
  return total / static_cast<double>(records.size());
}

CalibrationReport calibration_report(std::span<const PredictionRecord> records,
                                     int n_bins) {
  CalibrationReport report;
  report.n_bins = n_bins;
  report.bins = bin(records, n_bins);
  report.n = static_cast<std::int64_t>(records.size());
  report.ece = ece(records, n_bins);
  report.mce = mce(records, n_bins);
  report.brier = brier(records);
  return report;
}

std::string reliability_diagram_csv(std::span<const PredictionRecord> records,
                                    int n_bins) {
  const auto bins = bin(records, n_bins);
  std::string out = "bin_lo,bin_hi,count,accuracy,confidence\n";
  for (const auto& b : bins) {
    out += format_double(b.lo) + ',' + format_double(b.hi) + ',' +
           std::to_string(b.count) + ',' + format_double(b.acc) + ',' +
           format_double(b.conf) + '\n';
  }
  return out;
}

void write_reliability_csv(std::span<const PredictionRecord> records, int n_bins,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << reliability_diagram_csv(records, n_bins);
}

std::map<int, std::pair<double, double>> bin_sweep(
    std::span<const PredictionRecord> records, const std::vector<int>& bin_counts) {
  std::map<int, std::pair<double, double>> sweep;
  for (int m : bin_counts) {
    sweep[m] = {ece(records, m), mce(records, m)};
  }
  return sweep;
}

void save_prediction_records(std::span<const PredictionRecord> records,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const auto& r : records) {
    json j;
    j["example_id"] = r.example_id;
    j["probs"] = r.probs;
    j["pred_index"] = r.pred_index;
    j["true_index"] = r.true_index;
    j["confidence"] = r.confidence;
    j["correct"] = r.correct;
    j["split"] = to_string(r.split);
    out << j.dump() << '\n';
  }
}

std::vector<PredictionRecord> load_prediction_records(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction records: " + path.string());
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PredictionRecord r;
      r.example_id = j.at("example_id").get<std::string>();
      r.probs = j.at("probs").get<std::vector<double>>();
      r.pred_index = j.at("pred_index").get<int>();
      r.true_index = j.at("true_index").get<int>();
      r.confidence = j.at("confidence").get<double>();
      r.correct = j.at("correct").get<bool>();
      r.split = split_from_string(j.at("split").get<std::string>());
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace relia
