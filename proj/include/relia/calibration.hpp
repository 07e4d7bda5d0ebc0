#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relia/corpus.hpp"

namespace relia {

// One evaluated example. `true_index` is carried alongside the spec'd fields
// because the Brier score and macro F1 need the actual label, not just the
// correctness flag.
struct PredictionRecord {
  std::string example_id;
  std::vector<double> probs;
  int pred_index = 0;
  int true_index = 0;
  double confidence = 0.0;
  bool correct = false;
  Split split = Split::retain;
};

// Equal-width confidence bin over ((m-1)/M, m/M].
struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t count = 0;
  double acc = 0.0;
  double conf = 0.0;
  bool empty = true;
};

struct CalibrationReport {
  int n_bins = 0;
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  double mce = 0.0;
  double brier = 0.0;
  std::int64_t n = 0;
};

// Record i lands in bin m iff confidence in ((m-1)/M, m/M]; confidence
// exactly 0 goes to bin 1. Empty bins are kept with zero placeholders.
std::vector<CalibrationBin> bin(std::span<const PredictionRecord> records, int n_bins);

double ece(std::span<const PredictionRecord> records, int n_bins);
double mce(std::span<const PredictionRecord> records, int n_bins);

// (1/N) sum_i sum_k (p_ik - onehot_ik)^2; binning-free.
double brier(std::span<const PredictionRecord> records);

CalibrationReport calibration_report(std::span<const PredictionRecord> records,
                                     int n_bins);

// CSV rows, one per bin including empty ones.
// Header: bin_lo,bin_hi,count,accuracy,confidence
std::string reliability_diagram_csv(std::span<const PredictionRecord> records,
                                    int n_bins);
void write_reliability_csv(std::span<const PredictionRecord> records, int n_bins,
                           const std::filesystem::path& path);

// ECE/MCE per bin count, default counts from the bin-sensitivity study.
std::map<int, std::pair<double, double>> bin_sweep(
    std::span<const PredictionRecord> records,
    const std::vector<int>& bin_counts = {10, 20, 33, 100});

// JSONL persistence for per-example records (the audit trail every aggregate
// must be recomputable from).
void save_prediction_records(std::span<const PredictionRecord> records,
                             const std::filesystem::path& path);
std::vector<PredictionRecord> load_prediction_records(
    const std::filesystem::path& path);

}  // namespace relia
