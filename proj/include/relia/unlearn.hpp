#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "relia/corpus.hpp"
#include "relia/model.hpp"

namespace relia {

enum class UnlearnAlgo { grad_ascent, grad_diff, retrain_retained };

std::string to_string(UnlearnAlgo algo);
UnlearnAlgo unlearn_algo_from_string(std::string_view s);

struct UnlearnConfig {
  UnlearnAlgo algorithm = UnlearnAlgo::grad_ascent;
  int steps = 25;
  double lr = 0.02;
  double retain_weight = 1.0;  // lambda; grad_diff only
  std::uint64_t seed = 0;

  void validate() const;
};

struct UnlearnResult {
  ModelParams params;
  std::vector<double> forget_losses;  // mean forget cross-entropy before each step
};

// Fine-tune the pretrained model on forget ++ retain; provenance "full".
TrainResult finetune_full(const ModelParams& pretrained, const Vocab& vocab,
                          const Corpus& corpus, const TrainConfig& config,
                          DataAccessLog* access_log = nullptr);

// Retrain from the pretrained weights on the retain split only; the
// ideal-unlearning baseline. Provenance "retained".
TrainResult retrain_retained(const ModelParams& pretrained, const Vocab& vocab,
                             const Corpus& corpus, const TrainConfig& config,
                             DataAccessLog* access_log = nullptr);

// Full-batch steps along +grad of the mean forget cross-entropy.
UnlearnResult gradient_ascent(const ModelParams& full, const Vocab& vocab,
                              std::span<const McqaExample> forget,
                              const UnlearnConfig& config,
                              DataAccessLog* access_log = nullptr);

// Descends L = -CE(forget) + lambda * CE(retain). With lambda == 0 the update
// sequence is bit-identical to gradient_ascent.
UnlearnResult gradient_difference(const ModelParams& full, const Vocab& vocab,
                                  std::span<const McqaExample> forget,
                                  std::span<const McqaExample> retain,
                                  const UnlearnConfig& config,
                                  DataAccessLog* access_log = nullptr);

}  // namespace relia
