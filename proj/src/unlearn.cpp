#include "relia/unlearn.hpp"

#include <cmath>

#include "relia/error.hpp"

namespace relia {

namespace {

std::vector<McqaExample> collect_split(const Corpus& corpus, Split split) {
  std::vector<McqaExample> subset;
  for (const auto& ex : corpus.examples) {
    if (ex.split == split) subset.push_back(ex);
  }
  return subset;
}

// Shared stepper: theta <- theta + lr * grad(CE_forget) - lambda * lr * grad(CE_retain).
// The retain term is skipped entirely when lambda == 0 so that grad_diff at
// lambda 0 is bit-identical to gradient ascent and never touches retain data.
UnlearnResult unlearn_steps(const ModelParams& start, const Vocab& vocab,
                            std::span<const McqaExample> forget,
                            std::span<const McqaExample> retain, double lambda,
                            const UnlearnConfig& config, DataAccessLog* access_log) {
  config.validate();
  if (forget.empty()) throw ConfigError("forget subset is empty");

  UnlearnResult result{start, {}};
  ModelParams& model = result.params;
  const bool step_hidden = model.mode == ScorerMode::tanh;

  for (int step = 0; step < config.steps; ++step) {
    const BatchGradients forget_grad =
        cross_entropy_gradients(model, vocab, forget, access_log);
    if (!std::isfinite(forget_grad.loss)) {
      throw NumericError("unlearning diverged at step " + std::to_string(step) +
                         ": forget loss is not finite");
    }
    result.forget_losses.push_back(forget_grad.loss);

    model.embeddings += config.lr * forget_grad.embeddings;
    if (step_hidden) model.hidden += config.lr * forget_grad.hidden;
    model.readout += config.lr * forget_grad.readout;

    if (lambda != 0.0) {
      if (retain.empty()) throw ConfigError("retain subset is empty");
      const BatchGradients retain_grad =
          cross_entropy_gradients(model, vocab, retain, access_log);
      if (!std::isfinite(retain_grad.loss)) {
        throw NumericError("unlearning diverged at step " + std::to_string(step) +
                           ": retain loss is not finite");
      }
      const double scale = lambda * config.lr;
      model.embeddings -= scale * retain_grad.embeddings;
      if (step_hidden) model.hidden -= scale * retain_grad.hidden;
      model.readout -= scale * retain_grad.readout;
    }
  }
  return result;
}

}  // namespace

std::string to_string(UnlearnAlgo algo) {
  switch (algo) {
    case UnlearnAlgo::grad_ascent:
      return "grad_ascent";
    case UnlearnAlgo::grad_diff:
      return "grad_diff";
    case UnlearnAlgo::retrain_retained:
      return "retrain_retained";
  }
  return "grad_ascent";
}

UnlearnAlgo unlearn_algo_from_string(std::string_view s) {
  if (s == "grad_ascent") return UnlearnAlgo::grad_ascent;
  if (s == "grad_diff") return UnlearnAlgo::grad_diff;
  if (s == "retrain_retained") return UnlearnAlgo::retrain_retained;
  throw ConfigError("unknown unlearning algorithm: " + std::string(s));
}

void UnlearnConfig::validate() const {
  if (steps < 1) throw ConfigError("unlearning requires steps >= 1");
  if (!(lr > 0.0)) throw ConfigError("unlearning learning rate must be positive");
  if (!std::isfinite(retain_weight) || retain_weight < 0.0) {
    throw ConfigError("retain_weight must be finite and non-negative");
  }
}

TrainResult finetune_full(const ModelParams& pretrained, const Vocab& vocab,
                          const Corpus& corpus, const TrainConfig& config,
                          DataAccessLog* access_log) {
  if (corpus.examples.empty()) throw ConfigError("corpus is empty");
  auto result = train(pretrained, vocab, corpus.examples, config, access_log);
  result.params.provenance = kProvenanceFull;
  return result;
}

TrainResult retrain_retained(const ModelParams& pretrained, const Vocab& vocab,
                             const Corpus& corpus, const TrainConfig& config,
                             DataAccessLog* access_log) {
  const auto retain = collect_split(corpus, Split::retain);
  if (retain.empty()) throw ConfigError("retain split is empty");
  auto result = train(pretrained, vocab, retain, config, access_log);
  result.params.provenance = kProvenanceRetained;
  return result;
}

UnlearnResult gradient_ascent(const ModelParams& full, const Vocab& vocab,
                              std::span<const McqaExample> forget,
                              const UnlearnConfig& config, DataAccessLog* access_log) {
  auto result = unlearn_steps(full, vocab, forget, {}, 0.0, config, access_log);
  result.params.provenance = unlearned_provenance(to_string(UnlearnAlgo::grad_ascent));
  return result;
}

UnlearnResult gradient_difference(const ModelParams& full, const Vocab& vocab,
                                  std::span<const McqaExample> forget,
                                  std::span<const McqaExample> retain,
                                  const UnlearnConfig& config,
                                  DataAccessLog* access_log) {
  if (retain.empty()) throw ConfigError("retain subset is empty");
  auto result = unlearn_steps(full, vocab, forget, retain, config.retain_weight,
                              config, access_log);
  result.params.provenance = unlearned_provenance(to_string(UnlearnAlgo::grad_diff));
  return result;
}

}  // namespace relia
