#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relia/corpus.hpp"

namespace relia {

enum class ScorerMode { linear, tanh };

std::string to_string(ScorerMode mode);
ScorerMode scorer_mode_from_string(std::string_view s);

// Word-id lookup derived deterministically from a corpus: id 0 is the
// reserved UNK row, ids 1..V-1 follow the sorted vocabulary. Rebuilding from
// the same corpus file always yields the same mapping, which is what lets
// checkpoints omit the vocabulary.
class Vocab {
 public:
  static Vocab from_corpus(const Corpus& corpus);
  static Vocab from_words(std::vector<std::string> words);

  int id(const std::string& word) const;  // 0 for out-of-vocabulary
  int size() const { return static_cast<int>(words_.size()) + 1; }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Tiny MCQA scorer. A prompt encoding is mean-pooled over its embedding rows
// and pushed through either an identity (linear) or tanh hidden layer onto a
// readout vector. Everything is double precision.
struct ModelParams {
  Eigen::MatrixXd embeddings;  // V x d
  Eigen::MatrixXd hidden;      // d x h (identity in linear mode)
  Eigen::VectorXd readout;     // h
  ScorerMode mode = ScorerMode::tanh;
  std::string provenance = "pretrained";

  int vocab_size() const { return static_cast<int>(embeddings.rows()); }
  int embed_dim() const { return static_cast<int>(embeddings.cols()); }
  int hidden_dim() const { return static_cast<int>(readout.size()); }
};

extern const char* const kProvenancePretrained;
extern const char* const kProvenanceFull;
extern const char* const kProvenanceRetained;
std::string unlearned_provenance(const std::string& algorithm);

// Entries i.i.d. uniform(-0.1, 0.1) from the seed; linear mode pins the
// hidden matrix to identity (and requires h == d).
ModelParams init(int vocab_size, int embed_dim, int hidden_dim, ScorerMode mode,
                 std::uint64_t seed);

double score_from_embeddings(const ModelParams& params, const Eigen::MatrixXd& rows);

// Exact analytic gradient of score_from_embeddings with respect to each
// entry of `rows`.
Eigen::MatrixXd grad_wrt_embeddings(const ModelParams& params,
                                    const Eigen::MatrixXd& rows);

// Token-id sequences per choice: tokenize(question) ++ tokenize(choice_k).
std::vector<std::vector<int>> encode_example(const Vocab& vocab,
                                             const McqaExample& example);

Eigen::MatrixXd embed_rows(const ModelParams& params, std::span<const int> ids);

// Softmax over the K per-choice scores.
Eigen::VectorXd predict(const ModelParams& params, const Vocab& vocab,
                        const McqaExample& example);

int argmax_lowest(const Eigen::VectorXd& values);

struct TrainConfig {
  int epochs = 300;
  double lr = 0.05;
  std::uint64_t seed = 0;  // reserved; full-batch training draws nothing
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Records which example ids a training/unlearning routine touched; tests use
// it to audit that forget data never leaks into a retained model.
struct DataAccessLog {
  std::set<std::string> ids;
  std::uint64_t touches = 0;

  void record(const std::string& id) {
    ids.insert(id);
    ++touches;
  }
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean cross-entropy before each update
};

// Full-batch gradients of the mean cross-entropy over a subset, accumulated
// in example order. Shared by training and the unlearning steppers.
struct BatchGradients {
  Eigen::MatrixXd embeddings;
  Eigen::MatrixXd hidden;
  Eigen::VectorXd readout;
  double loss = 0.0;
};

BatchGradients cross_entropy_gradients(const ModelParams& params, const Vocab& vocab,
                                       std::span<const McqaExample> examples,
                                       DataAccessLog* access_log = nullptr);

// Full-batch Adam on mean cross-entropy of the correct choice. Deterministic:
// fixed example order, sequential accumulation. Throws NumericError naming
// the epoch if the loss goes non-finite.
TrainResult train(const ModelParams& params, const Vocab& vocab,
                  std::span<const McqaExample> examples, const TrainConfig& config,
                  DataAccessLog* access_log = nullptr);

double mean_cross_entropy(const ModelParams& params, const Vocab& vocab,
                          std::span<const McqaExample> examples);

double accuracy(const ModelParams& params, const Vocab& vocab,
                std::span<const McqaExample> examples);

// JSON checkpoint: V, d, h, mode, provenance, row-major weight arrays.
// Round-trips exactly.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace relia
