#include "relia/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "relia/error.hpp"
#include "relia/rng.hpp"

namespace relia {

namespace {

using nlohmann::json;

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  const double shift = scores.maxCoeff();
  Eigen::VectorXd p = (scores.array() - shift).exp();
  return p / p.sum();
}

// d(score)/d(meanpool): the per-row gradient is this over n.
Eigen::VectorXd grad_wrt_meanpool(const ModelParams& params,
                                  const Eigen::VectorXd& pooled) {
  if (params.mode == ScorerMode::linear) return params.readout;
  const Eigen::VectorXd z = params.hidden.transpose() * pooled;
  const Eigen::ArrayXd dtanh = 1.0 - z.array().tanh().square();
  return params.hidden * (params.readout.array() * dtanh).matrix();
}

std::vector<double> matrix_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.rows()) * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

Eigen::MatrixXd matrix_from_row_major(const std::vector<double>& flat,
                                      Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw DataError("checkpoint weight array has wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[i++];
  }
  return m;
}

// Adam state for one tensor, bias-corrected.
struct AdamState {
  Eigen::MatrixXd m, v;

  explicit AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}

  void step(Eigen::Ref<Eigen::MatrixXd> theta, const Eigen::MatrixXd& grad,
            const TrainConfig& cfg, int t) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    theta.array() -=
        cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
};

}  // namespace

const char* const kProvenancePretrained = "pretrained";
const char* const kProvenanceFull = "full";
const char* const kProvenanceRetained = "retained";

std::string unlearned_provenance(const std::string& algorithm) {
  return "unlearned-" + algorithm;
}

std::string to_string(ScorerMode mode) {
  return mode == ScorerMode::linear ? "linear" : "tanh";
}

ScorerMode scorer_mode_from_string(std::string_view s) {
  if (s == "linear") return ScorerMode::linear;
  if (s == "tanh") return ScorerMode::tanh;
  throw ConfigError("unknown scorer mode: " + std::string(s));
}

Vocab Vocab::from_corpus(const Corpus& corpus) {
  return from_words(corpus.vocab());
}

Vocab Vocab::from_words(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  Vocab v;
  v.words_ = std::move(words);
  v.index_.reserve(v.words_.size());
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    v.index_.emplace(v.words_[i], static_cast<int>(i) + 1);
  }
  return v;
}

int Vocab::id(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

ModelParams init(int vocab_size, int embed_dim, int hidden_dim, ScorerMode mode,
                 std::uint64_t seed) {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (mode == ScorerMode::linear && hidden_dim != embed_dim) {
    throw ConfigError("linear mode requires hidden_dim == embed_dim");
  }
  ModelParams p;
  p.mode = mode;
  p.provenance = kProvenancePretrained;
  Rng rng(seed);
  const auto draw = [&rng] { return rng.uniform(-0.1, 0.1); };

  p.embeddings.resize(vocab_size, embed_dim);
  for (Eigen::Index r = 0; r < p.embeddings.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.embeddings.cols(); ++c) p.embeddings(r, c) = draw();
  }
  if (mode == ScorerMode::linear) {
    p.hidden = Eigen::MatrixXd::Identity(embed_dim, embed_dim);
  } else {
    p.hidden.resize(embed_dim, hidden_dim);
    for (Eigen::Index r = 0; r < p.hidden.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.hidden.cols(); ++c) p.hidden(r, c) = draw();
    }
  }
  p.readout.resize(hidden_dim);
  for (Eigen::Index i = 0; i < p.readout.size(); ++i) p.readout(i) = draw();
  return p;
}

double score_from_embeddings(const ModelParams& params, const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw DataError("empty input: no embedding rows to score");
  const Eigen::VectorXd pooled = rows.colwise().mean();
  if (params.mode == ScorerMode::linear) return params.readout.dot(pooled);
  const Eigen::VectorXd z = params.hidden.transpose() * pooled;
  return params.readout.dot(z.array().tanh().matrix());
}

Eigen::MatrixXd grad_wrt_embeddings(const ModelParams& params,
                                    const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw DataError("empty input: no embedding rows to score");
  const Eigen::VectorXd pooled = rows.colwise().mean();
  const Eigen::VectorXd g = grad_wrt_meanpool(params, pooled);
  const double inv_n = 1.0 / static_cast<double>(rows.rows());
  Eigen::MatrixXd grad(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) grad.row(r) = inv_n * g.transpose();
  return grad;
}

std::vector<std::vector<int>> encode_example(const Vocab& vocab,
                                             const McqaExample& example) {
  const auto question_ids = vocab.encode(tokenize(example.question));
  std::vector<std::vector<int>> encodings;
  encodings.reserve(example.choices.size());
  for (const auto& choice : example.choices) {
    auto ids = question_ids;
    for (int id : vocab.encode(tokenize(choice))) ids.push_back(id);
    if (ids.empty()) {
      throw DataError("example " + example.id + ": empty prompt encoding");
    }
    encodings.push_back(std::move(ids));
  }
  return encodings;
}

Eigen::MatrixXd embed_rows(const ModelParams& params, std::span<const int> ids) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(ids.size()), params.embed_dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = params.embeddings.row(ids[i]);
  }
  return rows;
}

Eigen::VectorXd predict(const ModelParams& params, const Vocab& vocab,
                        const McqaExample& example) {
  if (example.choices.empty()) {
    throw DataError("example " + example.id + " has no choices");
  }
  const auto encodings = encode_example(vocab, example);
  Eigen::VectorXd scores(static_cast<Eigen::Index>(encodings.size()));
  for (std::size_t k = 0; k < encodings.size(); ++k) {
    scores(static_cast<Eigen::Index>(k)) =
        score_from_embeddings(params, embed_rows(params, encodings[k]));
  }
  return softmax(scores);
}

int argmax_lowest(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

double mean_cross_entropy(const ModelParams& params, const Vocab& vocab,
                          std::span<const McqaExample> examples) {
  double total = 0.0;
  for (const auto& ex : examples) {
    const Eigen::VectorXd p = predict(params, vocab, ex);
    total += -std::log(p(ex.correct_index));
  }
  return total / static_cast<double>(examples.size());
}

double accuracy(const ModelParams& params, const Vocab& vocab,
                std::span<const McqaExample> examples) {
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    if (argmax_lowest(predict(params, vocab, ex)) == ex.correct_index) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

BatchGradients cross_entropy_gradients(const ModelParams& model, const Vocab& vocab,
                                       std::span<const McqaExample> examples,
                                       DataAccessLog* access_log) {
  if (examples.empty()) throw ConfigError("gradient subset is empty");
  const double inv_batch = 1.0 / static_cast<double>(examples.size());

  BatchGradients g;
  g.embeddings = Eigen::MatrixXd::Zero(model.embeddings.rows(), model.embeddings.cols());
  g.hidden = Eigen::MatrixXd::Zero(model.hidden.rows(), model.hidden.cols());
  g.readout = Eigen::VectorXd::Zero(model.readout.size());

  for (const auto& ex : examples) {
    if (access_log) access_log->record(ex.id);
    const auto encodings = encode_example(vocab, ex);
    const auto k = static_cast<Eigen::Index>(encodings.size());

    Eigen::VectorXd scores(k);
    std::vector<Eigen::VectorXd> pooled(encodings.size());
    std::vector<Eigen::VectorXd> activ(encodings.size());  // tanh(z) per choice
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& ids = encodings[c];
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.embed_dim());
      for (int id : ids) sum += model.embeddings.row(id).transpose();
      pooled[c] = sum / static_cast<double>(ids.size());
      if (model.mode == ScorerMode::linear) {
        scores(c) = model.readout.dot(pooled[c]);
      } else {
        activ[c] = (model.hidden.transpose() * pooled[c]).array().tanh().matrix();
        scores(c) = model.readout.dot(activ[c]);
      }
    }

    const Eigen::VectorXd p = softmax(scores);
    g.loss += -std::log(p(ex.correct_index)) * inv_batch;

    for (Eigen::Index c = 0; c < k; ++c) {
      const double ds = (p(c) - (c == ex.correct_index ? 1.0 : 0.0)) * inv_batch;
      Eigen::VectorXd g_pool;  // dL/d(meanpool of choice c)
      if (model.mode == ScorerMode::linear) {
        g.readout += ds * pooled[c];
        g_pool = ds * model.readout;
      } else {
        g.readout += ds * activ[c];
        const Eigen::ArrayXd dtanh = 1.0 - activ[c].array().square();
        const Eigen::VectorXd back = (model.readout.array() * dtanh).matrix();
        g.hidden += ds * pooled[c] * back.transpose();
        g_pool = ds * model.hidden * back;
      }
      const auto& ids = encodings[c];
      const double inv_n = 1.0 / static_cast<double>(ids.size());
      for (int id : ids) g.embeddings.row(id) += inv_n * g_pool.transpose();
    }
  }
  return g;
}

TrainResult train(const ModelParams& params, const Vocab& vocab,
                  std::span<const McqaExample> examples, const TrainConfig& config,
                  DataAccessLog* access_log) {
  if (examples.empty()) throw ConfigError("training subset is empty");
  if (config.lr < 0.0) throw ConfigError("learning rate must be non-negative");
  if (config.epochs < 0) throw ConfigError("epochs must be non-negative");

  TrainResult result{params, {}};
  ModelParams& model = result.params;
  const bool train_hidden = model.mode == ScorerMode::tanh;

  AdamState adam_emb(model.embeddings.rows(), model.embeddings.cols());
  AdamState adam_hidden(model.hidden.rows(), model.hidden.cols());
  AdamState adam_readout(model.readout.size(), 1);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const BatchGradients g = cross_entropy_gradients(model, vocab, examples, access_log);
    if (!std::isfinite(g.loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": loss is not finite");
    }
    result.epoch_losses.push_back(g.loss);

    const int t = epoch + 1;
    adam_emb.step(model.embeddings, g.embeddings, config, t);
    if (train_hidden) adam_hidden.step(model.hidden, g.hidden, config, t);
    adam_readout.step(model.readout, g.readout, config, t);
  }
  return result;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["vocab_size"] = params.vocab_size();
  j["embed_dim"] = params.embed_dim();
  j["hidden_dim"] = params.hidden_dim();
  j["mode"] = to_string(params.mode);
  j["provenance"] = params.provenance;
  j["embeddings"] = matrix_row_major(params.embeddings);
  j["hidden"] = matrix_row_major(params.hidden);
  j["readout"] = std::vector<double>(params.readout.data(),
                                     params.readout.data() + params.readout.size());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out << j.dump() << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": malformed checkpoint: " + e.what());
  }
  try {
    ModelParams p;
    const auto v = j.at("vocab_size").get<Eigen::Index>();
    const auto d = j.at("embed_dim").get<Eigen::Index>();
    const auto h = j.at("hidden_dim").get<Eigen::Index>();
    p.mode = scorer_mode_from_string(j.at("mode").get<std::string>());
    p.provenance = j.at("provenance").get<std::string>();
    p.embeddings = matrix_from_row_major(j.at("embeddings").get<std::vector<double>>(), v, d);
    p.hidden = matrix_from_row_major(j.at("hidden").get<std::vector<double>>(), d, h);
    const auto readout = j.at("readout").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(readout.size()) != h) {
      throw DataError("checkpoint readout has wrong length");
    }
    p.readout = Eigen::Map<const Eigen::VectorXd>(readout.data(), h);
    return p;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint field: " + e.what());
  }
}

}  // namespace relia
