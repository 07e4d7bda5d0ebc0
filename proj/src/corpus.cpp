#include "relia/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relia/error.hpp"
#include "relia/rng.hpp"

namespace relia {

namespace {

using nlohmann::json;

const char* const kConsonants = "bdfghjklmnprstvwz";
const char* const kVowels = "aeiou";

// Pronounceable synthetic word for index i: two syllables, three past the
// two-syllable range. Enumeration keeps the pool distinct without an RNG.
std::string synth_word(int i) {
  const int nc = 17, nv = 5;
  const int n_syllables = nc * nv;
  const auto syllable = [&](int s) {
    return std::string{kConsonants[s / nv], kVowels[s % nv]};
  };
  const int two = n_syllables * n_syllables;
  if (i < two) {
    return syllable(i / n_syllables) + syllable(i % n_syllables);
  }
  int j = i - two;
  return syllable(j / two) + syllable((j / n_syllables) % n_syllables) +
         syllable(j % n_syllables);
}

std::string cue_word(int label) { return "cue" + std::to_string(label); }

std::string pad2(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

json example_to_json(const McqaExample& ex) {
  json j;
  j["id"] = ex.id;
  j["author_id"] = ex.author_id;
  j["question"] = ex.question;
  j["choices"] = ex.choices;
  j["correct_index"] = ex.correct_index;
  j["split"] = to_string(ex.split);
  return j;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string to_string(Split split) {
  return split == Split::forget ? "forget" : "retain";
}

Split split_from_string(std::string_view s) {
  if (s == "forget") return Split::forget;
  if (s == "retain") return Split::retain;
  throw DataError("unknown split tag: " + std::string(s));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

void GenConfig::validate() const {
  if (n_authors < 1 || questions_per_author < 1 || vocab_size < 1) {
    throw ConfigError("generator counts must be positive");
  }
  if (n_choices < 2) {
    throw ConfigError("n_choices must be at least 2");
  }
  if (n_choices > n_authors) {
    throw ConfigError(
        "n_choices exceeds n_authors: not enough authors to supply distinct "
        "distractor choices");
  }
  if (shortcut_rate < 0.0 || shortcut_rate > 1.0) {
    throw ConfigError("shortcut_rate must lie in [0, 1]");
  }
  const int needed = 2 * n_authors + questions_per_author;
  if (vocab_size < needed) {
    throw ConfigError("vocab_size too small to generate distinct choices: need at least " +
                      std::to_string(needed));
  }
}

std::vector<std::string> Corpus::vocab() const {
  std::set<std::string> words;
  for (const auto& ex : examples) {
    for (auto& w : tokenize(ex.question)) words.insert(std::move(w));
    for (const auto& choice : ex.choices) {
      for (auto& w : tokenize(choice)) words.insert(std::move(w));
    }
  }
  return {words.begin(), words.end()};
}

Corpus generate(const GenConfig& config) {
  config.validate();
  const int n_authors = config.n_authors;
  const int k = config.n_choices;

  std::vector<std::string> pool(config.vocab_size);
  for (int i = 0; i < config.vocab_size; ++i) pool[i] = synth_word(i);

  Rng rng(config.seed);
  rng.shuffle(pool);

  // Pool partition: one name and one signature answer word per author, one
  // aspect word per question slot.
  const auto names = std::vector<std::string>(pool.begin(), pool.begin() + n_authors);
  const auto sigs =
      std::vector<std::string>(pool.begin() + n_authors, pool.begin() + 2 * n_authors);
  const auto aspects = std::vector<std::string>(
      pool.begin() + 2 * n_authors,
      pool.begin() + 2 * n_authors + config.questions_per_author);

  Corpus corpus;
  corpus.generation_seed = config.seed;
  if (config.shortcut_rate > 0.0) {
    for (int y = 0; y < k; ++y) corpus.shortcut_plan[y] = cue_word(y);
  }

  corpus.examples.reserve(static_cast<std::size_t>(n_authors) *
                          config.questions_per_author);
  for (int a = 0; a < n_authors; ++a) {
    for (int q = 0; q < config.questions_per_author; ++q) {
      McqaExample ex;
      ex.author_id = names[a];
      ex.id = names[a] + "_q" + pad2(q);
      ex.correct_index = static_cast<int>(rng.below(k));
      const bool cued = rng.bernoulli(config.shortcut_rate);

      ex.choices.assign(k, {});
      ex.choices[ex.correct_index] = sigs[a];
      std::vector<int> distractors;
      while (static_cast<int>(distractors.size()) < k - 1) {
        const int b = static_cast<int>(rng.below(n_authors));
        if (b == a) continue;
        if (std::find(distractors.begin(), distractors.end(), b) != distractors.end())
          continue;
        distractors.push_back(b);
      }
      std::size_t next = 0;
      for (int pos = 0; pos < k; ++pos) {
        if (pos != ex.correct_index) ex.choices[pos] = sigs[distractors[next++]];
      }

      ex.question = "what does " + names[a] + " think about " + aspects[q];
      if (cued) ex.question += " " + cue_word(ex.correct_index);
      corpus.examples.push_back(std::move(ex));
    }
  }
  return corpus;
}

Corpus split_forget_retain(const Corpus& corpus, double forget_fraction,
                           std::uint64_t seed) {
  if (!(forget_fraction > 0.0 && forget_fraction < 1.0)) {
    throw ConfigError("forget_fraction must lie strictly between 0 and 1");
  }
  std::set<std::string> distinct;
  for (const auto& ex : corpus.examples) distinct.insert(ex.author_id);
  std::vector<std::string> authors(distinct.begin(), distinct.end());
  const auto n_authors = authors.size();
  if (n_authors == 0) throw ConfigError("corpus has no authors to split");

  // Epsilon guards against products like 0.1 * 30 = 3.0000000000000004.
  const auto n_forget = static_cast<std::size_t>(
      std::ceil(forget_fraction * static_cast<double>(n_authors) - 1e-9));
  if (n_forget == 0 || n_forget >= n_authors) {
    throw ConfigError("forget_fraction selects " + std::to_string(n_forget) +
                      " of " + std::to_string(n_authors) + " authors");
  }

  Rng rng(seed);
  rng.shuffle(authors);
  const std::set<std::string> forget_authors(authors.begin(),
                                             authors.begin() + n_forget);

  Corpus out = corpus;
  for (auto& ex : out.examples) {
    ex.split = forget_authors.count(ex.author_id) ? Split::forget : Split::retain;
  }
  return out;
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const auto& ex : corpus.examples) {
    out << example_to_json(ex).dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
  out.close();

  const auto meta_path = path.string() + ".meta.json";
  if (corpus.generation_seed != 0 || !corpus.shortcut_plan.empty()) {
    json meta;
    meta["generation_seed"] = corpus.generation_seed;
    json plan = json::object();
    for (const auto& [label, word] : corpus.shortcut_plan) {
      plan[std::to_string(label)] = word;
    }
    meta["shortcut_plan"] = plan;
    std::ofstream mout(meta_path);
    mout << meta.dump(2) << '\n';
  } else {
    std::filesystem::remove(meta_path);
  }
}

Corpus load_jsonl(const std::filesystem::path& path, int expected_choices) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());

  Corpus corpus;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    for (const char* field :
         {"id", "author_id", "question", "choices", "correct_index", "split"}) {
      if (!j.contains(field)) {
        line_error(path, line_no, std::string("missing field: ") + field);
      }
    }
    McqaExample ex;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.author_id = j.at("author_id").get<std::string>();
      ex.question = j.at("question").get<std::string>();
      ex.choices = j.at("choices").get<std::vector<std::string>>();
      ex.correct_index = j.at("correct_index").get<int>();
      ex.split = split_from_string(j.at("split").get<std::string>());
    } catch (const json::exception& e) {
      line_error(path, line_no, std::string("bad field type: ") + e.what());
    }
    if (expected_choices == 0) expected_choices = static_cast<int>(ex.choices.size());
    if (static_cast<int>(ex.choices.size()) != expected_choices) {
      line_error(path, line_no,
                 "expected " + std::to_string(expected_choices) + " choices, got " +
                     std::to_string(ex.choices.size()));
    }
    if (ex.correct_index < 0 || ex.correct_index >= expected_choices) {
      line_error(path, line_no, "correct_index out of range");
    }
    if (!seen_ids.insert(ex.id).second) {
      line_error(path, line_no, "duplicate example id: " + ex.id);
    }
    corpus.examples.push_back(std::move(ex));
  }

  const auto meta_path = path.string() + ".meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream min(meta_path);
    json meta;
    try {
      min >> meta;
    } catch (const json::parse_error& e) {
      throw DataError(meta_path + ": malformed JSON: " + e.what());
    }
    corpus.generation_seed = meta.value("generation_seed", std::uint64_t{0});
    if (meta.contains("shortcut_plan")) {
      for (const auto& [key, value] : meta.at("shortcut_plan").items()) {
        corpus.shortcut_plan[std::stoi(key)] = value.get<std::string>();
      }
    }
  }
  return corpus;
}

}  // namespace relia
