#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relia {

enum class Split { forget, retain };

std::string to_string(Split split);
Split split_from_string(std::string_view s);

// One multiple-choice question. `correct_index` points into `choices`;
// `split` defaults to retain until split_forget_retain assigns tags.
struct McqaExample {
  std::string id;
  std::string author_id;
  std::string question;
  std::vector<std::string> choices;
  int correct_index = 0;
  Split split = Split::retain;

  bool operator==(const McqaExample&) const = default;
};

struct GenConfig {
  int n_authors = 40;
  int questions_per_author = 5;
  int n_choices = 4;
  double shortcut_rate = 0.0;
  int vocab_size = 300;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct Corpus {
  std::vector<McqaExample> examples;
  std::uint64_t generation_seed = 0;
  std::map<int, std::string> shortcut_plan;  // label index -> planted cue word

  // Sorted unique words over all questions and choices.
  std::vector<std::string> vocab() const;

  bool operator==(const Corpus&) const = default;
};

// Lowercases and splits on maximal runs of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

// Deterministic synthetic MCQA corpus. Every question names its author with
// a unique name token; the correct choice is the author's signature word and
// the distractors are signature words of other authors, so answering requires
// author-specific knowledge rather than a global ranking of choice words.
// With probability shortcut_rate a cue word tied to the correct choice index
// is appended to the question text.
Corpus generate(const GenConfig& config);

// Tags whole authors as forget until at least ceil(fraction * n_authors)
// authors are marked; all remaining examples stay retain.
Corpus split_forget_retain(const Corpus& corpus, double forget_fraction,
                           std::uint64_t seed);

// One example per line with fields id, author_id, question, choices,
// correct_index, split. Generation metadata (seed, shortcut plan) goes to a
// "<path>.meta.json" sidecar so load(save(c)) == c field-for-field.
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);

// expected_choices == 0 infers K from the first line; any later mismatch is
// an integrity error.
Corpus load_jsonl(const std::filesystem::path& path, int expected_choices = 0);

}  // namespace relia
