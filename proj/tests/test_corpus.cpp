#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "relia/corpus.hpp"
#include "relia/error.hpp"

using namespace relia;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("relia_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GenConfig small_config() {
  GenConfig cfg;
  cfg.n_authors = 10;
  cfg.questions_per_author = 5;
  cfg.n_choices = 4;
  cfg.vocab_size = 60;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("tokenize applies lowercase alphanumeric-run splitting") {
  CHECK(tokenize("How does X's work?") ==
        std::vector<std::string>{"how", "does", "x", "s", "work"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("A.  Raised-by") == std::vector<std::string>{"a", "raised", "by"});
}

TEST_CASE("tokenize is idempotent on its own space-joined output") {
  const std::string text = "Why is Yigal Abramovitz known -- for his humor?!";
  const auto once = tokenize(text);
  std::string joined;
  for (const auto& w : once) joined += w + " ";
  CHECK(tokenize(joined) == once);
}

TEST_CASE("generate produces the configured grid of examples") {
  const auto corpus = generate(small_config());
  CHECK(corpus.examples.size() == 50);

  std::set<std::string> ids;
  for (const auto& ex : corpus.examples) {
    ids.insert(ex.id);
    CHECK(ex.correct_index >= 0);
    CHECK(ex.correct_index < 4);
    CHECK(ex.choices.size() == 4);
    // question names its author
    const auto words = tokenize(ex.question);
    CHECK(std::find(words.begin(), words.end(), ex.author_id) != words.end());
    // choices pairwise distinct
    std::set<std::string> distinct(ex.choices.begin(), ex.choices.end());
    CHECK(distinct.size() == ex.choices.size());
    CHECK(ex.split == Split::retain);
  }
  CHECK(ids.size() == corpus.examples.size());
}

TEST_CASE("generate at shortcut_rate 0 plants no cues") {
  auto cfg = small_config();
  cfg.shortcut_rate = 0.0;
  const auto corpus = generate(cfg);
  CHECK(corpus.shortcut_plan.empty());
  for (const auto& ex : corpus.examples) {
    CHECK(ex.question.find("cue") == std::string::npos);
  }
}

TEST_CASE("generate at shortcut_rate 1 cues every example with its label's word") {
  auto cfg = small_config();
  cfg.n_authors = 40;
  cfg.vocab_size = 120;
  cfg.shortcut_rate = 1.0;
  const auto corpus = generate(cfg);
  CHECK(corpus.examples.size() == 200);
  REQUIRE(corpus.shortcut_plan.size() == 4);
  for (const auto& ex : corpus.examples) {
    const auto words = tokenize(ex.question);
    for (const auto& [label, cue] : corpus.shortcut_plan) {
      const bool present = std::find(words.begin(), words.end(), cue) != words.end();
      CHECK(present == (label == ex.correct_index));
    }
  }
}

TEST_CASE("cue-label coupling is exact at rate 1") {
  auto cfg = small_config();
  cfg.shortcut_rate = 1.0;
  const auto corpus = generate(cfg);
  for (const auto& [label, cue] : corpus.shortcut_plan) {
    int with_cue = 0, with_cue_and_label = 0;
    for (const auto& ex : corpus.examples) {
      const auto words = tokenize(ex.question);
      if (std::find(words.begin(), words.end(), cue) != words.end()) {
        ++with_cue;
        if (ex.correct_index == label) ++with_cue_and_label;
      }
    }
    if (with_cue > 0) CHECK(with_cue == with_cue_and_label);
  }
}

TEST_CASE("generate is deterministic down to serialized bytes") {
  const auto dir = temp_dir("gen_det");
  auto cfg = small_config();
  cfg.shortcut_rate = 0.3;
  save_jsonl(generate(cfg), dir / "a.jsonl");
  save_jsonl(generate(cfg), dir / "b.jsonl");
  CHECK(file_bytes(dir / "a.jsonl") == file_bytes(dir / "b.jsonl"));

  cfg.seed = 12;
  save_jsonl(generate(cfg), dir / "c.jsonl");
  CHECK(file_bytes(dir / "a.jsonl") != file_bytes(dir / "c.jsonl"));
}

TEST_CASE("generate rejects impossible configurations") {
  auto cfg = small_config();
  cfg.vocab_size = 10;  // < 2*10+5
  CHECK_THROWS_AS(generate(cfg), ConfigError);

  cfg = small_config();
  cfg.n_choices = 11;  // more choices than authors
  CHECK_THROWS_AS(generate(cfg), ConfigError);

  cfg = small_config();
  cfg.shortcut_rate = 1.5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("split_forget_retain marks whole authors") {
  GenConfig cfg;
  cfg.n_authors = 100;
  cfg.questions_per_author = 2;
  cfg.vocab_size = 250;
  cfg.seed = 3;
  const auto corpus = generate(cfg);

  const auto tagged = split_forget_retain(corpus, 0.10, 21);
  std::set<std::string> forget_authors, retain_authors;
  for (const auto& ex : tagged.examples) {
    (ex.split == Split::forget ? forget_authors : retain_authors).insert(ex.author_id);
  }
  CHECK(forget_authors.size() == 10);
  // author-level purity
  for (const auto& a : forget_authors) CHECK(retain_authors.count(a) == 0);

  // different seed: same size, generally different membership
  const auto tagged2 = split_forget_retain(corpus, 0.10, 22);
  std::set<std::string> forget2;
  for (const auto& ex : tagged2.examples) {
    if (ex.split == Split::forget) forget2.insert(ex.author_id);
  }
  CHECK(forget2.size() == 10);
  CHECK(forget_authors != forget2);
}

TEST_CASE("split presets 1/5/10 percent select ceil counts") {
  GenConfig cfg;
  cfg.n_authors = 100;
  cfg.questions_per_author = 1;
  cfg.vocab_size = 210;
  const auto corpus = generate(cfg);
  for (const auto& [fraction, expected] :
       std::vector<std::pair<double, std::size_t>>{{0.01, 1}, {0.05, 5}, {0.10, 10}}) {
    const auto tagged = split_forget_retain(corpus, fraction, 5);
    std::set<std::string> forget;
    for (const auto& ex : tagged.examples) {
      if (ex.split == Split::forget) forget.insert(ex.author_id);
    }
    CHECK(forget.size() == expected);
  }
}

TEST_CASE("split_forget_retain rejects degenerate fractions") {
  const auto corpus = generate(small_config());
  CHECK_THROWS_AS(split_forget_retain(corpus, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_forget_retain(corpus, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(split_forget_retain(corpus, 0.99, 1), ConfigError);  // all 10 authors
}

TEST_CASE("jsonl round-trip preserves every field") {
  const auto dir = temp_dir("roundtrip");
  auto cfg = small_config();
  cfg.shortcut_rate = 0.5;
  const auto corpus = split_forget_retain(generate(cfg), 0.2, 9);
  save_jsonl(corpus, dir / "c.jsonl");
  const auto loaded = load_jsonl(dir / "c.jsonl");
  CHECK(loaded == corpus);
  CHECK(loaded.vocab() == corpus.vocab());
}

TEST_CASE("load_jsonl reports malformed lines with their line number") {
  const auto dir = temp_dir("malformed");
  std::ofstream out(dir / "bad.jsonl");
  out << R"({"id":"a","author_id":"x","question":"q","choices":["a","b"],"correct_index":0,"split":"retain"})"
      << "\n";
  out << "{this is not json\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_jsonl(dir / "bad.jsonl"),
                       doctest::Contains("bad.jsonl:2"), DataError);
}

TEST_CASE("load_jsonl rejects a missing correct_index field") {
  const auto dir = temp_dir("missing_field");
  std::ofstream out(dir / "bad.jsonl");
  out << R"({"id":"a","author_id":"x","question":"q","choices":["a","b"],"split":"retain"})"
      << "\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_jsonl(dir / "bad.jsonl"),
                       doctest::Contains("correct_index"), DataError);
}

TEST_CASE("load_jsonl rejects duplicate ids and choice-count drift") {
  const auto dir = temp_dir("integrity");
  const std::string row =
      R"({"id":"a","author_id":"x","question":"q","choices":["a","b","c","d"],"correct_index":1,"split":"retain"})";
  {
    std::ofstream out(dir / "dup.jsonl");
    out << row << "\n" << row << "\n";
  }
  CHECK_THROWS_WITH_AS(load_jsonl(dir / "dup.jsonl"), doctest::Contains("duplicate"),
                       DataError);

  {
    std::ofstream out(dir / "k.jsonl");
    out << row << "\n";
    out << R"({"id":"b","author_id":"x","question":"q","choices":["a","b","c"],"correct_index":1,"split":"retain"})"
        << "\n";
  }
  CHECK_THROWS_AS(load_jsonl(dir / "k.jsonl"), DataError);
  // explicit expectation works too
  CHECK_THROWS_AS(load_jsonl(dir / "k.jsonl", 3), DataError);
}
