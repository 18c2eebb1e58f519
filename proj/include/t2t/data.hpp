#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "t2t/error.hpp"

namespace t2t {

struct Field {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const Field&) const = default;
};

// Ordered (field, values) pairs describing one entity.
struct Infobox {
  std::vector<Field> fields;

  int total_values() const;
  bool operator==(const Infobox&) const = default;
};

struct Example {
  Infobox infobox;
  std::vector<std::string> description;
  std::string domain;  // optional label, e.g. "sports" / "arts"; empty = none

  bool operator==(const Example&) const = default;
};

// Token <-> id maps for values and descriptions plus a separate map for
// field names. Word ids 0..3 are PAD/UNK/BOS/EOS; field id 0 is the unknown
// field. top_k caps the total word vocabulary including the specials.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kUnkField = 0;

  std::vector<std::string> words;
  std::unordered_map<std::string, int> word_to_id;
  std::vector<std::string> field_names;
  std::unordered_map<std::string, int> field_to_id;
  std::vector<std::pair<std::string, std::int64_t>> word_freq;  // sorted: count desc, token asc

  int word_id(const std::string& token) const;
  int field_id(const std::string& name) const;
  const std::string& word(int id) const;
  const std::string& field(int id) const;
  int word_count() const { return static_cast<int>(words.size()); }
  int field_count() const { return static_cast<int>(field_names.size()); }
};

// Counts tokens over infobox values and descriptions, keeps the most
// frequent (ties broken lexicographically) and all field names.
Vocabulary build_vocab(std::span<const Example> examples, int top_k);

// Canonical line format, one example per line:
//   field1|v1 v2<TAB>field2|v1<TAB>...<TAB>###<TAB>description tokens
// An example carrying a domain label appends one extra field:
//   ...<TAB>##domain=<label>
std::string serialize_example(const Example& e);
std::optional<Example> parse_example_line(const std::string& line, std::string* error);

struct ParseStats {
  long lines = 0;
  long parsed = 0;
  long skipped = 0;
  long dropped_fields = 0;  // fields with no values after preprocessing
  std::vector<std::string> warnings;

  void warn(std::string msg);
};

// Streaming reader over a canonical file. Malformed lines are reported with
// their line number and skipped; in strict mode they abort instead.
class ExampleReader {
 public:
  ExampleReader(const std::filesystem::path& path, bool strict = false);
  std::optional<Example> next();
  const ParseStats& stats() const { return stats_; }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  bool strict_;
  ParseStats stats_;
};

// Reads the whole file; throws DataError when unreadable or when no line
// parses.
std::vector<Example> load_examples(const std::filesystem::path& path, bool strict = false,
                                   ParseStats* stats = nullptr);

void save_examples(std::span<const Example> examples, const std::filesystem::path& path);

// Converts the published WikiBio layout to the canonical format. A .box line
// holds whitespace-separated `field_i:token` entries; values of `<none>` are
// dropped. The sentence file holds one description per line, unless nb_path
// is given, in which case it holds all sentences and nb counts how many
// belong to each article (the first is the description).
void import_wikibio(const std::filesystem::path& box_path,
                    const std::filesystem::path& sentence_path,
                    const std::optional<std::filesystem::path>& nb_path,
                    const std::filesystem::path& out_path, ParseStats* stats = nullptr);

struct SynthConfig {
  enum class Domain { kMixed, kSports, kArts };

  int name_pool = 70;        // size of the first/last name pools
  int name_offset = 0;       // shift into the infinite name sequence (fresh names for tests)
  int nationality_pool = 8;
  int occupation_pool = 8;
  int team_pool = 8;
  int artfield_pool = 8;
  int year_pool = 40;        // birth years 1940..1940+year_pool-1
  int min_occupations = 1;
  int max_occupations = 3;
  int distractor_fields = 0;  // extra fields never mentioned in descriptions
  int distractor_pool = 24;
  Domain domain = Domain::kMixed;
  bool shuffle_fields = true;
};

// Deterministic synthetic biographies: the description is a fixed template
// rendering of the infobox, so a correct model can reproduce it exactly.
std::vector<Example> synth_generate(std::uint64_t seed, int n, const SynthConfig& config);

enum class Split { kTrain, kValid, kTest };

// 80/10/10 assignment by a deterministic hash of the example index.
Split split_of(std::size_t index);

struct SplitSets {
  std::vector<Example> train, valid, test;
};
SplitSets split_examples(std::span<const Example> examples);

}  // namespace t2t
