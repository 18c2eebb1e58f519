#include "t2t/data.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <sstream>

namespace t2t {

namespace {

std::string lowercased(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find('\t', start);
    if (at == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

int Infobox::total_values() const {
  int n = 0;
  for (const Field& f : fields) n += static_cast<int>(f.values.size());
  return n;
}

int Vocabulary::word_id(const std::string& token) const {
  auto it = word_to_id.find(token);
  return it == word_to_id.end() ? kUnk : it->second;
}

int Vocabulary::field_id(const std::string& name) const {
  auto it = field_to_id.find(name);
  return it == field_to_id.end() ? kUnkField : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= word_count()) throw Error("vocabulary: word id out of range");
  return words[static_cast<std::size_t>(id)];
}

const std::string& Vocabulary::field(int id) const {
  if (id < 0 || id >= field_count()) throw Error("vocabulary: field id out of range");
  return field_names[static_cast<std::size_t>(id)];
}

Vocabulary build_vocab(std::span<const Example> examples, int top_k) {
  if (top_k < 4) throw Error("build_vocab: top_k must be at least 4");

  std::map<std::string, std::int64_t> word_counts;
  std::map<std::string, std::int64_t> field_counts;
  for (const Example& e : examples) {
    for (const Field& f : e.infobox.fields) {
      ++field_counts[f.name];
      for (const std::string& v : f.values) ++word_counts[v];
    }
    for (const std::string& t : e.description) ++word_counts[t];
  }

  Vocabulary vocab;
  vocab.word_freq.assign(word_counts.begin(), word_counts.end());
  std::sort(vocab.word_freq.begin(), vocab.word_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  vocab.words = {"<pad>", "<unk>", "<bos>", "<eos>"};
  const int keep = top_k - 4;
  for (int i = 0; i < keep && i < static_cast<int>(vocab.word_freq.size()); ++i) {
    vocab.words.push_back(vocab.word_freq[static_cast<std::size_t>(i)].first);
  }
  for (int i = 0; i < vocab.word_count(); ++i) {
    vocab.word_to_id[vocab.words[static_cast<std::size_t>(i)]] = i;
  }

  std::vector<std::pair<std::string, std::int64_t>> fields(field_counts.begin(),
                                                           field_counts.end());
  std::sort(fields.begin(), fields.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  vocab.field_names = {"<unk_field>"};
  for (const auto& [name, count] : fields) vocab.field_names.push_back(name);
  for (int i = 0; i < vocab.field_count(); ++i) {
    vocab.field_to_id[vocab.field_names[static_cast<std::size_t>(i)]] = i;
  }
  return vocab;
}

void ParseStats::warn(std::string msg) {
  // cap stored warnings; counters carry the totals
  if (warnings.size() < 50) warnings.push_back(std::move(msg));
}

std::string serialize_example(const Example& e) {
  std::ostringstream out;
  for (const Field& f : e.infobox.fields) {
    if (f.name.empty() || f.name == "###" || f.name.find('|') != std::string::npos ||
        f.name.find('\t') != std::string::npos) {
      throw DataError("serialize: invalid field name '" + f.name + "'");
    }
    out << f.name << '|';
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (f.values[i].find('\t') != std::string::npos) {
        throw DataError("serialize: tab inside a value token");
      }
      if (i) out << ' ';
      out << f.values[i];
    }
    out << '\t';
  }
  out << "###\t";
  for (std::size_t i = 0; i < e.description.size(); ++i) {
    if (e.description[i].find('\t') != std::string::npos) {
      throw DataError("serialize: tab inside a description token");
    }
    if (i) out << ' ';
    out << e.description[i];
  }
  if (!e.domain.empty()) out << "\t##domain=" << e.domain;
  return out.str();
}

std::optional<Example> parse_example_line(const std::string& line, std::string* error) {
  auto fail = [&](const std::string& msg) -> std::optional<Example> {
    if (error) *error = msg;
    return std::nullopt;
  };

  const std::vector<std::string> parts = split_tabs(line);
  Example e;
  std::size_t i = 0;
  bool seen_sep = false;
  for (; i < parts.size(); ++i) {
    if (parts[i] == "###") {
      seen_sep = true;
      ++i;
      break;
    }
    const std::size_t bar = parts[i].find('|');
    if (bar == std::string::npos) return fail("field record without '|': '" + parts[i] + "'");
    Field f;
    f.name = lowercased(parts[i].substr(0, bar));
    if (f.name.empty()) return fail("empty field name");
    for (std::string& v : split_ws(parts[i].substr(bar + 1))) f.values.push_back(lowercased(v));
    if (f.values.empty()) {
      // fields with no values carry no attention targets; drop them
      if (error) *error = "dropped field '" + f.name + "' with no values";
      continue;
    }
    e.infobox.fields.push_back(std::move(f));
  }
  if (!seen_sep) return fail("missing '###' separator");
  if (i >= parts.size()) return fail("missing description");
  for (std::string& t : split_ws(parts[i])) e.description.push_back(lowercased(t));
  if (e.description.empty()) return fail("missing description");
  ++i;
  if (i < parts.size() && parts[i].rfind("##domain=", 0) == 0) {
    e.domain = lowercased(parts[i].substr(9));
    ++i;
  }
  if (i != parts.size()) return fail("trailing fields after description");
  if (e.infobox.fields.empty()) return fail("no fields with values");
  return e;
}

ExampleReader::ExampleReader(const std::filesystem::path& path, bool strict)
    : in_(path), path_(path), strict_(strict) {
  if (!in_) throw DataError("cannot read examples file: " + path.string());
}

std::optional<Example> ExampleReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++stats_.lines;
    if (line.empty()) continue;
    std::string error;
    std::optional<Example> e = parse_example_line(line, &error);
    if (!error.empty() && error.rfind("dropped field", 0) == 0) {
      ++stats_.dropped_fields;
      stats_.warn(path_.string() + ":" + std::to_string(stats_.lines) + ": " + error);
      error.clear();
    }
    if (e) {
      ++stats_.parsed;
      return e;
    }
    const std::string msg = path_.string() + ":" + std::to_string(stats_.lines) + ": " + error;
    if (strict_) throw DataError(msg);
    ++stats_.skipped;
    stats_.warn(msg);
  }
  return std::nullopt;
}

std::vector<Example> load_examples(const std::filesystem::path& path, bool strict,
                                   ParseStats* stats) {
  ExampleReader reader(path, strict);
  std::vector<Example> out;
  while (auto e = reader.next()) out.push_back(std::move(*e));
  if (stats) *stats = reader.stats();
  if (out.empty()) throw DataError("zero valid examples in " + path.string());
  return out;
}

void save_examples(std::span<const Example> examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw DataError("cannot write examples file: " + path.string());
  for (const Example& e : examples) out << serialize_example(e) << '\n';
}

void import_wikibio(const std::filesystem::path& box_path,
                    const std::filesystem::path& sentence_path,
                    const std::optional<std::filesystem::path>& nb_path,
                    const std::filesystem::path& out_path, ParseStats* stats) {
  std::ifstream box(box_path);
  if (!box) throw DataError("cannot read box file: " + box_path.string());
  std::ifstream sent(sentence_path);
  if (!sent) throw DataError("cannot read sentence file: " + sentence_path.string());

  std::vector<long> counts;
  if (nb_path) {
    std::ifstream nb(*nb_path);
    if (!nb) throw DataError("cannot read nb file: " + nb_path->string());
    long c;
    while (nb >> c) counts.push_back(c);
  }

  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + out_path.string());

  std::string box_line;
  std::size_t article = 0;
  while (std::getline(box, box_line)) {
    ++st.lines;

    // first sentence of this article
    std::string description;
    long skip_after = 0;
    if (nb_path) {
      if (article >= counts.size()) {
        throw DataError("misaligned wikibio files: more boxes than nb entries");
      }
      skip_after = counts[article] - 1;
    }
    if (!std::getline(sent, description)) {
      throw DataError("misaligned wikibio files: ran out of sentences at box " +
                      std::to_string(st.lines));
    }
    for (long k = 0; k < skip_after; ++k) {
      std::string dummy;
      if (!std::getline(sent, dummy)) {
        throw DataError("misaligned wikibio files: nb counts exceed sentence file");
      }
    }
    ++article;

    // group field_i:token entries by field, ordered by first appearance
    std::vector<std::pair<std::string, std::vector<std::pair<int, std::string>>>> grouped;
    for (const std::string& entry : split_ws(box_line)) {
      const std::size_t colon = entry.find(':');
      if (colon == std::string::npos || colon == 0) {
        st.warn(box_path.string() + ":" + std::to_string(st.lines) + ": bad entry '" + entry + "'");
        continue;
      }
      std::string key = lowercased(entry.substr(0, colon));
      std::string value = lowercased(entry.substr(colon + 1));
      if (value == "<none>" || value.empty()) continue;

      int index = 1;
      const std::size_t us = key.rfind('_');
      if (us != std::string::npos && us + 1 < key.size()) {
        const std::string suffix = key.substr(us + 1);
        if (std::all_of(suffix.begin(), suffix.end(),
                        [](unsigned char c) { return std::isdigit(c); })) {
          index = std::stoi(suffix);
          key = key.substr(0, us);
        }
      }
      std::replace(key.begin(), key.end(), '|', '_');

      auto it = std::find_if(grouped.begin(), grouped.end(),
                             [&](const auto& g) { return g.first == key; });
      if (it == grouped.end()) {
        grouped.push_back({key, {}});
        it = std::prev(grouped.end());
      }
      it->second.push_back({index, value});
    }

    Example e;
    for (auto& [name, entries] : grouped) {
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < entries.size(); ++k) {
        if (entries[k].first != static_cast<int>(k) + 1) {
          st.warn(box_path.string() + ":" + std::to_string(st.lines) + ": index gaps in field '" +
                  name + "', keeping sorted order");
          break;
        }
      }
      Field f;
      f.name = name;
      for (auto& [idx, v] : entries) f.values.push_back(std::move(v));
      e.infobox.fields.push_back(std::move(f));
    }

    for (std::string& t : split_ws(description)) e.description.push_back(lowercased(t));
    if (e.infobox.fields.empty() || e.description.empty()) {
      ++st.skipped;
      st.warn(box_path.string() + ":" + std::to_string(st.lines) + ": empty infobox or sentence");
      continue;
    }
    out << serialize_example(e) << '\n';
    ++st.parsed;
  }

  if (nb_path && article != counts.size()) {
    throw DataError("misaligned wikibio files: more nb entries than boxes");
  }
  if (!nb_path) {
    std::string extra;
    if (std::getline(sent, extra) && !extra.empty()) {
      throw DataError("misaligned wikibio files: more sentences than boxes");
    }
  }
  if (st.parsed == 0) throw DataError("zero valid examples imported from " + box_path.string());
}

namespace {

const char* kSyllablesFirst[20] = {"ba", "re", "mi", "to", "lan", "vi",  "su",  "kor", "del", "fa",
                                   "no", "pe", "ga", "ri", "mo",  "tas", "ul",  "ve",  "zan", "ki"};
const char* kSyllablesLast[20] = {"son", "mar", "tel", "gov", "lin", "dra", "pek",
                                  "hul", "vos", "rem", "bak", "cor", "dun", "fel",
                                  "gri", "hol", "jas", "kim", "lor", "nat"};
const char* kSyllablesDistract[20] = {"zu", "qo", "xi", "wa", "ce", "ny", "ja", "bo", "da", "lu",
                                      "fe", "gu", "hy", "ko", "me", "pu", "ru", "sy", "tu", "vy"};

std::string pseudo_word(const char* const* syllables, int index) {
  // three base-20 digits keep words unique up to 8000 per pool
  std::string out;
  int d0 = index / 400, rest = index % 400;
  out += syllables[d0 % 20];
  out += syllables[rest / 20];
  out += syllables[rest % 20];
  return out;
}

const std::vector<std::string> kNationalities = {
    "indian",  "french",   "german", "italian", "japanese", "brazilian", "canadian", "spanish",
    "russian", "austrian", "polish", "swedish", "dutch",    "greek",     "turkish",  "danish"};
const std::vector<std::string> kSportsOccupations = {
    "footballer", "cricketer", "swimmer", "sprinter", "boxer",    "cyclist",
    "rower",      "golfer",    "skier",   "wrestler", "fencer",   "archer"};
const std::vector<std::string> kArtsOccupations = {
    "actor",    "director", "producer", "writer", "painter",  "musician",
    "poet",     "sculptor", "composer", "novelist", "dancer", "photographer"};
const std::vector<std::string> kTeams = {"rovers", "united", "dynamo", "rangers",
                                         "wanderers", "athletic", "county", "city",
                                         "albion", "thistle", "harriers", "corinthians"};
const std::vector<std::string> kArtFields = {"realism", "cubism", "jazz",    "opera",
                                             "drama",   "satire", "folk",    "baroque",
                                             "ballet",  "fresco", "sonnet",  "mosaic"};
const std::vector<std::string> kMonths = {"january", "february", "march",     "april",
                                          "may",     "june",     "july",      "august",
                                          "september", "october", "november", "december"};
const std::vector<std::string> kDistractorNames = {"height", "weight", "rating", "code",
                                                   "index",  "grade",  "series", "batch"};

const std::string& pick(const std::vector<std::string>& pool, int limit, std::mt19937_64& rng) {
  const int n = std::min<int>(limit, static_cast<int>(pool.size()));
  std::uniform_int_distribution<int> d(0, n - 1);
  return pool[static_cast<std::size_t>(d(rng))];
}

}  // namespace

std::vector<Example> synth_generate(std::uint64_t seed, int n, const SynthConfig& config) {
  if (n < 1) throw Error("synth_generate: n must be >= 1");

  std::mt19937_64 rng(splitmix64(seed ^ 0x5eed5eedULL));
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(n));

  for (int idx = 0; idx < n; ++idx) {
    bool sports;
    switch (config.domain) {
      case SynthConfig::Domain::kSports: sports = true; break;
      case SynthConfig::Domain::kArts: sports = false; break;
      default: sports = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    }

    std::uniform_int_distribution<int> name_d(config.name_offset,
                                              config.name_offset + config.name_pool - 1);
    const std::string first = pseudo_word(kSyllablesFirst, name_d(rng));
    const std::string last = pseudo_word(kSyllablesLast, name_d(rng));

    const int day = std::uniform_int_distribution<int>(1, 28)(rng);
    const std::string& month = pick(kMonths, 12, rng);
    const int year = 1940 + std::uniform_int_distribution<int>(0, config.year_pool - 1)(rng);
    const std::string& nat = pick(kNationalities, config.nationality_pool, rng);

    const auto& occ_pool = sports ? kSportsOccupations : kArtsOccupations;
    std::uniform_int_distribution<int> occ_count_d(config.min_occupations, config.max_occupations);
    const int occ_count = occ_count_d(rng);
    std::vector<std::string> occs;
    while (static_cast<int>(occs.size()) < occ_count) {
      const std::string& o = pick(occ_pool, config.occupation_pool, rng);
      if (std::find(occs.begin(), occs.end(), o) == occs.end()) occs.push_back(o);
    }

    Example e;
    e.domain = sports ? "sports" : "arts";
    e.infobox.fields.push_back({"name", {first, last}});
    e.infobox.fields.push_back(
        {"birth_date", {std::to_string(day), month, std::to_string(year)}});
    e.infobox.fields.push_back({"nationality", {nat}});
    e.infobox.fields.push_back({"occupation", occs});
    std::string tail;
    if (sports) {
      tail = pick(kTeams, config.team_pool, rng);
      e.infobox.fields.push_back({"team", {tail}});
    } else {
      tail = pick(kArtFields, config.artfield_pool, rng);
      e.infobox.fields.push_back({"known_for", {tail}});
    }
    for (int d = 0; d < config.distractor_fields; ++d) {
      Field f;
      f.name = kDistractorNames[static_cast<std::size_t>(d) % kDistractorNames.size()];
      const int vals = std::uniform_int_distribution<int>(1, 2)(rng);
      std::uniform_int_distribution<int> tok_d(0, config.distractor_pool - 1);
      for (int v = 0; v < vals; ++v) {
        f.values.push_back(pseudo_word(kSyllablesDistract, tok_d(rng)));
      }
      e.infobox.fields.push_back(std::move(f));
    }
    if (config.shuffle_fields) {
      std::shuffle(e.infobox.fields.begin(), e.infobox.fields.end(), rng);
    }

    // fixed template: the description is a deterministic function of the infobox
    auto& d = e.description;
    d = {first, last, "(", "born", std::to_string(day), month, std::to_string(year), ")",
         "is", "a", nat};
    for (std::size_t k = 0; k < occs.size(); ++k) {
      if (k > 0) {
        if (k + 1 == occs.size()) {
          d.push_back("and");
        } else {
          d.push_back(",");
        }
      }
      d.push_back(occs[k]);
    }
    if (sports) {
      d.insert(d.end(), {"who", "plays", "for", tail});
    } else {
      d.insert(d.end(), {"known", "for", tail});
    }
    d.push_back(".");

    out.push_back(std::move(e));
  }
  return out;
}

Split split_of(std::size_t index) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(index) ^ 0xb10b5ULL);
  const int bucket = static_cast<int>(h % 10);
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValid : Split::kTest;
}

SplitSets split_examples(std::span<const Example> examples) {
  SplitSets s;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    switch (split_of(i)) {
      case Split::kTrain: s.train.push_back(examples[i]); break;
      case Split::kValid: s.valid.push_back(examples[i]); break;
      case Split::kTest: s.test.push_back(examples[i]); break;
    }
  }
  return s;
}

}  // namespace t2t
