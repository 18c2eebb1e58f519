#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "t2t/data.hpp"

using namespace t2t;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content) : path(name) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("round trip: parse(serialize(example)) == example") {
  SynthConfig cfg;
  cfg.distractor_fields = 2;
  auto examples = synth_generate(123, 50, cfg);
  for (const Example& e : examples) {
    std::string error;
    auto back = parse_example_line(serialize_example(e), &error);
    REQUIRE(back.has_value());
    CHECK(*back == e);
  }
}

TEST_CASE("parse handles the documented malformed cases") {
  std::string error;

  SUBCASE("one valid line") {
    auto e = parse_example_line("name|john doe\t###\tjohn doe is here", &error);
    REQUIRE(e.has_value());
    CHECK(e->infobox.fields.size() == 1);
    CHECK(e->infobox.fields[0].name == "name");
    CHECK(e->infobox.fields[0].values == std::vector<std::string>{"john", "doe"});
    CHECK(e->description.size() == 4);
    CHECK(e->domain.empty());
  }
  SUBCASE("tokens are lowercased") {
    auto e = parse_example_line("Name|John\t###\tJohn IS Here", &error);
    REQUIRE(e.has_value());
    CHECK(e->infobox.fields[0].name == "name");
    CHECK(e->description[1] == "is");
  }
  SUBCASE("missing description") {
    CHECK_FALSE(parse_example_line("name|john\t###\t", &error).has_value());
    CHECK_FALSE(parse_example_line("name|john", &error).has_value());
  }
  SUBCASE("empty-valued field is dropped, example survives") {
    auto e = parse_example_line("name|john\timage|\t###\tjohn", &error);
    REQUIRE(e.has_value());
    CHECK(e->infobox.fields.size() == 1);
  }
  SUBCASE("domain label rides on an extra record") {
    auto e = parse_example_line("name|john\t###\tjohn\t##domain=Sports", &error);
    REQUIRE(e.has_value());
    CHECK(e->domain == "sports");
  }
}

TEST_CASE("load_examples: empty file raises, skipped lines are counted") {
  {
    TempFile f("data_empty.txt", "");
    CHECK_THROWS_AS(load_examples(f.path), DataError);
  }
  {
    TempFile f("data_mixed.txt",
               "name|john\t###\tjohn smith\n"
               "broken line without separator\n"
               "name|anna\t###\tanna lee\n");
    ParseStats stats;
    auto ex = load_examples(f.path, false, &stats);
    CHECK(ex.size() == 2);
    CHECK(stats.skipped == 1);
    REQUIRE(!stats.warnings.empty());
    CHECK(stats.warnings[0].find(":2:") != std::string::npos);

    CHECK_THROWS_AS(load_examples(f.path, true), DataError);
  }
}

TEST_CASE("wikibio import reconstructs ordered fields") {
  TempFile box("wb.box",
               "name_1:John name_2:Doe birth_date_1:<none> occupation_1:actor "
               "occupation_2:director\n");
  TempFile sent("wb.sent", "John Doe is an actor .\n");
  const std::string out_path = "wb_out.txt";

  import_wikibio(box.path, sent.path, std::nullopt, out_path);
  auto ex = load_examples(out_path);
  std::remove(out_path.c_str());

  REQUIRE(ex.size() == 1);
  REQUIRE(ex[0].infobox.fields.size() == 2);  // birth_date dropped: only <none>
  CHECK(ex[0].infobox.fields[0].name == "name");
  CHECK(ex[0].infobox.fields[0].values == std::vector<std::string>{"john", "doe"});
  CHECK(ex[0].infobox.fields[1].name == "occupation");
  CHECK(ex[0].infobox.fields[1].values == std::vector<std::string>{"actor", "director"});
  CHECK(ex[0].description[0] == "john");
}

TEST_CASE("wikibio import: index gaps keep sorted order with a warning") {
  TempFile box("wb2.box", "name_1:ada name_3:lovelace\n");
  TempFile sent("wb2.sent", "ada lovelace\n");
  const std::string out_path = "wb2_out.txt";
  ParseStats stats;
  import_wikibio(box.path, sent.path, std::nullopt, out_path, &stats);
  auto ex = load_examples(out_path);
  std::remove(out_path.c_str());

  CHECK(ex[0].infobox.fields[0].values == std::vector<std::string>{"ada", "lovelace"});
  bool warned = false;
  for (const auto& w : stats.warnings) warned = warned || w.find("index gaps") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("wikibio import: misaligned files abort") {
  TempFile box("wb3.box", "name_1:a\nname_1:b\n");
  TempFile sent("wb3.sent", "a\n");
  CHECK_THROWS_AS(import_wikibio(box.path, sent.path, std::nullopt, "wb3_out.txt"), DataError);
  std::remove("wb3_out.txt");
}

TEST_CASE("wikibio import with nb file takes the first sentence per article") {
  TempFile box("wb4.box", "name_1:a\nname_1:b\n");
  TempFile sent("wb4.sent", "first about a\nsecond about a\nfirst about b\n");
  TempFile nb("wb4.nb", "2\n1\n");
  const std::string out_path = "wb4_out.txt";
  import_wikibio(box.path, sent.path, std::optional<std::filesystem::path>{nb.path}, out_path);
  auto ex = load_examples(out_path);
  std::remove(out_path.c_str());
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].description == std::vector<std::string>{"first", "about", "a"});
  CHECK(ex[1].description == std::vector<std::string>{"first", "about", "b"});
}

TEST_CASE("wikibio import: crafted fixture reproduces hand-built records") {
  TempFile box("wb5.box",
               "name_1:maria name_2:gonzalez nationality_1:spanish occupation_1:chemist\n"
               "name_1:li name_2:wei team_1:dynamo team_2:reserves caps_1:12\n"
               "name_1:olga fields_1:particle fields_2:physics\n"
               "name_1:sam image_1:<none> role_1:editor\n"
               "name_1:kay genre_1:jazz genre_2:folk awards_1:grammy\n");
  TempFile sent("wb5.sent",
                "maria gonzalez is a spanish chemist .\n"
                "li wei plays for dynamo reserves .\n"
                "olga studies particle physics .\n"
                "sam is an editor .\n"
                "kay plays jazz and folk .\n");
  const std::string out_path = "wb5_out.txt";
  import_wikibio(box.path, sent.path, std::nullopt, out_path);
  auto ex = load_examples(out_path);
  std::remove(out_path.c_str());

  REQUIRE(ex.size() == 5);
  std::vector<Example> want(5);
  want[0].infobox.fields = {{"name", {"maria", "gonzalez"}},
                            {"nationality", {"spanish"}},
                            {"occupation", {"chemist"}}};
  want[0].description = {"maria", "gonzalez", "is", "a", "spanish", "chemist", "."};
  want[1].infobox.fields = {{"name", {"li", "wei"}},
                            {"team", {"dynamo", "reserves"}},
                            {"caps", {"12"}}};
  want[1].description = {"li", "wei", "plays", "for", "dynamo", "reserves", "."};
  want[2].infobox.fields = {{"name", {"olga"}}, {"fields", {"particle", "physics"}}};
  want[2].description = {"olga", "studies", "particle", "physics", "."};
  want[3].infobox.fields = {{"name", {"sam"}}, {"role", {"editor"}}};
  want[3].description = {"sam", "is", "an", "editor", "."};
  want[4].infobox.fields = {{"name", {"kay"}},
                            {"genre", {"jazz", "folk"}},
                            {"awards", {"grammy"}}};
  want[4].description = {"kay", "plays", "jazz", "and", "folk", "."};
  for (int i = 0; i < 5; ++i) CHECK(ex[static_cast<std::size_t>(i)] == want[static_cast<std::size_t>(i)]);
}

TEST_CASE("build_vocab keeps small corpora whole") {
  std::vector<Example> ex(1);
  ex[0].infobox.fields = {{"name", {"aa", "bb"}}};
  ex[0].description = {"aa", "cc"};
  Vocabulary v = build_vocab(ex, 10);
  CHECK(v.word_count() == 7);  // 4 specials + aa bb cc
  CHECK(v.word_id("aa") >= 4);
  CHECK(v.word_id("zz") == Vocabulary::kUnk);
  CHECK(v.field_id("name") == 1);
  CHECK(v.field_id("other") == Vocabulary::kUnkField);
  CHECK_THROWS_AS(build_vocab(ex, 3), Error);
}

TEST_CASE("vocab truncation breaks frequency ties lexicographically") {
  std::vector<Example> ex(1);
  ex[0].infobox.fields = {{"f", {"zebra", "apple", "mango"}}};
  ex[0].description = {"zebra"};
  // counts: zebra 2, apple 1, mango 1; top_k 6 keeps 2 words
  Vocabulary v = build_vocab(ex, 6);
  CHECK(v.word_count() == 6);
  CHECK(v.word_id("zebra") == 4);
  CHECK(v.word_id("apple") == 5);
  CHECK(v.word_id("mango") == Vocabulary::kUnk);
}

TEST_CASE("vocab frequencies match an independent word count") {
  SynthConfig cfg;
  auto examples = synth_generate(9, 10, cfg);

  std::map<std::string, long> oracle;
  for (const Example& e : examples) {
    for (const Field& f : e.infobox.fields) {
      for (const auto& v : f.values) ++oracle[v];
    }
    for (const auto& t : e.description) ++oracle[t];
  }

  Vocabulary v = build_vocab(examples, 100000);
  CHECK(v.word_freq.size() == oracle.size());
  for (const auto& [token, count] : v.word_freq) {
    CHECK(oracle.at(token) == count);
  }
}

TEST_CASE("vocabulary ids are stable across runs") {
  auto examples = synth_generate(4, 30, SynthConfig{});
  Vocabulary a = build_vocab(examples, 50);
  Vocabulary b = build_vocab(examples, 50);
  CHECK(a.words == b.words);
  CHECK(a.field_names == b.field_names);
}

TEST_CASE("synth generation is deterministic byte for byte") {
  SynthConfig cfg;
  cfg.distractor_fields = 3;
  auto a = synth_generate(7, 200, cfg);
  auto b = synth_generate(7, 200, cfg);
  REQUIRE(a.size() == b.size());
  save_examples(a, "synth_a.txt");
  save_examples(b, "synth_b.txt");
  CHECK(read_file("synth_a.txt") == read_file("synth_b.txt"));
  std::remove("synth_a.txt");
  std::remove("synth_b.txt");

  auto c = synth_generate(8, 200, cfg);
  CHECK(!(a == c));
}

TEST_CASE("synth descriptions follow the template contract") {
  SynthConfig cfg;
  cfg.min_occupations = 2;
  cfg.max_occupations = 3;
  cfg.distractor_fields = 3;
  auto examples = synth_generate(11, 100, cfg);

  for (const Example& e : examples) {
    const Field* occ = nullptr;
    const Field* name = nullptr;
    std::vector<std::string> distractor_tokens;
    for (const Field& f : e.infobox.fields) {
      if (f.name == "occupation") occ = &f;
      if (f.name == "name") name = &f;
      bool content = f.name == "name" || f.name == "birth_date" || f.name == "nationality" ||
                     f.name == "occupation" || f.name == "team" || f.name == "known_for";
      if (!content) {
        distractor_tokens.insert(distractor_tokens.end(), f.values.begin(), f.values.end());
      }
    }
    REQUIRE(occ != nullptr);
    REQUIRE(name != nullptr);

    // occupations are listed in field order
    std::vector<std::size_t> positions;
    for (const std::string& o : occ->values) {
      auto it = std::find(e.description.begin(), e.description.end(), o);
      REQUIRE(it != e.description.end());
      positions.push_back(static_cast<std::size_t>(it - e.description.begin()));
    }
    CHECK(std::is_sorted(positions.begin(), positions.end()));

    // the description opens with the name
    CHECK(e.description[0] == name->values[0]);
    CHECK(e.description[1] == name->values[1]);

    // distractor values never leak into descriptions
    for (const std::string& t : distractor_tokens) {
      CHECK(std::find(e.description.begin(), e.description.end(), t) == e.description.end());
    }
  }
}

TEST_CASE("fresh-name pools are disjoint from the default pool") {
  SynthConfig base;
  SynthConfig fresh = base;
  fresh.name_offset = 1000;
  auto a = synth_generate(3, 50, base);
  auto b = synth_generate(3, 50, fresh);

  auto names_of = [](const std::vector<Example>& ex) {
    std::vector<std::string> out;
    for (const Example& e : ex) {
      for (const Field& f : e.infobox.fields) {
        if (f.name == "name") out.insert(out.end(), f.values.begin(), f.values.end());
      }
    }
    return out;
  };
  auto na = names_of(a);
  for (const std::string& fresh_name : names_of(b)) {
    CHECK(std::find(na.begin(), na.end(), fresh_name) == na.end());
  }
}

TEST_CASE("hash split lands near 80/10/10 and is deterministic") {
  int train = 0, valid = 0, test = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    switch (split_of(i)) {
      case Split::kTrain: ++train; break;
      case Split::kValid: ++valid; break;
      case Split::kTest: ++test; break;
    }
    CHECK(split_of(i) == split_of(i));
  }
  CHECK(train > 7500);
  CHECK(valid > 700);
  CHECK(test > 700);
}
