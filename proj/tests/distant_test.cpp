#include <algorithm>
#include <cctype>
#include <filesystem>

#include "doctest.h"
#include "nlnde/distant.hpp"
#include "nlnde/errors.hpp"
#include "support/synthetic.hpp"

using namespace nlnde;

namespace {

Sentence sentence(const std::string& text) {
  auto s = tokenize({"d", text});
  REQUIRE(s.size() == 1);
  return s[0];
}

constexpr int O = 0;
const int BP = LabelCatalog::begin_id(EntityType::kProteinas);
const int IP = LabelCatalog::inside_id(EntityType::kProteinas);
const int BN = LabelCatalog::begin_id(EntityType::kNormalizables);
const int BU = LabelCatalog::begin_id(EntityType::kUnclear);
const int IU = LabelCatalog::inside_id(EntityType::kUnclear);
const int BX = LabelCatalog::begin_id(EntityType::kNoNormalizables);

bool valid_bio(const LabelSeq& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!LabelCatalog::is_inside(labels[i])) continue;
    if (i == 0 || labels[i - 1] == O) return false;
    if (LabelCatalog::type_of(labels[i - 1]) != LabelCatalog::type_of(labels[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("gazetteer TSV") {
  auto entries = parse_gazetteer_tsv("# comment\nPROTEINAS\ttiroglobulina\n\nNORMALIZABLES\tácido fólico\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].type == EntityType::kProteinas);
  CHECK(entries[1].surface == "ácido fólico");
  CHECK_THROWS_AS(parse_gazetteer_tsv("GENES\tfoo\n"), DataError);
  CHECK_THROWS_AS(parse_gazetteer_tsv("PROTEINAS foo\n"), DataError);
  CHECK(match_mode(EntityType::kProteinas) == MatchMode::kCaseInsensitive);
  for (auto t : {EntityType::kNormalizables, EntityType::kNoNormalizables, EntityType::kUnclear}) {
    CHECK(match_mode(t) == MatchMode::kStrict);
  }
}

TEST_CASE("casing rules") {
  Gazetteer g;
  g.add_surface(EntityType::kProteinas, "tiroglobulina");
  g.add_surface(EntityType::kNormalizables, "Glucosa");
  CHECK(annotate(sentence("la Tiroglobulina sube"), g) == LabelSeq{O, BP, O});
  CHECK(annotate(sentence("la TIROGLOBULINA sube"), g) == LabelSeq{O, BP, O});
  CHECK(annotate(sentence("la glucosa sube"), g) == LabelSeq{O, O, O});
  CHECK(annotate(sentence("la Glucosa sube"), g) == LabelSeq{O, BN, O});
  g.add(EntityType::kProteinas, {});
  CHECK(g.size(EntityType::kProteinas) == 1);
}

TEST_CASE("overlaps resolve to the longest match, then type priority") {
  Gazetteer g;
  g.add_surface(EntityType::kProteinas, "factor");
  g.add_surface(EntityType::kProteinas, "factor VIII");
  CHECK(annotate(sentence("el factor VIII baja"), g) == LabelSeq{O, BP, IP, O});
  CHECK(annotate(sentence("el factor baja"), g) == LabelSeq{O, BP, O});

  Gazetteer tie;
  tie.add_surface(EntityType::kUnclear, "suero");
  tie.add_surface(EntityType::kNormalizables, "suero");
  CHECK(annotate(sentence("en suero"), tie) == LabelSeq{O, BN});

  // A shorter match of a stronger type loses to a longer one.
  Gazetteer longer;
  longer.add_surface(EntityType::kProteinas, "alfa");
  longer.add_surface(EntityType::kUnclear, "alfa beta");
  CHECK(annotate(sentence("la alfa beta"), longer) == LabelSeq{O, BU, IU});

  // Equal length and type overlapping: leftmost wins.
  Gazetteer left;
  left.add_surface(EntityType::kUnclear, "a b");
  left.add_surface(EntityType::kUnclear, "b c");
  CHECK(annotate(sentence("a b c"), left) == LabelSeq{BU, IU, O});

  // No matches inside words.
  CHECK(annotate(sentence("refactor VIIIa"), g) == LabelSeq{O, O});
}

TEST_CASE("build_gazetteer keeps repeated mentions only") {
  // Mentions: X1 once, X2 twice (UNCLEAR); Y3 three times (NO_NORMALIZABLES).
  const std::string text = "vimos X1 ayer\nvimos X2 hoy\nvimos X2 ayer\nvimos Y3 hoy\nY3 y Y3\n";
  StandoffDocument doc{{"a", text}, {}};
  for (std::size_t at = 0; (at = text.find('X', at)) != std::string::npos; ++at) {
    doc.spans.push_back({at, at + 2, EntityType::kUnclear, text.substr(at, 2), ""});
  }
  for (std::size_t at = 0; (at = text.find('Y', at)) != std::string::npos; ++at) {
    doc.spans.push_back({at, at + 2, EntityType::kNoNormalizables, text.substr(at, 2), ""});
  }
  std::vector<StandoffDocument> docs = {doc};
  auto train = label_documents(docs);
  auto g = build_gazetteer({{EntityType::kProteinas, "tiroglobulina"}, {EntityType::kUnclear, "Z9"}}, train);
  CHECK(g.contains(EntityType::kUnclear, {"X2"}));
  CHECK_FALSE(g.contains(EntityType::kUnclear, {"X1"}));
  CHECK(g.contains(EntityType::kUnclear, {"Z9"}));
  CHECK(g.contains(EntityType::kNoNormalizables, {"Y3"}));
  CHECK(g.contains(EntityType::kProteinas, {"TiroGlobulina"}));
  CHECK_FALSE(g.contains(EntityType::kNormalizables, {"X2"}));
}

TEST_CASE("planted entities are recalled under the casing rules") {
  const auto world = synth::make_world();
  synth::CorpusOptions opts;
  opts.sentences = 500;
  opts.vary_protein_case = true;
  const auto corpus = synth::generate_corpus(world, opts, 11);
  Gazetteer g;
  for (const auto& e : world.gazetteer()) g.add_surface(e.type, e.surface);
  std::size_t gold = 0, found = 0;
  for (const auto& s : corpus) {
    const auto noisy = annotate(s.sentence, g);
    CHECK(valid_bio(noisy));
    for (const auto& span : decode_bio(s.labels, s.sentence)) {
      ++gold;
      for (const auto& p : decode_bio(noisy, s.sentence)) found += p.same_entity(span) ? 1 : 0;
    }
  }
  CHECK(gold > 400);
  CHECK(found == gold);
}

TEST_CASE("annotated spans are gazetteer entries") {
  const auto world = synth::make_world(3);
  Gazetteer g;
  for (const auto& e : world.gazetteer()) g.add_surface(e.type, e.surface);
  for (const auto& s : synth::generate_corpus(world, {.sentences = 100}, 5)) {
    const auto labels = annotate(s.sentence, g);
    for (std::size_t i = 0; i < labels.size();) {
      if (labels[i] == O) {
        ++i;
        continue;
      }
      std::vector<std::string> toks = {s.sentence.tokens[i].surface};
      std::size_t j = i + 1;
      while (j < labels.size() && labels[j] == labels[i] + 1) toks.push_back(s.sentence.tokens[j++].surface);
      CHECK(g.contains(LabelCatalog::type_of(labels[i]), toks));
      i = j;
    }
  }
}

TEST_CASE("confusion counts by hand") {
  // clean [O, O, B-X], noisy [O, B-X, B-X]
  auto c = estimate_confusion({{O, O, BX}}, {{O, BX, BX}}, 9);
  CHECK(c.count(O, O) == 1);
  CHECK(c.count(O, BX) == 1);
  CHECK(c.count(BX, BX) == 1);
  CHECK(c.row_total(O) == 2);
  CHECK(c.row_total(BP) == 0);

  // Ten tokens over three sentences.
  const std::vector<LabelSeq> clean = {{O, BP, IP, O}, {BN, O, O}, {BU, IU, O}};
  const std::vector<LabelSeq> noisy = {{O, BP, O, O}, {BN, O, BP}, {O, O, O}};
  auto ten = estimate_confusion(clean, noisy, 9);
  CHECK(ten.count(O, O) == 4);
  CHECK(ten.count(O, BP) == 1);
  CHECK(ten.count(BP, BP) == 1);
  CHECK(ten.count(IP, O) == 1);
  CHECK(ten.count(BN, BN) == 1);
  CHECK(ten.count(BU, O) == 1);
  CHECK(ten.count(IU, O) == 1);
  std::uint64_t total = 0;
  for (int i = 0; i < 9; ++i) total += ten.row_total(i);
  CHECK(total == 10);

  const auto p = ten.probabilities();
  for (int i = 0; i < 9; ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-9);
  CHECK(std::abs(p(O, O) - (4 + 1e-6) / (5 + 9e-6)) < 1e-15);
  // Unseen clean label: uniform.
  for (int j = 0; j < 9; ++j) CHECK(std::abs(p(BX, j) - 1.0 / 9.0) < 1e-12);

  auto same = estimate_confusion(clean, clean, 9).probabilities();
  for (int i : {O, BP, IP, BN, BU, IU}) CHECK(same(i, i) > 1.0 - 1e-5);

  CHECK_THROWS_AS(estimate_confusion({{O, O}}, {{O}}, 9), DataError);
  CHECK_THROWS_AS(estimate_confusion({{O}}, {}, 9), DataError);

  LabelCatalog catalog;
  CHECK(ConfusionMatrix::from_tsv(ten.to_tsv(catalog), catalog) == ten);
}

TEST_CASE("noise schedule") {
  NoiseSchedule s{1000};
  CHECK(schedule_size(0, s) == 1000);
  CHECK(schedule_size(1, s) == 950);
  CHECK(schedule_size(2, s) == 902);
  std::size_t prev = 1000;
  for (std::size_t e = 1; e < 80; ++e) {
    const auto size = schedule_size(e, s);
    CHECK(size == std::max<std::size_t>(100, static_cast<std::size_t>(std::floor(prev * 0.95))));
    CHECK(size <= prev);
    prev = size;
  }
  CHECK(prev == 100);
  for (std::size_t e = 0; e < 10; ++e) {
    CHECK(schedule_size(e, {100}) == 100);
    CHECK(schedule_size(e, {40}) == 40);
  }
}

TEST_CASE("noisy sampling") {
  auto a = sample_noisy(1000, 1000, 13, 0);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 1000; ++i) CHECK(sorted[i] == i);
  CHECK(sample_noisy(1000, 1000, 13, 0) == a);
  CHECK(sample_noisy(1000, 1000, 13, 1) != a);
  CHECK(sample_noisy(1000, 1000, 14, 0) != a);

  auto part = sample_noisy(1000, 300, 13, 4);
  CHECK(part.size() == 300);
  std::sort(part.begin(), part.end());
  CHECK(std::adjacent_find(part.begin(), part.end()) == part.end());
  CHECK(sample_noisy(10, 50, 1, 0).size() == 10);

  // Rough uniformity: each index lands in a 10% sample about 10% of the time.
  std::vector<int> hits(50, 0);
  for (std::size_t e = 0; e < 2000; ++e) {
    for (auto i : sample_noisy(50, 5, 99, e)) ++hits[i];
  }
  for (int h : hits) CHECK(std::abs(h - 200) < 60);
}

TEST_CASE("raw sentence input") {
  const auto dir = std::filesystem::temp_directory_path() / "nlnde_distant_raw";
  std::filesystem::create_directories(dir);
  write_file(dir / "raw.txt", "la TSH sube\n\nen suero .\n");
  auto s = load_raw_sentences(dir / "raw.txt");
  REQUIRE(s.size() == 2);
  CHECK(s[1].tokens.size() == 3);
  LabelCatalog catalog;
  write_corpus_tsv(dir / "c.tsv", synth::generate_corpus(synth::make_world(), {.sentences = 4}, 1), catalog);
  CHECK(load_raw_sentences(dir / "c.tsv").size() == 4);
  std::filesystem::remove_all(dir);
}
