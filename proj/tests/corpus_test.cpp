#include <filesystem>

#include "doctest.h"
#include "nlnde/corpus.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/random.hpp"
#include "nlnde/text.hpp"
#include "support/synthetic.hpp"

using namespace nlnde;

namespace {

Sentence sentence_of(const std::string& line) {
  auto s = tokenize(Document{"d", line});
  REQUIRE(s.size() == 1);
  return s[0];
}

int B(EntityType t) { return LabelCatalog::begin_id(t); }
int I(EntityType t) { return LabelCatalog::inside_id(t); }

constexpr auto PRO = EntityType::kProteinas;
constexpr auto NOR = EntityType::kNormalizables;

}  // namespace

TEST_CASE("label catalog layout") {
  LabelCatalog c;
  CHECK(c.size() == 9);
  CHECK(c.label(0) == "O");
  CHECK(c.id("B-PROTEINAS") == 1);
  CHECK(c.id("I-PROTEINAS") == 2);
  CHECK(c.id("I-UNCLEAR") == 8);
  for (int id = 1; id < 9; id += 2) {
    CHECK(c.label(id).substr(2) == c.label(id + 1).substr(2));
    CHECK(LabelCatalog::is_begin(id));
    CHECK(LabelCatalog::is_inside(id + 1));
  }
  CHECK_THROWS_AS(c.id("B-DRUG"), DataError);
}

TEST_CASE("parse_ann maps fields and rejects bad lines") {
  const std::string text = "Se midió tiroglobulina en suero.";
  // "tiroglobulina" starts at code point 9 ("midió" has one 2-byte char).
  auto spans = parse_ann("T1\tPROTEINAS 9 22\ttiroglobulina\n#1\tAnnotatorNotes T1\tx\n", text);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].start == 9);
  CHECK(spans[0].end == 22);
  CHECK(spans[0].type == PRO);
  CHECK(spans[0].id == "T1");

  CHECK_THROWS_AS(parse_ann("T1\tPROTEINAS 22 9\ttiroglobulina", text), DataError);
  CHECK_THROWS_AS(parse_ann("T1\tPROTEINAS 9 99\ttiroglobulina", text), DataError);
  CHECK_THROWS_AS(parse_ann("T1\tENZYME 9 22\ttiroglobulina", text), DataError);
  CHECK_THROWS_AS(parse_ann("T1 PROTEINAS 9 22 tiroglobulina", text), DataError);
  try {
    parse_ann("T7\tPROTEINAS 9 22\ttiroglobulinA", text);
    FAIL("expected mismatch");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("T7") != std::string::npos);
  }
}

TEST_CASE("standoff round trip is byte-identical modulo line order") {
  const std::string text = "La glucosa y la insulina.\nOtra línea con TSH.";
  const std::string ann = "T2\tPROTEINAS 16 24\tinsulina\nT1\tNORMALIZABLES 3 10\tglucosa\nT3\tPROTEINAS 41 44\tTSH\n";
  auto spans = parse_ann(ann, text);
  const std::string again = format_ann(spans);
  auto lines = [](const std::string& s) {
    std::vector<std::string> v;
    std::size_t p = 0;
    while (p < s.size()) {
      auto e = s.find('\n', p);
      v.push_back(s.substr(p, e - p));
      p = e + 1;
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(lines(again) == lines(ann));
}

TEST_CASE("repair_merged_token splits underscores against the source") {
  const std::u32string src = text::decode("xxxxxxxxxxpT3 pN1 según lo descrito");
  auto pieces = repair_merged_token({"pT3_pN1", 10, 17, "NC"}, src);
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0] == Token{"pT3", 10, 13, "NC"});
  CHECK(pieces[1] == Token{"pN1", 14, 17, "NC"});

  auto three = repair_merged_token({"según_lo_descrito", 18, 35, std::nullopt}, src);
  REQUIRE(three.size() == 3);
  CHECK(three[0].surface == "según");
  CHECK(three[2].end == 35);

  Token plain{"alfa-1", 0, 6, std::nullopt};
  CHECK(repair_merged_token(plain, U"alfa-1") == std::vector<Token>{plain});
  // Underscore present in the source: not a merge.
  Token real{"a_b", 0, 3, std::nullopt};
  CHECK(repair_merged_token(real, U"a_b").size() == 1);
  CHECK_THROWS_AS(repair_merged_token({"ab_zz", 0, 5, std::nullopt}, U"ab cd"), DataError);
}

TEST_CASE("repair property: surfaces concatenate and offsets stay inside") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> words;
    const int n = 2 + static_cast<int>(uniform01(rng) * 4);
    std::string slice, merged;
    for (int i = 0; i < n; ++i) {
      std::string w;
      const int len = 1 + static_cast<int>(uniform01(rng) * 5);
      for (int k = 0; k < len; ++k) w += static_cast<char>('a' + static_cast<int>(uniform01(rng) * 26));
      slice += (i ? " " : "") + w;
      merged += (i ? "_" : "") + w;
      words.push_back(w);
    }
    const std::string src = "zz " + slice + " zz";
    Token t{merged, 3, 3 + slice.size(), std::nullopt};
    auto pieces = repair_merged_token(t, text::decode(src));
    std::string joined;
    for (const auto& p : pieces) {
      CHECK(p.start >= t.start);
      CHECK(p.end <= t.end);
      CHECK(src.substr(p.start, p.end - p.start) == p.surface);
      joined += p.surface;
    }
    std::string expect = merged;
    std::erase(expect, '_');
    CHECK(joined == expect);
  }
}

TEST_CASE("tokenize keeps inner punctuation and splits sentences by line") {
  auto s = tokenize(Document{"d", "Valores de 3,5 mg (CAM5.2).\n\nalfa-1 positivo"});
  REQUIRE(s.size() == 2);
  std::vector<std::string> surf;
  for (const auto& t : s[0].tokens) surf.push_back(t.surface);
  CHECK(surf == std::vector<std::string>{"Valores", "de", "3,5", "mg", "(", "CAM5.2", ")", "."});
  CHECK(s[1].tokens[0].surface == "alfa-1");
  CHECK(s[1].tokens[0].start == 29);
}

TEST_CASE("encode_bio examples") {
  Sentence s = sentence_of("el factor VIII humano");
  EntitySpan span{s.tokens[1].start, s.tokens[2].end, PRO, "factor VIII", ""};
  CHECK(encode_bio(s, {span}) == LabelSeq{0, B(PRO), I(PRO), 0});
  CHECK(encode_bio(s, {}) == LabelSeq{0, 0, 0, 0});
  EntitySpan other{s.tokens[2].start, s.tokens[3].end, NOR, "VIII humano", ""};
  CHECK_THROWS_AS(encode_bio(s, {span, other}), DataError);
  EntitySpan inside{s.tokens[1].start + 1, s.tokens[1].end, NOR, "actor", ""};
  CHECK_THROWS_AS(encode_bio(s, {inside}), DataError);
}

TEST_CASE("decode_bio examples") {
  Sentence s = sentence_of("uno dos tres");
  auto a = decode_bio({B(PRO), I(PRO), 0}, s);
  REQUIRE(a.size() == 1);
  CHECK(a[0].start == 0);
  CHECK(a[0].end == 7);
  CHECK(a[0].text == "uno dos");

  auto b = decode_bio({I(PRO), 0, 0}, s);
  REQUIRE(b.size() == 1);
  CHECK(b[0].type == PRO);
  CHECK(b[0].end == 3);

  auto c = decode_bio({B(PRO), I(NOR), 0}, s);
  REQUIRE(c.size() == 2);
  CHECK(c[0].type == PRO);
  CHECK(c[1].type == NOR);
  CHECK(c[1].start == 4);
}

TEST_CASE("label_documents drops misaligned spans") {
  StandoffDocument doc;
  doc.document = {"d", "la tiroglobulina sube\n"};
  doc.spans = {{3, 16, PRO, "tiroglobulina", "T1"}, {4, 16, NOR, "iroglobulina", "T2"}};
  auto ls = label_documents({doc});
  REQUIRE(ls.size() == 1);
  CHECK(ls[0].labels == LabelSeq{0, B(PRO), 0});
}

TEST_CASE("corpus TSV round trip") {
  synth::World world = synth::make_world();
  auto corpus = synth::generate_corpus(world, {.sentences = 30}, 5);
  corpus[0].sentence.tokens[0].pos = "DA";
  LabelCatalog catalog;
  const std::string tsv = format_corpus_tsv(corpus, catalog);
  auto back = parse_corpus_tsv(tsv, catalog);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(back[i].sentence.doc_id == corpus[i].sentence.doc_id);
    CHECK(back[i].sentence.tokens == corpus[i].sentence.tokens);
    CHECK(back[i].labels == corpus[i].labels);
  }
  CHECK(format_corpus_tsv(back, catalog) == tsv);
  CHECK_THROWS_AS(parse_corpus_tsv("a\t0\t1\t_\tB-X\n", catalog), DataError);
}

TEST_CASE("standoff directory loading pairs .txt with .ann") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "nlnde_corpus_test";
  fs::remove_all(dir);
  write_file(dir / "a.txt", "la TSH\n");
  write_file(dir / "a.ann", "T1\tPROTEINAS 3 6\tTSH\n");
  write_file(dir / "b.txt", "nada\n");
  auto docs = load_standoff_dir(dir);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].document.id == "a");
  CHECK(docs[0].spans.size() == 1);
  CHECK(docs[1].spans.empty());
  fs::remove_all(dir);
}

// Property: round trip over random valid span sets, totality over random labels.
TEST_CASE("BIO round trip and decode totality") {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::string line;
    const int n = 1 + static_cast<int>(uniform01(rng) * 12);
    for (int i = 0; i < n; ++i) line += (i ? " " : "") + std::string(1 + static_cast<int>(uniform01(rng) * 4), 'w');
    Sentence s = sentence_of(line);
    std::vector<EntitySpan> spans;
    std::size_t i = 0;
    while (i < s.size()) {
      if (uniform01(rng) < 0.3) {
        const std::size_t len = 1 + static_cast<std::size_t>(uniform01(rng) * 3);
        const std::size_t last = std::min(s.size() - 1, i + len - 1);
        const auto type = kEntityTypes[static_cast<std::size_t>(uniform01(rng) * 4)];
        spans.push_back({s.tokens[i].start, s.tokens[last].end, type, "", ""});
        i = last + 1;
      } else {
        ++i;
      }
    }
    auto back = decode_bio(encode_bio(s, spans), s);
    REQUIRE(back.size() == spans.size());
    for (std::size_t k = 0; k < spans.size(); ++k) CHECK(back[k].same_entity(spans[k]));

    LabelSeq random(s.size());
    for (auto& l : random) l = static_cast<int>(uniform01(rng) * 9);
    std::vector<EntitySpan> decoded;
    CHECK_NOTHROW(decoded = decode_bio(random, s));
    for (std::size_t k = 0; k < decoded.size(); ++k) {
      CHECK(decoded[k].end > decoded[k].start);
      if (k) CHECK(decoded[k].start >= decoded[k - 1].end);
    }
  }
}
