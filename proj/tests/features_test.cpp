#include "doctest.h"
#include "nlnde/errors.hpp"
#include "nlnde/features.hpp"
#include "nlnde/random.hpp"
#include "nlnde/text.hpp"

using namespace nlnde;

namespace {

// Table where `word` has the given share of `total` tokens.
FrequencyTable table_with(const std::string& word, std::uint64_t count, std::uint64_t total) {
  FrequencyTable t;
  t.add(word, count);
  t.add("<rest>", total - count);
  return t;
}

}  // namespace

TEST_CASE("shape classes") {
  CHECK(shape_class("TSH") == Shape::kUpper);
  CHECK(shape_class("glucosa") == Shape::kLower);
  CHECK(shape_class("Glucosa") == Shape::kCapitalized);
  CHECK(shape_class("2019") == Shape::kNumeric);
  CHECK(shape_class("3,5") == Shape::kMostlyNumeric);
  CHECK(shape_class("(") == Shape::kPunct);
  CHECK(shape_class("%).") == Shape::kPunct);
  CHECK(shape_class("(a)") == Shape::kMostlyPunct);
  CHECK(shape_class("pH") == Shape::kLetters);
  CHECK(shape_class("pT3") == Shape::kAlnum);
  CHECK(shape_class("CAM5.2") == Shape::kOther);
  CHECK(shape_class("Ácido") == Shape::kCapitalized);
  CHECK(shape_class("ÑANDÚ") == Shape::kUpper);
  CHECK_THROWS_AS(shape_class(""), DataError);
}

TEST_CASE("shape predicates are exhaustive on random strings") {
  const std::u32string alphabet = U"abcXYZñÁ0123.,-()%µ°_ ";
  Rng rng = make_rng(21);
  for (int i = 0; i < 5000; ++i) {
    std::u32string w;
    const int n = 1 + static_cast<int>(uniform01(rng) * 8);
    for (int k = 0; k < n; ++k) w += alphabet[static_cast<std::size_t>(uniform01(rng) * alphabet.size())];
    const int s = static_cast<int>(shape_class(text::encode(w)));
    CHECK(s >= 0);
    CHECK(s < kNumShapes);
  }
}

TEST_CASE("length bins") {
  CHECK(length_bin("a") == 0);
  CHECK(length_bin("de") == 1);
  CHECK(length_bin("inmunohistoquímica") == 9);
  CHECK(length_bin("123456789") == 8);
  CHECK(length_bin("1234567890") == 9);
  CHECK_THROWS_AS(length_bin(""), DataError);
}

TEST_CASE("frequency bins") {
  CHECK(frequency_bin("w", table_with("w", 2, 100)) == 0);      // 2%
  CHECK(frequency_bin("w", table_with("w", 3, 1000)) == 2);     // 0.3%
  CHECK(frequency_bin("w", table_with("w", 1, 100)) == 1);      // exactly 1% is not above 1%
  CHECK(frequency_bin("unseen", table_with("w", 3, 1000)) == 9);
  CHECK(frequency_bin("w", table_with("w", 1, 10000000)) == 9); // 0.00001%
  CHECK(frequency_bin("w", table_with("w", 2, 1000000)) == 8);  // 0.0002%
}

TEST_CASE("frequency bins are monotone in relative frequency") {
  const std::uint64_t total = 10000000;
  int last = 0;
  for (std::uint64_t count = total; count >= 1; count /= 3) {
    const int bin = frequency_bin("w", table_with("w", count, total));
    CHECK(bin >= last);
    last = bin;
  }
}

TEST_CASE("frequency table TSV round trip") {
  FrequencyTable t;
  t.add("de", 3);
  t.add("glucosa");
  const std::string tsv = t.to_tsv();
  CHECK(tsv == "#total\t4\nde\t3\nglucosa\t1\n");
  auto back = FrequencyTable::from_tsv(tsv);
  CHECK(back.total() == 4);
  CHECK(back.count("de") == 3);
  CHECK_THROWS_AS(FrequencyTable::from_tsv("#total\t5\nde\t3\n"), DataError);
}

TEST_CASE("featurize composes the features") {
  Vocabulary pos;
  const int sp = pos.add("SP");
  auto table = table_with("de", 3, 100);
  auto f = featurize({"de", 0, 2, "SP"}, table, pos);
  CHECK(f == WordFeatures{sp, 1, 0, static_cast<int>(Shape::kLower)});
  CHECK(featurize({"de", 0, 2, std::nullopt}, table, pos).pos_id == Vocabulary::kUnk);
  CHECK(featurize({"de", 0, 2, "VMI"}, table, pos).pos_id == Vocabulary::kUnk);
  auto cam = featurize({"CAM5.2", 0, 6, std::nullopt}, table, pos);
  CHECK(cam.shape_class == static_cast<int>(Shape::kOther));
  CHECK(cam.length_bin == 5);
}

TEST_CASE("vocabulary text round trip keeps ids") {
  Vocabulary v;
  v.add("NC");
  v.add("SP");
  auto back = Vocabulary::from_text(v.to_text());
  CHECK(back.items() == v.items());
  CHECK(back.id("SP") == 2);
  CHECK(back.id("??") == Vocabulary::kUnk);
}

TEST_CASE("heuristic tagger") {
  CHECK(heuristic_pos("de") == "SP");
  CHECK(heuristic_pos("La") == "DA");
  CHECK(heuristic_pos("TSH") == "NP");
  CHECK(heuristic_pos("3,5") == "Z");
  CHECK(heuristic_pos(".") == "F");
  CHECK(heuristic_pos("rápidamente") == "RG");
  CHECK(heuristic_pos("tiroglobulina") == "NC");
  CHECK(heuristic_pos("realizado") == "VMP");
}
