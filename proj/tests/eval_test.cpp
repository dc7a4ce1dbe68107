#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "nlnde/errors.hpp"
#include "nlnde/eval.hpp"
#include "nlnde/random.hpp"

using namespace nlnde;

namespace {

EntitySpan span(std::size_t s, std::size_t e, EntityType t = EntityType::kProteinas) { return {s, e, t, "", ""}; }

const auto P = EntityType::kProteinas;
const auto N = EntityType::kNormalizables;
const auto X = EntityType::kNoNormalizables;

// Random non-overlapping spans in a few documents.
std::vector<DocumentSpans> random_docs(Rng& rng, int docs) {
  std::vector<DocumentSpans> out;
  for (int d = 0; d < docs; ++d) {
    DocumentSpans doc{"d" + std::to_string(d), {}};
    std::size_t at = 0;
    const int n = static_cast<int>(uniform01(rng) * 6);
    for (int i = 0; i < n; ++i) {
      at += 1 + static_cast<std::size_t>(uniform01(rng) * 4);
      const std::size_t len = 1 + static_cast<std::size_t>(uniform01(rng) * 3);
      doc.spans.push_back(span(at, at + len, kEntityTypes[static_cast<std::size_t>(uniform01(rng) * 4)]));
      at += len;
    }
    out.push_back(doc);
  }
  return out;
}

std::vector<DocumentSpans> perturb(const std::vector<DocumentSpans>& gold, Rng& rng) {
  auto out = gold;
  for (auto& d : out) {
    std::vector<EntitySpan> kept;
    for (auto s : d.spans) {
      const double u = uniform01(rng);
      if (u < 0.2) continue;
      if (u < 0.35) s.type = kEntityTypes[(static_cast<std::size_t>(s.type) + 1) % 4];
      kept.push_back(s);
    }
    d.spans = kept;
  }
  return out;
}

}  // namespace

TEST_CASE("definition examples") {
  auto r = entity_f1({{"d", {span(0, 2), span(5, 8)}}}, {{"d", {span(0, 2), span(10, 12)}}});
  CHECK(r.overall == Counts{1, 1, 1});
  CHECK(r.precision() == 0.5);
  CHECK(r.recall() == 0.5);
  CHECK(r.f1() == 0.5);

  auto wrong = entity_f1({{"d", {span(0, 2, P)}}}, {{"d", {span(0, 2, N)}}});
  CHECK(wrong.overall == Counts{0, 1, 1});
  CHECK(wrong.per_type[P] == Counts{0, 0, 1});
  CHECK(wrong.per_type[N] == Counts{0, 1, 0});

  auto excluded = entity_f1({{"d", {span(0, 2, X), span(4, 6, P)}}}, {{"d", {span(4, 6, P)}}}, {X});
  CHECK(excluded.overall == Counts{1, 0, 0});
  CHECK(excluded.per_type.count(X) == 0);
  auto included = entity_f1({{"d", {span(0, 2, X), span(4, 6, P)}}}, {{"d", {span(4, 6, P)}}});
  CHECK(included.overall == Counts{1, 0, 1});
}

TEST_CASE("formatting") {
  // P = 0.890, R = 0.883
  Counts c{890, 110, 118};
  CHECK(format_prf(c) == "89.0 / 88.3 / 88.6");
  CHECK(format_prf(Counts{0, 0, 7}) == "0.0 / 0.0 / 0.0");
  CHECK(format_prf(Counts{4, 0, 0}) == "100.0 / 100.0 / 100.0");
  CHECK(format_prf(Counts{}) == "0.0 / 0.0 / 0.0");

  auto r = entity_f1({{"d", {span(0, 2, P), span(3, 4, N)}}}, {{"d", {span(0, 2, P), span(3, 4, N)}}});
  const auto text = report(r);
  CHECK(text.find("100.0 / 100.0 / 100.0") != std::string::npos);
  CHECK(text.find("PROTEINAS") != std::string::npos);
  const auto j = report_json(r);
  CHECK(j["overall"]["tp"] == 2);
  CHECK(j["overall"]["f1"] == 1.0);
}

TEST_CASE("zero f1 without true positives, one iff equal") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gold = random_docs(rng, 4);
    const auto pred = perturb(gold, rng);
    const auto r = entity_f1(gold, pred);
    if (r.overall.tp == 0) CHECK(r.f1() == 0.0);
    const bool nonempty = r.overall.tp + r.overall.fn > 0;
    if (nonempty) CHECK((r.f1() == 1.0) == (r.overall.fp == 0 && r.overall.fn == 0));
    CHECK(entity_f1(gold, gold).f1() == (nonempty ? 1.0 : 0.0));
  }
}

TEST_CASE("symmetry and order invariance") {
  Rng rng = make_rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    auto gold = random_docs(rng, 5);
    auto pred = perturb(gold, rng);
    const auto r = entity_f1(gold, pred);
    const auto swapped = entity_f1(pred, gold);
    CHECK(swapped.precision() == r.recall());
    CHECK(swapped.recall() == r.precision());

    shuffle(gold, rng);
    for (auto& d : pred) shuffle(d.spans, rng);
    shuffle(pred, rng);
    const auto again = entity_f1(gold, pred);
    CHECK(again.overall == r.overall);
    for (const auto& [t, c] : r.per_type) CHECK(again.per_type.at(t) == c);
  }
}

TEST_CASE("documents, duplicates and overlaps") {
  // Missing document on the prediction side counts as empty.
  auto r = entity_f1({{"a", {span(0, 1)}}, {"b", {span(0, 1)}}}, {{"a", {span(0, 1)}}});
  CHECK(r.overall == Counts{1, 0, 1});
  // Same offsets in different documents are different entities.
  auto cross = entity_f1({{"a", {span(0, 1)}}}, {{"b", {span(0, 1)}}});
  CHECK(cross.overall == Counts{0, 1, 1});

  auto dup = entity_f1({{"a", {span(0, 1)}}}, {{"a", {span(0, 1), span(0, 1)}}});
  CHECK(dup.overall == Counts{1, 0, 0});

  CHECK_THROWS_AS(entity_f1({{"a", {span(0, 4), span(2, 6)}}}, {}), DataError);
  CHECK_THROWS_AS(entity_f1({}, {{"a", {span(0, 4), span(3, 5, N)}}}), DataError);
  CHECK_NOTHROW(entity_f1({{"a", {span(0, 4), span(4, 6)}}}, {}));
}

TEST_CASE("spans from files") {
  const auto dir = std::filesystem::temp_directory_path() / "nlnde_eval_spans";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "x.txt", "la TSH sube\n");
  write_file(dir / "x.ann", "T1\tPROTEINAS 3 6\tTSH\n");
  write_file(dir / "y.txt", "nada\n");
  auto spans = load_spans(dir);
  REQUIRE(spans.size() == 2);
  auto r = entity_f1(spans, spans);
  CHECK(r.overall == Counts{1, 0, 0});
  CHECK_THROWS_AS(load_spans(dir / "missing"), DataError);
  std::filesystem::remove_all(dir);
}
