#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "nlnde/errors.hpp"
#include "nlnde/model_io.hpp"
#include "support/toy.hpp"

using namespace nlnde;

namespace {

void check_same(Tagger& a, Tagger& b) {
  auto pa = a.parameters(), pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    INFO(pa[i]->name);
    CHECK(pa[i]->name == pb[i]->name);
    REQUIRE(pa[i]->value.rows() == pb[i]->value.rows());
    REQUIRE(pa[i]->value.cols() == pb[i]->value.cols());
    CHECK(std::memcmp(pa[i]->value.data(), pb[i]->value.data(), sizeof(double) * pa[i]->value.size()) == 0);
  }
}

}  // namespace

TEST_CASE("model bytes round trip exactly") {
  for (Combine combine : {Combine::kConcat, Combine::kAttention}) {
    auto s = toy::make(combine, true, true);
    const nlohmann::json run = {{"run", "custom"}, {"seed", 3}};
    const std::string bytes = serialize_model(*s.tagger, run);
    LoadedModel loaded = deserialize_model(bytes);
    CHECK(loaded.metadata["run"] == run);
    check_same(*s.tagger, *loaded.tagger);
    CHECK(loaded.tagger->config().dims == s.tagger->config().dims);
    CHECK(loaded.tagger->char_vocabulary().size() == s.tagger->char_vocabulary().size());
    CHECK(loaded.tagger->frequencies().counts() == s.tagger->frequencies().counts());
    CHECK(serialize_model(*loaded.tagger, run) == bytes);

    // Same decisions after reload.
    const auto batch = s.tagger->make_batch(s.sentences(), s.sources);
    CHECK(s.tagger->decode(batch) == loaded.tagger->decode(loaded.tagger->make_batch(s.sentences(), s.sources)));
  }
}

TEST_CASE("model file errors") {
  auto s = toy::make(Combine::kConcat, false, false);
  const std::string bytes = serialize_model(*s.tagger, nlohmann::json::object());

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_WITH_AS(deserialize_model(flipped), doctest::Contains("checksum"), DataError);

  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 9)), DataError);
  CHECK_THROWS_WITH_AS(deserialize_model(bytes.substr(0, 14)), doctest::Contains("truncated"), DataError);
  CHECK_THROWS_AS(deserialize_model(""), DataError);

  std::string version = bytes;
  version[8] = 7;
  CHECK_THROWS_WITH_AS(deserialize_model(version), doctest::Contains("version"), DataError);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_model(magic), doctest::Contains("magic"), DataError);

  CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), DataError);
}

TEST_CASE("save and load through a file") {
  auto s = toy::make(Combine::kAttention, true, false);
  const auto path = std::filesystem::temp_directory_path() / "nlnde_model_io_test.bin";
  save_model(path, *s.tagger, {{"run", "S4"}});
  LoadedModel loaded = load_model(path);
  CHECK(loaded.metadata["run"]["run"] == "S4");
  check_same(*s.tagger, *loaded.tagger);
  std::filesystem::remove(path);
}
