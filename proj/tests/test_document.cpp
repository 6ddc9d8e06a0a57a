#include <filesystem>

#include "doctest.h"
#include "parfid/document.hpp"
#include "parfid/generators.hpp"
#include "test_util.hpp"

using namespace parfid;
using namespace parfid::testing;
using nlohmann::json;

namespace {

json base_doc() {
  return json::parse(R"({"schema": "parfid-1", "algebra": [2],
    "matrices": {"w": {"kind": "form", "blocks": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]]}}})");
}

}  // namespace

TEST_CASE("round trip is exact on random documents") {
  Rng rng(101);
  for (int i = 0; i < 50; ++i) {
    const BlockAlgebra alg = random_algebra(rng);
    MatrixDocument doc(alg);
    doc.set_form("omega", random_form(alg, rng, i % 2 == 0));
    doc.set_form("rho", random_form(alg, rng, false, false));
    doc.set_operator("x", random_block_matrix(alg, rng));
    std::vector<OrthoProjection> pb;
    for (int n : alg.block_dims()) pb.push_back(haar_projection(n, rng() % (n + 1), rng));
    doc.set_projection("q", BlockProjection(alg, pb));
    doc.set_vector("psi", random_unit_vector(3, rng));
    doc.set_form("other", PositiveForm::single(random_density(3, 2, rng)));
    std::vector<double> w;
    for (std::size_t k = 0; k < alg.num_blocks(); ++k) w.push_back(0.1 + rng() % 7);
    doc.set_trace("tau", Trace(alg, w));
    doc.set_scalar("s", std::uniform_real_distribution<double>(-1, 1)(rng));

    const std::string text = doc.dump();
    const MatrixDocument back = MatrixDocument::parse(text);
    CHECK(back.dump() == text);
    for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
      CHECK((back.form("omega").density(k).matrix().array() ==
             doc.form("omega").density(k).matrix().array())
                .all());
      CHECK((back.op("x").block(k).array() == doc.op("x").block(k).array()).all());
    }
    CHECK((back.vector("psi").array() == doc.vector("psi").array()).all());
    CHECK(back.form("other").algebra() == BlockAlgebra({3}));
    CHECK(back.trace("tau").weights() == w);
    CHECK(back.scalar("s") == doc.scalar("s"));
    CHECK(back.projection("q").ranks() == doc.projection("q").ranks());
  }
}

TEST_CASE("save and load through a file") {
  const auto path = std::filesystem::temp_directory_path() / "parfid_doc_test.json";
  MatrixDocument doc(BlockAlgebra({2}));
  doc.set_form("w", PositiveForm::single(hdiag({0.25, 0.75})));
  doc.save(path.string());
  const MatrixDocument back = MatrixDocument::load(path.string());
  CHECK(back.dump() == doc.dump());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(MatrixDocument::load(path.string()), SchemaError);
}

TEST_CASE("schema errors") {
  CHECK_NOTHROW(MatrixDocument::from_json(base_doc()));
  json j = base_doc();
  j["schema"] = "parfid-2";
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  j = base_doc();
  j.erase("algebra");
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  j = base_doc();
  j["algebra"] = {3};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  j = base_doc();
  j["matrices"]["w"]["kind"] = "density";
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  j = base_doc();
  j["matrices"]["w"]["blocks"][0][0][0] = {1, 2, 3};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  j = base_doc();
  j["traces"] = {{"tau", {1.0, 2.0}}};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), SchemaError);
  CHECK_THROWS_AS(MatrixDocument::parse("{not json"), SchemaError);

  const MatrixDocument doc = MatrixDocument::from_json(base_doc());
  CHECK_THROWS_AS(doc.form("missing"), SchemaError);
  CHECK_THROWS_AS(doc.op("w"), SchemaError);
}

TEST_CASE("validation on load") {
  json j = base_doc();
  j["matrices"]["w"]["blocks"][0][1][1] = {-0.5, 0};
  CHECK_THROWS(MatrixDocument::from_json(j));
  try {
    MatrixDocument::from_json(j);
  } catch (const SchemaError&) {
    FAIL("a non-positive density is a validation failure, not a schema error");
  } catch (const Error&) {
  }
  j = base_doc();
  j["matrices"]["w"]["blocks"][0][0][1] = {0.3, 0};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), ValidationError);
  j = base_doc();
  j["matrices"]["p"] = {{"kind", "projection"},
                        {"blocks", json::array({json::parse("[[[0.5,0],[0,0]],[[0,0],[0,0]]]")})}};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), ValidationError);
  j = base_doc();
  j["traces"] = {{"tau", {-1.0}}};
  CHECK_THROWS_AS(MatrixDocument::from_json(j), ValidationError);
}

TEST_CASE("plain numbers are read as real entries") {
  const json j = json::parse(R"({"schema": "parfid-1", "algebra": [2],
    "matrices": {"w": {"kind": "form", "blocks": [[[0.5, 0], [0, 0.5]]]}}})");
  CHECK(MatrixDocument::from_json(j).form("w").density(0).matrix()(1, 1) == Complex(0.5, 0));
}
