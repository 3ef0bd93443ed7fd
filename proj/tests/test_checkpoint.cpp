#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>

#include "fixtures.hpp"
#include "json.hpp"
#include "smeta/checkpoint.hpp"
#include "smeta/error.hpp"

using namespace smeta;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected smeta::Error");
  return ErrorCode::ParseError;
}

Checkpoint sample_checkpoint() {
  Checkpoint cp;
  cp.bundle = fixture::bundle(fixture::small_arch(), ModelVariant::SAE, 21);
  // Values that decimal round trips commonly get wrong.
  auto& w = cp.bundle.net(NetworkId::Encoder).layers[0].weights;
  w[0] = 0.1;
  w[1] = std::numeric_limits<double>::denorm_min();
  w[2] = -0.0;
  w[3] = 1.0 / 3.0;
  w[4] = std::nextafter(1.0, 2.0);
  cp.metadata.seed = 1234567890123ULL;
  cp.metadata.epoch = 17;
  cp.metadata.stage = "metatrain";
  cp.metadata.config = {{"alpha", "0.001"}, {"variant", "smeta"}};
  return cp;
}

}  // namespace

TEST_CASE("round trip is bit-exact and keeps metadata") {
  const Checkpoint cp = sample_checkpoint();
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(cp));
  CHECK(bit_identical(back.bundle, cp.bundle));
  CHECK(max_abs_difference(back.bundle, cp.bundle) == 0.0);
  CHECK(std::signbit(back.bundle.encoder().layers[0].weights[2]));
  CHECK(back.bundle.variant == ModelVariant::SAE);
  CHECK(back.schema_version == kCheckpointSchemaVersion);
  CHECK(back.metadata.seed == cp.metadata.seed);
  CHECK(back.metadata.epoch == 17);
  CHECK(back.metadata.stage == "metatrain");
  CHECK(back.metadata.config == cp.metadata.config);
  CHECK(back.bundle.encoder().layers[0].name == cp.bundle.encoder().layers[0].name);
}

TEST_CASE("serialization is deterministic") {
  const Checkpoint cp = sample_checkpoint();
  CHECK(serialize_checkpoint(cp) == serialize_checkpoint(parse_checkpoint(serialize_checkpoint(cp))));
}

TEST_CASE("file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "smeta_ckpt_test" / "c.json";
  const Checkpoint cp = sample_checkpoint();
  save_checkpoint(cp, path);
  CHECK(bit_identical(load_checkpoint(path).bundle, cp.bundle));
  std::filesystem::remove_all(path.parent_path());
  CHECK(code_of([&] { load_checkpoint(path); }) == ErrorCode::IoError);
}

TEST_CASE("document layout") {
  const auto doc = nlohmann::json::parse(serialize_checkpoint(sample_checkpoint()));
  CHECK(doc["format"] == "smeta-checkpoint");
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["variant"] == "sae");
  CHECK(doc["networks"].size() == kNetworkCount);
  const auto& layer = doc["networks"]["encoder"][0];
  CHECK(layer["activation"] == "tanh");
  CHECK(layer["weights"].get<std::string>().substr(0, 16) == "3fb999999999999a");  // 0.1
}

TEST_CASE("rejects other versions, foreign documents and corrupt payloads") {
  auto doc = nlohmann::json::parse(serialize_checkpoint(sample_checkpoint()));
  auto v2 = doc;
  v2["schema_version"] = 2;
  CHECK(code_of([&] { parse_checkpoint(v2.dump()); }) == ErrorCode::SchemaMismatch);
  auto foreign = doc;
  foreign["format"] = "other";
  CHECK(code_of([&] { parse_checkpoint(foreign.dump()); }) == ErrorCode::SchemaMismatch);
  auto missing = doc;
  missing.erase("metadata");
  CHECK(code_of([&] { parse_checkpoint(missing.dump()); }) == ErrorCode::SchemaMismatch);
  auto truncated = doc;
  auto& w = truncated["networks"]["decoder"][0]["weights"];
  w = w.get<std::string>().substr(16);
  CHECK(code_of([&] { parse_checkpoint(truncated.dump()); }) == ErrorCode::SchemaMismatch);
  auto bad_hex = doc;
  auto& b = bad_hex["networks"]["decoder"][0]["biases"];
  std::string s = b.get<std::string>();
  s[0] = 'z';
  b = s;
  CHECK(code_of([&] { parse_checkpoint(bad_hex.dump()); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_checkpoint("{not json"); }) == ErrorCode::ParseError);
}
