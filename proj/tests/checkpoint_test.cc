#include "dst/checkpoint.h"

#include <gtest/gtest.h>

#include "dst/errors.h"
#include "dst/mrc_head.h"
#include "dst/tracker.h"
#include "dst/wd_head.h"
#include "test_util.h"

namespace dst {
namespace {

TEST(CheckpointTest, MrcRoundTripIsBitExact) {
  testing::TempDir dir;
  MrcModel m;
  m.params = MrcParams::Random(8, 4, 17);
  m.params.b_ans = 0.1 + 0.2;  // not representable in short decimal
  m.config.hidden = 4;
  m.config.seed = 17;
  m.config.adam.learning_rate = 3e-3;
  SaveMrcModel(m, dir.File("mrc.json"));
  MrcModel back = LoadMrcModel(dir.File("mrc.json"));
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.config.ToJson(), m.config.ToJson());
}

TEST(CheckpointTest, WdRoundTripIsBitExact) {
  testing::TempDir dir;
  WdModel m;
  m.params = WdParams::Random(8, 5, true, 3);
  m.config.proj = 5;
  m.config.task = "wd";
  SaveWdModel(m, dir.File("wd.json"), "wd");
  WdModel back = LoadWdModel(dir.File("wd.json"), "wd");
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.config.ToJson(), m.config.ToJson());
}

TEST(CheckpointTest, WrongSectionOrVersion) {
  testing::TempDir dir;
  WdModel m;
  m.params = WdParams::Random(8, 5, false, 3);
  SaveWdModel(m, dir.File("intent.json"), "intent");
  EXPECT_THROW(LoadWdModel(dir.File("intent.json"), "reqslot"), CompatibilityError);
  EXPECT_THROW(LoadMrcModel(dir.File("intent.json")), CompatibilityError);

  auto doc = ReadJsonFile(dir.File("intent.json"));
  doc["format_version"] = 2;
  WriteJsonFile(dir.File("v2.json"), doc);
  EXPECT_THROW(LoadWdModel(dir.File("v2.json"), "intent"), CompatibilityError);

  doc["format_version"] = 1;
  doc["layout_version"] = kWideLayoutVersion + 1;
  WriteJsonFile(dir.File("layout.json"), doc);
  EXPECT_THROW(LoadWdModel(dir.File("layout.json"), "intent"), CompatibilityError);
  EXPECT_THROW(CheckWideLayout(kWideLayoutVersion + 1), CompatibilityError);
  EXPECT_NO_THROW(CheckWideLayout(kWideLayoutVersion));
}

TEST(CheckpointTest, UnreadableFiles) {
  testing::TempDir dir;
  EXPECT_THROW(ReadJsonFile(dir.File("missing.json")), Error);
  testing::WriteFile(dir.File("bad.json"), "{\n\"a\": 1,\n}");
  try {
    ReadJsonFile(dir.File("bad.json"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(CheckpointTest, BundleDetectsDimMismatch) {
  ModelBundle b = LoadModelBundle(testing::DataPath("models"));
  EXPECT_NO_THROW(CheckBundle(b));
  b.wd.params = WdParams::Zeros(b.encoder.dim + 1, 4);
  EXPECT_THROW(CheckBundle(b), CompatibilityError);
  testing::TempDir dir;
  EXPECT_THROW(LoadModelBundle(dir.path()), Error);
}

TEST(CheckpointTest, EncoderConfigRoundTrip) {
  EncoderConfig c;
  c.dim = 32;
  c.seed = 9;
  c.backend = EncoderBackend::kSidecar;
  c.sidecar_address = "tcp://127.0.0.1:9";
  EncoderConfig back = EncoderConfigFromJson(EncoderConfigToJson(c));
  EXPECT_EQ(back.dim, 32u);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.backend, EncoderBackend::kSidecar);
  // Where the sidecar lives is a deployment detail, not part of the model.
  EXPECT_EQ(back.sidecar_address, "");
  EXPECT_THROW(EncoderConfigFromJson({{"backend", "gpu"}}), CompatibilityError);
}

}  // namespace
}  // namespace dst
