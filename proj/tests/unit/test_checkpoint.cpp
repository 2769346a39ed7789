#include <gtest/gtest.h>

#include "test_util.hpp"
#include "zeroshot/checkpoint.hpp"
#include "zeroshot/error.hpp"
#include "zeroshot/trainer.hpp"

namespace {

using namespace zeroshot;

const Checkpoint& trained() {
  static const Checkpoint ck = [] {
    const auto c = zs_test::toy_catalog(10, 2);
    train::TrainConfig tc;
    tc.iterations = 15;
    tc.eval_every = 0;
    tc.seed = 6;
    return train::train(c, train::config_for(c, "ZS", zs_test::small_config(8)), tc).checkpoint;
  }();
  return ck;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

TEST(Checkpoint, TextRoundTripIsCanonical) {
  const auto doc = format_checkpoint(trained());
  const auto back = parse_checkpoint(doc);
  EXPECT_EQ(format_checkpoint(back), doc);
  EXPECT_EQ(back.graph, trained().graph);
  EXPECT_EQ(back.labels, trained().labels);
  EXPECT_EQ(back.model.config(), trained().model.config());
  EXPECT_EQ(back.standardizer.mean, trained().standardizer.mean);
  EXPECT_EQ(back.seed, 6u);
  EXPECT_EQ(back.iteration, 15u);
  EXPECT_EQ(back.provenance(), embed::Provenance::hashed);
}

TEST(Checkpoint, ReloadedEngineGivesIdenticalLogits) {
  const auto back = parse_checkpoint(format_checkpoint(trained()));
  const auto a = trained().engine(), b = back.engine();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.query_masked(i), b.query_masked(i));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = zs_test::temp_dir("ckpt");
  save_checkpoint(trained(), dir + "/m.ckpt");
  EXPECT_EQ(format_checkpoint(load_checkpoint(dir + "/m.ckpt")), format_checkpoint(trained()));
}

TEST(Checkpoint, RejectsHeaderProblems) {
  const auto doc = format_checkpoint(trained());
  EXPECT_THROW(parse_checkpoint(""), ParseError);
  EXPECT_THROW(parse_checkpoint("ZSCAT 1\n"), ParseError);
  EXPECT_THROW(parse_checkpoint(replace_once(doc, "ZSCKPT 1", "ZSCKPT 9")), ParseError);
}

TEST(Checkpoint, RejectsTruncation) {
  const auto doc = format_checkpoint(trained());
  for (double frac : {0.1, 0.5, 0.9, 0.999}) {
    EXPECT_THROW(parse_checkpoint(doc.substr(0, static_cast<std::size_t>(frac * doc.size()))), Error)
        << frac;
  }
  EXPECT_THROW(parse_checkpoint(doc + "more\n"), ParseError);
}

TEST(Checkpoint, HeadWidthMismatchIsDataError) {
  const auto doc = format_checkpoint(trained());
  EXPECT_THROW(parse_checkpoint(replace_once(doc, "n_estimators=18", "n_estimators=17")), DataError);
}

TEST(Checkpoint, AblationMismatchIsDataError) {
  const auto doc = format_checkpoint(trained());
  EXPECT_THROW(parse_checkpoint(replace_once(doc, "ablation=ZS\n", "ablation=ZSND\n")), DataError);
}

TEST(Checkpoint, TensorShapeMismatchIsShapeError) {
  const auto doc = format_checkpoint(trained());
  EXPECT_THROW(parse_checkpoint(replace_once(doc, "param\thead_est.bias\t1\t18\t",
                                             "param\thead_est.bias\t18\t1\t")),
               ShapeError);
}

TEST(Checkpoint, AsymmetricGraphIsDataError) {
  auto ck = trained();
  auto& adj = ck.graph.adjacency;
  std::size_t j = 0;
  while (std::find(adj[0].begin(), adj[0].end(), j) != adj[0].end() || j == 0) ++j;
  adj[0].push_back(j);
  std::sort(adj[0].begin(), adj[0].end());
  EXPECT_THROW(parse_checkpoint(format_checkpoint(ck)), DataError);
}

TEST(Checkpoint, LoadErrorNamesThePath) {
  const auto dir = zs_test::temp_dir("ckpt_bad");
  try {
    load_checkpoint(dir + "/missing.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing.ckpt"), std::string::npos);
  }
}

}  // namespace
