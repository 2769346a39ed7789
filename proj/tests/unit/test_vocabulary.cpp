#include <gtest/gtest.h>

#include "test_util.hpp"
#include "zeroshot/error.hpp"
#include "zeroshot/text_io.hpp"
#include "zeroshot/vocabulary.hpp"

namespace {

using namespace zeroshot;

TEST(Vocabulary, StandardSetSizes) {
  const auto v = PrimitiveVocabulary::standard();
  EXPECT_EQ(v.estimators.size(), 18u);
  EXPECT_EQ(v.feature_processors.size(), 14u);
  EXPECT_NO_THROW(v.validate());
  for (const auto& n : v.estimators) EXPECT_TRUE(v.doc_text.contains(n)) << n;
  for (const auto& n : v.feature_processors) EXPECT_TRUE(v.doc_text.contains(n)) << n;
}

TEST(Vocabulary, LabelLookup) {
  const auto v = PrimitiveVocabulary::standard();
  const auto l = v.label("pca", "random_forest");
  EXPECT_EQ(v.feature_processors[l.feature_processor], "pca");
  EXPECT_EQ(v.estimators[l.estimator], "random_forest");
  EXPECT_EQ(v.describe(l), "pca+random_forest");
  EXPECT_TRUE(v.contains(l));
  EXPECT_FALSE(v.contains({14, 0}));
  EXPECT_EQ(v.describe({0, 18}), "<invalid label>");
  try {
    v.label("pca", "no_such_estimator");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no_such_estimator"), std::string::npos);
  }
}

TEST(Vocabulary, LoadFromFile) {
  const auto dir = zs_test::temp_dir("vocab");
  text::write_file_atomic(dir + "/v.tsv",
                          "# kind\tname\tdoc\nestimator\ttree\tA tree.\n"
                          "feature_processor\tscale\tScales.\nestimator\tknn\tNeighbours.\n");
  const auto v = PrimitiveVocabulary::load(dir + "/v.tsv");
  EXPECT_EQ(v.estimators, (std::vector<std::string>{"tree", "knn"}));
  EXPECT_EQ(v.feature_processors, (std::vector<std::string>{"scale"}));
  EXPECT_EQ(v.doc_text.at("knn"), "Neighbours.");

  text::write_file_atomic(dir + "/bad.tsv", "estimator\ttree\n");
  EXPECT_THROW(PrimitiveVocabulary::load(dir + "/bad.tsv"), ParseError);
  text::write_file_atomic(dir + "/kind.tsv", "model\ttree\tx\n");
  EXPECT_THROW(PrimitiveVocabulary::load(dir + "/kind.tsv"), ParseError);
  text::write_file_atomic(dir + "/dup.tsv", "estimator\tt\tx\nfeature_processor\tt\ty\n");
  EXPECT_THROW(PrimitiveVocabulary::load(dir + "/dup.tsv"), DataError);
  text::write_file_atomic(dir + "/empty.tsv", "estimator\tt\tx\n");
  EXPECT_THROW(PrimitiveVocabulary::load(dir + "/empty.tsv"), DataError);
}

TEST(Vocabulary, LabelOrdering) {
  EXPECT_LT((PipelineLabel{0, 5}), (PipelineLabel{1, 0}));
  EXPECT_EQ((PipelineLabel{2, 3}), (PipelineLabel{2, 3}));
}

}  // namespace
