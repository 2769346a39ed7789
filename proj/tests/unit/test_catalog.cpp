#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "test_util.hpp"
#include "zeroshot/catalog.hpp"
#include "zeroshot/error.hpp"
#include "zeroshot/metafeatures.hpp"
#include "zeroshot/text_io.hpp"

namespace {

using namespace zeroshot;
namespace fs = std::filesystem;

TEST(Manifest, ParsesFieldsAndResolvesRelativePaths) {
  const auto dir = zs_test::temp_dir("manifest");
  fs::create_directories(dir + "/desc");
  text::write_file_atomic(dir + "/desc/a.txt", "  Heart disease records.\n");
  const std::string m =
      "# id\tsplit\ttable\ttarget\tdescription\n"
      "a\ttrain\ttables/a.csv\tlabel\tdesc/a.txt\n"
      "\n"
      "b\ttest\t/abs/b.csv\t-\t-\tmeta:m/b.txt\n"
      "c\ttrain\tc.csv\t2\t-\t-\n";
  const auto c = parse_manifest(m, dir);
  ASSERT_EQ(c.datasets.size(), 3u);
  EXPECT_EQ(c.datasets[0].id, "a");
  EXPECT_EQ(c.datasets[0].split, Split::train);
  EXPECT_EQ(c.datasets[0].table_path, (fs::path(dir) / "tables/a.csv").string());
  EXPECT_EQ(c.datasets[0].target, "label");
  EXPECT_EQ(c.datasets[0].description, "Heart disease records.");
  EXPECT_EQ(c.datasets[1].split, Split::test);
  EXPECT_EQ(c.datasets[1].table_path, "/abs/b.csv");
  EXPECT_TRUE(c.datasets[1].target.empty());
  EXPECT_TRUE(c.datasets[1].description.empty());
  EXPECT_EQ(c.datasets[1].meta_path, (fs::path(dir) / "m/b.txt").string());
  EXPECT_TRUE(c.datasets[2].meta_path.empty());
  EXPECT_EQ(c.count(Split::train), 2u);
  EXPECT_EQ(c.count(Split::test), 1u);
  EXPECT_NE(c.find("b"), nullptr);
  EXPECT_EQ(c.find("zz"), nullptr);
}

TEST(Manifest, Errors) {
  EXPECT_THROW(parse_manifest("a\ttrain\tt.csv\t-\n"), ParseError);
  EXPECT_THROW(parse_manifest("a\tvalid\tt.csv\t-\t-\n"), ParseError);
  EXPECT_THROW(parse_manifest("a\ttrain\t-\t-\t-\n"), ParseError);
  EXPECT_THROW(parse_manifest("\ttrain\tt.csv\t-\t-\n"), ParseError);
  EXPECT_THROW(parse_manifest("a\ttrain\tt.csv\t-\t-\tfoo\n"), ParseError);
  EXPECT_THROW(parse_manifest("a\ttrain\tt.csv\t-\t-\na\ttest\tu.csv\t-\t-\n"), DataError);
  try {
    parse_manifest("a\ttrain\tt.csv\t-\t-\nb\tbogus\tt.csv\t-\t-\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Manifest, MissingTables) {
  const auto dir = zs_test::temp_dir("manifest_missing");
  text::write_file_atomic(dir + "/a.csv", "x,y\n1,0\n");
  const auto c = parse_manifest("a\ttrain\ta.csv\t-\t-\nb\ttrain\tb.csv\t-\t-\n", dir);
  EXPECT_EQ(missing_tables(c), (std::vector<std::string>{"b"}));
}

TEST(Performance, ParsesRecordsAndSkipsHeader) {
  const auto v = PrimitiveVocabulary::standard();
  const auto r = parse_performance(
      "dataset_id\tsource\tfeature_processor\testimator\taccuracy\n"
      "a\tO\tpca\tlda\t0.75\n# note\nb\tS\tminmaxscaler\tsgd\t1\n",
      v);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].dataset_id, "a");
  EXPECT_EQ(r[0].source, Source::O);
  EXPECT_EQ(r[0].pipeline, v.label("pca", "lda"));
  EXPECT_EQ(r[0].accuracy, 0.75);
  EXPECT_EQ(r[1].source, Source::S);
  EXPECT_EQ(r[1].accuracy, 1.0);
}

TEST(Performance, Errors) {
  const auto v = PrimitiveVocabulary::standard();
  EXPECT_THROW(parse_performance("a\tO\tpca\tlda\n", v), ParseError);
  EXPECT_THROW(parse_performance("a\tX\tpca\tlda\t0.5\n", v), ParseError);
  EXPECT_THROW(parse_performance("a\tO\tpca\tlda\t1.5\n", v), ParseError);
  EXPECT_THROW(parse_performance("a\tO\tpca\tlda\tnan\n", v), ParseError);
  EXPECT_THROW(parse_performance("a\tO\tpca\tmystery\t0.5\n", v), DataError);
}

Catalog two_dataset_catalog() {
  Catalog c;
  DatasetRecord a;
  a.id = "a";
  DatasetRecord b;
  b.id = "b";
  b.split = Split::test;
  DatasetRecord u;
  u.id = "u";
  c.datasets = {a, b, u};
  return c;
}

TEST(AttachLabels, HighestAccuracyWins) {
  auto c = two_dataset_catalog();
  const auto& v = c.vocabulary;
  const std::vector<PerformanceRecord> r = {
      {"a", Source::O, v.label("pca", "lda"), 0.7},
      {"a", Source::S, v.label("minmaxscaler", "sgd"), 0.8},
      {"b", Source::S, v.label("pca", "qda"), 0.6},
  };
  const auto unlabeled = attach_labels(c, r);
  EXPECT_EQ(unlabeled, (std::vector<std::string>{"u"}));
  EXPECT_EQ(*c.find("a")->best_label, v.label("minmaxscaler", "sgd"));
  EXPECT_EQ(*c.find("b")->best_label, v.label("pca", "qda"));
  EXPECT_FALSE(c.find("u")->best_label.has_value());
  EXPECT_EQ(c.performance.size(), 3u);
}

TEST(AttachLabels, EqualAccuracyPrefersSourceO) {
  auto c = two_dataset_catalog();
  const auto& v = c.vocabulary;
  // Equal accuracy: O beats S.
  attach_labels(c, std::vector<PerformanceRecord>{{"a", Source::S, v.label("pca", "random_forest"), 0.9},
                                                  {"a", Source::O, v.label("pca", "lda"), 0.9}});
  EXPECT_EQ(*c.find("a")->best_label, v.label("pca", "lda"));

}

TEST(AttachLabels, Errors) {
  auto c = two_dataset_catalog();
  const auto& v = c.vocabulary;
  const PipelineLabel ok = v.label("pca", "lda");
  EXPECT_THROW(attach_labels(c, std::vector<PerformanceRecord>{{"zz", Source::O, ok, 0.5}}),
               DataError);
  EXPECT_THROW(attach_labels(c, std::vector<PerformanceRecord>{{"a", Source::O, {99, 0}, 0.5}}),
               DataError);
  EXPECT_THROW(attach_labels(c, std::vector<PerformanceRecord>{{"a", Source::O, ok, 0.5},
                                                               {"a", Source::O, ok, 0.6}}),
               DataError);
}

TEST(Catalog, RoundTripsBitExactly) {
  auto c = zs_test::toy_catalog(6, 2);
  c.datasets[0].table_path = "/data/with space\tand tab.csv";
  c.datasets[0].description = "line one\nline two \\ backslash";
  c.datasets[1].meta_imputed = 3;
  c.datasets[2].meta.reset();
  c.datasets[3].best_label.reset();
  c.datasets[1].meta->at(0) = 1.0 / 3.0;
  c.datasets[1].meta->at(1) = -5e-310;
  const std::string doc = format_catalog(c);
  const auto back = parse_catalog(doc);
  EXPECT_EQ(back, c);
  EXPECT_EQ(format_catalog(back), doc);

  const auto dir = zs_test::temp_dir("catalog_rt");
  save_catalog(c, dir + "/c.zscat");
  EXPECT_EQ(load_catalog(dir + "/c.zscat"), c);
}

TEST(Catalog, RejectsTruncationAndVersionMismatch) {
  const auto doc = format_catalog(zs_test::toy_catalog(4, 2));
  EXPECT_THROW(parse_catalog(""), ParseError);
  EXPECT_THROW(parse_catalog("ZSCKPT 1\n"), ParseError);
  std::string v2 = doc;
  v2.replace(0, 7, "ZSCAT 2");
  try {
    parse_catalog(v2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
  for (std::size_t cut : {doc.size() / 4, doc.size() / 2, doc.size() - 5}) {
    EXPECT_THROW(parse_catalog(doc.substr(0, cut)), Error) << cut;
  }
  EXPECT_THROW(parse_catalog(doc + "junk\n"), ParseError);
}

TEST(Catalog, LoadErrorNamesThePath) {
  const auto dir = zs_test::temp_dir("catalog_bad");
  text::write_file_atomic(dir + "/bad.zscat", "nonsense\n");
  try {
    load_catalog(dir + "/bad.zscat");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.zscat"), std::string::npos);
  }
}

TEST(ComputeFeatures, FillsMetaAndHashedEmbeddings) {
  const auto dir = zs_test::temp_dir("features");
  text::write_file_atomic(dir + "/d.txt", "blood pressure study");
  const auto c0 = parse_manifest(
      std::string("r\ttrain\t") + ZEROSHOT_TEST_DATA_DIR + "/reference_30x5.csv\tlabel\td.txt\n", dir);
  auto c = c0;
  compute_features(c, {.embedding_width = 32, .seed = 9});
  const auto& d = c.datasets[0];
  ASSERT_TRUE(d.meta.has_value());
  EXPECT_EQ(d.meta->size(), meta::registry_names().size());
  EXPECT_EQ(c.meta_names, meta::registry_names());
  EXPECT_EQ(*d.desc_embedding, embed::hash_embed("blood pressure study", 32, 9));
  EXPECT_EQ(c.embedding_width(), 32u);
  EXPECT_EQ(c.provenance(), embed::Provenance::hashed);
  EXPECT_EQ(c.primitive_docs.size(), 32u);
  EXPECT_EQ(c.embedding_seed, 9u);
}

TEST(ComputeFeatures, ExternalMetaAndPrecomputedEmbeddings) {
  const auto dir = zs_test::temp_dir("features_ext");
  text::write_file_atomic(dir + "/a.meta", "# comment\n1 2\n3\n");
  text::write_file_atomic(dir + "/b.meta", "4 5 6\n");
  auto c = parse_manifest("a\ttrain\tx.csv\t-\t-\tmeta:a.meta\nb\ttest\ty.csv\t-\t-\tmeta:b.meta\n",
                          dir);
  embed::EmbeddingStore pre(4, embed::Provenance::precomputed);
  for (const auto* list : {&c.vocabulary.estimators, &c.vocabulary.feature_processors}) {
    for (const auto& n : *list) pre.insert(n, {1, 0, 0, 0});
  }
  pre.insert("a", {0, 1, 0, 0});
  pre.insert("b", {0, 0, 1, 0});
  compute_features(c, {.embedding_width = 4, .seed = 0, .precomputed = &pre});
  EXPECT_EQ(*c.datasets[0].meta, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(*c.datasets[1].desc_embedding, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(c.meta_names, (std::vector<std::string>{"meta_0", "meta_1", "meta_2"}));
  EXPECT_EQ(c.provenance(), embed::Provenance::precomputed);

  auto wrong = c;
  EXPECT_THROW(compute_features(wrong, {.embedding_width = 8, .seed = 0, .precomputed = &pre}),
               ConfigError);
  text::write_file_atomic(dir + "/b.meta", "4 5\n");
  auto narrow = c;
  EXPECT_THROW(compute_features(narrow, {.embedding_width = 4, .seed = 0, .precomputed = &pre}),
               DataError);
}

TEST(ComputeFeatures, MetaVectorFileErrors) {
  const auto dir = zs_test::temp_dir("meta_vec");
  text::write_file_atomic(dir + "/empty", "# nothing\n");
  text::write_file_atomic(dir + "/inf", "1 inf\n");
  EXPECT_THROW(load_meta_vector(dir + "/empty"), DataError);
  EXPECT_THROW(load_meta_vector(dir + "/inf"), Error);
}

}  // namespace
