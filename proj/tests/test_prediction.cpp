#include <doctest.h>

#include "keytopics/prediction.hpp"

using namespace keytopics;

static TrainedModel toy_model(int k, int v, std::vector<std::vector<std::vector<double>>> snapshots) {
  TrainedModel model;
  model.hyper.num_topics = k;
  model.hyper.phi0 = 0.05;
  model.language_model_samples = std::move(snapshots);
  model.clustering = {};
  return model;
}

TEST_CASE("inference on an empty document recovers the prior mean") {
  TrainedModel model = toy_model(4, 3, {{{0.4, 0.3, 0.3}, {0.2, 0.2, 0.6}, {0.5, 0.4, 0.1}, {0.3, 0.3, 0.4}}});
  model.hyper.phi0 = 5.0;  // concentrated prior keeps the sample mean tight
  RandomSource rng(42);
  const TopicPosterior post = infer_topic_distribution("empty", {}, model, 4000, rng);
  double sum = 0.0;
  for (double v : post.mean_background) {
    CHECK(v == doctest::Approx(0.25).epsilon(0.1));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("inference concentrates on the topic that explains the words") {
  // Topic 2 owns words 0 and 1; the other topics explain only words 2 and 3.
  const std::vector<std::vector<double>> theta = {
      {1e-8, 1e-8, 0.5, 0.5 - 2e-8},
      {1e-8, 1e-8, 0.9, 0.1 - 2e-8},
      {0.5, 0.5 - 2e-8, 1e-8, 1e-8},
  };
  const TrainedModel model = toy_model(3, 4, {theta});
  RandomSource rng(7);
  std::vector<int> tokens;
  for (int i = 0; i < 30; ++i) tokens.push_back(i % 2);
  const TopicPosterior post = infer_topic_distribution("doc", tokens, model, 2000, rng);
  CHECK(post.mean_background[2] > 0.9);
}

TEST_CASE("inference is deterministic given seed and snapshots") {
  const TrainedModel model = toy_model(2, 2, {{{0.7, 0.3}, {0.2, 0.8}}, {{0.6, 0.4}, {0.25, 0.75}}});
  RandomSource r1(9), r2(9);
  const auto a = infer_topic_distribution("d", {0, 1, 1, 0}, model, 500, r1);
  const auto b = infer_topic_distribution("d", {0, 1, 1, 0}, model, 500, r2);
  CHECK(a.mean_background == b.mean_background);
}

TEST_CASE("inference rejects degenerate configurations") {
  const TrainedModel model = toy_model(2, 2, {{{0.7, 0.3}, {0.2, 0.8}}});
  RandomSource rng(1);
  CHECK_THROWS_AS(infer_topic_distribution("d", {0}, model, 1, rng), std::invalid_argument);
  TrainedModel empty = model;
  empty.language_model_samples.clear();
  CHECK_THROWS_AS(infer_topic_distribution("d", {0}, empty, 100, rng), std::invalid_argument);
}

TEST_CASE("out-of-vocabulary tokens are dropped when mapping to the model") {
  const Corpus corpus = build_corpus({{"a", "known unknown known", {"kp"}, ""}});
  const auto index = vocab_index_of({"known"});
  const auto mapped = map_tokens_to_model(corpus.documents[0], corpus, index);
  CHECK(mapped == std::vector<int>{0, 0});
}

TEST_CASE("threshold tuning maximizes dev F-score, ties to the larger threshold") {
  // Positives at 0.9 and 0.8, negative at 0.1: any threshold in (0.1, 0.8]
  // gives F=1, and the tie resolves upward to 0.80.
  std::vector<TopicPosterior> dev = {
      {"p1", {0.9, 0.1}},
      {"p2", {0.8, 0.2}},
      {"n1", {0.1, 0.9}},
  };
  std::map<std::string, std::set<std::string>> gold = {{"p1", {"prop"}}, {"p2", {"prop"}}, {"n1", {}}};
  const auto tuned = tune_thresholds(dev, gold, {{"prop", 0}});
  REQUIRE(tuned.size() == 1);
  CHECK(tuned[0].threshold == doctest::Approx(0.80));
  CHECK(tuned[0].f_score == doctest::Approx(1.0));
  CHECK(tuned[0].has_positives);
}

TEST_CASE("threshold tuning degenerate cases") {
  // All dev documents positive: predicting everything maximizes F, and only
  // the zero threshold catches the lowest-mass positive.
  std::vector<TopicPosterior> dev = {{"a", {0.9, 0.1}}, {"b", {0.005, 0.995}}};
  std::map<std::string, std::set<std::string>> all_pos = {{"a", {"prop"}}, {"b", {"prop"}}};
  const auto tuned = tune_thresholds(dev, all_pos, {{"prop", 0}});
  CHECK(tuned[0].threshold == doctest::Approx(0.0));

  // No positive labels: the property is never predicted.
  std::map<std::string, std::set<std::string>> none = {{"a", {}}, {"b", {}}};
  const auto never = tune_thresholds(dev, none, {{"prop", 0}});
  CHECK(never[0].threshold == doctest::Approx(1.01));
  CHECK_FALSE(never[0].has_positives);

  CHECK_THROWS_AS(tune_thresholds({}, all_pos, {{"prop", 0}}), std::invalid_argument);
}

TEST_CASE("predict_properties applies strict per-topic thresholds") {
  TrainedModel model = toy_model(2, 2, {{{0.5, 0.5}, {0.5, 0.5}}});
  model.representatives = {-1, -1};
  const TopicPosterior post{"d", {0.7, 0.3}};

  CHECK_THROWS_AS(predict_properties(post, model, {}), std::logic_error);

  model.thresholds = {0.5, 0.5};
  const auto pred = predict_properties(post, model, {});
  CHECK(pred.supported_clusters == std::vector<int>{0});

  model.thresholds = {0.0, 0.0};
  CHECK(predict_properties(post, model, {}).supported_clusters == std::vector<int>{0, 1});

  model.thresholds = {1.0, 1.0};
  CHECK(predict_properties(post, model, {}).supported_clusters.empty());

  // Strictly greater: mass equal to the threshold is not predicted.
  model.thresholds = {0.7, 0.5};
  CHECK(predict_properties(post, model, {}).supported_clusters.empty());
}

TEST_CASE("prediction commutes with consistent topic relabeling") {
  TrainedModel model = toy_model(3, 2, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}});
  model.representatives = {-1, -1, -1};
  model.thresholds = {0.2, 0.5, 0.8};
  const TopicPosterior post{"d", {0.3, 0.6, 0.1}};
  const auto base = predict_properties(post, model, {});

  const std::vector<int> perm = {1, 2, 0};
  TrainedModel relabeled = model;
  TopicPosterior rpost{"d", {0, 0, 0}};
  for (int k = 0; k < 3; ++k) {
    relabeled.thresholds[perm[k]] = model.thresholds[k];
    rpost.mean_background[perm[k]] = post.mean_background[k];
  }
  const auto mapped = predict_properties(rpost, relabeled, {});
  std::vector<int> expected;
  for (int k : base.supported_clusters) expected.push_back(perm[k]);
  std::sort(expected.begin(), expected.end());
  CHECK(mapped.supported_clusters == expected);
}

static Corpus rep_corpus() {
  std::vector<CorpusRecord> records;
  for (int i = 0; i < 12; ++i) records.push_back({"gf" + std::to_string(i), "text", {"great food"}, ""});
  for (int i = 0; i < 5; ++i) records.push_back({"t" + std::to_string(i), "text", {"tasty"}, ""});
  records.push_back({"solo", "text", {"quiet"}, ""});
  return build_corpus(records);
}

TEST_CASE("representative keyphrase is the most annotated member") {
  const Corpus corpus = rep_corpus();
  TrainedModel model;
  model.hyper.num_topics = 3;
  // "great food" (12 uses) and "tasty" (5) share cluster 0; "quiet" in 1.
  model.clustering = {0, 0, 1};
  const auto rep = representative_keyphrase(0, model, corpus);
  REQUIRE(rep.has_value());
  CHECK(corpus.keyphrases[*rep].surface == "great food");

  const auto solo = representative_keyphrase(1, model, corpus);
  REQUIRE(solo.has_value());
  CHECK(corpus.keyphrases[*solo].surface == "quiet");

  CHECK_FALSE(representative_keyphrase(2, model, corpus).has_value());  // word-only topic

  const auto reps = compute_representatives(model, corpus);
  CHECK(reps[0] == corpus.keyphrase_id("great food"));
  CHECK(reps[2] == -1);
}

TEST_CASE("representative ties break lexicographically") {
  const Corpus corpus = build_corpus({
      {"a", "", {"zebra"}, ""},
      {"b", "", {"apple"}, ""},
  });
  TrainedModel model;
  model.hyper.num_topics = 1;
  model.clustering = {0, 0};
  const auto rep = representative_keyphrase(0, model, corpus);
  REQUIRE(rep.has_value());
  CHECK(corpus.keyphrases[*rep].surface == "apple");
}

TEST_CASE("aggregation requires min_support reviews") {
  const std::map<int, std::string> reps = {{0, "great food"}, {1, "cheap"}};
  std::vector<PropertyPrediction> reviews(5);
  for (auto& r : reviews) r.doc_id = "r";
  reviews[0].supported_clusters = {0};
  reviews[1].supported_clusters = {0, 1};
  // clusters: 0 on two reviews, 1 on one review.

  const auto two = aggregate("prod", reviews, 2, reps);
  CHECK(two.supported_clusters == std::vector<int>{0});
  CHECK(two.pros_cons == std::vector<std::string>{"great food"});
  CHECK(two.review_count == 5);
  CHECK(two.min_support == 2);

  const auto three = aggregate("prod", reviews, 3, reps);
  CHECK(three.supported_clusters.empty());

  const auto empty = aggregate("prod", {}, 2, reps);
  CHECK(empty.supported_clusters.empty());
  CHECK(empty.review_count == 0);

  CHECK_THROWS_AS(aggregate("prod", reviews, 0, reps), std::invalid_argument);
}

TEST_CASE("raising min_support never adds a supported property") {
  RandomSource rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PropertyPrediction> reviews(5);
    for (auto& r : reviews)
      for (int k = 0; k < 4; ++k)
        if (rng.bernoulli(0.4)) r.supported_clusters.push_back(k);
    std::vector<int> prev;
    for (int support = 1; support <= 6; ++support) {
      const auto summary = aggregate("p", reviews, support, {});
      if (support > 1)
        for (int k : summary.supported_clusters)
          CHECK(std::find(prev.begin(), prev.end(), k) != prev.end());
      prev = summary.supported_clusters;
    }
  }
}

TEST_CASE("raising a threshold never adds a prediction") {
  RandomSource rng(12);
  TrainedModel model = toy_model(4, 2, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}});
  model.representatives = {-1, -1, -1, -1};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> mass(4);
    double sum = 0.0;
    for (auto& m : mass) {
      m = rng.uniform_pos();
      sum += m;
    }
    for (auto& m : mass) m /= sum;
    const TopicPosterior post{"d", mass};
    model.thresholds = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const auto before = predict_properties(post, model, {}).supported_clusters;
    const int bump = static_cast<int>(rng.uniform_int(4));
    model.thresholds[bump] += rng.uniform01();
    const auto after = predict_properties(post, model, {}).supported_clusters;
    for (int k : after) CHECK(std::find(before.begin(), before.end(), k) != before.end());
  }
}
