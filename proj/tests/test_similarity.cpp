#include <doctest.h>

#include <sstream>

#include "keytopics/corpus.hpp"
#include "keytopics/similarity.hpp"

using namespace keytopics;

TEST_CASE("cosine basics") {
  const std::vector<double> u{1.0, 2.0, 3.0};
  CHECK(cosine(u, u) == doctest::Approx(1.0));
  CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  // dot 1 over sqrt(2)*sqrt(2), worked by hand
  CHECK(cosine({1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}) == doctest::Approx(0.5));
  CHECK(cosine({0.0, 0.0}, {1.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(cosine({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("lexical vectors count surface tokens") {
  Keyphrase kp;
  kp.surface = "very very good";
  kp.tokens = tokenize(kp.surface);
  const auto vec = lexical_vector(kp);
  CHECK(vec.at("very") == 2);
  CHECK(vec.at("good") == 1);

  Keyphrase gf;
  gf.surface = "good food";
  gf.tokens = tokenize(gf.surface);
  CHECK(cosine_counts(lexical_vector(gf), lexical_vector(gf)) == doctest::Approx(1.0));
}

TEST_CASE("cooccurrence vectors count annotated documents containing a phrase") {
  // 3 docs annotated with "good food"; "very tasty food" appears contiguously
  // in two of their texts.
  const Corpus corpus = build_corpus({
      {"a", "the food was very tasty food today", {"good food"}, ""},
      {"b", "very tasty food indeed", {"good food"}, ""},
      {"c", "nothing to see", {"good food"}, ""},
      {"d", "some text", {"very tasty food"}, ""},
  });
  const int gf = corpus.keyphrase_id("good food");
  const int vtf = corpus.keyphrase_id("very tasty food");
  REQUIRE(gf >= 0);
  REQUIRE(vtf >= 0);
  const auto vec = cooccurrence_vector(corpus.keyphrases[gf], corpus);
  CHECK(vec[vtf] == doctest::Approx(2.0));

  // A keyphrase annotating zero documents has an all-zero vector.
  Keyphrase ghost;
  ghost.id = static_cast<int>(corpus.num_keyphrases());
  ghost.surface = "ghost";
  ghost.tokens = {"ghost"};
  for (double v : cooccurrence_vector(ghost, corpus)) CHECK(v == 0.0);
}

TEST_CASE("single-doc cooccurrence picks up contained keyphrases") {
  const Corpus corpus = build_corpus({
      {"a", "this place has b things", {"aphrase", "b"}, ""},
  });
  const int a = corpus.keyphrase_id("aphrase");
  const int b = corpus.keyphrase_id("b");
  const auto vec = cooccurrence_vector(corpus.keyphrases[a], corpus);
  CHECK(vec[b] == doctest::Approx(1.0));
  CHECK(vec[a] == doctest::Approx(0.0));  // "aphrase" itself is not in the text
}

TEST_CASE("build_similarity_matrix blends lexical and cooccurrence cosines") {
  // "good food" vs "good time": lexical cosine 1/2; neither surface occurs in
  // any text, so both co-occurrence vectors are zero and that cosine is 0.
  const Corpus corpus = build_corpus({
      {"a", "nothing relevant here", {"good food", "good time"}, ""},
  });
  const SimilarityMatrix sim = build_similarity_matrix(corpus, 0.5, 0.5);
  const int i = corpus.keyphrase_id("good food");
  const int j = corpus.keyphrase_id("good time");
  CHECK(sim(i, j) == doctest::Approx(0.25));
  CHECK(sim(i, i) == 1.0);
  CHECK(sim(j, j) == 1.0);

  // Pure lexical and pure co-occurrence weightings.
  CHECK(build_similarity_matrix(corpus, 1.0, 0.0)(i, j) == doctest::Approx(0.5));
  CHECK(build_similarity_matrix(corpus, 0.0, 1.0)(i, j) == doctest::Approx(0.0));
  CHECK_THROWS_AS(build_similarity_matrix(corpus, 0.5, 0.6), std::invalid_argument);
}

static Corpus mixed_corpus() {
  return build_corpus({
      {"a", "great food and a great time with friends", {"great food", "fun"}, ""},
      {"b", "the food was great food honestly", {"great food", "tasty food"}, ""},
      {"c", "tasty food and fun", {"tasty food"}, ""},
      {"d", "fun fun fun", {"fun", "great time"}, ""},
  });
}

TEST_CASE("similarity matrix is symmetric with unit diagonal and entries in [0,1]") {
  const Corpus corpus = mixed_corpus();
  const SimilarityMatrix sim = build_similarity_matrix(corpus);
  sim.validate();
  for (std::size_t i = 0; i < sim.size; ++i)
    for (std::size_t j = 0; j < sim.size; ++j) CHECK(sim(i, j) == sim(j, i));
}

TEST_CASE("permuting keyphrase ids permutes the matrix") {
  const Corpus corpus = mixed_corpus();
  // Same documents with each annotation list reversed: ids are assigned in a
  // different order but per-surface values must match.
  std::vector<CorpusRecord> reversed = {
      {"a", "great food and a great time with friends", {"fun", "great food"}, ""},
      {"b", "the food was great food honestly", {"tasty food", "great food"}, ""},
      {"c", "tasty food and fun", {"tasty food"}, ""},
      {"d", "fun fun fun", {"great time", "fun"}, ""},
  };
  const Corpus permuted = build_corpus(reversed);
  const SimilarityMatrix sim_a = build_similarity_matrix(corpus);
  const SimilarityMatrix sim_b = build_similarity_matrix(permuted);
  for (std::size_t i = 0; i < corpus.num_keyphrases(); ++i) {
    for (std::size_t j = 0; j < corpus.num_keyphrases(); ++j) {
      const int pi = permuted.keyphrase_id(corpus.keyphrases[i].surface);
      const int pj = permuted.keyphrase_id(corpus.keyphrases[j].surface);
      REQUIRE(pi >= 0);
      CHECK(sim_a(i, j) == doctest::Approx(sim_b(pi, pj)));
    }
  }
}

TEST_CASE("similarity CSV round-trips") {
  const Corpus corpus = mixed_corpus();
  const SimilarityMatrix sim = build_similarity_matrix(corpus);
  std::ostringstream out;
  write_similarity_csv(sim, corpus, out);
  std::istringstream in(out.str());
  const SimilarityMatrix back = read_similarity_csv(in, corpus);
  REQUIRE(back.size == sim.size);
  for (std::size_t i = 0; i < sim.size; ++i)
    for (std::size_t j = 0; j < sim.size; ++j) CHECK(back(i, j) == sim(i, j));
}

TEST_CASE("contains_phrase edge cases") {
  CHECK_FALSE(contains_phrase({1, 2, 3}, {}));
  CHECK_FALSE(contains_phrase({1, 2}, {1, 2, 3}));
  CHECK(contains_phrase({0, 1, 2, 3}, {1, 2}));
  CHECK_FALSE(contains_phrase({0, 1, 0, 2}, {1, 2}));
}
