#include <doctest.h>

#include <cmath>

#include "keytopics/model.hpp"

using namespace keytopics;

TEST_CASE("hyperparameter defaults and validation") {
  const HyperParams h;
  CHECK(h.num_topics == 20);
  CHECK(h.psi0 == 0.001);
  CHECK(h.phi0 == 0.001);
  CHECK(h.theta0 == 0.0001);
  CHECK(h.lambda0.a == 1.0);
  CHECK(h.lambda0.b == 1.0);
  CHECK(h.alpha_same.a == 2.0);
  CHECK(h.alpha_same.b == 1.0);
  CHECK(h.alpha_diff.a == 1.0);
  CHECK(h.alpha_diff.b == 2.0);
  CHECK(h.epsilon == 1e-4);
  CHECK_NOTHROW(h.validate());

  HyperParams bad = h;
  bad.epsilon = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = h;
  bad.theta0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = h;
  bad.num_topics = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("build_eta normalizes annotated-cluster weights") {
  const double eps = 1e-4;
  // One keyphrase assigned to the middle of three topics.
  const auto eta = build_eta({1}, {0}, 3, eps);
  // Hand-normalized weights [eps, 1, eps] / (1 + 2 eps).
  CHECK(eta[0] == doctest::Approx(eps / (1 + 2 * eps)).epsilon(1e-9));
  CHECK(eta[1] == doctest::Approx(1.0 / (1 + 2 * eps)).epsilon(1e-9));
  CHECK(eta[2] == doctest::Approx(eps / (1 + 2 * eps)).epsilon(1e-9));
  CHECK(eta[0] == doctest::Approx(9.998e-5).epsilon(1e-4));
  CHECK(eta[1] == doctest::Approx(0.99980).epsilon(1e-4));

  // Both topics annotated: symmetry.
  const auto both = build_eta({0, 1}, {0, 1}, 2, eps);
  CHECK(both[0] == doctest::Approx(0.5));
  CHECK(both[1] == doctest::Approx(0.5));

  // Empty annotation set degenerates to uniform.
  const auto uniform = build_eta({0, 1}, {}, 4, eps);
  for (double v : uniform) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("build_eta output is a distribution with a positive floor") {
  for (int k : {1, 2, 5, 9}) {
    const double eps = 1e-4;
    const std::vector<int> clusters = {0, k > 1 ? 1 : 0, k - 1};
    const auto eta = build_eta(clusters, {0, 2}, k, eps);
    double sum = 0.0;
    int covered = (k > 1 && clusters[2] != clusters[0]) ? 2 : 1;
    const double floor = eps / (covered + (k - covered) * eps);
    for (double v : eta) {
      sum += v;
      CHECK(v >= floor - 1e-15);
      CHECK(v > 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("build_eta depends only on the covered-cluster set") {
  // Different keyphrases and assignments, same set {0, 2} of covered clusters.
  const auto a = build_eta({2, 0, 2, 1}, {0, 1}, 4, 1e-4);
  const auto b = build_eta({1, 2, 0, 3}, {1, 2}, 4, 1e-4);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("log_beta_pdf matches closed forms") {
  CHECK(log_beta_pdf(0.5, {2.0, 1.0}) == doctest::Approx(0.0));           // 2s at 0.5
  CHECK(log_beta_pdf(0.5, {1.0, 2.0}) == doctest::Approx(0.0));           // 2(1-s) at 0.5
  CHECK(std::exp(log_beta_pdf(0.9, {2.0, 1.0})) == doctest::Approx(1.8));  // 2s at 0.9
  // Endpoints are clamped inward instead of diverging.
  CHECK(std::isfinite(log_beta_pdf(0.0, {2.0, 1.0})));
  CHECK(std::isfinite(log_beta_pdf(1.0, {1.0, 2.0})));
}

TEST_CASE("exp(log_beta_pdf) integrates to one") {
  // Simpson's rule on [0,1]; both densities are finite at the endpoints.
  for (const BetaParams p : {BetaParams{2.0, 1.0}, BetaParams{1.0, 2.0}}) {
    const int n = 2000;
    const double h = 1.0 / n;
    double integral = std::exp(log_beta_pdf(0.0, p)) + std::exp(log_beta_pdf(1.0, p));
    for (int i = 1; i < n; ++i) integral += (i % 2 ? 4.0 : 2.0) * std::exp(log_beta_pdf(i * h, p));
    integral *= h / 3.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
  }
}

static HyperParams synth_hyper(int k) {
  HyperParams h;
  h.num_topics = k;
  h.psi0 = 100.0;  // balanced clusters
  h.phi0 = 1.0;
  h.theta0 = 0.1;
  return h;
}

TEST_CASE("forward_generate is deterministic given the seed") {
  const auto a = forward_generate(synth_hyper(3), 4, 6, 10, 8, 2, 77);
  const auto b = forward_generate(synth_hyper(3), 4, 6, 10, 8, 2, 77);
  CHECK(a.truth.cluster_of == b.truth.cluster_of);
  CHECK(a.truth.cluster_dist == b.truth.cluster_dist);
  CHECK(a.truth.word_dist == b.truth.word_dist);
  CHECK(a.similarity.values == b.similarity.values);
  for (std::size_t d = 0; d < a.corpus.num_documents(); ++d) {
    CHECK(a.corpus.documents[d].tokens == b.corpus.documents[d].tokens);
    CHECK(a.corpus.documents[d].annotations == b.corpus.documents[d].annotations);
  }
  const auto c = forward_generate(synth_hyper(3), 4, 6, 10, 8, 2, 78);
  CHECK(a.truth.cluster_dist != c.truth.cluster_dist);
}

TEST_CASE("forward_generate produces consistent dimensions and distributions") {
  const auto synth = forward_generate(synth_hyper(4), 6, 8, 12, 10, 3, 5);
  CHECK(synth.corpus.num_documents() == 6);
  CHECK(synth.corpus.num_keyphrases() == 8);
  CHECK(synth.corpus.vocab_size() == 10);
  for (const auto& theta : synth.truth.word_dist) {
    double sum = 0.0;
    for (double v : theta) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (const auto& doc : synth.corpus.documents) {
    CHECK(doc.tokens.size() == 12);
    CHECK(doc.annotations.size() == 3);
  }
  synth.similarity.validate();
  CHECK_THROWS_AS(forward_generate(synth_hyper(2), 1, 2, 1, 1, 3, 0), std::invalid_argument);
}

TEST_CASE("generated similarities track the Beta means by cluster agreement") {
  HyperParams h = synth_hyper(2);
  const auto synth = forward_generate(h, 1, 200, 1, 2, 1, 11);
  double within = 0.0, cross = 0.0;
  long long n_within = 0, n_cross = 0;
  for (int i = 0; i < 200; ++i) {
    for (int j = i + 1; j < 200; ++j) {
      if (synth.truth.cluster_of[i] == synth.truth.cluster_of[j]) {
        within += synth.similarity(i, j);
        ++n_within;
      } else {
        cross += synth.similarity(i, j);
        ++n_cross;
      }
    }
  }
  REQUIRE(n_within > 0);
  REQUIRE(n_cross > 0);
  CHECK(within / n_within == doctest::Approx(2.0 / 3.0).epsilon(0.075));
  CHECK(cross / n_cross == doctest::Approx(1.0 / 3.0).epsilon(0.15));
}

TEST_CASE("annotation-sourced token topics follow eta") {
  // One long document; chi-square goodness of fit of the c=1 token topics
  // against eta at significance 0.01.
  HyperParams h;
  h.num_topics = 4;
  h.psi0 = 100.0;
  h.phi0 = 1.0;
  h.theta0 = 0.1;
  h.lambda0 = {5.0, 1.0};  // most tokens drawn from eta
  const auto synth = forward_generate(h, 1, 8, 10000, 6, 8, 3);

  const auto eta = build_eta(synth.truth.cluster_of, synth.corpus.documents[0].annotations, 4, h.epsilon);
  // The test instance must cover every topic so expected counts are healthy.
  for (double v : eta) REQUIRE(v > 0.01);

  std::vector<long long> observed(4, 0);
  long long total = 0;
  for (std::size_t n = 0; n < synth.truth.topic[0].size(); ++n) {
    if (synth.truth.from_annotation[0][n]) {
      ++observed[synth.truth.topic[0][n]];
      ++total;
    }
  }
  REQUIRE(total > 1000);
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double expected = eta[k] * static_cast<double>(total);
    chi2 += (observed[k] - expected) * (observed[k] - expected) / expected;
  }
  CHECK(chi2 < 11.345);  // chi-square critical value, df=3, p=0.01
}
