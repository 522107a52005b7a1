#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "keytopics/corpus.hpp"
#include "keytopics/random.hpp"
#include "keytopics/similarity.hpp"

namespace keytopics {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct HyperParams {
  int num_topics = 20;             // K: shared cluster/topic count
  double psi0 = 0.001;             // cluster-distribution concentration
  double phi0 = 0.001;             // background topic concentration
  double theta0 = 0.0001;          // language-model concentration
  BetaParams lambda0{1.0, 1.0};    // prior on the annotation/background coin
  BetaParams alpha_same{2.0, 1.0}; // similarity of co-clustered keyphrases
  BetaParams alpha_diff{1.0, 2.0}; // similarity across clusters
  double epsilon = 1e-4;           // eta mass on unannotated topics

  void validate() const {
    if (num_topics < 1) throw std::invalid_argument("HyperParams: num_topics must be >= 1");
    if (!(psi0 > 0.0 && phi0 > 0.0 && theta0 > 0.0))
      throw std::invalid_argument("HyperParams: Dirichlet concentrations must be positive");
    if (!(lambda0.a > 0.0 && lambda0.b > 0.0 && alpha_same.a > 0.0 && alpha_same.b > 0.0 && alpha_diff.a > 0.0 &&
          alpha_diff.b > 0.0))
      throw std::invalid_argument("HyperParams: Beta parameters must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("HyperParams: epsilon must be in (0,1)");
  }
};

// All latent variables of one chain. Distributions are stored in linear
// space; coordinates that underflow to zero under sparse priors are handled
// by the samplers.
struct ModelState {
  std::vector<double> cluster_dist;                    // psi, length K
  std::vector<int> cluster_of;                         // x, per keyphrase
  std::vector<double> annotation_rate;                 // lambda, per document
  std::vector<std::vector<std::uint8_t>> from_annotation;  // c, per token
  std::vector<std::vector<double>> background;         // phi, D x K
  std::vector<std::vector<int>> topic;                 // z, per token
  std::vector<std::vector<double>> word_dist;          // theta, K x V
};

struct TrainedModel {
  std::vector<std::vector<std::vector<double>>> language_model_samples;  // retained theta snapshots
  std::vector<int> clustering;                                           // final x
  HyperParams hyper;
  std::vector<double> thresholds;      // per topic; empty until tuned
  std::vector<int> representatives;    // per cluster keyphrase id, -1 if none

  bool thresholds_tuned() const { return !thresholds.empty(); }
};

// Annotation topic distribution: weight 1 on every cluster holding one of the
// document's keyphrases, epsilon elsewhere, normalized. An empty annotation
// set degenerates to the uniform distribution.
inline std::vector<double> build_eta(const std::vector<int>& cluster_of, const std::vector<int>& annotations,
                                     int num_topics, double epsilon) {
  std::vector<double> eta(num_topics, 0.0);
  std::vector<char> covered(num_topics, 0);
  int distinct = 0;
  for (int kp : annotations) {
    const int k = cluster_of.at(kp);
    if (k < 0 || k >= num_topics) throw std::out_of_range("build_eta: cluster id out of range");
    if (!covered[k]) {
      covered[k] = 1;
      ++distinct;
    }
  }
  const double denom = distinct + (num_topics - distinct) * epsilon;
  for (int k = 0; k < num_topics; ++k) eta[k] = (covered[k] ? 1.0 : epsilon) / denom;
  return eta;
}

inline double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Log Beta density. Arguments at or beyond the open interval's ends are
// clamped inward by 1e-9: Beta(1,2) has zero density at 1, and a hard -inf
// would poison the cluster sampler when a similarity entry is exactly 0 or 1.
inline double log_beta_pdf(double s, const BetaParams& p) {
  constexpr double kEdge = 1e-9;
  const double x = std::min(std::max(s, kEdge), 1.0 - kEdge);
  return (p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x) - log_beta_fn(p.a, p.b);
}

struct SyntheticCorpus {
  Corpus corpus;
  ModelState truth;
  SimilarityMatrix similarity;
};

// Runs the generative process end to end and keeps the latent state used for
// generation. Deterministic given the seed. Vocabulary words are named
// "w<idx>" and keyphrases "kp<idx>" so the synthetic corpus serializes like
// any other.
inline SyntheticCorpus forward_generate(const HyperParams& hyper, int num_docs, int num_keyphrases,
                                        int tokens_per_doc, int vocab_size, int annotations_per_doc,
                                        std::uint64_t seed) {
  hyper.validate();
  if (num_docs < 1 || num_keyphrases < 1 || tokens_per_doc < 1 || vocab_size < 1 || annotations_per_doc < 1)
    throw std::invalid_argument("forward_generate: all sizes must be >= 1");
  if (annotations_per_doc > num_keyphrases)
    throw std::invalid_argument("forward_generate: annotations_per_doc exceeds keyphrase count");

  const int K = hyper.num_topics;
  RandomSource rng(seed);
  SyntheticCorpus out;
  ModelState& state = out.truth;

  state.cluster_dist = rng.dirichlet_symmetric(static_cast<std::size_t>(K), hyper.psi0);
  state.cluster_of.resize(num_keyphrases);
  for (int l = 0; l < num_keyphrases; ++l)
    state.cluster_of[l] = static_cast<int>(rng.categorical(state.cluster_dist));

  // One Beta draw per unordered pair, mirrored; the diagonal is fixed at 1
  // and never enters any likelihood.
  out.similarity = SimilarityMatrix(static_cast<std::size_t>(num_keyphrases));
  for (int i = 0; i < num_keyphrases; ++i) {
    for (int j = i + 1; j < num_keyphrases; ++j) {
      const bool same = state.cluster_of[i] == state.cluster_of[j];
      const BetaParams& p = same ? hyper.alpha_same : hyper.alpha_diff;
      const double s = rng.beta_draw(p.a, p.b);
      out.similarity.at(i, j) = s;
      out.similarity.at(j, i) = s;
    }
  }

  state.word_dist.resize(K);
  for (int k = 0; k < K; ++k)
    state.word_dist[k] = rng.dirichlet_symmetric(static_cast<std::size_t>(vocab_size), hyper.theta0);

  Corpus& corpus = out.corpus;
  corpus.vocabulary.resize(vocab_size);
  for (int v = 0; v < vocab_size; ++v) corpus.vocabulary[v] = "w" + std::to_string(v);
  corpus.keyphrases.resize(num_keyphrases);
  for (int l = 0; l < num_keyphrases; ++l) {
    corpus.keyphrases[l].id = l;
    corpus.keyphrases[l].surface = "kp" + std::to_string(l);
    corpus.keyphrases[l].tokens = {corpus.keyphrases[l].surface};
  }

  state.annotation_rate.resize(num_docs);
  state.background.resize(num_docs);
  state.from_annotation.resize(num_docs);
  state.topic.resize(num_docs);
  corpus.documents.resize(num_docs);

  std::vector<int> pool(num_keyphrases);
  for (int d = 0; d < num_docs; ++d) {
    Document& doc = corpus.documents[d];
    doc.id = "doc" + std::to_string(d);

    state.background[d] = rng.dirichlet_symmetric(static_cast<std::size_t>(K), hyper.phi0);

    // Annotations drawn uniformly without replacement (partial Fisher-Yates).
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < annotations_per_doc; ++i) {
      const std::size_t j = i + rng.uniform_int(static_cast<std::uint64_t>(num_keyphrases - i));
      std::swap(pool[i], pool[j]);
    }
    doc.annotations.assign(pool.begin(), pool.begin() + annotations_per_doc);
    std::sort(doc.annotations.begin(), doc.annotations.end());

    const std::vector<double> eta = build_eta(state.cluster_of, doc.annotations, K, hyper.epsilon);
    state.annotation_rate[d] = rng.beta_draw(hyper.lambda0.a, hyper.lambda0.b);

    state.from_annotation[d].resize(tokens_per_doc);
    state.topic[d].resize(tokens_per_doc);
    doc.tokens.resize(tokens_per_doc);
    for (int n = 0; n < tokens_per_doc; ++n) {
      const bool from_eta = rng.bernoulli(state.annotation_rate[d]);
      state.from_annotation[d][n] = from_eta ? 1 : 0;
      const int z = static_cast<int>(rng.categorical(from_eta ? eta : state.background[d]));
      state.topic[d][n] = z;
      doc.tokens[n] = static_cast<int>(rng.categorical(state.word_dist[z]));
    }
  }
  corpus.rebuild_index();
  return out;
}

}  // namespace keytopics
