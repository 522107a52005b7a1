#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "keytopics/corpus.hpp"
#include "keytopics/model.hpp"
#include "keytopics/random.hpp"

namespace keytopics {

struct TopicPosterior {
  std::string doc_id;
  std::vector<double> mean_background;  // posterior mean estimate of phi_d
};

struct PropertyPrediction {
  std::string doc_id;
  std::vector<int> supported_clusters;                 // sorted
  std::vector<std::string> representative_keyphrases;  // for supported clusters that hold keyphrases
};

struct AggregateSummary {
  std::string product_id;
  std::vector<int> supported_clusters;
  std::vector<std::string> pros_cons;
  int review_count = 0;
  int min_support = 0;
};

// Maps tokens of a document expressed in some corpus vocabulary into the
// model's training vocabulary. Out-of-vocabulary tokens are dropped: the
// trained language models carry no column for them.
inline std::vector<int> map_tokens_to_model(const Document& doc, const Corpus& corpus,
                                            const std::map<std::string, int>& model_vocab_index) {
  std::vector<int> out;
  out.reserve(doc.tokens.size());
  for (int t : doc.tokens) {
    auto it = model_vocab_index.find(corpus.vocabulary[t]);
    if (it != model_vocab_index.end()) out.push_back(it->second);
  }
  return out;
}

inline std::map<std::string, int> vocab_index_of(const std::vector<std::string>& vocabulary) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index[vocabulary[i]] = static_cast<int>(i);
  return index;
}

// Test-time inference: Gibbs over the document's topics and background
// distribution only, with every source bit pinned to the background side.
// The retained language-model snapshots are cycled round-robin across
// iterations instead of collapsing them to a point estimate. Returns the
// mean background distribution over the second half of the iterations.
//
// `tokens` must already be expressed in the model's vocabulary.
inline TopicPosterior infer_topic_distribution(const std::string& doc_id, const std::vector<int>& tokens,
                                               const TrainedModel& model, int iters, RandomSource& rng) {
  if (iters < 2) throw std::invalid_argument("infer_topic_distribution: iters must be >= 2");
  if (model.language_model_samples.empty())
    throw std::invalid_argument("infer_topic_distribution: model holds no language-model samples");
  const int K = model.hyper.num_topics;
  const double phi0 = model.hyper.phi0;
  const std::size_t snapshots = model.language_model_samples.size();

  std::vector<int> topic(tokens.size());
  std::vector<int> counts(K, 0);
  for (std::size_t n = 0; n < tokens.size(); ++n) {
    topic[n] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(K)));
    ++counts[topic[n]];
  }

  const int burn_in = iters / 2;
  std::vector<double> mean(K, 0.0);
  std::vector<double> conc(K), log_phi(K), phi(K), weights(K), logits(K);
  for (int t = 0; t < iters; ++t) {
    const auto& theta = model.language_model_samples[t % snapshots];
    for (int k = 0; k < K; ++k) conc[k] = phi0 + counts[k];
    log_phi = rng.dirichlet_log(conc);
    for (int k = 0; k < K; ++k) phi[k] = std::exp(log_phi[k]);

    for (std::size_t n = 0; n < tokens.size(); ++n) {
      const int w = tokens[n];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        weights[k] = phi[k] * theta[k][w];
        total += weights[k];
      }
      int z;
      if (total > 0.0) {
        z = static_cast<int>(rng.categorical(weights));
      } else {
        // Every product underflowed; fall back to log space, where the
        // background draw is still finite.
        for (int k = 0; k < K; ++k) logits[k] = log_phi[k] + std::log(theta[k][w]);
        z = static_cast<int>(rng.categorical_logits(logits));
      }
      if (z != topic[n]) {
        --counts[topic[n]];
        ++counts[z];
        topic[n] = z;
      }
    }
    if (t >= burn_in)
      for (int k = 0; k < K; ++k) mean[k] += phi[k];
  }

  const double draws = static_cast<double>(iters - burn_in);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    mean[k] = std::max(mean[k] / draws, 1e-12);  // keep coordinates strictly positive
    total += mean[k];
  }
  for (double& x : mean) x /= total;
  return {doc_id, std::move(mean)};
}

// Most frequently annotated member keyphrase of a cluster; ties go to the
// lexicographically smaller surface. nullopt for word-only topics.
inline std::optional<int> representative_keyphrase(int cluster, const TrainedModel& model, const Corpus& corpus) {
  const std::vector<long long> occurrences = corpus.keyphrase_occurrences();
  std::optional<int> best;
  for (std::size_t l = 0; l < model.clustering.size(); ++l) {
    if (model.clustering[l] != cluster) continue;
    if (!best) {
      best = static_cast<int>(l);
      continue;
    }
    const long long cur = occurrences[l], top = occurrences[*best];
    if (cur > top || (cur == top && corpus.keyphrases[l].surface < corpus.keyphrases[*best].surface))
      best = static_cast<int>(l);
  }
  return best;
}

inline std::vector<int> compute_representatives(const TrainedModel& model, const Corpus& corpus) {
  std::vector<int> reps(model.hyper.num_topics, -1);
  for (int k = 0; k < model.hyper.num_topics; ++k) {
    const auto r = representative_keyphrase(k, model, corpus);
    if (r) reps[k] = *r;
  }
  return reps;
}

struct PropertyThreshold {
  std::string property;
  int cluster = -1;
  double threshold = 1.01;
  double f_score = 0.0;
  bool has_positives = false;
};

// Per-property grid search over {0.00, 0.01, ..., 1.00} maximizing dev-set
// F-score. The grid scores with an inclusive comparison and ties resolve
// toward the larger threshold, so the returned value is the top of the
// optimal interval. Properties with no positive dev labels get 1.01 (never
// predict).
inline std::vector<PropertyThreshold> tune_thresholds(
    const std::vector<TopicPosterior>& dev_posteriors,
    const std::map<std::string, std::set<std::string>>& gold_labels,
    const std::map<std::string, int>& property_cluster) {
  if (dev_posteriors.empty()) throw std::invalid_argument("tune_thresholds: empty development set");
  std::vector<PropertyThreshold> out;
  for (const auto& [property, cluster] : property_cluster) {
    PropertyThreshold res;
    res.property = property;
    res.cluster = cluster;
    int positives = 0;
    for (const auto& post : dev_posteriors) {
      auto it = gold_labels.find(post.doc_id);
      if (it != gold_labels.end() && it->second.count(property)) ++positives;
    }
    if (positives == 0) {
      out.push_back(res);
      continue;
    }
    res.has_positives = true;
    double best_f = -1.0;
    double best_thr = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double thr = static_cast<double>(i) / 100.0;
      long long tp = 0, fp = 0, fn = 0;
      for (const auto& post : dev_posteriors) {
        const bool predicted = post.mean_background.at(cluster) >= thr;
        auto it = gold_labels.find(post.doc_id);
        const bool gold = it != gold_labels.end() && it->second.count(property) > 0;
        if (predicted && gold) ++tp;
        else if (predicted) ++fp;
        else if (gold) ++fn;
      }
      const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
      const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
      if (f >= best_f) {
        best_f = f;
        best_thr = thr;
      }
    }
    res.threshold = best_thr;
    res.f_score = best_f;
    out.push_back(res);
  }
  return out;
}

// Installs tuned thresholds into the per-topic vector. Topics not mapped to
// any property get 1.01 and are never predicted.
inline void apply_thresholds(TrainedModel& model, const std::vector<PropertyThreshold>& tuned) {
  model.thresholds.assign(model.hyper.num_topics, 1.01);
  for (const auto& t : tuned) {
    if (t.cluster < 0 || t.cluster >= model.hyper.num_topics)
      throw std::invalid_argument("apply_thresholds: cluster id out of range");
    model.thresholds[t.cluster] = t.threshold;
  }
}

// Supported clusters are those whose posterior mass strictly exceeds the
// tuned per-topic threshold.
inline PropertyPrediction predict_properties(const TopicPosterior& posterior, const TrainedModel& model,
                                             const std::vector<std::string>& keyphrase_surfaces) {
  if (!model.thresholds_tuned()) throw std::logic_error("predict_properties: thresholds are not tuned");
  if (posterior.mean_background.size() != static_cast<std::size_t>(model.hyper.num_topics))
    throw std::invalid_argument("predict_properties: posterior dimension mismatch");
  PropertyPrediction pred;
  pred.doc_id = posterior.doc_id;
  for (int k = 0; k < model.hyper.num_topics; ++k) {
    if (posterior.mean_background[k] > model.thresholds[k]) {
      pred.supported_clusters.push_back(k);
      if (!model.representatives.empty() && model.representatives[k] >= 0)
        pred.representative_keyphrases.push_back(keyphrase_surfaces.at(model.representatives[k]));
    }
  }
  return pred;
}

// Majority aggregation across one product's reviews: a cluster makes the
// summary iff at least min_support reviews predicted it.
inline AggregateSummary aggregate(const std::string& product_id, const std::vector<PropertyPrediction>& reviews,
                                  int min_support, const std::map<int, std::string>& representative_surface) {
  if (min_support < 1) throw std::invalid_argument("aggregate: min_support must be >= 1");
  AggregateSummary summary;
  summary.product_id = product_id;
  summary.review_count = static_cast<int>(reviews.size());
  summary.min_support = min_support;
  std::map<int, int> support;
  for (const auto& r : reviews)
    for (int k : r.supported_clusters) ++support[k];
  for (const auto& [cluster, count] : support) {
    if (count >= min_support) {
      summary.supported_clusters.push_back(cluster);
      auto it = representative_surface.find(cluster);
      if (it != representative_surface.end()) summary.pros_cons.push_back(it->second);
    }
  }
  return summary;
}

}  // namespace keytopics
