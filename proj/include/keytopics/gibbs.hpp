#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "keytopics/corpus.hpp"
#include "keytopics/io.hpp"
#include "keytopics/model.hpp"
#include "keytopics/random.hpp"
#include "keytopics/similarity.hpp"

namespace keytopics {

enum class ClusteringMode { joint, frozen, independent };

inline std::string to_string(ClusteringMode mode) {
  switch (mode) {
    case ClusteringMode::joint: return "joint";
    case ClusteringMode::frozen: return "frozen";
    case ClusteringMode::independent: return "independent";
  }
  return "joint";
}

inline ClusteringMode clustering_mode_from_string(const std::string& s) {
  if (s == "joint") return ClusteringMode::joint;
  if (s == "frozen") return ClusteringMode::frozen;
  if (s == "independent") return ClusteringMode::independent;
  throw std::invalid_argument("unknown clustering mode: " + s);
}

struct TrainConfig {
  HyperParams hyper;
  int stage1_iters = 5000;
  int stage2_iters = 5000;
  int joint_iters = 100000;
  int retain_last = 1000;  // theta snapshots kept from the end of stage 3
  ClusteringMode mode = ClusteringMode::joint;
  std::vector<int> fixed_clustering;  // required in frozen mode
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables

  void validate(std::size_t num_keyphrases) const {
    hyper.validate();
    if (stage1_iters < 0 || stage2_iters < 0 || joint_iters < 0)
      throw std::invalid_argument("TrainConfig: iteration counts must be non-negative");
    if (retain_last < 1 || retain_last > joint_iters)
      throw std::invalid_argument("TrainConfig: retain_last must be in [1, joint_iters]");
    if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every must be non-negative");
    if (mode == ClusteringMode::frozen) {
      if (fixed_clustering.size() != num_keyphrases)
        throw std::invalid_argument("TrainConfig: frozen mode requires a clustering covering every keyphrase");
      for (int k : fixed_clustering)
        if (k < 0 || k >= hyper.num_topics)
          throw std::invalid_argument("TrainConfig: fixed clustering label out of range");
    }
  }
};

// Conjugate updates: the posterior concentration is the prior plus the counts.
inline std::vector<double> dirichlet_posterior_params(double prior, const std::vector<int>& counts) {
  if (!(prior > 0.0)) throw std::invalid_argument("dirichlet_posterior_params: prior must be positive");
  std::vector<double> conc(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("dirichlet_posterior_params: negative count");
    conc[i] = prior + static_cast<double>(counts[i]);
  }
  return conc;
}

inline BetaParams beta_posterior_params(const BetaParams& prior, long long ones, long long zeros) {
  if (ones < 0 || zeros < 0) throw std::invalid_argument("beta_posterior_params: negative count");
  return {prior.a + static_cast<double>(ones), prior.b + static_cast<double>(zeros)};
}

// log integral of Dirichlet(conc) against the multinomial counts; the usual
// ratio of normalizing constants.
inline double log_dirichlet_multinomial(const std::vector<int>& counts, double conc) {
  const double dim = static_cast<double>(counts.size());
  long long total = 0;
  double lp = 0.0;
  for (int c : counts) {
    total += c;
    if (c > 0) lp += std::lgamma(conc + c) - std::lgamma(conc);
  }
  lp += std::lgamma(dim * conc) - std::lgamma(dim * conc + static_cast<double>(total));
  return lp;
}

struct CountTables {
  std::vector<int> cluster_counts;                       // keyphrases per cluster
  std::vector<std::vector<int>> doc_topic_background;    // z counts with c=0, per doc
  std::vector<std::vector<int>> doc_topic_annotation;    // z counts with c=1, per doc
  std::vector<std::vector<int>> topic_word;              // K x V
  std::vector<long long> topic_totals;                   // tokens per topic
  std::vector<int> doc_background_totals;                // c=0 tokens per doc
  std::vector<int> doc_annotation_totals;                // c=1 tokens per doc
};

inline constexpr int kCheckpointFormatVersion = 1;

// One Gibbs chain over the full model. The chain owns its state and random
// source exclusively; run several instances with distinct seeds for multiple
// chains. Sweep order is fixed for reproducibility: cluster distribution,
// cluster assignments (when the stage samples them), per-document coins,
// background distributions, language models, then a source/topic pass over
// every token.
class GibbsTrainer {
 public:
  using ProgressCallback = std::function<void(const GibbsTrainer&)>;

  GibbsTrainer(const Corpus& corpus, const SimilarityMatrix& sim, TrainConfig config)
      : corpus_(&corpus), sim_(&sim), cfg_(std::move(config)), rng_(cfg_.seed) {
    cfg_.validate(corpus.num_keyphrases());
    if (sim.size != corpus.num_keyphrases())
      throw std::invalid_argument("GibbsTrainer: similarity matrix does not match keyphrase count");
    docs_by_keyphrase_ = corpus.documents_by_keyphrase();
  }

  int total_iterations() const { return cfg_.stage1_iters + cfg_.stage2_iters + cfg_.joint_iters; }
  int iteration() const { return iteration_; }
  bool finished() const { return iteration_ >= total_iterations(); }
  const TrainConfig& config() const { return cfg_; }
  const ModelState& state() const { return state_; }
  const CountTables& counts() const { return counts_; }

  // 1-based stage of a sweep index: stage 1 clusters only, stage 2 text with
  // the clustering frozen, stage 3 the configured mode.
  int stage_at(int iter) const {
    if (iter < cfg_.stage1_iters) return 1;
    if (iter < cfg_.stage1_iters + cfg_.stage2_iters) return 2;
    return 3;
  }
  int stage() const { return stage_at(iteration_); }

  // Draws the initial state: cluster assignments uniform (or the supplied
  // clustering in frozen mode), continuous parameters from their priors,
  // source bits fair coins, topics uniform.
  void initialize() {
    const int K = cfg_.hyper.num_topics;
    const std::size_t L = corpus_->num_keyphrases();
    const std::size_t D = corpus_->num_documents();
    const std::size_t V = corpus_->vocab_size();

    state_.cluster_dist = rng_.dirichlet_symmetric(K, cfg_.hyper.psi0);
    state_.cluster_of.resize(L);
    if (cfg_.mode == ClusteringMode::frozen) {
      state_.cluster_of = cfg_.fixed_clustering;
    } else {
      for (std::size_t l = 0; l < L; ++l)
        state_.cluster_of[l] = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(K)));
    }
    state_.word_dist.assign(K, {});
    if (V > 0)
      for (int k = 0; k < K; ++k) state_.word_dist[k] = rng_.dirichlet_symmetric(V, cfg_.hyper.theta0);

    state_.annotation_rate.resize(D);
    state_.background.resize(D);
    state_.from_annotation.resize(D);
    state_.topic.resize(D);
    for (std::size_t d = 0; d < D; ++d) {
      state_.annotation_rate[d] = rng_.beta_draw(cfg_.hyper.lambda0.a, cfg_.hyper.lambda0.b);
      state_.background[d] = rng_.dirichlet_symmetric(K, cfg_.hyper.phi0);
      const std::size_t n = corpus_->documents[d].tokens.size();
      state_.from_annotation[d].resize(n);
      state_.topic[d].resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        state_.from_annotation[d][i] = rng_.bernoulli(0.5) ? 1 : 0;
        state_.topic[d][i] = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(K)));
      }
    }
    rebuild_counts();
    initialized_ = true;
  }

  // One full sweep; false once the schedule is exhausted.
  bool step() {
    if (!initialized_) throw std::logic_error("GibbsTrainer: initialize() before step()");
    if (finished()) return false;
    const int s = stage();
    resample_cluster_dist();
    if (s == 1) {
      if (cfg_.mode != ClusteringMode::frozen)
        for (std::size_t l = 0; l < corpus_->num_keyphrases(); ++l)
          resample_cluster_assignment(static_cast<int>(l), /*include_text=*/false);
    } else {
      if (s == 3 && cfg_.mode == ClusteringMode::joint)
        for (std::size_t l = 0; l < corpus_->num_keyphrases(); ++l)
          resample_cluster_assignment(static_cast<int>(l), /*include_text=*/true);
      resample_annotation_rates();
      resample_backgrounds();
      resample_word_dists();
      resample_tokens();
    }
    ++iteration_;
    if (iteration_ > total_iterations() - cfg_.retain_last) retained_.push_back(state_.word_dist);
    return true;
  }

  TrainedModel finish() const {
    if (!finished()) throw std::logic_error("GibbsTrainer: schedule not complete");
    TrainedModel model;
    model.language_model_samples = retained_;
    model.clustering = state_.cluster_of;
    model.hyper = cfg_.hyper;
    return model;
  }

  TrainedModel train(const ProgressCallback& on_sweep = {}) {
    initialize();
    while (step())
      if (on_sweep) on_sweep(*this);
    return finish();
  }

  // Replaces the latent state wholesale and rebuilds every count table.
  // Lets tests pin the chain to an exact configuration.
  void set_state(ModelState s) {
    const int K = cfg_.hyper.num_topics;
    if (s.cluster_of.size() != corpus_->num_keyphrases() || s.topic.size() != corpus_->num_documents() ||
        s.cluster_dist.size() != static_cast<std::size_t>(K))
      throw std::invalid_argument("set_state: dimensions do not match the corpus");
    for (int k : s.cluster_of)
      if (k < 0 || k >= K) throw std::invalid_argument("set_state: cluster id out of range");
    state_ = std::move(s);
    rebuild_counts();
    initialized_ = true;
  }

  // Annotation topic distribution of one document under the current
  // clustering.
  std::vector<double> eta(int d) const {
    const int K = cfg_.hyper.num_topics;
    const std::vector<int>& members = doc_cluster_members_[d];
    const int distinct = doc_distinct_clusters_[d];
    const double denom = distinct + (K - distinct) * cfg_.hyper.epsilon;
    std::vector<double> out(K);
    for (int k = 0; k < K; ++k) out[k] = (members[k] > 0 ? 1.0 : cfg_.hyper.epsilon) / denom;
    return out;
  }

  // Conditional of one keyphrase's cluster assignment, normalized.
  std::vector<double> cluster_conditional(int l, bool include_text) const {
    std::vector<double> logits = cluster_logits(l, include_text);
    const double lse = log_sum_exp(logits);
    for (double& x : logits) x = std::exp(x - lse);
    return logits;
  }

  // Conditional of one token's topic given its current source bit.
  std::vector<double> topic_conditional(int d, int n) const {
    const std::vector<double> eta_d = eta(d);
    const std::vector<double>& source = state_.from_annotation[d][n] ? eta_d : state_.background[d];
    const int w = corpus_->documents[d].tokens[n];
    std::vector<double> p(cfg_.hyper.num_topics);
    double total = 0.0;
    for (int k = 0; k < cfg_.hyper.num_topics; ++k) {
      p[k] = source[k] * state_.word_dist[k][w];
      total += p[k];
    }
    if (!(total > 0.0)) throw std::runtime_error("topic conditional: all weights are zero");
    for (double& x : p) x /= total;
    return p;
  }

  // p(c = 1 | ...) for one token given its current topic.
  double annotation_source_conditional(int d, int n) const {
    const int z = state_.topic[d][n];
    const double lam = state_.annotation_rate[d];
    const double p1 = lam * eta(d)[z];
    const double p0 = (1.0 - lam) * state_.background[d][z];
    const double total = p0 + p1;
    if (!(total > 0.0)) throw std::runtime_error("source conditional: both branches are zero");
    return p1 / total;
  }

  // Joint log density of the discrete state and the observed data with the
  // continuous parameters integrated out analytically. Finite even when
  // sparse Dirichlet draws underflow, which makes it the convergence trace.
  double log_density() const {
    const HyperParams& h = cfg_.hyper;
    const std::size_t L = corpus_->num_keyphrases();
    double lp = log_dirichlet_multinomial(counts_.cluster_counts, h.psi0);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = i + 1; j < L; ++j)
        lp += log_beta_pdf((*sim_)(i, j),
                           state_.cluster_of[i] == state_.cluster_of[j] ? h.alpha_same : h.alpha_diff);
    for (std::size_t d = 0; d < corpus_->num_documents(); ++d) {
      lp += log_beta_fn(h.lambda0.a + counts_.doc_annotation_totals[d], h.lambda0.b + counts_.doc_background_totals[d]) -
            log_beta_fn(h.lambda0.a, h.lambda0.b);
      lp += log_dirichlet_multinomial(counts_.doc_topic_background[d], h.phi0);
      const std::vector<double> eta_d = eta(static_cast<int>(d));
      for (int k = 0; k < h.num_topics; ++k)
        if (counts_.doc_topic_annotation[d][k] > 0)
          lp += counts_.doc_topic_annotation[d][k] * std::log(eta_d[k]);
    }
    for (int k = 0; k < h.num_topics; ++k) lp += log_dirichlet_multinomial(counts_.topic_word[k], h.theta0);
    return lp;
  }

  // Recomputes every count table from the state and compares; throws on any
  // mismatch. Test hook.
  void validate_counts() const {
    GibbsTrainer fresh(*this);
    fresh.rebuild_counts();
    if (fresh.counts_.cluster_counts != counts_.cluster_counts ||
        fresh.counts_.doc_topic_background != counts_.doc_topic_background ||
        fresh.counts_.doc_topic_annotation != counts_.doc_topic_annotation ||
        fresh.counts_.topic_word != counts_.topic_word || fresh.counts_.topic_totals != counts_.topic_totals ||
        fresh.counts_.doc_background_totals != counts_.doc_background_totals ||
        fresh.counts_.doc_annotation_totals != counts_.doc_annotation_totals ||
        fresh.doc_cluster_members_ != doc_cluster_members_ ||
        fresh.doc_distinct_clusters_ != doc_distinct_clusters_)
      throw std::runtime_error("GibbsTrainer: count tables inconsistent with state");
    long long tokens = 0;
    for (const auto& doc : corpus_->documents) tokens += static_cast<long long>(doc.tokens.size());
    long long topic_sum = 0;
    for (long long t : counts_.topic_totals) topic_sum += t;
    if (topic_sum != tokens) throw std::runtime_error("GibbsTrainer: token conservation violated");
    int cluster_sum = 0;
    for (int c : counts_.cluster_counts) cluster_sum += c;
    if (cluster_sum != static_cast<int>(corpus_->num_keyphrases()))
      throw std::runtime_error("GibbsTrainer: cluster counts do not sum to keyphrase count");
  }

  void save_checkpoint(const std::string& path) const {
    if (!initialized_) throw std::logic_error("GibbsTrainer: nothing to checkpoint");
    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["config_hash"] = hex64(config_hash());
    j["iteration"] = iteration_;
    j["rng_state"] = rng_.serialize_state();
    j["cluster_dist"] = state_.cluster_dist;
    j["cluster_of"] = state_.cluster_of;
    j["annotation_rate"] = state_.annotation_rate;
    j["background"] = state_.background;
    j["topic"] = state_.topic;
    j["from_annotation"] = state_.from_annotation;
    j["word_dist"] = state_.word_dist;
    j["retained"] = retained_;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump() << "\n";
  }

  // Restores a chain from a checkpoint written under the same config; the
  // resumed trajectory matches an uninterrupted run draw for draw.
  static GibbsTrainer resume(const Corpus& corpus, const SimilarityMatrix& sim, const TrainConfig& config,
                             const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ": corrupt checkpoint: " + e.what());
    }
    GibbsTrainer trainer(corpus, sim, config);
    if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointFormatVersion)
      throw std::runtime_error(path + ": checkpoint format version mismatch");
    if (j.at("config_hash").get<std::string>() != hex64(trainer.config_hash()))
      throw std::runtime_error(path + ": checkpoint was written under a different configuration");
    try {
      trainer.iteration_ = j.at("iteration").get<int>();
      trainer.rng_.restore_state(j.at("rng_state").get<std::string>());
      trainer.state_.cluster_dist = j.at("cluster_dist").get<std::vector<double>>();
      trainer.state_.cluster_of = j.at("cluster_of").get<std::vector<int>>();
      trainer.state_.annotation_rate = j.at("annotation_rate").get<std::vector<double>>();
      trainer.state_.background = j.at("background").get<std::vector<std::vector<double>>>();
      trainer.state_.topic = j.at("topic").get<std::vector<std::vector<int>>>();
      trainer.state_.from_annotation = j.at("from_annotation").get<std::vector<std::vector<std::uint8_t>>>();
      trainer.state_.word_dist = j.at("word_dist").get<std::vector<std::vector<double>>>();
      trainer.retained_ = j.at("retained").get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ": corrupt checkpoint: " + e.what());
    }
    if (trainer.state_.cluster_of.size() != corpus.num_keyphrases() ||
        trainer.state_.topic.size() != corpus.num_documents())
      throw std::runtime_error(path + ": checkpoint dimensions do not match the corpus");
    trainer.rebuild_counts();
    trainer.initialized_ = true;
    return trainer;
  }

  std::uint64_t config_hash() const {
    nlohmann::json j;
    j["hyper"] = hyper_to_json(cfg_.hyper);
    j["stage1_iters"] = cfg_.stage1_iters;
    j["stage2_iters"] = cfg_.stage2_iters;
    j["joint_iters"] = cfg_.joint_iters;
    j["retain_last"] = cfg_.retain_last;
    j["mode"] = to_string(cfg_.mode);
    j["seed"] = cfg_.seed;
    j["fixed_clustering"] = cfg_.fixed_clustering;
    return fnv1a64(j.dump());
  }

 private:
  void rebuild_counts() {
    const int K = cfg_.hyper.num_topics;
    const std::size_t L = corpus_->num_keyphrases();
    const std::size_t D = corpus_->num_documents();
    const std::size_t V = corpus_->vocab_size();
    counts_.cluster_counts.assign(K, 0);
    for (std::size_t l = 0; l < L; ++l) ++counts_.cluster_counts[state_.cluster_of[l]];
    counts_.doc_topic_background.assign(D, std::vector<int>(K, 0));
    counts_.doc_topic_annotation.assign(D, std::vector<int>(K, 0));
    counts_.topic_word.assign(K, std::vector<int>(V, 0));
    counts_.topic_totals.assign(K, 0);
    counts_.doc_background_totals.assign(D, 0);
    counts_.doc_annotation_totals.assign(D, 0);
    for (std::size_t d = 0; d < D; ++d) {
      const auto& doc = corpus_->documents[d];
      for (std::size_t n = 0; n < doc.tokens.size(); ++n) {
        const int z = state_.topic[d][n];
        if (state_.from_annotation[d][n]) {
          ++counts_.doc_topic_annotation[d][z];
          ++counts_.doc_annotation_totals[d];
        } else {
          ++counts_.doc_topic_background[d][z];
          ++counts_.doc_background_totals[d];
        }
        ++counts_.topic_word[z][doc.tokens[n]];
        ++counts_.topic_totals[z];
      }
    }
    doc_cluster_members_.assign(D, std::vector<int>(K, 0));
    doc_distinct_clusters_.assign(D, 0);
    for (std::size_t d = 0; d < D; ++d) {
      for (int kp : corpus_->documents[d].annotations) {
        const int k = state_.cluster_of[kp];
        if (doc_cluster_members_[d][k]++ == 0) ++doc_distinct_clusters_[d];
      }
    }
  }

  void resample_cluster_dist() {
    state_.cluster_dist = rng_.dirichlet(dirichlet_posterior_params(cfg_.hyper.psi0, counts_.cluster_counts));
  }

  void resample_annotation_rates() {
    for (std::size_t d = 0; d < corpus_->num_documents(); ++d) {
      const BetaParams p = beta_posterior_params(cfg_.hyper.lambda0, counts_.doc_annotation_totals[d],
                                                 counts_.doc_background_totals[d]);
      state_.annotation_rate[d] = rng_.beta_draw(p.a, p.b);
    }
  }

  void resample_backgrounds() {
    for (std::size_t d = 0; d < corpus_->num_documents(); ++d)
      state_.background[d] =
          rng_.dirichlet(dirichlet_posterior_params(cfg_.hyper.phi0, counts_.doc_topic_background[d]));
  }

  void resample_word_dists() {
    if (corpus_->vocab_size() == 0) return;
    for (int k = 0; k < cfg_.hyper.num_topics; ++k)
      state_.word_dist[k] = rng_.dirichlet(dirichlet_posterior_params(cfg_.hyper.theta0, counts_.topic_word[k]));
  }

  // Source bit then topic, per token. The current assignment always has
  // positive weight because the distributions were just resampled from counts
  // that include it.
  void resample_tokens() {
    const int K = cfg_.hyper.num_topics;
    std::vector<double> weights(K);
    for (std::size_t d = 0; d < corpus_->num_documents(); ++d) {
      const auto& doc = corpus_->documents[d];
      if (doc.tokens.empty()) continue;
      const std::vector<double> eta_d = eta(static_cast<int>(d));
      const double lam = state_.annotation_rate[d];
      for (std::size_t n = 0; n < doc.tokens.size(); ++n) {
        const int w = doc.tokens[n];
        int z = state_.topic[d][n];
        const bool c_old = state_.from_annotation[d][n] != 0;

        const double p1 = lam * eta_d[z];
        const double p0 = (1.0 - lam) * state_.background[d][z];
        const double total = p0 + p1;
        if (!(total > 0.0)) throw std::runtime_error("source conditional vanished during sweep");
        const bool c_new = rng_.uniform01() * total < p1;
        if (c_new != c_old) {
          if (c_old) {
            --counts_.doc_topic_annotation[d][z];
            --counts_.doc_annotation_totals[d];
            ++counts_.doc_topic_background[d][z];
            ++counts_.doc_background_totals[d];
          } else {
            --counts_.doc_topic_background[d][z];
            --counts_.doc_background_totals[d];
            ++counts_.doc_topic_annotation[d][z];
            ++counts_.doc_annotation_totals[d];
          }
          state_.from_annotation[d][n] = c_new ? 1 : 0;
        }

        const std::vector<double>& source = c_new ? eta_d : state_.background[d];
        for (int k = 0; k < K; ++k) weights[k] = source[k] * state_.word_dist[k][w];
        const int z_new = static_cast<int>(rng_.categorical(weights));
        if (z_new != z) {
          auto& table = c_new ? counts_.doc_topic_annotation[d] : counts_.doc_topic_background[d];
          --table[z];
          ++table[z_new];
          --counts_.topic_word[z][w];
          ++counts_.topic_word[z_new][w];
          --counts_.topic_totals[z];
          ++counts_.topic_totals[z_new];
          state_.topic[d][n] = z_new;
        }
      }
    }
  }

  std::vector<double> cluster_logits(int l, bool include_text) const {
    const HyperParams& h = cfg_.hyper;
    const int K = h.num_topics;
    const std::size_t L = corpus_->num_keyphrases();
    std::vector<double> logits(K);
    for (int k = 0; k < K; ++k) logits[k] = std::log(state_.cluster_dist[k]);

    // Similarity likelihood. The cross-cluster density applies to every pair
    // regardless of the candidate, so only the same-vs-cross difference
    // enters, binned by the other keyphrase's assignment.
    std::vector<double> delta(K, 0.0);
    for (std::size_t other = 0; other < L; ++other) {
      if (static_cast<int>(other) == l) continue;
      const double s = (*sim_)(l, other);
      delta[state_.cluster_of[other]] += log_beta_pdf(s, h.alpha_same) - log_beta_pdf(s, h.alpha_diff);
    }
    for (int k = 0; k < K; ++k) logits[k] += delta[k];

    if (include_text) {
      const double log_eps = std::log(h.epsilon);
      const int old = state_.cluster_of[l];
      for (int d : docs_by_keyphrase_[l]) {
        const int ann_total = counts_.doc_annotation_totals[d];
        if (ann_total == 0) continue;
        const std::vector<int>& members = doc_cluster_members_[d];
        const std::vector<int>& ann = counts_.doc_topic_annotation[d];
        const int distinct_without = doc_distinct_clusters_[d] - (members[old] == 1 ? 1 : 0);
        double eps_sum_without = 0.0;
        for (int j = 0; j < K; ++j) {
          if (ann[j] == 0) continue;
          const int m = members[j] - (j == old ? 1 : 0);
          if (m == 0) eps_sum_without += ann[j] * log_eps;
        }
        for (int k = 0; k < K; ++k) {
          const int mk = members[k] - (k == old ? 1 : 0);
          const int covered = distinct_without + (mk == 0 ? 1 : 0);
          const double denom = covered + (K - covered) * h.epsilon;
          double contrib = eps_sum_without - ann_total * std::log(denom);
          if (mk == 0) contrib -= ann[k] * log_eps;  // candidate covers topic k
          logits[k] += contrib;
        }
      }
    }
    return logits;
  }

  void resample_cluster_assignment(int l, bool include_text) {
    const std::vector<double> logits = cluster_logits(l, include_text);
    const int k_new = static_cast<int>(rng_.categorical_logits(logits));
    const int k_old = state_.cluster_of[l];
    if (k_new == k_old) return;
    --counts_.cluster_counts[k_old];
    ++counts_.cluster_counts[k_new];
    for (int d : docs_by_keyphrase_[l]) {
      if (--doc_cluster_members_[d][k_old] == 0) --doc_distinct_clusters_[d];
      if (doc_cluster_members_[d][k_new]++ == 0) ++doc_distinct_clusters_[d];
    }
    state_.cluster_of[l] = k_new;
  }

  const Corpus* corpus_;
  const SimilarityMatrix* sim_;
  TrainConfig cfg_;
  ModelState state_;
  CountTables counts_;
  RandomSource rng_;
  std::vector<std::vector<int>> docs_by_keyphrase_;
  std::vector<std::vector<int>> doc_cluster_members_;  // annotated keyphrases per cluster, per doc
  std::vector<int> doc_distinct_clusters_;
  std::vector<std::vector<std::vector<double>>> retained_;
  int iteration_ = 0;
  bool initialized_ = false;
};

}  // namespace keytopics
