#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "keytopics/corpus.hpp"
#include "keytopics/random.hpp"
#include "keytopics/similarity.hpp"

namespace keytopics {

struct PRF {
  double recall = 0.0;
  double precision = 0.0;
  double f_score = 0.0;

  static PRF from_rates(double recall, double precision) {
    PRF out;
    out.recall = recall;
    out.precision = precision;
    out.f_score = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return out;
  }

  static PRF from_counts(long long tp, long long fp, long long fn) {
    const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return from_rates(r, p);
  }
};

inline PRF prf(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  long long tp = 0;
  for (const auto& p : predicted)
    if (gold.count(p)) ++tp;
  return PRF::from_counts(tp, static_cast<long long>(predicted.size()) - tp,
                          static_cast<long long>(gold.size()) - tp);
}

// Total partition of an element universe into labeled clusters.
struct Clustering {
  std::map<std::string, std::string> assignment;  // element -> label

  static Clustering from_map(std::map<std::string, std::string> m) { return Clustering{std::move(m)}; }

  static Clustering from_ids(const std::vector<std::string>& elements, const std::vector<int>& labels) {
    if (elements.size() != labels.size()) throw std::invalid_argument("Clustering: element/label size mismatch");
    Clustering c;
    for (std::size_t i = 0; i < elements.size(); ++i) c.assignment[elements[i]] = "c" + std::to_string(labels[i]);
    return c;
  }
};

// Fraction of element pairs on which the two partitions agree (both co-assign
// or both separate). 1 for fewer than two elements.
inline double rand_index(const Clustering& a, const Clustering& b) {
  if (a.assignment.size() != b.assignment.size())
    throw std::invalid_argument("rand_index: clusterings cover different universes");
  std::map<std::string, long long> sizes_a, sizes_b;
  std::map<std::pair<std::string, std::string>, long long> joint;
  for (const auto& [element, label_a] : a.assignment) {
    auto it = b.assignment.find(element);
    if (it == b.assignment.end())
      throw std::invalid_argument("rand_index: element missing from second clustering: " + element);
    ++sizes_a[label_a];
    ++sizes_b[it->second];
    ++joint[{label_a, it->second}];
  }
  const long long n = static_cast<long long>(a.assignment.size());
  if (n < 2) return 1.0;
  auto pairs = [](long long m) { return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0; };
  double together_both = 0.0, together_a = 0.0, together_b = 0.0;
  for (const auto& [labels, m] : joint) together_both += pairs(m);
  for (const auto& [label, m] : sizes_a) together_a += pairs(m);
  for (const auto& [label, m] : sizes_b) together_b += pairs(m);
  const double total = pairs(n);
  // agreements = co-assigned in both + separated in both
  return (total + 2.0 * together_both - together_a - together_b) / total;
}

// Paired approximate randomization: per trial each item's outcomes are
// swapped between the systems with probability one half, and the trial counts
// when the resulting absolute metric gap is at least the observed one.
// Add-one smoothing keeps p in [1/(trials+1), 1].
template <typename Outcome, typename Metric>
double approximate_randomization(const std::vector<Outcome>& a, const std::vector<Outcome>& b, Metric metric,
                                 int trials, std::uint64_t seed) {
  if (a.size() != b.size()) throw std::invalid_argument("approximate_randomization: outcome length mismatch");
  if (trials < 1) throw std::invalid_argument("approximate_randomization: trials must be >= 1");
  const double observed = std::abs(metric(a) - metric(b));
  RandomSource rng(seed);
  std::vector<Outcome> ta(a), tb(b);
  long long at_least = 0;
  for (int t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (rng.bernoulli(0.5)) {
        ta[i] = b[i];
        tb[i] = a[i];
      } else {
        ta[i] = a[i];
        tb[i] = b[i];
      }
    }
    if (std::abs(metric(ta) - metric(tb)) >= observed) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(trials + 1);
}

// Per-item contribution to a pooled P/R/F computation.
struct ItemCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

inline double pooled_f_score(const std::vector<ItemCounts>& items) {
  long long tp = 0, fp = 0, fn = 0;
  for (const auto& it : items) {
    tp += it.tp;
    fp += it.fp;
    fn += it.fn;
  }
  return PRF::from_counts(tp, fp, fn).f_score;
}

// ---------------------------------------------------------------------------
// Annotation quality analysis

struct PropertyAnnotationStats {
  std::string property;
  PRF incompleteness;                  // author annotations vs gold labels
  long long gold_occurrences = 0;      // weight for the averages
  int keyphrase_count = 0;             // members with >= min_occurrences uses
  double top_coverage_pct = 0.0;       // share of the most common realization
  std::string top_keyphrase;
  long long total_occurrences = 0;     // annotation occurrences of all members
  std::vector<double> coverage_curve;  // cumulative percent by keyphrase rank
};

struct AnnotationReport {
  std::vector<PropertyAnnotationStats> properties;
  PRF weighted_average;        // weighted by gold property occurrence
  double avg_keyphrase_count = 0.0;
  double avg_top_coverage = 0.0;
};

// Incompleteness: per property, P/R/F of the author annotations (mapped to
// properties through the gold clustering) against the gold document labels.
// Inconsistency: per property, the number of member keyphrases with at least
// min_occurrences uses and the coverage share of the most common one, plus a
// cumulative coverage curve. Averages are weighted by gold property
// occurrence.
inline AnnotationReport annotation_analysis(const Corpus& corpus,
                                            const std::map<std::string, std::set<std::string>>& gold_labels,
                                            const std::map<std::string, std::string>& gold_clustering,
                                            int min_occurrences = 5) {
  std::set<std::string> property_set;
  for (const auto& [surface, label] : gold_clustering) property_set.insert(label);
  for (const auto& [doc, props] : gold_labels) property_set.insert(props.begin(), props.end());

  const std::vector<long long> occurrences = corpus.keyphrase_occurrences();

  // Author property sets per document, via the gold clustering.
  std::map<std::string, std::set<std::string>> author_properties;
  for (const auto& doc : corpus.documents) {
    auto& props = author_properties[doc.id];
    for (int kp : doc.annotations) {
      auto it = gold_clustering.find(corpus.keyphrases[kp].surface);
      if (it != gold_clustering.end()) props.insert(it->second);
    }
  }

  AnnotationReport report;
  double weight_total = 0.0, wr = 0.0, wp = 0.0, wf = 0.0, wc = 0.0, wcov = 0.0;
  for (const auto& property : property_set) {
    PropertyAnnotationStats stats;
    stats.property = property;

    long long tp = 0, fp = 0, fn = 0;
    for (const auto& [doc_id, gold_props] : gold_labels) {
      const bool gold = gold_props.count(property) > 0;
      auto it = author_properties.find(doc_id);
      const bool predicted = it != author_properties.end() && it->second.count(property) > 0;
      if (gold) ++stats.gold_occurrences;
      if (predicted && gold) ++tp;
      else if (predicted) ++fp;
      else if (gold) ++fn;
    }
    stats.incompleteness = PRF::from_counts(tp, fp, fn);

    std::vector<std::pair<long long, std::string>> member_counts;
    for (const auto& [surface, label] : gold_clustering) {
      if (label != property) continue;
      const int id = corpus.keyphrase_id(surface);
      const long long occ = id >= 0 ? occurrences[id] : 0;
      member_counts.emplace_back(occ, surface);
      stats.total_occurrences += occ;
      if (occ >= min_occurrences) ++stats.keyphrase_count;
    }
    std::sort(member_counts.begin(), member_counts.end(),
              [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    if (!member_counts.empty() && stats.total_occurrences > 0) {
      stats.top_keyphrase = member_counts.front().second;
      stats.top_coverage_pct = 100.0 * static_cast<double>(member_counts.front().first) /
                               static_cast<double>(stats.total_occurrences);
      double cumulative = 0.0;
      for (const auto& [occ, surface] : member_counts) {
        cumulative += static_cast<double>(occ);
        stats.coverage_curve.push_back(100.0 * cumulative / static_cast<double>(stats.total_occurrences));
      }
    }

    const double w = static_cast<double>(stats.gold_occurrences);
    weight_total += w;
    wr += w * stats.incompleteness.recall;
    wp += w * stats.incompleteness.precision;
    wf += w * stats.incompleteness.f_score;
    wc += w * stats.keyphrase_count;
    wcov += w * stats.top_coverage_pct;
    report.properties.push_back(std::move(stats));
  }
  if (weight_total > 0.0) {
    report.weighted_average.recall = wr / weight_total;
    report.weighted_average.precision = wp / weight_total;
    report.weighted_average.f_score = wf / weight_total;
    report.avg_keyphrase_count = wc / weight_total;
    report.avg_top_coverage = wcov / weight_total;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Non-classifier baselines

enum class BaselineMethod { random, keyphrase_in_text, cluster_in_text };

// Predicted keyphrase ids for one document. `clustering` is required for
// cluster_in_text (model, gold, or independent clusters all work); `rng` for
// the sampled random baseline.
inline std::vector<int> baseline_predict(BaselineMethod method, const Document& doc, const Corpus& corpus,
                                         const std::vector<int>* clustering = nullptr,
                                         RandomSource* rng = nullptr) {
  const std::size_t L = corpus.num_keyphrases();
  std::vector<int> predicted;
  switch (method) {
    case BaselineMethod::random: {
      if (!rng) throw std::invalid_argument("baseline_predict: random baseline requires a random source");
      for (std::size_t l = 0; l < L; ++l)
        if (rng->bernoulli(0.5)) predicted.push_back(static_cast<int>(l));
      break;
    }
    case BaselineMethod::keyphrase_in_text: {
      for (std::size_t l = 0; l < L; ++l)
        if (document_contains_keyphrase(doc, corpus.keyphrases[l], corpus)) predicted.push_back(static_cast<int>(l));
      break;
    }
    case BaselineMethod::cluster_in_text: {
      if (!clustering || clustering->size() != L)
        throw std::invalid_argument("baseline_predict: cluster_in_text requires a clustering over every keyphrase");
      std::set<int> supported_clusters;
      for (std::size_t l = 0; l < L; ++l)
        if (document_contains_keyphrase(doc, corpus.keyphrases[l], corpus)) supported_clusters.insert((*clustering)[l]);
      for (std::size_t l = 0; l < L; ++l)
        if (supported_clusters.count((*clustering)[l])) predicted.push_back(static_cast<int>(l));
      break;
    }
  }
  return predicted;
}

// Analytic expectation of the coin-flip baseline: recall one half; precision
// is the share of (document, property) slots that are actually annotated.
inline PRF random_baseline_expectation(long long total_property_occurrences, long long num_documents,
                                       long long num_properties) {
  if (num_documents <= 0 || num_properties <= 0)
    throw std::invalid_argument("random_baseline_expectation: empty test set");
  const double precision = static_cast<double>(total_property_occurrences) /
                           (static_cast<double>(num_properties) * static_cast<double>(num_documents));
  return PRF::from_rates(0.5, precision);
}

// Keyphrases supported across one product's reviews by author annotations
// alone. Verbatim requires the keyphrase itself on at least min_support
// reviews; clustered accepts any same-cluster paraphrase.
inline std::vector<int> baseline_aggregate(bool clustered, const std::vector<const Document*>& reviews,
                                           const Corpus& corpus, const std::vector<int>* clustering,
                                           int min_support) {
  if (min_support < 1) throw std::invalid_argument("baseline_aggregate: min_support must be >= 1");
  const std::size_t L = corpus.num_keyphrases();
  if (clustered && (!clustering || clustering->size() != L))
    throw std::invalid_argument("baseline_aggregate: clustered aggregation requires a clustering");
  std::vector<int> support(L, 0);
  for (const Document* doc : reviews) {
    if (clustered) {
      std::set<int> clusters;
      for (int kp : doc->annotations) clusters.insert((*clustering)[kp]);
      for (std::size_t l = 0; l < L; ++l)
        if (clusters.count((*clustering)[l])) ++support[l];
    } else {
      for (int kp : doc->annotations) ++support[kp];
    }
  }
  std::vector<int> supported;
  for (std::size_t l = 0; l < L; ++l)
    if (support[l] >= min_support) supported.push_back(static_cast<int>(l));
  return supported;
}

// ---------------------------------------------------------------------------
// Property-level scoring

// Representative keyphrase of each property: the most frequently annotated
// member under the gold clustering, ties to the lexicographically smaller
// surface. A property counts as predicted for a document iff its
// representative keyphrase is in the predicted keyphrase set.
inline std::map<std::string, int> property_representatives(const std::map<std::string, std::string>& gold_clustering,
                                                           const Corpus& corpus) {
  const std::vector<long long> occurrences = corpus.keyphrase_occurrences();
  std::map<std::string, int> best;
  for (const auto& [surface, property] : gold_clustering) {
    const int id = corpus.keyphrase_id(surface);
    if (id < 0) continue;
    auto it = best.find(property);
    if (it == best.end()) {
      best[property] = id;
      continue;
    }
    const long long cur = occurrences[id], top = occurrences[it->second];
    if (cur > top || (cur == top && corpus.keyphrases[id].surface < corpus.keyphrases[it->second].surface))
      it->second = id;
  }
  return best;
}

// Antonym pairing read from the property label convention: two labels are
// antonyms when they differ only in a leading polarity word drawn from a
// known set of opposites ("good food" / "bad food", "small" / "large").
inline std::map<std::string, std::string> antonym_pairs(const std::set<std::string>& properties) {
  static const std::vector<std::pair<std::string, std::string>> opposites = {
      {"good", "bad"}, {"good", "poor"}, {"great", "bad"}, {"great", "limited"},
      {"high", "low"}, {"big", "small"}, {"small", "large"},
  };
  auto split_head = [](const std::string& label) {
    const auto pos = label.find(' ');
    return std::pair<std::string, std::string>{label.substr(0, pos == std::string::npos ? label.size() : pos),
                                               pos == std::string::npos ? std::string() : label.substr(pos + 1)};
  };
  std::map<std::string, std::string> pairs;
  for (const auto& a : properties) {
    const auto [head_a, rest_a] = split_head(a);
    for (const auto& b : properties) {
      if (a == b) continue;
      const auto [head_b, rest_b] = split_head(b);
      if (rest_a != rest_b) continue;
      for (const auto& [x, y] : opposites) {
        if ((head_a == x && head_b == y) || (head_a == y && head_b == x)) {
          pairs[a] = b;
          break;
        }
      }
    }
  }
  return pairs;
}

struct PropertyEvalResult {
  std::string property;
  PRF scores;
  long long docs_evaluated = 0;
};

struct EvalReport {
  std::vector<PropertyEvalResult> per_property;
  PRF micro;                            // pooled over every (document, property) decision
  std::vector<ItemCounts> per_item;     // aligned outcomes for significance testing
  std::vector<std::pair<std::string, std::string>> items;  // (doc, property) order of per_item
};

// Scores per-document predicted keyphrase sets against gold property labels.
// When restrict_to_annotated is set (free-text evaluation), each property is
// scored only on documents whose author annotations express it or its
// antonym; otherwise every document with gold labels is scored on every
// property.
inline EvalReport evaluate_property_predictions(
    const std::map<std::string, std::set<int>>& predicted_keyphrases,
    const std::map<std::string, std::set<std::string>>& gold_labels,
    const std::map<std::string, std::string>& gold_clustering, const Corpus& corpus,
    bool restrict_to_annotated = false) {
  const std::map<std::string, int> representatives = property_representatives(gold_clustering, corpus);
  std::set<std::string> properties;
  for (const auto& [p, id] : representatives) properties.insert(p);
  const std::map<std::string, std::string> antonyms = antonym_pairs(properties);

  // Author-expressed properties per document, for the restriction rule.
  std::map<std::string, std::set<std::string>> author_properties;
  if (restrict_to_annotated) {
    for (const auto& doc : corpus.documents) {
      auto& props = author_properties[doc.id];
      for (int kp : doc.annotations) {
        auto it = gold_clustering.find(corpus.keyphrases[kp].surface);
        if (it != gold_clustering.end()) props.insert(it->second);
      }
    }
  }

  EvalReport report;
  std::map<std::string, ItemCounts> property_counts;
  for (const auto& [doc_id, gold_props] : gold_labels) {
    const auto pred_it = predicted_keyphrases.find(doc_id);
    for (const auto& property : properties) {
      if (restrict_to_annotated) {
        auto ap = author_properties.find(doc_id);
        bool annotated = false;
        if (ap != author_properties.end()) {
          annotated = ap->second.count(property) > 0;
          auto anti = antonyms.find(property);
          if (!annotated && anti != antonyms.end()) annotated = ap->second.count(anti->second) > 0;
        }
        if (!annotated) continue;
      }
      const int rep = representatives.at(property);
      const bool predicted = pred_it != predicted_keyphrases.end() && pred_it->second.count(rep) > 0;
      const bool gold = gold_props.count(property) > 0;
      ItemCounts item;
      if (predicted && gold) item.tp = 1;
      else if (predicted) item.fp = 1;
      else if (gold) item.fn = 1;
      auto& pc = property_counts[property];
      pc.tp += item.tp;
      pc.fp += item.fp;
      pc.fn += item.fn;
      report.per_item.push_back(item);
      report.items.emplace_back(doc_id, property);
    }
  }

  long long tp = 0, fp = 0, fn = 0;
  for (const auto& property : properties) {
    const auto& pc = property_counts[property];
    PropertyEvalResult res;
    res.property = property;
    res.scores = PRF::from_counts(pc.tp, pc.fp, pc.fn);
    for (const auto& [doc, prop] : report.items)
      if (prop == property) ++res.docs_evaluated;
    report.per_property.push_back(std::move(res));
    tp += pc.tp;
    fp += pc.fp;
    fn += pc.fn;
  }
  report.micro = PRF::from_counts(tp, fp, fn);
  return report;
}

// Keyphrase set implied by a set of supported clusters under a clustering.
inline std::set<int> keyphrases_of_clusters(const std::vector<int>& clustering, const std::set<int>& clusters) {
  std::set<int> out;
  for (std::size_t l = 0; l < clustering.size(); ++l)
    if (clusters.count(clustering[l])) out.insert(static_cast<int>(l));
  return out;
}

}  // namespace keytopics
