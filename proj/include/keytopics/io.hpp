#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "keytopics/model.hpp"

namespace keytopics {

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

inline nlohmann::json hyper_to_json(const HyperParams& h) {
  return nlohmann::json{{"num_topics", h.num_topics},
                        {"psi0", h.psi0},
                        {"phi0", h.phi0},
                        {"theta0", h.theta0},
                        {"lambda0", {h.lambda0.a, h.lambda0.b}},
                        {"alpha_same", {h.alpha_same.a, h.alpha_same.b}},
                        {"alpha_diff", {h.alpha_diff.a, h.alpha_diff.b}},
                        {"epsilon", h.epsilon}};
}

inline HyperParams hyper_from_json(const nlohmann::json& j) {
  HyperParams h;
  h.num_topics = j.at("num_topics").get<int>();
  h.psi0 = j.at("psi0").get<double>();
  h.phi0 = j.at("phi0").get<double>();
  h.theta0 = j.at("theta0").get<double>();
  h.lambda0 = {j.at("lambda0")[0].get<double>(), j.at("lambda0")[1].get<double>()};
  h.alpha_same = {j.at("alpha_same")[0].get<double>(), j.at("alpha_same")[1].get<double>()};
  h.alpha_diff = {j.at("alpha_diff")[0].get<double>(), j.at("alpha_diff")[1].get<double>()};
  h.epsilon = j.at("epsilon").get<double>();
  return h;
}

// A trained model plus the vocabulary and keyphrase surfaces it was trained
// against; everything inference on new text needs.
struct SavedModel {
  TrainedModel model;
  std::vector<std::string> vocabulary;
  std::vector<std::string> keyphrases;
};

inline constexpr int kModelFormatVersion = 1;

inline void save_model(const SavedModel& saved, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["hyper"] = hyper_to_json(saved.model.hyper);
  j["clustering"] = saved.model.clustering;
  j["thresholds"] = saved.model.thresholds;
  j["representatives"] = saved.model.representatives;
  j["language_model_samples"] = saved.model.language_model_samples;
  j["vocabulary"] = saved.vocabulary;
  j["keyphrases"] = saved.keyphrases;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump() << "\n";
}

inline SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid model file: " + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
    throw std::runtime_error(path + ": unsupported model format version");
  SavedModel saved;
  saved.model.hyper = hyper_from_json(j.at("hyper"));
  saved.model.clustering = j.at("clustering").get<std::vector<int>>();
  saved.model.thresholds = j.at("thresholds").get<std::vector<double>>();
  saved.model.representatives = j.at("representatives").get<std::vector<int>>();
  saved.model.language_model_samples =
      j.at("language_model_samples").get<std::vector<std::vector<std::vector<double>>>>();
  saved.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  saved.keyphrases = j.at("keyphrases").get<std::vector<std::string>>();
  if (saved.model.language_model_samples.empty())
    throw std::runtime_error(path + ": model holds no language-model samples");
  return saved;
}

// Model clustering as a surface -> label map, the same shape as a gold
// clustering file; lets rand-index comparisons treat both uniformly.
inline void write_clustering_json(const TrainedModel& model, const std::vector<std::string>& keyphrases,
                                  const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t l = 0; l < keyphrases.size(); ++l)
    j[keyphrases[l]] = "c" + std::to_string(model.clustering.at(l));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write clustering file: " + path);
  out << j.dump(2) << "\n";
}

struct PosteriorRecord {
  std::string doc_id;
  std::vector<double> posterior;
};

inline void write_posteriors(const std::vector<PosteriorRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write posterior file: " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.doc_id}, {"posterior", r.posterior}};
    out << j.dump() << "\n";
  }
}

inline std::vector<PosteriorRecord> read_posteriors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open posterior file: " + path);
  std::vector<PosteriorRecord> records;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    records.push_back({j.at("id").get<std::string>(), j.at("posterior").get<std::vector<double>>()});
  }
  return records;
}

struct PredictionRecord {
  std::string doc_id;
  std::vector<int> clusters;
  std::vector<std::string> keyphrases;
  std::vector<double> posterior;
};

inline void write_predictions(const std::vector<PredictionRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions file: " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.doc_id}, {"clusters", r.clusters}, {"keyphrases", r.keyphrases},
                     {"posterior", r.posterior}};
    out << j.dump() << "\n";
  }
}

inline std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file: " + path);
  std::vector<PredictionRecord> records;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    PredictionRecord r;
    r.doc_id = j.at("id").get<std::string>();
    r.clusters = j.at("clusters").get<std::vector<int>>();
    r.keyphrases = j.at("keyphrases").get<std::vector<std::string>>();
    if (j.contains("posterior")) r.posterior = j["posterior"].get<std::vector<double>>();
    records.push_back(std::move(r));
  }
  return records;
}

struct SummaryRecord {
  std::string product_id;
  std::vector<std::string> pros_cons;
  int review_count = 0;
  int min_support = 0;
};

inline void write_summaries(const std::vector<SummaryRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write summary file: " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"product_id", r.product_id},
                     {"pros_cons", r.pros_cons},
                     {"review_count", r.review_count},
                     {"min_support", r.min_support}};
    out << j.dump() << "\n";
  }
}

// Latent truth of a synthetic corpus, for oracle tests and external checks.
inline void write_truth_json(const SyntheticCorpus& synth, const std::string& path) {
  nlohmann::json j;
  j["vocabulary"] = synth.corpus.vocabulary;
  nlohmann::json kps = nlohmann::json::array();
  for (const auto& kp : synth.corpus.keyphrases) kps.push_back(kp.surface);
  j["keyphrases"] = kps;
  nlohmann::json clustering = nlohmann::json::object();
  for (std::size_t l = 0; l < synth.corpus.keyphrases.size(); ++l)
    clustering[synth.corpus.keyphrases[l].surface] = "c" + std::to_string(synth.truth.cluster_of[l]);
  j["clustering"] = clustering;
  j["cluster_dist"] = synth.truth.cluster_dist;
  j["cluster_of"] = synth.truth.cluster_of;
  j["annotation_rate"] = synth.truth.annotation_rate;
  j["background"] = synth.truth.background;
  j["topic"] = synth.truth.topic;
  j["from_annotation"] = synth.truth.from_annotation;
  j["word_dist"] = synth.truth.word_dist;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write truth file: " + path);
  out << j.dump() << "\n";
}

}  // namespace keytopics
