#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace keytopics {

// Lowercase alphanumeric-run tokenizer: ASCII letters and digits are kept
// (lowercased), bytes >= 0x80 are kept verbatim so multi-byte UTF-8
// characters survive, everything else separates tokens. No stemming, no
// stop-word removal.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char ch : text) {
    if (ch >= 0x80) {
      current.push_back(static_cast<char>(ch));
    } else if (std::isalnum(ch)) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

// Canonical surface form of a keyphrase: its tokens joined by single spaces.
// Two author keyphrases denote the same keyphrase iff their normalized forms
// match.
inline std::string normalize_phrase(std::string_view surface) {
  const std::vector<std::string> toks = tokenize(surface);
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

struct Keyphrase {
  int id = -1;
  std::string surface;               // normalized form, non-empty
  std::vector<std::string> tokens;   // tokenizer output of the surface

  std::map<std::string, int> token_counts() const {
    std::map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
  }
};

struct Document {
  std::string id;
  std::vector<int> tokens;       // vocabulary indices, order preserved
  std::vector<int> annotations;  // keyphrase ids, sorted, unique
  std::string product_id;        // empty when absent
};

// Immutable after construction; safe to share across concurrent readers.
class Corpus {
 public:
  std::vector<Document> documents;
  std::vector<Keyphrase> keyphrases;
  std::vector<std::string> vocabulary;

  int vocab_id(const std::string& token) const {
    auto it = vocab_index_.find(token);
    return it == vocab_index_.end() ? -1 : it->second;
  }

  int keyphrase_id(const std::string& normalized_surface) const {
    auto it = keyphrase_index_.find(normalized_surface);
    return it == keyphrase_index_.end() ? -1 : it->second;
  }

  std::size_t vocab_size() const { return vocabulary.size(); }
  std::size_t num_documents() const { return documents.size(); }
  std::size_t num_keyphrases() const { return keyphrases.size(); }

  // Documents annotated with each keyphrase, in document order.
  std::vector<std::vector<int>> documents_by_keyphrase() const {
    std::vector<std::vector<int>> index(keyphrases.size());
    for (std::size_t d = 0; d < documents.size(); ++d)
      for (int kp : documents[d].annotations) index[kp].push_back(static_cast<int>(d));
    return index;
  }

  // Number of documents annotated with each keyphrase.
  std::vector<long long> keyphrase_occurrences() const {
    std::vector<long long> occ(keyphrases.size(), 0);
    for (const auto& doc : documents)
      for (int kp : doc.annotations) ++occ[kp];
    return occ;
  }

  // Must be called after the public vectors are filled directly (the JSONL
  // parser and the synthetic generator both do).
  void rebuild_index() {
    vocab_index_.clear();
    keyphrase_index_.clear();
    for (std::size_t i = 0; i < vocabulary.size(); ++i) vocab_index_[vocabulary[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < keyphrases.size(); ++i) keyphrase_index_[keyphrases[i].surface] = static_cast<int>(i);
  }

 private:
  std::unordered_map<std::string, int> vocab_index_;
  std::unordered_map<std::string, int> keyphrase_index_;
};

struct CorpusStats {
  long long doc_count = 0;
  double avg_review_length = 0.0;
  double avg_keyphrases_per_review = 0.0;
  long long unique_keyphrase_count = 0;
  long long total_keyphrase_occurrences = 0;
};

struct CorpusRecord {
  std::string id;
  std::string text;
  std::vector<std::string> keyphrases;
  std::string product_id;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Assembles a corpus from in-memory records. Keyphrase ids follow first
// appearance of the normalized surface; the vocabulary is built from document
// text only; per-document annotations are a set (duplicates dropped).
// Keyphrases that normalize to the empty string carry no token content and
// are dropped.
inline Corpus build_corpus(const std::vector<CorpusRecord>& records) {
  Corpus corpus;
  std::unordered_map<std::string, int> vocab_index;
  std::unordered_map<std::string, int> keyphrase_index;
  std::set<std::string> seen_ids;

  for (const auto& rec : records) {
    if (!seen_ids.insert(rec.id).second)
      throw CorpusError("duplicate document id: " + rec.id);

    Document doc;
    doc.id = rec.id;
    doc.product_id = rec.product_id;
    for (const auto& token : tokenize(rec.text)) {
      auto [it, inserted] = vocab_index.try_emplace(token, static_cast<int>(corpus.vocabulary.size()));
      if (inserted) corpus.vocabulary.push_back(token);
      doc.tokens.push_back(it->second);
    }

    std::set<int> annotation_set;
    for (const auto& raw : rec.keyphrases) {
      const std::string surface = normalize_phrase(raw);
      if (surface.empty()) continue;
      auto [it, inserted] = keyphrase_index.try_emplace(surface, static_cast<int>(corpus.keyphrases.size()));
      if (inserted) {
        Keyphrase kp;
        kp.id = it->second;
        kp.surface = surface;
        kp.tokens = tokenize(surface);
        corpus.keyphrases.push_back(std::move(kp));
      }
      annotation_set.insert(it->second);
    }
    doc.annotations.assign(annotation_set.begin(), annotation_set.end());
    corpus.documents.push_back(std::move(doc));
  }
  corpus.rebuild_index();
  return corpus;
}

// One JSON object per line: {"id": string, "text": string,
// "keyphrases": [string], "product_id": string (optional)}.
inline Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  std::vector<CorpusRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object())
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": record is not a JSON object");
    if (!obj.contains("id") || !obj["id"].is_string())
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": missing string field \"id\"");
    if (!obj.contains("text") || !obj["text"].is_string())
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": missing string field \"text\"");
    if (!obj.contains("keyphrases") || !obj["keyphrases"].is_array())
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": missing array field \"keyphrases\"");

    CorpusRecord rec;
    rec.id = obj["id"].get<std::string>();
    if (!seen_ids.insert(rec.id).second)
      throw CorpusError(source_name + ":" + std::to_string(line_no) + ": duplicate document id: " + rec.id);
    rec.text = obj["text"].get<std::string>();
    for (const auto& kp : obj["keyphrases"]) {
      if (!kp.is_string())
        throw CorpusError(source_name + ":" + std::to_string(line_no) + ": keyphrase entries must be strings");
      rec.keyphrases.push_back(kp.get<std::string>());
    }
    if (obj.contains("product_id") && obj["product_id"].is_string())
      rec.product_id = obj["product_id"].get<std::string>();
    records.push_back(std::move(rec));
  }
  return build_corpus(records);
}

inline Corpus parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  return parse_corpus(in, path);
}

// Writes the normalized corpus back out; parse_corpus of the output
// reproduces the corpus exactly (ids, tokens, vocabulary).
inline void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    nlohmann::json obj;
    obj["id"] = doc.id;
    std::string text;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) text.push_back(' ');
      text += corpus.vocabulary[doc.tokens[i]];
    }
    obj["text"] = text;
    nlohmann::json kps = nlohmann::json::array();
    for (int kp : doc.annotations) kps.push_back(corpus.keyphrases[kp].surface);
    obj["keyphrases"] = kps;
    if (!doc.product_id.empty()) obj["product_id"] = doc.product_id;
    out << obj.dump() << "\n";
  }
}

inline void serialize_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  serialize_corpus(corpus, out);
}

inline CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.doc_count = static_cast<long long>(corpus.documents.size());
  stats.unique_keyphrase_count = static_cast<long long>(corpus.keyphrases.size());
  long long tokens = 0;
  long long annotations = 0;
  for (const auto& doc : corpus.documents) {
    tokens += static_cast<long long>(doc.tokens.size());
    annotations += static_cast<long long>(doc.annotations.size());
  }
  stats.total_keyphrase_occurrences = annotations;
  if (stats.doc_count > 0) {
    stats.avg_review_length = static_cast<double>(tokens) / static_cast<double>(stats.doc_count);
    stats.avg_keyphrases_per_review = static_cast<double>(annotations) / static_cast<double>(stats.doc_count);
  }
  return stats;
}

// Gold property-annotation file: JSONL {"id": string, "properties": [string]}.
inline std::map<std::string, std::set<std::string>> load_gold_properties(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open gold property file: " + path);
  std::map<std::string, std::set<std::string>> gold;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("properties") || !obj["properties"].is_array())
      throw CorpusError(path + ":" + std::to_string(line_no) + ": expected {\"id\", \"properties\"}");
    auto& props = gold[obj["id"].get<std::string>()];
    for (const auto& p : obj["properties"]) props.insert(p.get<std::string>());
  }
  return gold;
}

// Gold clustering file: one JSON object mapping keyphrase surface to cluster
// label. Surfaces are normalized on load so they line up with corpus
// keyphrase ids.
inline std::map<std::string, std::string> load_gold_clustering(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open gold clustering file: " + path);
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(path + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object()) throw CorpusError(path + ": clustering file must be a JSON object");
  std::map<std::string, std::string> clustering;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string surface = normalize_phrase(it.key());
    if (surface.empty()) continue;
    clustering[surface] = it.value().get<std::string>();
  }
  return clustering;
}

}  // namespace keytopics
