#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "keytopics/corpus.hpp"

namespace keytopics {

// L x L pairwise keyphrase similarities in [0,1]; symmetric with unit
// diagonal. The diagonal never enters the model likelihood (pair products run
// over distinct keyphrases only).
struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> values;  // row-major

  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n) : size(n), values(n * n, 0.0) {
    for (std::size_t i = 0; i < n; ++i) at(i, i) = 1.0;
  }

  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * size + j]; }

  void validate() const {
    if (values.size() != size * size) throw std::runtime_error("SimilarityMatrix: bad dimensions");
    for (std::size_t i = 0; i < size; ++i) {
      if (std::abs((*this)(i, i) - 1.0) > 1e-12)
        throw std::runtime_error("SimilarityMatrix: diagonal entry is not 1");
      for (std::size_t j = 0; j < size; ++j) {
        const double v = (*this)(i, j);
        if (!(v >= 0.0 && v <= 1.0)) throw std::runtime_error("SimilarityMatrix: entry outside [0,1]");
        if (std::abs(v - (*this)(j, i)) > 1e-9) throw std::runtime_error("SimilarityMatrix: not symmetric");
      }
    }
  }
};

// dot(u,v) / (|u||v|); 0 when either norm vanishes. Non-negative inputs give
// results in [0,1].
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  return cosine(std::span<const double>(u), std::span<const double>(v));
}

// Word-frequency vector of a keyphrase surface, keyed by token.
inline std::map<std::string, int> lexical_vector(const Keyphrase& kp) { return kp.token_counts(); }

inline double cosine_counts(const std::map<std::string, int>& u, const std::map<std::string, int>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (const auto& [tok, c] : u) {
    nu += static_cast<double>(c) * c;
    auto it = v.find(tok);
    if (it != v.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [tok, c] : v) nv += static_cast<double>(c) * c;
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// True iff `phrase` occurs as a contiguous token run inside `tokens`.
inline bool contains_phrase(const std::vector<int>& tokens, const std::vector<int>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t start = 0; start + phrase.size() <= tokens.size(); ++start) {
    bool match = true;
    for (std::size_t i = 0; i < phrase.size(); ++i) {
      if (tokens[start + i] != phrase[i]) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

// Keyphrase tokens mapped into the corpus vocabulary; nullopt when any token
// never occurs in document text (the phrase then cannot match any document).
inline std::optional<std::vector<int>> phrase_vocab_ids(const Keyphrase& kp, const Corpus& corpus) {
  std::vector<int> ids;
  ids.reserve(kp.tokens.size());
  for (const auto& tok : kp.tokens) {
    const int id = corpus.vocab_id(tok);
    if (id < 0) return std::nullopt;
    ids.push_back(id);
  }
  return ids;
}

// True iff the document text contains the keyphrase surface as a contiguous
// token sequence after normalization. Shared match rule for the similarity
// features and the in-text baselines.
inline bool document_contains_keyphrase(const Document& doc, const Keyphrase& kp, const Corpus& corpus) {
  const auto ids = phrase_vocab_ids(kp, corpus);
  return ids && contains_phrase(doc.tokens, *ids);
}

// Entry l' counts the documents annotated with `kp` whose text contains
// keyphrase l' contiguously; one count per document. Includes the self entry.
inline std::vector<double> cooccurrence_vector(const Keyphrase& kp, const Corpus& corpus) {
  const std::size_t L = corpus.num_keyphrases();
  std::vector<double> vec(L, 0.0);
  for (const auto& doc : corpus.documents) {
    bool annotated = false;
    for (int a : doc.annotations)
      if (a == kp.id) {
        annotated = true;
        break;
      }
    if (!annotated) continue;
    for (std::size_t other = 0; other < L; ++other)
      if (document_contains_keyphrase(doc, corpus.keyphrases[other], corpus)) vec[other] += 1.0;
  }
  return vec;
}

// values[l][l'] = w_lex * cosine(lexical vectors) + w_cooc * cosine(
// co-occurrence vectors); diagonal forced to 1. Both feature cosines are in
// [0,1], so any convex combination is too.
inline SimilarityMatrix build_similarity_matrix(const Corpus& corpus, double w_lex = 0.5, double w_cooc = 0.5) {
  if (!(w_lex >= 0.0) || !(w_cooc >= 0.0) || std::abs(w_lex + w_cooc - 1.0) > 1e-9)
    throw std::invalid_argument("build_similarity_matrix: weights must be non-negative and sum to 1");
  const std::size_t L = corpus.num_keyphrases();
  SimilarityMatrix sim(L);
  if (L == 0) return sim;

  // Which keyphrases each document's text contains, computed once.
  std::vector<std::optional<std::vector<int>>> phrase_ids(L);
  for (std::size_t l = 0; l < L; ++l) phrase_ids[l] = phrase_vocab_ids(corpus.keyphrases[l], corpus);
  std::vector<std::vector<int>> contained(corpus.num_documents());
  for (std::size_t d = 0; d < corpus.num_documents(); ++d)
    for (std::size_t l = 0; l < L; ++l)
      if (phrase_ids[l] && contains_phrase(corpus.documents[d].tokens, *phrase_ids[l]))
        contained[d].push_back(static_cast<int>(l));

  std::vector<std::vector<double>> cooc(L, std::vector<double>(L, 0.0));
  for (std::size_t d = 0; d < corpus.num_documents(); ++d)
    for (int l : corpus.documents[d].annotations)
      for (int other : contained[d]) cooc[l][other] += 1.0;

  std::vector<std::map<std::string, int>> lex(L);
  for (std::size_t l = 0; l < L; ++l) lex[l] = lexical_vector(corpus.keyphrases[l]);

  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = i + 1; j < L; ++j) {
      const double v = w_lex * cosine_counts(lex[i], lex[j]) + w_cooc * cosine(cooc[i], cooc[j]);
      sim.at(i, j) = v;
      sim.at(j, i) = v;
    }
    sim.at(i, i) = 1.0;
  }
  return sim;
}

// CSV dump with a header row/column of keyphrase surfaces. Values are written
// with enough digits to round-trip exactly.
inline void write_similarity_csv(const SimilarityMatrix& sim, const Corpus& corpus, std::ostream& out) {
  if (sim.size != corpus.num_keyphrases())
    throw std::invalid_argument("write_similarity_csv: matrix/corpus size mismatch");
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  out << "keyphrase";
  for (const auto& kp : corpus.keyphrases) out << ',' << quote(kp.surface);
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < sim.size; ++i) {
    out << quote(corpus.keyphrases[i].surface);
    for (std::size_t j = 0; j < sim.size; ++j) out << ',' << sim(i, j);
    out << '\n';
  }
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}
}  // namespace detail

// Reads a similarity CSV and aligns rows/columns with the corpus keyphrase
// ids by surface.
inline SimilarityMatrix read_similarity_csv(std::istream& in, const Corpus& corpus) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("similarity CSV: empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() != corpus.num_keyphrases() + 1)
    throw std::runtime_error("similarity CSV: header size does not match corpus keyphrase count");
  std::vector<int> col_to_id(corpus.num_keyphrases());
  for (std::size_t c = 1; c < header.size(); ++c) {
    const int id = corpus.keyphrase_id(normalize_phrase(header[c]));
    if (id < 0) throw std::runtime_error("similarity CSV: unknown keyphrase in header: " + header[c]);
    col_to_id[c - 1] = id;
  }
  SimilarityMatrix sim(corpus.num_keyphrases());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != corpus.num_keyphrases() + 1)
      throw std::runtime_error("similarity CSV: row width mismatch");
    const int row_id = corpus.keyphrase_id(normalize_phrase(fields[0]));
    if (row_id < 0) throw std::runtime_error("similarity CSV: unknown keyphrase: " + fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const double v = std::stod(fields[c]);
      sim.at(static_cast<std::size_t>(row_id), static_cast<std::size_t>(col_to_id[c - 1])) = v;
    }
    ++rows;
  }
  if (rows != corpus.num_keyphrases()) throw std::runtime_error("similarity CSV: missing rows");
  sim.validate();
  return sim;
}

inline SimilarityMatrix read_similarity_csv(const std::string& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open similarity CSV: " + path);
  return read_similarity_csv(in, corpus);
}

}  // namespace keytopics
