#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rhetseg/errors.hpp"
#include "rhetseg/tokenizer.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

// External per-sentence vectors keyed by (doc_id, sentence index).
class SentenceEmbeddingStore {
  std::map<std::pair<std::string, int>, Eigen::VectorXd> vectors_;
  long dim_ = 0;

 public:
  explicit SentenceEmbeddingStore(long dim = 0) : dim_(dim) {}

  long dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  void insert(const std::string& doc_id, int index, Eigen::VectorXd v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_)
      throw FormatError("embedding dimension mismatch for " + doc_id + ":" +
                        std::to_string(index));
    if (!vectors_.emplace(std::make_pair(doc_id, index), std::move(v)).second)
      throw FormatError("duplicate embedding key " + doc_id + ":" + std::to_string(index));
  }

  const Eigen::VectorXd* find(const std::string& doc_id, int index) const {
    auto it = vectors_.find({doc_id, index});
    return it == vectors_.end() ? nullptr : &it->second;
  }

  const Eigen::VectorXd& require(const std::string& doc_id, int index) const {
    const auto* v = find(doc_id, index);
    if (!v)
      throw CoverageError("no sentence embedding for (" + doc_id + ", " +
                          std::to_string(index) + ")");
    return *v;
  }

  const std::map<std::pair<std::string, int>, Eigen::VectorXd>& all() const {
    return vectors_;
  }
};

// File format: first line "dim=<d>", then "<doc_id>\t<index>\t<v1> <v2> ...".
inline SentenceEmbeddingStore load_sentence_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim=", 0) != 0)
    throw FormatError(path + ":1: expected header \"dim=<d>\"");
  long dim = 0;
  try {
    dim = std::stol(line.substr(4));
  } catch (...) {
    throw FormatError(path + ":1: bad dimension in header");
  }
  if (dim <= 0) throw FormatError(path + ":1: dimension must be positive");

  SentenceEmbeddingStore store(dim);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected doc_id<TAB>index<TAB>values");
    const std::string doc_id = line.substr(0, tab1);
    int index = 0;
    try {
      index = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (...) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad sentence index");
    }
    Eigen::VectorXd v(dim);
    std::istringstream vs(line.substr(tab2 + 1));
    long got = 0;
    double x = 0.0;
    while (vs >> x) {
      if (got < dim) v(got) = x;
      ++got;
    }
    if (got != dim)
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, got " + std::to_string(got));
    try {
      store.insert(doc_id, index, std::move(v));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

inline void save_sentence_embeddings(const SentenceEmbeddingStore& store,
                                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open embedding file for writing: " + path);
  out << "dim=" << store.dim() << "\n";
  out.precision(17);
  for (const auto& [key, v] : store.all()) {
    out << key.first << "\t" << key.second << "\t";
    for (long i = 0; i < v.size(); ++i) out << (i ? " " : "") << v(i);
    out << "\n";
  }
}

// Deterministic stand-in for externally pretrained sentence vectors: signed
// feature hashing of the token bag, averaged and L2-normalized. Similar token
// bags land near each other, which is all the document encoder needs.
inline Eigen::VectorXd fallback_embed(const std::string& text, long dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  const auto tokens = tokenize(text);
  if (tokens.empty()) return v;
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a64(lowercase(tok));
    const long slot = static_cast<long>(h % static_cast<std::uint64_t>(dim));
    const double sign = (h >> 63) ? 1.0 : -1.0;
    v(slot) += sign;
  }
  v /= static_cast<double>(tokens.size());
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

}  // namespace rhetseg
