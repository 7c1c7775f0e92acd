#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rhetseg/errors.hpp"
#include "rhetseg/label.hpp"

namespace rhetseg {

// One sentence of a document. Offsets are half-open byte offsets into the
// document's raw_text (bytes, not code points, for UTF-8 input).
struct Sentence {
  int index = 0;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Sentence&) const = default;
};

// A span of text an annotator marked with a rhetorical role.
struct LabeledSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  Label label = Label::FAC;

  bool operator==(const LabeledSpan&) const = default;
};

struct Document {
  std::string doc_id;
  std::string domain;
  std::string raw_text;
  std::vector<Sentence> sentences;
  // annotator id -> spans, kept in file order
  std::map<std::string, std::vector<LabeledSpan>> annotations;
  // curated labels as (sentence index, label); when present, covers every
  // sentence exactly once
  std::optional<std::vector<std::pair<int, Label>>> gold;

  bool operator==(const Document&) const = default;

  bool has_gold() const { return gold.has_value(); }

  // gold labels aligned to sentence order
  std::vector<Label> gold_labels() const {
    if (!gold) throw StateError("document " + doc_id + " has no gold labels");
    std::vector<Label> out(sentences.size(), Label::FAC);
    for (const auto& [idx, label] : *gold) out[static_cast<std::size_t>(idx)] = label;
    return out;
  }
};

struct Corpus {
  std::vector<Document> documents;

  bool operator==(const Corpus&) const = default;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

namespace detail {

inline bool spans_overlap(std::size_t b1, std::size_t e1, std::size_t b2,
                          std::size_t e2) {
  return b1 < e2 && b2 < e1;
}

}  // namespace detail

// Checks every structural invariant of a document. Throws ValidationError
// naming the document and the violated rule.
inline void validate_document(const Document& doc) {
  auto fail = [&](const std::string& rule) {
    throw ValidationError("document \"" + doc.doc_id + "\": " + rule);
  };

  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const Sentence& s = doc.sentences[i];
    if (s.index != static_cast<int>(i)) fail("sentence indices must be 0..n-1 in order");
    if (s.begin >= s.end) fail("sentence span must satisfy start < end");
    if (s.end > doc.raw_text.size()) fail("sentence span exceeds raw_text");
    if (i > 0 && s.begin < prev_end) fail("sentence spans must be non-overlapping and increasing");
    if (doc.raw_text.compare(s.begin, s.end - s.begin, s.text) != 0)
      fail("sentence text does not match raw_text at its span");
    prev_end = s.end;
  }

  for (const auto& [annotator, spans] : doc.annotations) {
    std::vector<LabeledSpan> sorted = spans;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledSpan& a, const LabeledSpan& b) {
                return a.begin < b.begin || (a.begin == b.begin && a.end < b.end);
              });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i].begin >= sorted[i].end)
        fail("annotator \"" + annotator + "\" has a span with start >= end");
      if (i > 0 && detail::spans_overlap(sorted[i - 1].begin, sorted[i - 1].end,
                                         sorted[i].begin, sorted[i].end))
        fail("annotator \"" + annotator + "\" has overlapping spans");
    }
  }

  if (doc.gold) {
    std::vector<int> seen(doc.sentences.size(), 0);
    for (const auto& [idx, label] : *doc.gold) {
      (void)label;
      if (idx < 0 || idx >= static_cast<int>(doc.sentences.size()))
        fail("gold refers to a sentence index out of range");
      seen[static_cast<std::size_t>(idx)] += 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] != 1) fail("gold must assign exactly one label per sentence");
    }
  }
}

inline void validate_corpus(const Corpus& corpus) {
  std::map<std::string, int> ids;
  for (const Document& doc : corpus.documents) {
    validate_document(doc);
    if (++ids[doc.doc_id] > 1)
      throw ValidationError("duplicate doc_id \"" + doc.doc_id + "\"");
  }
}

namespace detail {

inline nlohmann::json document_to_json(const Document& doc) {
  nlohmann::json j;
  j["doc_id"] = doc.doc_id;
  j["domain"] = doc.domain;
  j["raw_text"] = doc.raw_text;
  nlohmann::json sents = nlohmann::json::array();
  for (const Sentence& s : doc.sentences)
    sents.push_back({{"start", s.begin}, {"end", s.end}});
  j["sentences"] = std::move(sents);
  nlohmann::json anns = nlohmann::json::object();
  for (const auto& [annotator, spans] : doc.annotations) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LabeledSpan& sp : spans)
      arr.push_back({{"start", sp.begin}, {"end", sp.end}, {"label", label_name(sp.label)}});
    anns[annotator] = std::move(arr);
  }
  j["annotations"] = std::move(anns);
  if (doc.gold) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& [idx, label] : *doc.gold)
      g.push_back({{"sentence", idx}, {"label", label_name(label)}});
    j["gold"] = std::move(g);
  } else {
    j["gold"] = nullptr;
  }
  return j;
}

inline Label parse_label_checked(const nlohmann::json& j, const std::string& doc_id) {
  if (!j.is_string())
    throw ValidationError("document \"" + doc_id + "\": label must be a string");
  const auto s = j.get<std::string>();
  if (!is_label_name(s))
    throw ValidationError("document \"" + doc_id + "\": unknown label \"" + s + "\"");
  return parse_label(s);
}

inline Document document_from_json(const nlohmann::json& j) {
  Document doc;
  try {
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.domain = j.at("domain").get<std::string>();
    doc.raw_text = j.at("raw_text").get<std::string>();
    int idx = 0;
    for (const auto& s : j.at("sentences")) {
      Sentence sent;
      sent.index = idx++;
      sent.begin = s.at("start").get<std::size_t>();
      sent.end = s.at("end").get<std::size_t>();
      if (sent.end <= doc.raw_text.size() && sent.begin < sent.end)
        sent.text = doc.raw_text.substr(sent.begin, sent.end - sent.begin);
      doc.sentences.push_back(std::move(sent));
    }
    if (j.contains("annotations") && !j.at("annotations").is_null()) {
      for (const auto& [annotator, arr] : j.at("annotations").items()) {
        std::vector<LabeledSpan> spans;
        for (const auto& s : arr) {
          LabeledSpan sp;
          sp.begin = s.at("start").get<std::size_t>();
          sp.end = s.at("end").get<std::size_t>();
          sp.label = parse_label_checked(s.at("label"), doc.doc_id);
          spans.push_back(sp);
        }
        doc.annotations[annotator] = std::move(spans);
      }
    }
    if (j.contains("gold") && !j.at("gold").is_null()) {
      std::vector<std::pair<int, Label>> gold;
      for (const auto& g : j.at("gold")) {
        gold.emplace_back(g.at("sentence").get<int>(),
                          parse_label_checked(g.at("label"), doc.doc_id));
      }
      doc.gold = std::move(gold);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("document \"" + doc.doc_id + "\": " + e.what());
  }
  return doc;
}

}  // namespace detail

// Reads a JSON Lines corpus. Blank lines are ignored. Parse failures report
// the 1-based line number; invariant violations name the offending document.
inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    corpus.documents.push_back(detail::document_from_json(j));
  }
  validate_corpus(corpus);
  return corpus;
}

inline std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const Document& doc : corpus.documents)
    out << detail::document_to_json(doc).dump() << "\n";
  return out.str();
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << corpus_to_jsonl(corpus);
  if (!out) throw IoError("write failed: " + path);
}

// In-memory sentence builder used by tests and the splitter: derives Sentence
// records from (begin, end) spans over raw text.
inline std::vector<Sentence> sentences_from_spans(
    const std::string& raw_text,
    const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  std::vector<Sentence> out;
  int idx = 0;
  for (const auto& [b, e] : spans) {
    Sentence s;
    s.index = idx++;
    s.begin = b;
    s.end = e;
    s.text = raw_text.substr(b, e - b);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace rhetseg
