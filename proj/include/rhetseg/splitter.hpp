#pragma once

#include <cctype>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rhetseg/corpus.hpp"

namespace rhetseg {

// Abbreviations common in Indian legal text. A period after one of these does
// not end a sentence. Matching is case-sensitive against the token preceding
// the terminator.
inline const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> abbrevs = {
      "Sec.", "Secs.", "No.", "Nos.", "vs.", "v.", "Art.", "Arts.",
      "Cl.",  "Dr.",   "Mr.", "Mrs.", "Ms.", "Hon'ble", "Co.", "Ltd.",
      "Crl.", "Ors.",  "Anr.", "etc.", "i.e.", "e.g.", "para.", "p.",
  };
  return abbrevs;
}

namespace detail {

// token immediately preceding position `pos` (exclusive), including any
// punctuation stuck to it
inline std::string preceding_token(const std::string& text, std::size_t pos) {
  std::size_t end = pos;
  std::size_t begin = end;
  while (begin > 0 && !std::isspace(static_cast<unsigned char>(text[begin - 1])))
    --begin;
  return text.substr(begin, end - begin);
}

inline bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

}  // namespace detail

// Splits raw text into sentence spans. A sentence ends at '.', '?' or '!'
// followed by whitespace and then an uppercase letter or digit, unless the
// token ending there is a known abbreviation. Every span is trimmed of
// surrounding whitespace; all non-whitespace text is covered.
inline std::vector<std::pair<std::size_t, std::size_t>> split_spans(
    const std::string& text,
    const std::set<std::string>& abbreviations = default_abbreviations()) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  const std::size_t n = text.size();

  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    if (begin < end) spans.emplace_back(begin, end);
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::is_terminator(text[i])) continue;

    // scan past a run of terminators ("..." or "?!")
    std::size_t term_end = i + 1;
    while (term_end < n && detail::is_terminator(text[term_end])) ++term_end;

    std::size_t next = term_end;
    while (next < n && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
    const bool boundary_context =
        next == n || std::isupper(static_cast<unsigned char>(text[next])) ||
        std::isdigit(static_cast<unsigned char>(text[next]));
    if (!boundary_context || next == term_end) {
      i = term_end - 1;
      continue;
    }

    const std::string tok = detail::preceding_token(text, term_end);
    if (abbreviations.count(tok)) {
      i = term_end - 1;
      continue;
    }
    // also accept abbreviation entries without their trailing period
    if (!tok.empty() && tok.back() == '.' &&
        abbreviations.count(tok.substr(0, tok.size() - 1))) {
      i = term_end - 1;
      continue;
    }

    emit(start, term_end);
    start = next;
    i = term_end - 1;
  }
  emit(start, n);
  return spans;
}

inline std::vector<Sentence> split_sentences(
    const std::string& text,
    const std::set<std::string>& abbreviations = default_abbreviations()) {
  return sentences_from_spans(text, split_spans(text, abbreviations));
}

// Re-runs the splitter over a document's raw text, replacing its sentence
// records. Existing annotations are untouched; gold (if any) is dropped since
// indices would no longer line up.
inline void resplit_document(Document& doc,
                             const std::set<std::string>& abbreviations =
                                 default_abbreviations()) {
  doc.sentences = split_sentences(doc.raw_text, abbreviations);
  doc.gold.reset();
}

}  // namespace rhetseg
