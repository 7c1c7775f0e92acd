#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "rhetseg/tokenizer.hpp"

namespace rhetseg {

enum class PosTag : int { NOUN = 0, VERB, ADJ, ADV, NUM, PUNCT, OTHER };
inline constexpr int kNumPosTags = 7;

inline const std::string& pos_tag_name(PosTag t) {
  static const std::array<std::string, kNumPosTags> names = {
      "NOUN", "VERB", "ADJ", "ADV", "NUM", "PUNCT", "OTHER"};
  return names[static_cast<std::size_t>(t)];
}

namespace detail {

// function words and a few legal-domain staples that the suffix rules would
// otherwise mislabel
inline const std::map<std::string, PosTag>& pos_lexicon() {
  static const std::map<std::string, PosTag> lex = {
      {"the", PosTag::OTHER},    {"a", PosTag::OTHER},
      {"an", PosTag::OTHER},     {"of", PosTag::OTHER},
      {"in", PosTag::OTHER},     {"on", PosTag::OTHER},
      {"at", PosTag::OTHER},     {"by", PosTag::OTHER},
      {"to", PosTag::OTHER},     {"for", PosTag::OTHER},
      {"with", PosTag::OTHER},   {"and", PosTag::OTHER},
      {"or", PosTag::OTHER},     {"but", PosTag::OTHER},
      {"that", PosTag::OTHER},   {"this", PosTag::OTHER},
      {"it", PosTag::OTHER},     {"he", PosTag::OTHER},
      {"she", PosTag::OTHER},    {"they", PosTag::OTHER},
      {"we", PosTag::OTHER},     {"was", PosTag::VERB},
      {"is", PosTag::VERB},      {"are", PosTag::VERB},
      {"were", PosTag::VERB},    {"be", PosTag::VERB},
      {"been", PosTag::VERB},    {"has", PosTag::VERB},
      {"have", PosTag::VERB},    {"had", PosTag::VERB},
      {"held", PosTag::VERB},    {"said", PosTag::VERB},
      {"may", PosTag::VERB},     {"shall", PosTag::VERB},
      {"must", PosTag::VERB},    {"would", PosTag::VERB},
      {"could", PosTag::VERB},   {"did", PosTag::VERB},
      {"do", PosTag::VERB},      {"does", PosTag::VERB},
      {"not", PosTag::ADV},      {"only", PosTag::ADV},
      {"also", PosTag::ADV},     {"very", PosTag::ADV},
      {"however", PosTag::ADV},  {"therefore", PosTag::ADV},
      {"learned", PosTag::ADJ},  {"legal", PosTag::ADJ},
      {"criminal", PosTag::ADJ}, {"civil", PosTag::ADJ},
      {"present", PosTag::ADJ},  {"such", PosTag::ADJ},
      {"said-", PosTag::ADJ},    {"first", PosTag::ADJ},
      {"second", PosTag::ADJ},   {"above", PosTag::ADJ},
  };
  return lex;
}

inline bool all_punct(const std::string& tok) {
  return !tok.empty() &&
         std::all_of(tok.begin(), tok.end(), [](char c) { return is_punct_char(c); });
}

inline bool any_digit(const std::string& tok) {
  return std::any_of(tok.begin(), tok.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

// Coarse rule-based tagger. Order matters: punctuation, then digits, then the
// lexicon, then suffix rules, then the NOUN default.
inline PosTag pos_tag_token(const std::string& token) {
  if (detail::all_punct(token)) return PosTag::PUNCT;
  if (detail::any_digit(token)) return PosTag::NUM;
  const std::string low = lowercase(token);
  auto it = detail::pos_lexicon().find(low);
  if (it != detail::pos_lexicon().end()) return it->second;
  if (detail::ends_with(low, "ly")) return PosTag::ADV;
  if (detail::ends_with(low, "ing") || detail::ends_with(low, "ed")) return PosTag::VERB;
  if (detail::ends_with(low, "tion") || detail::ends_with(low, "sion")) return PosTag::NOUN;
  if (detail::ends_with(low, "ive") || detail::ends_with(low, "ous") ||
      detail::ends_with(low, "able"))
    return PosTag::ADJ;
  return PosTag::NOUN;
}

inline std::vector<PosTag> pos_tag(const std::vector<std::string>& tokens) {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(pos_tag_token(t));
  return tags;
}

}  // namespace rhetseg
