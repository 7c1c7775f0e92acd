#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace rhetseg {

namespace detail {

inline bool is_punct_char(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace detail

// Whitespace tokenizer that peels leading and trailing punctuation off each
// chunk as separate tokens. "court," -> ["court", ","]; "(see" -> ["(", "see"].
// Interior punctuation (hyphens, apostrophes) stays attached.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;

    std::size_t begin = i, end = j;
    while (begin < end && detail::is_punct_char(text[begin])) {
      tokens.push_back(std::string(1, text[begin]));
      ++begin;
    }
    std::size_t core_end = end;
    while (core_end > begin && detail::is_punct_char(text[core_end - 1])) --core_end;
    if (begin < core_end) tokens.push_back(text.substr(begin, core_end - begin));
    for (std::size_t k = core_end; k < end; ++k) tokens.push_back(std::string(1, text[k]));
    i = j;
  }
  return tokens;
}

inline std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace rhetseg
