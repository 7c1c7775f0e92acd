#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhetseg/corpus.hpp"
#include "rhetseg/errors.hpp"
#include "rhetseg/label.hpp"
#include "rhetseg/pos_tagger.hpp"
#include "rhetseg/tokenizer.hpp"
#include "rhetseg/util.hpp"

namespace rhetseg {

struct FeatureVector {
  std::map<int, double> entries;

  bool operator==(const FeatureVector&) const = default;
};

// Name <-> index map with a fit-then-freeze lifecycle. Transforming against a
// frozen vocabulary drops unseen names instead of growing.
class FeatureVocabulary {
  std::map<std::string, int> index_;
  std::vector<std::string> names_;
  bool frozen_ = false;

 public:
  int add(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    if (frozen_) return -1;
    const int idx = static_cast<int>(names_.size());
    index_.emplace(name, idx);
    names_.push_back(name);
    return idx;
  }

  std::optional<int> lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return names_.size(); }
  const std::string& name(int idx) const { return names_.at(static_cast<std::size_t>(idx)); }
  const std::vector<std::string>& names() const { return names_; }

  // stable content hash, used to pair models with the vocabulary they saw
  std::uint64_t hash() const {
    std::string blob;
    for (std::size_t i = 0; i < names_.size(); ++i)
      blob += names_[i] + "=" + std::to_string(i) + ";";
    return fnv1a64(blob);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["frozen"] = frozen_;
    j["features"] = names_;
    return j;
  }

  static FeatureVocabulary from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
      throw FormatError("unsupported vocabulary file version");
    FeatureVocabulary v;
    for (const auto& name : j.at("features"))
      v.add(name.get<std::string>());
    if (j.value("frozen", true)) v.freeze();
    return v;
  }
};

struct Lexicons {
  std::map<Label, std::vector<std::string>> cues;
  std::vector<std::string> entities;

  bool operator==(const Lexicons&) const = default;
};

inline Lexicons default_lexicons() {
  Lexicons lex;
  lex.cues[Label::FAC] = {"the appellant", "the accused", "filed a", "complaint",
                          "on the date", "incident"};
  lex.cues[Label::RLC] = {"the trial court", "convicted", "acquitted",
                          "the lower court", "sentenced to"};
  lex.cues[Label::ARG] = {"learned counsel submitted", "the appellant contended",
                          "it was argued", "on behalf of", "learned counsel"};
  lex.cues[Label::STA] = {"section", "act", "article", "rule", "provision"};
  lex.cues[Label::PRE] = {"in the case of", "relied upon", "this court in",
                          "it was observed"};
  lex.cues[Label::RATIO] = {"it is held", "we are of the opinion",
                            "the question is", "in our view"};
  lex.cues[Label::RPC] = {"we direct", "allow the appeal", "appeal is dismissed",
                          "set aside", "disposed of"};
  lex.entities = {"Supreme Court", "High Court",  "Sessions Court",
                  "Trial Court",   "Magistrate",  "Tribunal",
                  "Constitution",  "Indian Penal Code"};
  return lex;
}

namespace detail {

// lowercase and collapse whitespace runs
inline std::string normalize_phrase(const std::string& s) {
  std::string out;
  bool in_space = true;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space && !out.empty()) out += ' ';
      in_space = true;
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// phrase occurs with word boundaries on both sides ("act" must not fire
// inside "fact")
inline bool contains_phrase(const std::string& text, const std::string& phrase) {
  if (phrase.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !word_char(text[pos - 1]);
    const std::size_t after = pos + phrase.size();
    const bool right_ok = after >= text.size() || !word_char(text[after]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

inline std::string underscored(const std::string& phrase) {
  std::string out = phrase;
  for (char& c : out)
    if (c == ' ') c = '_';
  return out;
}

inline std::string lowercase_label(Label l) { return lowercase(label_name(l)); }

}  // namespace detail

inline void validate_lexicons(const Lexicons& lex) {
  for (const auto& [label, phrases] : lex.cues)
    for (const auto& p : phrases)
      if (detail::normalize_phrase(p).empty())
        throw ValidationError("empty cue phrase under label " + label_name(label));
  for (const auto& p : lex.entities)
    if (detail::normalize_phrase(p).empty())
      throw ValidationError("empty entity phrase");
}

inline Lexicons lexicons_from_json(const nlohmann::json& j) {
  Lexicons lex;
  if (j.contains("cues")) {
    for (const auto& [name, phrases] : j.at("cues").items()) {
      if (!is_label_name(name)) throw FormatError("unknown label in lexicon: " + name);
      for (const auto& p : phrases) lex.cues[parse_label(name)].push_back(p.get<std::string>());
    }
  }
  if (j.contains("entities"))
    for (const auto& p : j.at("entities")) lex.entities.push_back(p.get<std::string>());
  validate_lexicons(lex);
  return lex;
}

inline nlohmann::json lexicons_to_json(const Lexicons& lex) {
  nlohmann::json cues = nlohmann::json::object();
  for (const auto& [label, phrases] : lex.cues) cues[label_name(label)] = phrases;
  return {{"cues", std::move(cues)}, {"entities", lex.entities}};
}

inline Lexicons load_lexicons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return lexicons_from_json(j);
}

struct FeatureOptions {
  bool layout = true;
  bool cue = true;
  bool entity = true;
  bool pos = true;
};

// Handcrafted per-sentence features. Namespaces: layout:* (position, decile,
// boundaries, length bucket), cue:<label>:<phrase>, ent:<phrase>, pos:<tag>
// token counts. With fit=true unseen names grow the vocabulary; with
// fit=false the vocabulary must already be frozen and unseen names are
// dropped.
inline std::vector<FeatureVector> extract_features(
    const Document& doc, const Lexicons& lexicons, FeatureVocabulary& vocab,
    bool fit, const FeatureOptions& options = {}) {
  if (!fit && !vocab.frozen())
    throw StateError("transform requires a frozen vocabulary (fit it first)");
  if (fit && vocab.frozen()) throw StateError("cannot fit a frozen vocabulary");

  const std::size_t T = doc.sentences.size();
  std::vector<FeatureVector> out(T);

  for (std::size_t t = 0; t < T; ++t) {
    const Sentence& sent = doc.sentences[t];
    std::map<std::string, double> feats;

    const auto tokens = tokenize(sent.text);
    if (options.layout) {
      const double position = T > 0 ? static_cast<double>(t) / static_cast<double>(T) : 0.0;
      feats["layout:position"] = position;
      const int decile = std::min(9, static_cast<int>(position * 10.0));
      feats["layout:decile:" + std::to_string(decile)] = 1.0;
      if (t == 0) feats["layout:is_first"] = 1.0;
      if (t + 1 == T) feats["layout:is_last"] = 1.0;
      const std::size_t n = tokens.size();
      const char* bucket = n <= 10 ? "le10" : n <= 25 ? "11_25" : n <= 50 ? "26_50" : "gt50";
      feats[std::string("layout:len:") + bucket] = 1.0;
    }

    if (options.cue || options.entity) {
      const std::string norm = detail::normalize_phrase(sent.text);
      if (options.cue) {
        for (const auto& [label, phrases] : lexicons.cues) {
          for (const auto& phrase : phrases) {
            const std::string p = detail::normalize_phrase(phrase);
            if (detail::contains_phrase(norm, p))
              feats["cue:" + detail::lowercase_label(label) + ":" + detail::underscored(p)] = 1.0;
          }
        }
      }
      if (options.entity) {
        for (const auto& phrase : lexicons.entities) {
          const std::string p = detail::normalize_phrase(phrase);
          if (detail::contains_phrase(norm, p))
            feats["ent:" + detail::underscored(p)] = 1.0;
        }
      }
    }

    if (options.pos) {
      for (PosTag tag : pos_tag(tokens)) feats["pos:" + pos_tag_name(tag)] += 1.0;
    }

    for (const auto& [name, value] : feats) {
      const int idx = fit ? vocab.add(name)
                          : vocab.lookup(name).value_or(-1);
      if (idx >= 0) out[t].entries[idx] = value;
    }
  }
  return out;
}

// transform against a frozen vocabulary; fit=false never mutates it
inline std::vector<FeatureVector> transform_features(
    const Document& doc, const Lexicons& lexicons, const FeatureVocabulary& vocab,
    const FeatureOptions& options = {}) {
  return extract_features(doc, lexicons, const_cast<FeatureVocabulary&>(vocab),
                          false, options);
}

}  // namespace rhetseg
