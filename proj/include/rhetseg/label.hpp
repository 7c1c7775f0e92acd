#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "rhetseg/errors.hpp"

namespace rhetseg {

// The seven rhetorical roles a sentence of a judgment can play.
enum class Label : int {
  FAC = 0,  // facts: chronology of events leading to the case
  RLC,      // ruling by a lower court
  ARG,      // arguments of the contending parties
  STA,      // statute: citation of enacted law
  PRE,      // precedent: citation of prior cases
  RATIO,    // ratio decidendi: reasoning behind the decision
  RPC,      // ruling by the present court
};

inline constexpr int kNumLabels = 7;

inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::FAC, Label::RLC, Label::ARG,   Label::STA,
    Label::PRE, Label::RATIO, Label::RPC,
};

inline const std::string& label_name(Label l) {
  static const std::array<std::string, kNumLabels> names = {
      "FAC", "RLC", "ARG", "STA", "PRE", "RATIO", "RPC"};
  return names[static_cast<std::size_t>(l)];
}

inline Label parse_label(const std::string& s) {
  for (Label l : kAllLabels) {
    if (label_name(l) == s) return l;
  }
  throw ArgumentError("unknown label: \"" + s + "\"");
}

inline bool is_label_name(const std::string& s) {
  for (Label l : kAllLabels) {
    if (label_name(l) == s) return true;
  }
  return false;
}

inline int label_index(Label l) { return static_cast<int>(l); }

inline Label label_from_index(int i) {
  if (i < 0 || i >= kNumLabels) throw ArgumentError("label index out of range");
  return static_cast<Label>(i);
}

}  // namespace rhetseg
