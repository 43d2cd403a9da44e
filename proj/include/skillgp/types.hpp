#pragma once

#include <string>

#include "skillgp/errors.hpp"

namespace skillgp {

/// Ground-truth skill class of an operator, also used as the prediction
/// target: Expert maps to +1, Novice to -1.
enum class SkillLabel { Expert, Novice };

inline constexpr double label_value(SkillLabel s) {
  return s == SkillLabel::Expert ? 1.0 : -1.0;
}

inline std::string to_string(SkillLabel s) {
  return s == SkillLabel::Expert ? "expert" : "novice";
}

inline SkillLabel parse_skill_label(const std::string& s) {
  if (s == "expert") return SkillLabel::Expert;
  if (s == "novice") return SkillLabel::Novice;
  throw Error("unknown skill label '" + s + "' (expected 'expert' or 'novice')");
}

}  // namespace skillgp
