#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace footprint {

// The eight dependent variables, in report order (gender, age, political, O.C.E.A.N.).
enum class Trait : int { gender = 0, age, political, ope, con, ext, agr, neu };

inline constexpr int kNumTraits = 8;

inline constexpr std::array<Trait, kNumTraits> kAllTraits = {
    Trait::gender, Trait::age, Trait::political, Trait::ope,
    Trait::con,    Trait::ext, Trait::agr,       Trait::neu};

inline constexpr std::array<std::string_view, kNumTraits> kTraitNames = {
    "gender", "age", "political", "ope", "con", "ext", "agr", "neu"};

inline constexpr std::array<std::string_view, kNumTraits> kTraitLabels = {
    "Gender",       "Age",           "Political view", "Openness",
    "Conscientiousness", "Extroversion", "Agreeableness", "Neuroticism"};

constexpr int index_of(Trait t) { return static_cast<int>(t); }
constexpr std::string_view name_of(Trait t) { return kTraitNames[index_of(t)]; }
constexpr std::string_view label_of(Trait t) { return kTraitLabels[index_of(t)]; }
constexpr bool is_binary(Trait t) { return t == Trait::gender || t == Trait::political; }

enum class MetricKind { pearson, auc };

// Continuous traits are scored by Pearson correlation, binary ones by ROC AUC.
constexpr MetricKind metric_for(Trait t) { return is_binary(t) ? MetricKind::auc : MetricKind::pearson; }
constexpr std::string_view name_of(MetricKind k) { return k == MetricKind::auc ? "auc" : "pearson"; }

inline std::optional<Trait> trait_from_name(std::string_view name) {
  for (Trait t : kAllTraits)
    if (name_of(t) == name) return t;
  return std::nullopt;
}

}  // namespace footprint
