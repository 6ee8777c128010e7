// The five tumor classes of the RNA-Seq cohort, in canonical (alphabetical) order.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace genenet {

enum class CancerType : int { BRCA = 0, COAD = 1, KIRC = 2, LUAD = 3, PRAD = 4 };

inline constexpr int kCancerTypeCount = 5;

const std::array<CancerType, kCancerTypeCount>& all_cancer_types();

std::string_view to_string(CancerType t);

// Case-sensitive parse of the class strings used by the labels file.
std::optional<CancerType> parse_cancer_type(std::string_view s);

}  // namespace genenet
