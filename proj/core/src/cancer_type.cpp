#include "genenet/cancer_type.hpp"

namespace genenet {

const std::array<CancerType, kCancerTypeCount>& all_cancer_types() {
  static const std::array<CancerType, kCancerTypeCount> kAll = {
      CancerType::BRCA, CancerType::COAD, CancerType::KIRC,
      CancerType::LUAD, CancerType::PRAD};
  return kAll;
}

std::string_view to_string(CancerType t) {
  switch (t) {
    case CancerType::BRCA: return "BRCA";
    case CancerType::COAD: return "COAD";
    case CancerType::KIRC: return "KIRC";
    case CancerType::LUAD: return "LUAD";
    case CancerType::PRAD: return "PRAD";
  }
  return "?";
}

std::optional<CancerType> parse_cancer_type(std::string_view s) {
  for (CancerType t : all_cancer_types()) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

}  // namespace genenet
