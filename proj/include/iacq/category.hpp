#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace iacq {

enum class CategoryId {
  metadata,
  code_structure,
  code_sophistication,
  code_maintainability,
  functionality_purpose,
  code_security,
  error_handling,
  automation,
  code_integration,
};

inline constexpr std::size_t kCategoryCount = 9;

inline constexpr std::array<CategoryId, kCategoryCount> kAllCategories = {
    CategoryId::metadata,           CategoryId::code_structure,
    CategoryId::code_sophistication, CategoryId::code_maintainability,
    CategoryId::functionality_purpose, CategoryId::code_security,
    CategoryId::error_handling,     CategoryId::automation,
    CategoryId::code_integration,
};

inline constexpr std::string_view to_string(CategoryId c) {
  switch (c) {
    case CategoryId::metadata: return "metadata";
    case CategoryId::code_structure: return "code_structure";
    case CategoryId::code_sophistication: return "code_sophistication";
    case CategoryId::code_maintainability: return "code_maintainability";
    case CategoryId::functionality_purpose: return "functionality_purpose";
    case CategoryId::code_security: return "code_security";
    case CategoryId::error_handling: return "error_handling";
    case CategoryId::automation: return "automation";
    case CategoryId::code_integration: return "code_integration";
  }
  return "";
}

inline std::optional<CategoryId> parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

}  // namespace iacq
