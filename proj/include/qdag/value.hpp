#pragma once

#include <cstdint>
#include <string_view>

namespace qdag {

// Node values. Quadtrees only produce kZero (empty subgrid), kOne (full
// subgrid or set cell) and kHalf (internal). kDiamond is the lazy "unknown
// until the children are inspected" value of AND/OR expressions.
enum class Value : std::uint8_t { kZero, kOne, kHalf, kDiamond };

constexpr bool is_determined(Value v) { return v == Value::kZero || v == Value::kOne; }

constexpr std::string_view to_string(Value v) {
  switch (v) {
    case Value::kZero: return "0";
    case Value::kOne: return "1";
    case Value::kHalf: return "1/2";
    case Value::kDiamond: return "<>";
  }
  return "?";
}

}  // namespace qdag
