#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace instructforge::providers {

// "three hundred forty-two"
std::string cardinal_words(std::uint64_t n);

// "forty-second"
std::string ordinal_words(std::uint64_t n);

// Spoken year form: 1999 -> "nineteen ninety-nine", 1905 -> "nineteen oh
// five", 1900 -> "nineteen hundred". Years 2000-2009 read as cardinals.
std::string year_words(unsigned year);

struct NumberExpansion {
  // Integers above this are left as digits.
  std::uint64_t max_value = std::numeric_limits<std::uint64_t>::max();
  // Read standalone four-digit integers in [1100, 2099] as years.
  bool years = true;
};

// Replaces digit runs (with thousands separators, decimals, ordinal suffixes
// and a trailing percent sign) by English words; all other text is kept.
std::string expand_numbers(std::string_view text, const NumberExpansion& options = {});

bool contains_digit(std::string_view text);

}  // namespace instructforge::providers
