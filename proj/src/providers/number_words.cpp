#include "instructforge/providers/number_words.hpp"

#include <array>
#include <cctype>

namespace instructforge::providers {

namespace {

constexpr std::array<std::string_view, 20> kOnes = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};

constexpr std::array<std::string_view, 10> kTens = {"",      "",      "twenty",  "thirty", "forty",
                                                    "fifty", "sixty", "seventy", "eighty", "ninety"};

constexpr std::array<std::string_view, 7> kScales = {"",          "thousand",    "million",
                                                     "billion",   "trillion",    "quadrillion",
                                                     "quintillion"};

std::string below_hundred(unsigned n) {
  if (n < 20) return std::string(kOnes[n]);
  std::string out(kTens[n / 10]);
  if (n % 10) {
    out += '-';
    out += kOnes[n % 10];
  }
  return out;
}

std::string below_thousand(unsigned n) {
  std::string out;
  if (n >= 100) {
    out = std::string(kOnes[n / 100]) + " hundred";
    n %= 100;
    if (n == 0) return out;
    out += ' ';
  }
  return out + below_hundred(n);
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string digits_spelled(std::string_view digits) {
  std::string out;
  for (char c : digits) {
    if (!out.empty()) out += ' ';
    out += kOnes[static_cast<unsigned>(c - '0')];
  }
  return out;
}

bool parse_u64(std::string_view digits, std::uint64_t& value) {
  if (digits.empty() || digits.size() > 19) return false;
  value = 0;
  for (char c : digits) value = value * 10 + static_cast<unsigned>(c - '0');
  return true;
}

bool ieq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string cardinal_words(std::uint64_t n) {
  if (n == 0) return "zero";
  std::array<unsigned, 7> groups{};
  int count = 0;
  while (n > 0) {
    groups[count++] = static_cast<unsigned>(n % 1000);
    n /= 1000;
  }
  std::string out;
  for (int g = count - 1; g >= 0; --g) {
    if (groups[g] == 0) continue;
    if (!out.empty()) out += ' ';
    out += below_thousand(groups[g]);
    if (g > 0) {
      out += ' ';
      out += kScales[g];
    }
  }
  return out;
}

std::string ordinal_words(std::uint64_t n) {
  std::string words = cardinal_words(n);
  const auto cut = words.find_last_of(" -");
  const std::size_t start = cut == std::string::npos ? 0 : cut + 1;
  const std::string last = words.substr(start);
  std::string replaced;
  if (last == "one") replaced = "first";
  else if (last == "two") replaced = "second";
  else if (last == "three") replaced = "third";
  else if (last == "five") replaced = "fifth";
  else if (last == "eight") replaced = "eighth";
  else if (last == "nine") replaced = "ninth";
  else if (last == "twelve") replaced = "twelfth";
  else if (last.back() == 'y') replaced = last.substr(0, last.size() - 1) + "ieth";
  else replaced = last + "th";
  return words.substr(0, start) + replaced;
}

std::string year_words(unsigned year) {
  if (year < 1000 || year > 9999 || (year >= 2000 && year <= 2009)) return cardinal_words(year);
  const unsigned high = year / 100;
  const unsigned low = year % 100;
  std::string out = below_hundred(high);
  if (low == 0) return out + " hundred";
  if (low < 10) return out + " oh " + std::string(kOnes[low]);
  return out + " " + below_hundred(low);
}

bool contains_digit(std::string_view text) {
  for (char c : text) {
    if (is_digit(c)) return true;
  }
  return false;
}

std::string expand_numbers(std::string_view text, const NumberExpansion& options) {
  std::string out;
  out.reserve(text.size() * 2);
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      out += text[i++];
      continue;
    }
    const std::size_t start = i;
    std::string integer;
    bool grouped = false;
    while (i < text.size()) {
      if (is_digit(text[i])) {
        integer += text[i++];
      } else if (text[i] == ',' && i + 3 < text.size() && is_digit(text[i + 1]) &&
                 is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
                 (i + 4 == text.size() || !is_digit(text[i + 4]))) {
        grouped = true;
        ++i;
      } else {
        break;
      }
    }
    std::string fraction;
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) fraction += text[i++];
    }
    std::string ordinal_suffix;
    if (fraction.empty() && i + 2 <= text.size()) {
      const std::string_view suffix = text.substr(i, 2);
      const bool boundary = i + 2 >= text.size() || !is_alpha(text[i + 2]);
      if (boundary && (ieq(suffix, "st") || ieq(suffix, "nd") || ieq(suffix, "rd") || ieq(suffix, "th"))) {
        ordinal_suffix = std::string(suffix);
      }
    }

    std::uint64_t value = 0;
    const bool parsed = parse_u64(integer, value);
    if (!parsed || value > options.max_value) {
      out.append(text.substr(start, i - start));
      continue;
    }

    std::string words;
    if (!ordinal_suffix.empty()) {
      words = ordinal_words(value);
      i += 2;
    } else if (options.years && !grouped && fraction.empty() && integer.size() == 4 &&
               value >= 1100 && value <= 2099) {
      words = year_words(static_cast<unsigned>(value));
    } else {
      words = cardinal_words(value);
      if (!fraction.empty()) words += " point " + digits_spelled(fraction);
    }
    if (i < text.size() && text[i] == '%') {
      words += " percent";
      ++i;
    }
    if (!out.empty() && is_alpha(out.back())) out += ' ';
    out += words;
    if (i < text.size() && is_alpha(text[i])) out += ' ';
  }
  return out;
}

}  // namespace instructforge::providers
