#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers. All character offsets in this project count Unicode code
// points, matching the standoff annotation convention.
namespace nlnde::text {

std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);

// Number of code points.
std::size_t length(std::string_view utf8);

// Code point slice [start, end) of a UTF-8 string.
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

std::string to_lower(std::string_view utf8);

bool is_upper(char32_t c);
bool is_lower(char32_t c);
bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_punct(char32_t c);
bool is_space(char32_t c);

}  // namespace nlnde::text
