#include "nlnde/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "nlnde/errors.hpp"

namespace nlnde::text {

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const int32_t n = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) throw DataError("invalid UTF-8 sequence at byte " + std::to_string(i));
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t c : cps) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(c), err);
    if (err) throw DataError("code point not encodable as UTF-8");
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
  }
  return out;
}

std::size_t length(std::string_view utf8) {
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const int32_t n = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  std::size_t count = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) throw DataError("invalid UTF-8 sequence at byte " + std::to_string(i));
    ++count;
  }
  return count;
}

std::string slice(std::string_view utf8, std::size_t start, std::size_t end) {
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const int32_t n = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  std::size_t cp = 0;
  int32_t begin_byte = -1;
  while (i < n && cp < end) {
    if (cp == start) begin_byte = i;
    U8_FWD_1(s, i, n);
    ++cp;
  }
  if (cp == start && begin_byte < 0) begin_byte = i;
  if (cp < end || begin_byte < 0) {
    throw DataError("slice [" + std::to_string(start) + "," + std::to_string(end) +
                    ") out of bounds for text of length " + std::to_string(cp));
  }
  return std::string(utf8.substr(static_cast<std::size_t>(begin_byte),
                                 static_cast<std::size_t>(i - begin_byte)));
}

std::string to_lower(std::string_view utf8) {
  std::u32string cps = decode(utf8);
  for (auto& c : cps) c = static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
  return encode(cps);
}

bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)); }
bool is_lower(char32_t c) { return u_islower(static_cast<UChar32>(c)); }
bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }
bool is_digit(char32_t c) { return u_isdigit(static_cast<UChar32>(c)); }
// Punctuation and symbol categories (P* and S*).
bool is_punct(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  if (u_ispunct(cp)) return true;
  switch (u_charType(cp)) {
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

}  // namespace nlnde::text
