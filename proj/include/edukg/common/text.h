#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace edukg::text {

// A word token with its byte span in the source string.
struct Token {
  std::string text;
  size_t begin = 0;
  size_t end = 0;
};

// Bytes >= 0x80 are treated as letters so UTF-8 words stay whole.
inline bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool IsAlphaByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::string ToLowerAscii(std::string_view s);

// Lowercases and collapses whitespace runs to one space; trims both ends.
std::string NormalizePhrase(std::string_view s);

// Keeps alphabetic characters only and lowercases them.
std::string AlphaOnlyLower(std::string_view s);

std::string Trim(std::string_view s);

// Lowercase alphanumeric word tokens.
std::vector<std::string> WordTokens(std::string_view s);

std::vector<std::string> SplitWhitespace(std::string_view s);

std::vector<std::string> Split(std::string_view s, char sep);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

uint64_t Fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

std::string Hex64(uint64_t v);

}  // namespace edukg::text
