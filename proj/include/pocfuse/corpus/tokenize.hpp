#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "pocfuse/corpus/types.hpp"

namespace pocfuse {

// Lowercases ASCII, splits on whitespace, and emits every ASCII punctuation
// character as its own token. Bytes >= 0x80 are treated as word characters.
inline Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, raw);
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
    }
  }
  flush();
  return out;
}

inline std::string join_tokens(const Tokens& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

}  // namespace pocfuse
