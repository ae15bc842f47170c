#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace hydre::utf8 {

// Byte offset of every code point boundary in `text`, including the final
// one at text.size(). Returns nullopt for ill-formed UTF-8.
inline std::optional<std::vector<std::size_t>> boundaries(std::string_view text) {
  std::vector<std::size_t> out;
  out.reserve(text.size() + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    out.push_back(i);
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (lead < 0x80) {
      len = 1;
    } else if ((lead & 0xE0) == 0xC0 && lead >= 0xC2) {
      len = 2;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
    } else if ((lead & 0xF8) == 0xF0 && lead <= 0xF4) {
      len = 4;
    } else {
      return std::nullopt;
    }
    if (i + len > text.size()) return std::nullopt;
    for (std::size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(text[i + j]) & 0xC0) != 0x80) return std::nullopt;
    }
    i += len;
  }
  out.push_back(text.size());
  return out;
}

inline std::optional<std::size_t> length(std::string_view text) {
  auto b = boundaries(text);
  if (!b) return std::nullopt;
  return b->size() - 1;
}

}  // namespace hydre::utf8
