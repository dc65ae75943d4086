#include "deepnote/tokenizer.hpp"

namespace deepnote {
namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(lower_ascii(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char ch : text) {
    bool token_byte = is_token_byte(static_cast<unsigned char>(ch));
    if (token_byte && !in_token) ++count;
    in_token = token_byte;
  }
  return count;
}

}  // namespace deepnote
