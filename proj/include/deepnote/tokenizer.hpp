#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace deepnote {

// Lowercases ASCII and splits on every byte that is not an ASCII letter or
// digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

}  // namespace deepnote
