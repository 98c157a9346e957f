#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bwsq::unicode {

// Strips Unicode white space (not just ASCII) from both ends.
std::string trim(std::string_view utf8);

std::string nfc(std::string_view utf8);

// Root-locale lowercasing; "ß" stays "ß".
std::string lower(std::string_view utf8);

// Lowercases and splits on Unicode white space and punctuation. Maximal runs
// of the remaining code points become tokens; no stemming.
std::vector<std::string> tokenize(std::string_view utf8);

}  // namespace bwsq::unicode
