#pragma once

#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text helpers shared by query matching, title normalization
// and language detection. All inputs and outputs are UTF-8.
namespace litharvest::text {

// NFKC compatibility normalization followed by full case folding.
std::string fold(std::string_view utf8);

// Folded words: maximal runs of letters/digits (combining marks included),
// every other code point is a separator.
std::vector<std::string> words(std::string_view utf8);

// Folds, maps punctuation to spaces, collapses whitespace runs and trims.
std::string normalize_for_matching(std::string_view utf8);

std::string_view trim(std::string_view s);
std::string ascii_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

}  // namespace litharvest::text
