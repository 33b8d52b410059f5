#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace botscope::text {

// Splits on whitespace and punctuation (ASCII plus the common Unicode
// separator blocks) and case-folds each token. Invalid UTF-8 bytes are
// treated as separators.
std::vector<std::string> tokenize(std::string_view utf8);

// Case-folds a single string with the same rules as tokenize().
std::string fold_case(std::string_view utf8);

// Number of code points; invalid bytes count as one each.
std::size_t code_point_count(std::string_view utf8);

// Splits into pieces of at most `max_chars` code points, breaking at the last
// whitespace inside the limit when there is one, otherwise hard-splitting at
// the limit. Whitespace at a break is dropped.
std::vector<std::string> chunk_on_whitespace(std::string_view utf8, std::size_t max_chars);

}  // namespace botscope::text
