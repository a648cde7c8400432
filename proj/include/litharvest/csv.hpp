#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace litharvest::csv {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quotes the field when it contains a comma, double quote, CR or LF;
// embedded quotes are doubled.
std::string escape_field(std::string_view field);

// Joins escaped fields with ',' and terminates the line with '\n'.
std::string format_row(const std::vector<std::string>& fields);

// RFC 4180 reader. Accepts LF or CRLF line endings and a UTF-8 BOM; skips
// blank lines. Throws CsvError on an unterminated quoted field or stray
// characters after a closing quote.
std::vector<std::vector<std::string>> parse(std::string_view data);

}  // namespace litharvest::csv
