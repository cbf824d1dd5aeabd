#pragma once

#include <string>

namespace tabsense {

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

// RFC 4180 field: quoted when it holds a comma, quote or line break.
std::string CsvField(const std::string& text);

}  // namespace tabsense
