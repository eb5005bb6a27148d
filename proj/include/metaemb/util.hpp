#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace metaemb {

// Splits on runs of spaces and tabs; never returns empty tokens.
std::vector<std::string_view> split_ws(std::string_view line);

// Splits on every occurrence of `sep`; keeps empty fields.
std::vector<std::string_view> split_on(std::string_view line, char sep);

std::string_view trim(std::string_view s);

// Locale-independent double parse; the whole token must be consumed and the
// value finite. Throws DataError with `context` on failure.
double parse_double(std::string_view token, const std::string& context);

// Locale-independent unsigned parse; throws DataError with `context`.
std::size_t parse_size(std::string_view token, const std::string& context);

// Compact decimal with 10 significant digits (logs, traces).
std::string format_double(double v);

// Decimal with 17 significant digits: parses back to the identical double.
std::string format_double_exact(double v);

// Exact text encoding of a double (C99 hex float).
std::string hex_double(double v);
double parse_hex_double(std::string_view token, const std::string& context);

}  // namespace metaemb
