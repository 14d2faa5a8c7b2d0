#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mcsql {

/// Lowercases ASCII letters and collapses whitespace runs to a single space.
/// Leading/trailing whitespace is stripped. Non-ASCII bytes pass through.
std::string normalize_text(std::string_view s);

/// Parses a finite decimal number. Accepts optional sign, digits, one dot.
/// Rejects trailing garbage, inf/nan and empty input.
std::optional<double> parse_number(std::string_view s);

/// Renders a number the way question text writes it: no exponent for the
/// usual magnitudes, no thousands separators, trailing ".0" stripped
/// ("7.0" -> "7", "3.50" -> "3.5").
std::string canonical_number(double v);

/// normalize_text, then if the result parses as a number, replace it with
/// its canonical rendering. Used for cells of real columns and for
/// condition-value comparison.
std::string canonical_cell(std::string_view s, bool numeric_column);

}  // namespace mcsql
