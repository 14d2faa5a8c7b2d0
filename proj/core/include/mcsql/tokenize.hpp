#pragma once

#include <stdexcept>
#include <string_view>
#include <vector>

#include "mcsql/types.hpp"

namespace mcsql {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic word tokenizer: lowercase, split on whitespace, peel
/// leading/trailing punctuation into separate tokens, keep numbers
/// (including a decimal point) whole. Each token carries its character
/// span in the original string.
///
/// Throws DomainError on empty / whitespace-only input.
std::vector<Token> tokenize(std::string_view question);

}  // namespace mcsql
