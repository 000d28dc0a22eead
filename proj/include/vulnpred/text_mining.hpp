#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnpred/change_model.hpp"

namespace vulnpred {

enum class TokenClass {
  arithmetic,
  comparison,
  conditional,
  loop,
  assignment,
  logical,
  memory_access,
  other,
};

inline constexpr std::size_t kTokenClassCount = 8;

struct StripResult {
  std::vector<std::string> lines;    // same line count as the input
  int unterminated_constructs = 0;   // lint counter: consumed to end of block
};

// Removes //-to-EOL and /*...*/ comments (block comments may span the whole
// block), and "..." / '...' literals including their quotes, with escape
// handling. Everything else is preserved byte for byte.
StripResult strip_comments_and_strings(std::span<const std::string> lines);

struct TokenCounts {
  std::array<long long, kTokenClassCount> by_class{};

  long long& operator[](TokenClass c) {
    return by_class[static_cast<std::size_t>(c)];
  }
  long long operator[](TokenClass c) const {
    return by_class[static_cast<std::size_t>(c)];
  }
  long long total() const;
  TokenCounts& operator+=(const TokenCounts& other);
};

// Maximal-munch lexing of operator/keyword tokens. Identifiers and numeric
// literals are not counted; comments and strings must be stripped first.
// The class table is the paper's flat symbol map: each glyph has one class
// (no deref-vs-multiply disambiguation), && and ! sit under comparison,
// & | ^ ~ << >> under logical.
TokenCounts classify_tokens(std::span<const std::string> cleaned_lines);

struct TmFeatures {
  double arithmetic = 0.0;
  double comparison = 0.0;
  double conditional = 0.0;
  double loop = 0.0;
  double assignment = 0.0;
  double logical = 0.0;
  double memory_access = 0.0;
};

TmFeatures tm_from_counts(const TokenCounts& counts);

// Pools token counts over every added line of the change (per-file blocks,
// deleted lines excluded) and returns the per-class ratios; all zero when
// nothing classifiable was added.
TmFeatures extract_tm(const ChangeRecord& change);

// The added-line texts of one file edit, in post-image order, resolved from
// its hunks.
std::vector<std::string> added_lines_of(const FileEdit& edit);

// Token texts in lex order; exposed for the lexer determinism property test.
std::vector<std::string> lex_token_texts(std::string_view text);

}  // namespace vulnpred
