#include "vulnpred/text_mining.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace vulnpred {

StripResult strip_comments_and_strings(std::span<const std::string> lines) {
  StripResult result;
  result.lines.reserve(lines.size());

  enum class State { code, block_comment, string_lit, char_lit } state =
      State::code;

  for (const auto& line : lines) {
    std::string out;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
      char c = line[i];
      switch (state) {
        case State::code:
          if (c == '/' && i + 1 < n && line[i + 1] == '/') {
            i = n;  // line comment: drop to EOL
          } else if (c == '/' && i + 1 < n && line[i + 1] == '*') {
            state = State::block_comment;
            i += 2;
          } else if (c == '"') {
            state = State::string_lit;
            ++i;
          } else if (c == '\'') {
            state = State::char_lit;
            ++i;
          } else {
            out += c;
            ++i;
          }
          break;
        case State::block_comment:
          if (c == '*' && i + 1 < n && line[i + 1] == '/') {
            state = State::code;
            i += 2;
          } else {
            ++i;
          }
          break;
        case State::string_lit:
        case State::char_lit: {
          char quote = state == State::string_lit ? '"' : '\'';
          if (c == '\\' && i + 1 < n) {
            i += 2;
          } else if (c == quote) {
            state = State::code;
            ++i;
          } else {
            ++i;
          }
          break;
        }
      }
    }
    // String and char literals do not span lines.
    if (state == State::string_lit || state == State::char_lit) {
      ++result.unterminated_constructs;
      state = State::code;
    }
    result.lines.push_back(std::move(out));
  }
  if (state == State::block_comment) ++result.unterminated_constructs;
  return result;
}

long long TokenCounts::total() const {
  return std::accumulate(by_class.begin(), by_class.end(), 0LL);
}

TokenCounts& TokenCounts::operator+=(const TokenCounts& other) {
  for (std::size_t i = 0; i < kTokenClassCount; ++i)
    by_class[i] += other.by_class[i];
  return *this;
}

namespace {

struct OpEntry {
  std::string_view text;
  TokenClass cls;
};

// Longest first within each starting character; scanned in order, so the
// first prefix match is the maximal munch.
constexpr OpEntry kOperators[] = {
    {"<<=", TokenClass::assignment}, {">>=", TokenClass::assignment},
    {"...", TokenClass::other},
    {"==", TokenClass::comparison},  {"!=", TokenClass::comparison},
    {"<=", TokenClass::comparison},  {">=", TokenClass::comparison},
    {"&&", TokenClass::comparison},  {"||", TokenClass::comparison},
    {"++", TokenClass::arithmetic},  {"--", TokenClass::arithmetic},
    {"+=", TokenClass::assignment},  {"-=", TokenClass::assignment},
    {"*=", TokenClass::assignment},  {"/=", TokenClass::assignment},
    {"%=", TokenClass::assignment},  {"&=", TokenClass::assignment},
    {"|=", TokenClass::assignment},  {"^=", TokenClass::assignment},
    {"<<", TokenClass::logical},     {">>", TokenClass::logical},
    {"->", TokenClass::memory_access},
    {"::", TokenClass::other},       {"##", TokenClass::other},
    {"+", TokenClass::arithmetic},   {"-", TokenClass::arithmetic},
    {"*", TokenClass::arithmetic},   {"/", TokenClass::arithmetic},
    {"%", TokenClass::arithmetic},
    {"<", TokenClass::comparison},   {">", TokenClass::comparison},
    {"!", TokenClass::comparison},
    {"=", TokenClass::assignment},
    {"&", TokenClass::logical},      {"|", TokenClass::logical},
    {"^", TokenClass::logical},      {"~", TokenClass::logical},
    {"?", TokenClass::conditional},  {":", TokenClass::conditional},
    {".", TokenClass::memory_access},
    {"[", TokenClass::memory_access}, {"]", TokenClass::memory_access},
};

const std::unordered_map<std::string_view, TokenClass>& keyword_table() {
  static const std::unordered_map<std::string_view, TokenClass> table = [] {
    std::unordered_map<std::string_view, TokenClass> t;
    for (std::string_view k : {"if", "else", "switch", "case"})
      t.emplace(k, TokenClass::conditional);
    for (std::string_view k : {"for", "while", "do"})
      t.emplace(k, TokenClass::loop);
    for (std::string_view k :
         {"auto",     "bool",      "break",    "catch",    "char",
          "class",    "const",     "constexpr", "continue", "default",
          "delete",   "double",    "enum",     "extern",   "false",
          "float",    "goto",      "inline",   "int",      "long",
          "namespace", "new",      "nullptr",  "operator", "private",
          "protected", "public",   "register", "return",   "short",
          "signed",   "sizeof",    "static",   "struct",   "template",
          "this",     "throw",     "true",     "try",      "typedef",
          "typename", "union",     "unsigned", "using",    "virtual",
          "void",     "volatile"})
      t.emplace(k, TokenClass::other);
    return t;
  }();
  return table;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct Token {
  std::string_view text;
  enum class Kind { op, word, number, punct } kind;
};

template <typename Fn>
void lex(std::string_view text, Fn&& emit) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(text[j])) ++j;
      emit(Token{text.substr(i, j - i), Token::Kind::word});
      i = j;
      continue;
    }
    // pp-number: starts with a digit, or '.' followed by a digit; swallows
    // exponent signs so 1.5e+3 is one literal, not arithmetic.
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n &&
         std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i + 1;
      while (j < n) {
        char d = text[j];
        if (is_ident_char(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') &&
                   (text[j - 1] == 'e' || text[j - 1] == 'E' ||
                    text[j - 1] == 'p' || text[j - 1] == 'P')) {
          ++j;
        } else {
          break;
        }
      }
      emit(Token{text.substr(i, j - i), Token::Kind::number});
      i = j;
      continue;
    }
    bool matched = false;
    for (const auto& op : kOperators) {
      if (text.substr(i, op.text.size()) == op.text) {
        emit(Token{text.substr(i, op.text.size()), Token::Kind::op});
        i += op.text.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      emit(Token{text.substr(i, 1), Token::Kind::punct});
      ++i;
    }
  }
}

TokenClass op_class(std::string_view text) {
  for (const auto& op : kOperators)
    if (op.text == text) return op.cls;
  return TokenClass::other;
}

}  // namespace

TokenCounts classify_tokens(std::span<const std::string> cleaned_lines) {
  TokenCounts counts;
  const auto& keywords = keyword_table();
  for (const auto& line : cleaned_lines) {
    lex(line, [&](const Token& t) {
      switch (t.kind) {
        case Token::Kind::op:
          ++counts[op_class(t.text)];
          break;
        case Token::Kind::word: {
          auto it = keywords.find(t.text);
          if (it != keywords.end()) ++counts[it->second];
          break;  // identifiers are not counted
        }
        case Token::Kind::number:
          break;  // literals are not counted
        case Token::Kind::punct:
          ++counts[TokenClass::other];
          break;
      }
    });
  }
  return counts;
}

std::vector<std::string> lex_token_texts(std::string_view text) {
  std::vector<std::string> out;
  lex(text, [&](const Token& t) { out.emplace_back(t.text); });
  return out;
}

TmFeatures tm_from_counts(const TokenCounts& counts) {
  TmFeatures tm;
  long long total = counts.total();
  if (total == 0) return tm;
  double d = static_cast<double>(total);
  tm.arithmetic = counts[TokenClass::arithmetic] / d;
  tm.comparison = counts[TokenClass::comparison] / d;
  tm.conditional = counts[TokenClass::conditional] / d;
  tm.loop = counts[TokenClass::loop] / d;
  tm.assignment = counts[TokenClass::assignment] / d;
  tm.logical = counts[TokenClass::logical] / d;
  tm.memory_access = counts[TokenClass::memory_access] / d;
  return tm;
}

std::vector<std::string> added_lines_of(const FileEdit& edit) {
  std::vector<std::string> out;
  out.reserve(edit.added_line_numbers.size());
  for (int line : edit.added_line_numbers) {
    for (const auto& h : edit.hunks) {
      if (h.new_count > 0 && line >= h.new_start &&
          line < h.new_start + h.new_count) {
        out.push_back(h.new_lines[static_cast<std::size_t>(line - h.new_start)]);
        break;
      }
    }
  }
  return out;
}

TmFeatures extract_tm(const ChangeRecord& change) {
  TokenCounts pooled;
  for (const auto& fe : change.final_edits) {
    std::vector<std::string> added = added_lines_of(fe);
    if (added.empty()) continue;
    StripResult stripped = strip_comments_and_strings(added);
    pooled += classify_tokens(stripped.lines);
  }
  return tm_from_counts(pooled);
}

}  // namespace vulnpred
