#include <doctest.h>

#include "support/builders.hpp"
#include "vulnpred/text_mining.hpp"
#include "vulnpred/util.hpp"

using namespace vulnpred;
using namespace vulnpred::testing;

namespace {

std::vector<std::string> lines(std::initializer_list<const char*> xs) {
  return std::vector<std::string>(xs.begin(), xs.end());
}

}  // namespace

TEST_CASE("strip: line comments drop to end of line") {
  auto r = strip_comments_and_strings(lines({"x = 1; // inc"}));
  CHECK(r.lines == lines({"x = 1; "}));
}

TEST_CASE("strip: string contents vanish with their quotes") {
  auto r = strip_comments_and_strings(lines({"s = \"a+b\";"}));
  CHECK(r.lines == lines({"s = ;"}));
  // and the + inside produced no arithmetic token
  CHECK(classify_tokens(r.lines)[TokenClass::arithmetic] == 0);
}

TEST_CASE("strip: inline block comments leave surrounding code intact") {
  auto r = strip_comments_and_strings(lines({"/* a */ y /* b */ = 2;"}));
  CHECK(r.lines == lines({" y  = 2;"}));
}

TEST_CASE("strip: block comments span lines, escapes respected") {
  auto r = strip_comments_and_strings(
      lines({"a = 1; /* start", "still comment", "end */ b = 2;",
             "s = \"quote \\\" inside\"; t = 'x';"}));
  CHECK(r.lines ==
        lines({"a = 1; ", "", " b = 2;", "s = ; t = ;"}));
  CHECK(r.unterminated_constructs == 0);
}

TEST_CASE("strip: unterminated constructs consume the block and get counted") {
  auto r = strip_comments_and_strings(lines({"x = 1; /* open", "y = 2;"}));
  CHECK(r.lines == lines({"x = 1; ", ""}));
  CHECK(r.unterminated_constructs == 1);

  auto r2 = strip_comments_and_strings(lines({"s = \"open"}));
  CHECK(r2.unterminated_constructs == 1);
}

TEST_CASE("strip is idempotent") {
  auto once = strip_comments_and_strings(
      lines({"a = \"s\"; // c", "/* x */ b->c = 'q';", "d /= 2;"}));
  auto twice = strip_comments_and_strings(once.lines);
  CHECK(twice.lines == once.lines);
}

TEST_CASE("classify: a = b + c;") {
  TokenCounts counts = classify_tokens(lines({"a = b + c;"}));
  CHECK(counts[TokenClass::assignment] == 1);
  CHECK(counts[TokenClass::arithmetic] == 1);
  CHECK(counts[TokenClass::other] == 1);  // the semicolon
  CHECK(counts.total() == 3);
}

TEST_CASE("classify: if (p->x && q)") {
  TokenCounts counts = classify_tokens(lines({"if (p->x && q)"}));
  CHECK(counts[TokenClass::conditional] == 1);
  CHECK(counts[TokenClass::other] == 2);          // parens
  CHECK(counts[TokenClass::memory_access] == 1);  // ->
  CHECK(counts[TokenClass::comparison] == 1);     // && sits under comparison
  CHECK(counts[TokenClass::logical] == 0);
  CHECK(counts.total() == 5);
}

TEST_CASE("classify: empty input yields all zeros") {
  CHECK(classify_tokens(lines({})).total() == 0);
  CHECK(classify_tokens(lines({"", "   "})).total() == 0);
}

TEST_CASE("classify: maximal munch keeps compound operators whole") {
  TokenCounts counts = classify_tokens(lines({"x <<= 2; y >>= 1; z == w;"}));
  CHECK(counts[TokenClass::assignment] == 2);  // <<= and >>=
  CHECK(counts[TokenClass::comparison] == 1);  // ==
  CHECK(counts[TokenClass::logical] == 0);     // no bare << or >>
}

TEST_CASE("classify: numeric literals and identifiers are not counted") {
  TokenCounts counts = classify_tokens(lines({"foo2 = 3.5e+7 % bar[0];"}));
  // '=', '%', '[', ']', ';' count; foo2, 3.5e+7, bar, 0 don't.
  CHECK(counts[TokenClass::assignment] == 1);
  CHECK(counts[TokenClass::arithmetic] == 1);
  CHECK(counts[TokenClass::memory_access] == 2);
  CHECK(counts[TokenClass::other] == 1);
  CHECK(counts.total() == 5);
  // Leading-dot literal: .5 is a number, not a member access.
  TokenCounts dot = classify_tokens(lines({"x = .5;"}));
  CHECK(dot[TokenClass::memory_access] == 0);
}

TEST_CASE("classify: loops, keywords, scope tokens") {
  TokenCounts counts =
      classify_tokens(lines({"for (i = 0; i < n; ++i) std::swap(a, b);"}));
  CHECK(counts[TokenClass::loop] == 1);
  CHECK(counts[TokenClass::comparison] == 1);     // <
  CHECK(counts[TokenClass::arithmetic] == 1);     // ++
  CHECK(counts[TokenClass::assignment] == 1);     // =
  // ( ; ; ) :: ( , ) ; -> other; identifiers skipped.
  CHECK(counts[TokenClass::other] == 9);
}

TEST_CASE("lexer property: tokens re-concatenate to the input sans spaces") {
  const std::string alphabet = "+-*/%<>=!&|^~?:.[](){};,#";
  SplitMix64 rng(1234);
  for (int round = 0; round < 500; ++round) {
    std::string input;
    int n = 1 + static_cast<int>(rng.next_below(24));
    for (int i = 0; i < n; ++i) {
      if (rng.next_double() < 0.15) {
        input += ' ';
      } else {
        input += alphabet[static_cast<std::size_t>(
            rng.next_below(alphabet.size()))];
      }
    }
    std::string squashed;
    for (char c : input)
      if (c != ' ') squashed += c;

    std::string rejoined;
    for (const auto& tok : lex_token_texts(input)) rejoined += tok;
    CAPTURE(input);
    CHECK(rejoined == squashed);
  }
}

TEST_CASE("lexer property: maximal munch against a reference scanner") {
  // Reference: repeatedly take the longest operator from a hand-listed table
  // built independently (longest-first by construction).
  const std::vector<std::string> ops3 = {"<<=", ">>=", "..."};
  const std::vector<std::string> ops2 = {"==", "!=", "<=", ">=", "&&", "||",
                                         "++", "--", "+=", "-=", "*=", "/=",
                                         "%=", "&=", "|=", "^=", "<<", ">>",
                                         "->", "::", "##"};
  auto reference = [&](const std::string& input) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < input.size()) {
      bool hit = false;
      for (const auto& op : ops3)
        if (input.compare(i, 3, op) == 0) {
          out.push_back(op);
          i += 3;
          hit = true;
          break;
        }
      if (hit) continue;
      for (const auto& op : ops2)
        if (input.compare(i, 2, op) == 0) {
          out.push_back(op);
          i += 2;
          hit = true;
          break;
        }
      if (hit) continue;
      out.push_back(input.substr(i, 1));
      ++i;
    }
    return out;
  };

  const std::string alphabet = "+-*/%<>=!&|^~.:";
  SplitMix64 rng(99);
  for (int round = 0; round < 500; ++round) {
    std::string input;
    int n = 1 + static_cast<int>(rng.next_below(16));
    for (int i = 0; i < n; ++i)
      input += alphabet[static_cast<std::size_t>(
          rng.next_below(alphabet.size()))];
    CAPTURE(input);
    CHECK(lex_token_texts(input) == reference(input));
  }
}

TEST_CASE("tm ratios: class counts over total, zero-total guard") {
  TokenCounts counts = classify_tokens(lines({"a = b + c;"}));
  TmFeatures tm = tm_from_counts(counts);
  CHECK(tm.arithmetic == doctest::Approx(1.0 / 3.0));
  CHECK(tm.assignment == doctest::Approx(1.0 / 3.0));

  TmFeatures zero = tm_from_counts(TokenCounts{});
  CHECK(zero.arithmetic == 0.0);
  CHECK(zero.memory_access == 0.0);
}

TEST_CASE("tm ratio invariants on random snippets") {
  SplitMix64 rng(5);
  const std::string alphabet = "+-*/%<>=!&|^~?:.[](){};,abc ";
  for (int round = 0; round < 200; ++round) {
    std::string line;
    int n = static_cast<int>(rng.next_below(40));
    for (int i = 0; i < n; ++i)
      line += alphabet[static_cast<std::size_t>(rng.next_below(alphabet.size()))];
    TokenCounts counts = classify_tokens(lines({line.c_str()}));
    long long named = 0;
    for (std::size_t c = 0; c + 1 < kTokenClassCount; ++c)
      named += counts.by_class[c];
    CHECK(named + counts[TokenClass::other] == counts.total());
    TmFeatures tm = tm_from_counts(counts);
    for (double v : {tm.arithmetic, tm.comparison, tm.conditional, tm.loop,
                     tm.assignment, tm.logical, tm.memory_access}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    double sum = tm.arithmetic + tm.comparison + tm.conditional + tm.loop +
                 tm.assignment + tm.logical + tm.memory_access;
    CHECK(sum <= 1.0 + 1e-12);
  }
}

TEST_CASE("extract_tm: pooled over added lines only") {
  // One file adds `a = b + c;`, another adds only a comment.
  ChangeRecord c =
      ChangeBuilder("c")
          .final_edit(edit_with_lines("x.cpp", {"a = b + c;"}, {"dropped();"}))
          .final_edit(edit_with_lines("y.cpp", {"// nothing here"}))
          .build();
  TmFeatures tm = extract_tm(c);
  CHECK(tm.arithmetic == doctest::Approx(1.0 / 3.0));
  CHECK(tm.assignment == doctest::Approx(1.0 / 3.0));

  // Comments only -> all zeros.
  ChangeRecord c2 = ChangeBuilder("c2")
                        .final_edit(edit_with_lines("x.cpp", {"// a", "// b"}))
                        .build();
  TmFeatures tm2 = extract_tm(c2);
  CHECK(tm2.arithmetic == 0.0);
  CHECK(tm2.assignment == 0.0);

  // Pooling across two files: x gives {=, +, ;}, y gives {=, +, ;, (, )},
  // so the pool is 8 tokens with 2 arithmetic -> 0.25.
  ChangeRecord c3 =
      ChangeBuilder("c3")
          .final_edit(edit_with_lines("x.cpp", {"a = b + c;"}))
          .final_edit(edit_with_lines("y.cpp", {"d = e + f;", "(g)"}))
          .build();
  TmFeatures tm3 = extract_tm(c3);
  CHECK(tm3.arithmetic == doctest::Approx(2.0 / 8.0));
}
