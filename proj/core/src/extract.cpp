#include "rmr/extract.hpp"

#include <cctype>

namespace rmr::gateway {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

class LetterScanner {
 public:
  LetterScanner(std::string_view text, std::size_t num_choices) : text_(text), num_choices_(num_choices) {}

  std::optional<std::size_t> keyword() const {
    static constexpr std::string_view kKeyword = "answer";
    const std::string lowered = to_lower(text_);
    for (std::size_t at = lowered.find(kKeyword); at != std::string::npos;
         at = lowered.find(kKeyword, at + 1)) {
      std::size_t i = skip_space(at + kKeyword.size());
      if (i + 1 < text_.size() && lower(text_[i]) == 'i' && lower(text_[i + 1]) == 's') {
        i = skip_space(i + 2);
        if (i < text_.size() && text_[i] == ':') i = skip_space(i + 1);
      } else if (i < text_.size() && text_[i] == ':') {
        i = skip_space(i + 1);
      } else {
        continue;
      }
      if (auto letter = letter_at(i)) return letter;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> leading() const {
    const std::size_t i = skip_space(0);
    if (i < text_.size() && text_[i] == '(') {
      return parenthesized(i);
    }
    if (i >= text_.size() || !in_range(text_[i])) return std::nullopt;
    const std::size_t next = i + 1;
    if (next < text_.size() && (text_[next] == '.' || text_[next] == ')' || text_[next] == ':')) {
      return index_of(text_[i]);
    }
    if (skip_space(next) == text_.size()) return index_of(text_[i]);
    return std::nullopt;
  }

  std::optional<std::size_t> first_parenthesized() const {
    for (std::size_t i = 0; i < text_.size(); ++i) {
      if (text_[i] != '(' || (i > 0 && is_alnum(text_[i - 1]))) continue;
      if (auto letter = parenthesized(i)) return letter;
    }
    return std::nullopt;
  }

 private:
  std::size_t skip_space(std::size_t i) const {
    while (i < text_.size() && is_space(text_[i])) ++i;
    return i;
  }

  bool in_range(char c) const {
    return c >= 'A' && c <= 'Z' && static_cast<std::size_t>(c - 'A') < num_choices_;
  }
  static std::size_t index_of(char c) { return static_cast<std::size_t>(c - 'A'); }

  // "(X)" starting at i.
  std::optional<std::size_t> parenthesized(std::size_t i) const {
    if (i + 2 < text_.size() && text_[i] == '(' && text_[i + 2] == ')' && in_range(text_[i + 1])) {
      return index_of(text_[i + 1]);
    }
    return std::nullopt;
  }

  // "(X)" or a bare X not followed by a letter or digit.
  std::optional<std::size_t> letter_at(std::size_t i) const {
    if (i >= text_.size()) return std::nullopt;
    if (text_[i] == '(') return parenthesized(i);
    if (!in_range(text_[i])) return std::nullopt;
    if (i + 1 < text_.size() && is_alnum(text_[i + 1])) return std::nullopt;
    return index_of(text_[i]);
  }

  std::string_view text_;
  std::size_t num_choices_;
};

}  // namespace

std::string_view to_string(ExtractionMethod method) noexcept {
  switch (method) {
    case ExtractionMethod::kLetterPattern: return "letter_pattern";
    case ExtractionMethod::kChoiceTextMatch: return "choice_text_match";
    case ExtractionMethod::kNone: return "none";
  }
  return "none";
}

ExtractedAnswer extract_answer(std::string_view raw_text, const std::vector<std::string>& choices) {
  const LetterScanner scanner(raw_text, choices.size());
  if (auto i = scanner.keyword()) {
    return {i, ExtractionMethod::kLetterPattern, "answer keyword"};
  }
  if (auto i = scanner.leading()) {
    return {i, ExtractionMethod::kLetterPattern, "leading letter"};
  }
  if (auto i = scanner.first_parenthesized()) {
    return {i, ExtractionMethod::kLetterPattern, "parenthesized letter"};
  }

  const std::string haystack = to_lower(raw_text);
  std::optional<std::size_t> match;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i].empty()) continue;
    if (haystack.find(to_lower(choices[i])) != std::string::npos) {
      match = i;
      ++hits;
    }
  }
  if (hits == 1) {
    return {match, ExtractionMethod::kChoiceTextMatch, "unique choice text"};
  }
  return {std::nullopt, ExtractionMethod::kNone,
          hits > 1 ? "several choice texts occur" : "no letter or choice text found"};
}

}  // namespace rmr::gateway
