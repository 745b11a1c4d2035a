#include "reviewguard/features/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <span>

#include "reviewguard/error.hpp"
#include "reviewguard/resources.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::features {

namespace {

bool is_ascii_alnum(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::isalnum(u) != 0;
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
    default: return false;
  }
}

std::string strip_and_fold(std::string_view raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && !is_ascii_alnum(raw[b])) ++b;
  while (e > b && !is_ascii_alnum(raw[e - 1])) --e;
  return to_lower(raw.substr(b, e - b));
}

std::unordered_set<std::string> word_set(std::string_view text) {
  std::unordered_set<std::string> out;
  for (auto w : split_whitespace(text)) out.insert(to_lower(w));
  return out;
}

}  // namespace

Lexicon::Lexicon(std::unordered_set<std::string> easy_words,
                 std::unordered_set<std::string> abbreviations, std::string easy_list_hash)
    : easy_words_(std::move(easy_words)),
      abbreviations_(std::move(abbreviations)),
      easy_list_hash_(std::move(easy_list_hash)) {}

Lexicon Lexicon::from_text(std::string_view easy_words, std::string_view abbreviations) {
  return Lexicon(word_set(easy_words), word_set(abbreviations), sha256_hex(easy_words));
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lexicon = from_text(resources::require("easy_words.txt"),
                                           resources::require("abbreviations.txt"));
  return lexicon;
}

bool Lexicon::is_easy(std::string_view folded_word) const {
  return easy_words_.contains(std::string(folded_word));
}

bool Lexicon::is_abbreviation(std::string_view folded_word) const {
  return abbreviations_.contains(std::string(folded_word));
}

std::vector<TextToken> tokenize(std::string_view text, const Lexicon& lexicon) {
  std::vector<TextToken> out;
  for (auto raw : split_whitespace(text)) {
    TextToken tok;
    tok.raw = raw;
    tok.word = strip_and_fold(raw);
    std::size_t run = 0;
    while (run < raw.size()) {
      const char c = raw[raw.size() - 1 - run];
      if (c != '.' && c != '?' && c != '!') break;
      ++run;
    }
    tok.ends_sentence = run > 0;
    if (run == 1 && raw.back() == '.') {
      std::string_view core = raw.substr(0, raw.size() - 1);
      while (!core.empty() && !is_ascii_alnum(core.front())) core.remove_prefix(1);
      if (!core.empty() && lexicon.is_abbreviation(to_lower(core))) tok.ends_sentence = false;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto raw : split_whitespace(text)) {
    auto w = strip_and_fold(raw);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

std::size_t count_sentences(std::span<const TextToken> tokens) {
  std::size_t sentences = 0;
  bool has_word = false;
  for (const auto& t : tokens) {
    if (!t.word.empty()) has_word = true;
    if (t.ends_sentence && has_word) {
      ++sentences;
      has_word = false;
    }
  }
  if (has_word) ++sentences;
  return std::max<std::size_t>(sentences, 1);
}

std::size_t count_sentences(std::string_view text, const Lexicon& lexicon) {
  return count_sentences(tokenize(text, lexicon));
}

int syllables(std::string_view word) {
  std::string letters;
  for (char c : word) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalpha(u)) letters.push_back(static_cast<char>(std::tolower(u)));
  }
  int count = 0;
  bool in_group = false;
  for (char c : letters) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++count;
    in_group = v;
  }
  const std::size_t n = letters.size();
  if (n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2])) --count;
  if (n >= 3 && letters[n - 1] == 'e' && letters[n - 2] == 'l' && !is_vowel(letters[n - 3])) {
    ++count;
  }
  return std::max(count, 1);
}

double linsear_write(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text, lexicon);
  std::size_t taken = 0;
  std::size_t end = 0;
  double points = 0.0;
  for (; end < tokens.size() && taken < 100; ++end) {
    const auto& w = tokens[end].word;
    if (w.empty()) continue;
    ++taken;
    points += syllables(w) >= 3 ? 3.0 : 1.0;
  }
  if (taken == 0) throw ValidationError("linsear_write: text contains no words");
  const auto sentences =
      static_cast<double>(count_sentences(std::span<const TextToken>(tokens.data(), end)));
  const double r = points / sentences;
  return r > 20.0 ? r / 2.0 : (r - 2.0) / 2.0;
}

bool is_difficult_word(std::string_view folded_word, int syllable_count, const Lexicon& lexicon) {
  return syllable_count >= 2 && !lexicon.is_easy(folded_word);
}

StructuralFeatures structural_features(std::string_view text, std::string review_id,
                                       const Lexicon& lexicon) {
  if (trim(text).empty()) throw ValidationError("empty review");
  const auto tokens = tokenize(text, lexicon);
  StructuralFeatures f;
  f.review_id = std::move(review_id);
  f.sentence_count = static_cast<std::int64_t>(count_sentences(tokens));
  for (const auto& t : tokens) {
    if (t.word.empty()) continue;
    const int syl = syllables(t.word);
    ++f.lexicon_count;
    f.syllable_count += syl;
    if (syl == 1) ++f.monosyllable_count;
    if (is_difficult_word(t.word, syl, lexicon)) ++f.difficult_words;
  }
  f.linsear_write = f.lexicon_count > 0 ? linsear_write(text, lexicon) : 0.0;
  return f;
}

void to_json(nlohmann::json& j, const StructuralFeatures& f) {
  j = nlohmann::json{{"review_id", f.review_id},
                     {"sentence_count", f.sentence_count},
                     {"lexicon_count", f.lexicon_count},
                     {"syllable_count", f.syllable_count},
                     {"difficult_words", f.difficult_words},
                     {"monosyllable_count", f.monosyllable_count},
                     {"linsear_write", f.linsear_write}};
}

void from_json(const nlohmann::json& j, StructuralFeatures& f) {
  j.at("review_id").get_to(f.review_id);
  j.at("sentence_count").get_to(f.sentence_count);
  j.at("lexicon_count").get_to(f.lexicon_count);
  j.at("syllable_count").get_to(f.syllable_count);
  j.at("difficult_words").get_to(f.difficult_words);
  j.at("monosyllable_count").get_to(f.monosyllable_count);
  j.at("linsear_write").get_to(f.linsear_write);
}

}  // namespace reviewguard::features
