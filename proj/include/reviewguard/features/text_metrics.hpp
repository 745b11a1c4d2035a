#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace reviewguard::features {

// Word lists consulted by the tokenizer and the difficult-word test.
class Lexicon {
 public:
  Lexicon(std::unordered_set<std::string> easy_words,
          std::unordered_set<std::string> abbreviations, std::string easy_list_hash);

  // Built from the bundled easy_words.txt and abbreviations.txt.
  static const Lexicon& bundled();
  static Lexicon from_text(std::string_view easy_words, std::string_view abbreviations);

  bool is_easy(std::string_view folded_word) const;
  bool is_abbreviation(std::string_view folded_word) const;
  const std::string& easy_list_hash() const { return easy_list_hash_; }
  std::size_t easy_word_count() const { return easy_words_.size(); }

 private:
  std::unordered_set<std::string> easy_words_;
  std::unordered_set<std::string> abbreviations_;
  std::string easy_list_hash_;
};

// One whitespace-delimited chunk of text. `word` is the chunk with leading and
// trailing non-alphanumerics stripped and ASCII case folded; empty when the
// chunk carries no word.
struct TextToken {
  std::string_view raw;
  std::string word;
  bool ends_sentence = false;
};

// Sentence boundaries fall after chunks ending in a run of [.?!], except a
// single "." closing a listed abbreviation ("e.g.", "Fig.").
std::vector<TextToken> tokenize(std::string_view text, const Lexicon& lexicon = Lexicon::bundled());

// Case-folded lexicon tokens.
std::vector<std::string> words(std::string_view text);

// Segments containing at least one word; never less than 1.
std::size_t count_sentences(std::span<const TextToken> tokens);
std::size_t count_sentences(std::string_view text, const Lexicon& lexicon = Lexicon::bundled());

// Vowel groups over [aeiouy], minus one for a silent trailing "e" (an "e"
// preceded by a consonant), plus one for a consonant + "le" ending; minimum 1.
// Non-letters are ignored, so numerals count as one syllable.
int syllables(std::string_view word);

// Linsear Write grade over the first 100 words: each word with <= 2 syllables
// scores 1 and each longer word 3; r = points / sentences in that sample;
// the grade is r / 2 when r > 20 and (r - 2) / 2 otherwise.
double linsear_write(std::string_view text, const Lexicon& lexicon = Lexicon::bundled());

struct StructuralFeatures {
  std::string review_id;
  std::int64_t sentence_count = 0;
  std::int64_t lexicon_count = 0;
  std::int64_t syllable_count = 0;
  std::int64_t difficult_words = 0;
  std::int64_t monosyllable_count = 0;
  double linsear_write = 0.0;
};

// >= 2 syllables and absent from the easy list.
bool is_difficult_word(std::string_view folded_word, int syllable_count, const Lexicon& lexicon);

// Throws ValidationError("empty review") for empty or whitespace-only text.
StructuralFeatures structural_features(std::string_view text, std::string review_id = {},
                                       const Lexicon& lexicon = Lexicon::bundled());

void to_json(nlohmann::json& j, const StructuralFeatures& f);
void from_json(const nlohmann::json& j, StructuralFeatures& f);

}  // namespace reviewguard::features
