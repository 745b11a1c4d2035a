#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/llmio/client.hpp"
#include "reviewguard/stats/chi_square.hpp"
#include "reviewguard/taxonomy.hpp"

namespace reviewguard::quality {

enum class Sentiment { NEG, NEU, POS };  // canonical order, also the tie-break order

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view text);

struct SentimentLabel {
  std::string review_id;
  Sentiment label = Sentiment::NEU;
  std::array<double, 3> scores{};  // NEG, NEU, POS
  bool tie = false;
  bool renormalized = false;  // backend scores did not sum to 1 within 1e-6
  std::optional<std::string> failure;
};

// Argmax with ties going to the lowest canonical index.
SentimentLabel label_from_scores(std::string review_id, std::array<double, 3> scores);

struct TextItem {
  std::string id;
  std::string text;
};

// Batches go out in parallel through the client; output order matches input.
// A batch that fails after retries marks each of its items with `failure`.
std::vector<SentimentLabel> classify_sentiment(const std::vector<TextItem>& items, llmio::Client& client);

nlohmann::json to_json(const SentimentLabel& s);
SentimentLabel sentiment_from_json(const nlohmann::json& j);

struct SentimentRow {
  std::string group;  // "SR" or "DR"
  std::array<std::int64_t, 3> counts{};
  std::array<double, 3> percentages{};
};

struct SentimentTable {
  std::string venue;  // empty = all venues
  std::array<SentimentRow, 2> rows;  // SR then DR
  std::optional<stats::ChiSquareResult> chi;
  std::optional<std::string> chi_note;  // why the test was not run
  std::string render_chi() const;       // "χ²=397.7***, p < 0.001"
};

struct LabeledSentiment {
  std::string venue;
  Verdict verdict = Verdict::SR;
  Sentiment label = Sentiment::NEU;
};

// One table per venue plus a pooled table (venue ""), venues sorted.
std::vector<SentimentTable> sentiment_tables(const std::vector<LabeledSentiment>& rows);
nlohmann::json to_json(const SentimentTable& t);

}  // namespace reviewguard::quality
