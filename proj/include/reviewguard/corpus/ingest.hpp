#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reviewguard/corpus/store.hpp"
#include "reviewguard/llmio/client.hpp"

namespace reviewguard::corpus {

// How one venue/year maps onto the note listing API.
struct VenueSource {
  std::string venue;
  std::int64_t year = 0;
  // Submission venue ids to list; withdrawn/rejected ids may be included.
  std::vector<std::string> venueids;
  std::string review_invitation_suffix = "Official_Review";
  std::vector<std::string> rating_fields{"rating", "recommendation"};
  std::vector<std::string> confidence_fields{"confidence"};
  // Review form fields concatenated (source order, blank-line separated) into text.
  std::vector<std::string> text_fields{
      "summary",   "summary_of_the_paper", "main_review", "review",    "strengths",
      "weaknesses", "strength_and_weaknesses", "questions", "limitations",
      "clarity,_quality,_novelty_and_reproducibility", "summary_of_the_review", "comment"};
  RatingScale scale;
};

struct SourceConfig {
  std::string base_url = "https://api2.openreview.net";
  std::string token_env = "REVIEWGUARD_OPENREVIEW_TOKEN";
  std::int64_t page_size = 1000;
  int max_in_flight = 4;
  int requests_per_minute = 60;
  llmio::Millis timeout{60000};
  llmio::RetryPolicy retry;
  // Reviews created after this ISO date/time are ignored. Paper-era default
  // is "2025-06-30"; unset means no cutoff.
  std::optional<std::string> data_cutoff;
  std::vector<VenueSource> venues;

  // ICLR 2018-2025 and NeurIPS 2021-2024 with the 1-10 default scale.
  static SourceConfig defaults();
  static SourceConfig from_json(const nlohmann::json& j);
  static SourceConfig load(const std::filesystem::path& path);

  // Throws ValidationError("unsupported venue/year ...").
  const VenueSource& lookup(const std::string& venue, std::int64_t year) const;
  ScaleTable scales() const;
};

struct SkippedRecord {
  std::string reason;
  nlohmann::json raw;
};

struct IngestResult {
  std::size_t papers = 0;
  std::size_t reviews = 0;
  std::vector<SkippedRecord> skipped;
  std::vector<std::string> out_of_scale;  // review ids stored with a flagged rating
  std::size_t after_cutoff = 0;
};

// Raised when retries are exhausted mid-crawl. Everything fetched so far sits
// in the store journal together with a cursor; calling fetch_venue again on
// the same store resumes from `resume_token`.
class IngestAborted : public Error {
 public:
  IngestAborted(const std::string& what, std::string resume_token)
      : Error(what + " (resume token " + resume_token + ")"), resume_token_(std::move(resume_token)) {}
  const std::string& resume_token() const noexcept { return resume_token_; }

 private:
  std::string resume_token_;
};

struct FetchOptions {
  std::shared_ptr<llmio::Transport> transport;  // defaults to HTTP on config.base_url
  std::shared_ptr<llmio::Clock> clock;
  std::shared_ptr<llmio::CallLog> log;
  llmio::EnvLookup env;
};

// Lists every submission of venue/year page by page (bounded-parallel,
// journaled in page order) and stores each submission that has at least one
// review. Commits the store on success.
IngestResult fetch_venue(Store& store, const std::string& venue, std::int64_t year,
                         const SourceConfig& config, FetchOptions options = {});

// Converts one listed note into records; exposed for tests.
struct ParsedSubmission {
  std::optional<PaperRecord> paper;
  std::vector<ReviewRecord> reviews;
  std::vector<SkippedRecord> skipped;
  std::size_t after_cutoff = 0;
};
ParsedSubmission parse_submission(const nlohmann::ordered_json& note, const VenueSource& source,
                                  const std::optional<std::string>& data_cutoff);

}  // namespace reviewguard::corpus
