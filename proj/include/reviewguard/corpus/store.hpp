#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "reviewguard/corpus/records.hpp"

namespace reviewguard::corpus {

struct Filter {
  std::optional<std::string> venue;
  std::optional<std::int64_t> year;
  std::optional<std::string> paper_id;
  std::optional<std::string> review_id;

  bool matches(const PaperRecord& paper) const;
};

using Record = std::variant<PaperRecord, ReviewRecord>;

struct PaperBundle {
  PaperRecord paper;
  std::vector<ReviewRecord> reviews;  // sorted by review_id
};

// Local store rooted at a directory:
//   papers.jsonl   one PaperRecord per line, sorted by (venue, year, paper_id)
//   reviews.jsonl  one ReviewRecord per line, sorted by (venue, year, paper_id, review_id)
//   journal.jsonl  write-ahead log of upserts and ingest cursors since the last commit
//
// Upserts go to the journal first; commit() rewrites both record files
// atomically and drops the journal. Identical inputs therefore always yield
// byte-identical record files. Opening a store replays a leftover journal, so
// an interrupted ingest resumes from its last cursor.
class Store {
 public:
  static Store open(const std::filesystem::path& root);

  void upsert(const PaperRecord& paper);
  // The parent paper must already be present.
  void upsert(const ReviewRecord& review);
  void record_cursor(const std::string& key, std::int64_t offset);
  std::optional<std::int64_t> cursor(const std::string& key) const;

  // No-op when nothing changed since open().
  void commit();

  // Deterministic order: (venue, year, paper_id, review_id), each paper
  // immediately followed by its reviews.
  std::vector<Record> load(const Filter& filter = {}) const;
  std::vector<PaperBundle> papers(const Filter& filter = {}) const;

  const PaperRecord* find_paper(const std::string& paper_id) const;
  const ReviewRecord* find_review(const std::string& review_id) const;

  // Human-readable problems found by a full scan (dangling paper_id, ...).
  std::vector<std::string> integrity_violations() const;

  std::size_t paper_count() const { return papers_.size(); }
  std::size_t review_count() const { return reviews_.size(); }

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path papers_file() const { return root_ / "papers.jsonl"; }
  std::filesystem::path reviews_file() const { return root_ / "reviews.jsonl"; }
  std::filesystem::path journal_file() const { return root_ / "journal.jsonl"; }

 private:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {}
  void apply(const PaperRecord& paper);
  void apply(const ReviewRecord& review);
  std::vector<const PaperRecord*> sorted_papers(const Filter& filter) const;
  std::vector<const ReviewRecord*> reviews_of(const PaperRecord& paper) const;

  std::filesystem::path root_;
  std::map<std::string, PaperRecord> papers_;
  std::map<std::string, ReviewRecord> reviews_;
  std::map<std::string, std::set<std::string>> by_paper_;
  std::map<std::string, std::int64_t> cursors_;
  bool dirty_ = false;
};

}  // namespace reviewguard::corpus
