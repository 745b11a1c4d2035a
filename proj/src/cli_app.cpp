#include <csignal>

#include <atomic>
#include <chrono>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "reviewguard/annotate/agreement.hpp"
#include "reviewguard/annotate/annotator.hpp"
#include "reviewguard/augment/synthetic.hpp"
#include "reviewguard/cli/app.hpp"
#include "reviewguard/cli/run_config.hpp"
#include "reviewguard/cli/serve.hpp"
#include "reviewguard/conflict/consensus.hpp"
#include "reviewguard/corpus/ingest.hpp"
#include "reviewguard/datasets/dataset.hpp"
#include "reviewguard/evalkit/metrics.hpp"
#include "reviewguard/features/structure_report.hpp"
#include "reviewguard/quality/binoculars.hpp"
#include "reviewguard/quality/sentiment.hpp"
#include "reviewguard/quality/similarity.hpp"
#include "reviewguard/util/jsonl.hpp"
#include "reviewguard/util/parallel.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop_serve{false};

extern "C" void on_stop_signal(int) { g_stop_serve.store(true); }

// Raised for problems the user fixes on the command line (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  RunConfig config;
  bool json_output = false;
  std::ostream& out;
  std::ostream& err;
};

fs::path sibling(const fs::path& out, std::string_view suffix) {
  return out.parent_path() / (out.stem().string() + std::string(suffix));
}

std::string jsonl_text(const std::vector<json>& lines) {
  std::string text;
  for (const auto& l : lines) text += jsonl::dump_line(l) + "\n";
  return text;
}

// Reruns never silently overwrite: identical content is left alone, different
// content pushes the previous file aside as <path>.~N~.
void write_output(const Context& ctx, const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (fs::exists(path)) {
    if (jsonl::read_text(path) == content) {
      ctx.err << fmt::format("{}: unchanged\n", path.string());
      return;
    }
    fs::path backup;
    for (int n = 1;; ++n) {
      backup = path;
      backup += fmt::format(".~{}~", n);
      if (!fs::exists(backup)) break;
    }
    fs::rename(path, backup);
    ctx.err << fmt::format("{}: previous version kept as {}\n", path.string(), backup.string());
  }
  jsonl::write_text_atomic(path, content);
}

void print_json(const Context& ctx, const json& j) { ctx.out << j.dump(2) << "\n"; }

fs::path backend_path(const Context& ctx, const std::string& role, const std::string& flag) {
  if (!flag.empty()) return flag;
  auto it = ctx.config.backends.find(role);
  if (it == ctx.config.backends.end()) {
    throw UsageError(fmt::format("no backend for role '{}': pass --backend or set backends.{} in --config", role, role));
  }
  return it->second;
}

std::unique_ptr<llmio::Client> make_client(const Context& ctx, const fs::path& config_path) {
  auto cfg = llmio::load_backend_config(config_path);
  if (ctx.config.calls_log.has_parent_path()) fs::create_directories(ctx.config.calls_log.parent_path());
  llmio::ClientOptions options;
  options.log = std::make_shared<llmio::CallLog>(ctx.config.calls_log);
  return std::make_unique<llmio::Client>(std::move(cfg), std::move(options));
}

corpus::Store open_existing_store(const fs::path& root) {
  if (!fs::exists(root / "papers.jsonl")) throw ValidationError("no corpus store at " + root.string() + " (run ingest first)");
  return corpus::Store::open(root);
}

annotate::AnnotationStore open_existing_annotations(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("annotation file " + path.string() + " does not exist");
  return annotate::AnnotationStore::open(path);
}

std::vector<conflict::ConsensusResult> read_conflicting(const fs::path& path) {
  std::vector<conflict::ConsensusResult> out;
  jsonl::read(path, [&](const json& j, std::size_t line) {
    try {
      auto r = conflict::consensus_from_json(j);
      if (r.conflicting) out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line, e.what());
    }
  });
  return out;
}

// A machine-labeled real review with its paper.
struct LabeledReal {
  const corpus::ReviewRecord* review = nullptr;
  const corpus::PaperRecord* paper = nullptr;
  const annotate::AnnotationRecord* label = nullptr;
};

std::vector<LabeledReal> labeled_reals(const corpus::Store& store, const std::vector<annotate::AnnotationRecord>& machine,
                                       std::size_t& missing) {
  std::vector<LabeledReal> out;
  missing = 0;
  for (const auto& rec : machine) {
    const auto* review = store.find_review(rec.review_id);
    const auto* paper = review ? store.find_paper(review->paper_id) : nullptr;
    if (paper == nullptr) {
      ++missing;
      continue;
    }
    out.push_back({review, paper, &rec});
  }
  return out;
}

std::vector<augment::SyntheticReview> read_synthetics(const fs::path& path) {
  std::vector<augment::SyntheticReview> out;
  jsonl::read(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(augment::synthetic_from_json(j));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line, e.what());
    }
  });
  return out;
}

// ---- stages -----------------------------------------------------------------

struct IngestArgs {
  std::string venue;
  std::int64_t year = 0;
  std::string store;
  std::string sources;
};

int run_ingest(Context& ctx, const IngestArgs& a) {
  const fs::path store_root = a.store.empty() ? ctx.config.store : fs::path(a.store);
  corpus::SourceConfig sources = corpus::SourceConfig::defaults();
  if (!a.sources.empty()) {
    sources = corpus::SourceConfig::load(a.sources);
  } else if (ctx.config.sources) {
    sources = corpus::SourceConfig::load(*ctx.config.sources);
  }
  sources.lookup(a.venue, a.year);
  fs::create_directories(store_root);
  auto store = corpus::Store::open(store_root);
  auto result = corpus::fetch_venue(store, a.venue, a.year, sources);
  json summary{{"venue", a.venue},
               {"year", a.year},
               {"papers", result.papers},
               {"reviews", result.reviews},
               {"skipped", result.skipped.size()},
               {"out_of_scale", result.out_of_scale},
               {"after_cutoff", result.after_cutoff}};
  if (!result.skipped.empty()) {
    std::vector<json> lines;
    for (const auto& s : result.skipped) lines.push_back(json{{"reason", s.reason}, {"raw", s.raw}});
    write_output(ctx, store_root / fmt::format("skipped-{}-{}.jsonl", a.venue, a.year), jsonl_text(lines));
  }
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("{} {}: {} papers, {} reviews stored; {} records skipped, {} ratings off-scale, {} after cutoff\n",
                           a.venue, a.year, result.papers, result.reviews, result.skipped.size(),
                           result.out_of_scale.size(), result.after_cutoff);
  }
  return kExitOk;
}

struct SelectArgs {
  std::optional<double> threshold;
  std::string store;
  std::string out = "conflicts.jsonl";
};

int run_select(Context& ctx, const SelectArgs& a) {
  const double theta = a.threshold.value_or(ctx.config.conflict_threshold);
  if (theta < 0) throw UsageError("--threshold must be >= 0");
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  auto sel = conflict::select_conflicting(store, theta);
  std::vector<json> lines;
  for (const auto& r : sel.results) lines.push_back(conflict::to_json(r));
  write_output(ctx, a.out, jsonl_text(lines));
  auto summary = conflict::to_json(sel.summary);
  write_output(ctx, sibling(a.out, ".summary.json"), summary.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("{} of {} papers conflicting at threshold {} ({} excluded with < 3 rated reviews)\n",
                           sel.summary.render(), with_thousands(static_cast<std::int64_t>(sel.summary.considered)),
                           theta, sel.summary.excluded.size());
  }
  return kExitOk;
}

struct AnnotateArgs {
  std::string input;
  std::string backend;
  std::string out;
  std::string annotator;
  std::string store;
  std::optional<std::size_t> budget;
};

int run_annotate(Context& ctx, const AnnotateArgs& a) {
  const auto backend = backend_path(ctx, "annotate", a.backend);
  const fs::path out = a.out.empty() ? ctx.config.annotations : fs::path(a.out);
  auto conflicts = read_conflicting(a.input);
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  auto client = make_client(ctx, backend);

  annotate::AnnotatorOptions options;
  options.annotator_id = a.annotator.empty() ? client->config().model_id : a.annotator;
  options.prompt.token_budget = a.budget.value_or(ctx.config.token_budget);
  options.max_parallel = client->config().max_in_flight;

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  auto annotations = annotate::AnnotationStore::open(out);
  std::map<std::string, corpus::PaperBundle> bundles;
  for (auto& b : store.papers()) bundles.emplace(b.paper.paper_id, std::move(b));

  std::vector<corpus::PaperBundle> todo;
  std::size_t already = 0;
  for (const auto& c : conflicts) {
    auto it = bundles.find(c.paper_id);
    if (it == bundles.end()) throw ValidationError("conflict list names paper " + c.paper_id + " missing from the store");
    const bool done = std::all_of(it->second.reviews.begin(), it->second.reviews.end(), [&](const auto& r) {
      return annotations.contains(r.review_id, options.annotator_id, 0);
    });
    if (done) {
      ++already;
    } else {
      todo.push_back(it->second);
    }
  }

  auto results = annotate::annotate_papers(todo, *client, options);
  std::vector<json> failures;
  std::size_t records = 0;
  std::size_t truncated = 0;
  for (const auto& p : results) {
    if (p.failure) {
      failures.push_back(json{{"paper_id", p.paper_id},
                              {"failure", *p.failure},
                              {"model_calls", p.model_calls},
                              {"raw_reply", p.raw_reply ? json(*p.raw_reply) : json(nullptr)}});
      continue;
    }
    if (!p.dropped_ids.empty()) ++truncated;
    for (const auto& r : p.records) {
      if (annotations.contains(r.review_id, r.annotator_id, 0)) continue;
      annotations.append(r);
      ++records;
    }
  }
  if (!failures.empty()) write_output(ctx, sibling(out, ".failures.jsonl"), jsonl_text(failures));
  json summary{{"papers", conflicts.size()},     {"already_annotated", already}, {"annotated", todo.size() - failures.size()},
               {"records_written", records},     {"truncated_papers", truncated}, {"failed_papers", failures.size()},
               {"annotator_id", options.annotator_id}};
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("annotated {} papers ({} already done, {} truncated), {} records appended to {}\n",
                           todo.size() - failures.size(), already, truncated, records, out.string());
  }
  if (!failures.empty()) {
    ctx.err << fmt::format("{} papers failed; details in {}; rerun to retry them\n", failures.size(),
                           sibling(out, ".failures.jsonl").string());
    return kExitDomain;
  }
  return kExitOk;
}

struct AugmentArgs {
  std::string conflicts;
  std::string backend;
  std::string out = "synthetic.jsonl";
  std::string store;
  std::optional<std::size_t> min_tokens;
  std::optional<std::size_t> overlap_cap;
};

int run_augment(Context& ctx, const AugmentArgs& a) {
  const auto backend = backend_path(ctx, "augment", a.backend);
  auto conflicts = read_conflicting(a.conflicts);
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  std::vector<corpus::PaperRecord> papers;
  for (const auto& c : conflicts) {
    const auto* p = store.find_paper(c.paper_id);
    if (p == nullptr) throw ValidationError("conflict list names paper " + c.paper_id + " missing from the store");
    papers.push_back(*p);
  }
  auto client = make_client(ctx, backend);
  augment::AugmentOptions options;
  options.rules.min_tokens = a.min_tokens.value_or(ctx.config.min_synthetic_tokens);
  options.rules.overlap_cap = a.overlap_cap.value_or(ctx.config.overlap_cap);
  options.max_parallel = client->config().max_in_flight;

  const fs::path out = a.out;
  const fs::path gaps_path = sibling(out, ".gaps.jsonl");
  // Papers already fully accounted for by an earlier run are kept as they are.
  augment::PaperSynthesis previous;
  if (fs::exists(out)) previous.records = read_synthetics(out);
  if (fs::exists(gaps_path)) {
    jsonl::read(gaps_path, [&](const json& j, std::size_t) { previous.gaps.push_back(augment::gap_from_json(j)); });
  }
  std::map<std::string, std::size_t> accounted;
  for (const auto& r : previous.records) ++accounted[r.paper_id];
  for (const auto& g : previous.gaps) ++accounted[g.paper_id];

  augment::PaperSynthesis merged;
  std::vector<corpus::PaperRecord> todo;
  for (const auto& p : papers) {
    if (accounted[p.paper_id] == kAllCategories.size()) continue;
    todo.push_back(p);
  }
  const std::set<std::string> redo = [&] {
    std::set<std::string> s;
    for (const auto& p : todo) s.insert(p.paper_id);
    return s;
  }();
  for (const auto& r : previous.records) {
    if (!redo.contains(r.paper_id)) merged.records.push_back(r);
  }
  for (const auto& g : previous.gaps) {
    if (!redo.contains(g.paper_id)) merged.gaps.push_back(g);
  }
  auto fresh = augment::generate(todo, *client, options);
  merged.records.insert(merged.records.end(), fresh.records.begin(), fresh.records.end());
  merged.gaps.insert(merged.gaps.end(), fresh.gaps.begin(), fresh.gaps.end());
  std::sort(merged.records.begin(), merged.records.end(), [](const auto& x, const auto& y) {
    return std::pair(x.paper_id, category_rank(x.target_category)) < std::pair(y.paper_id, category_rank(y.target_category));
  });
  std::sort(merged.gaps.begin(), merged.gaps.end(), [](const auto& x, const auto& y) {
    return std::pair(x.paper_id, category_rank(x.category)) < std::pair(y.paper_id, category_rank(y.category));
  });

  std::vector<json> record_lines;
  for (const auto& r : merged.records) record_lines.push_back(augment::to_json(r));
  std::vector<json> gap_lines;
  for (const auto& g : merged.gaps) gap_lines.push_back(augment::to_json(g));
  write_output(ctx, out, jsonl_text(record_lines));
  write_output(ctx, gaps_path, jsonl_text(gap_lines));

  std::map<std::string, std::string> abstracts;
  for (const auto& p : papers) abstracts[p.paper_id] = p.abstract;
  auto report = augment::validate_synthetic(merged.records, abstracts, options.rules);
  const std::size_t expected = kAllCategories.size() * papers.size();
  json summary{{"papers", papers.size()},
               {"generated_this_run", todo.size()},
               {"records", merged.records.size()},
               {"gaps", merged.gaps.size()},
               {"expected", expected},
               {"identity_holds", merged.records.size() + merged.gaps.size() == expected},
               {"validation", augment::to_json(report)}};
  write_output(ctx, sibling(out, ".summary.json"), summary.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("{} papers x {} = {} = {} synthetic reviews + {} gaps\n", papers.size(),
                           kAllCategories.size(), expected, merged.records.size(), merged.gaps.size());
    if (!report.passed()) {
      ctx.out << fmt::format("validation: {} length, {} overlap, {} duplicate failures\n", report.length_failures,
                             report.overlap_failures, report.duplicate_failures);
    }
  }
  if (merged.records.size() + merged.gaps.size() != expected) {
    throw Error(fmt::format("synthetic bookkeeping mismatch: {} records + {} gaps != {}", merged.records.size(),
                            merged.gaps.size(), expected));
  }
  return kExitOk;
}

struct FeaturesArgs {
  std::string annotations;
  std::string store;
  std::string out = "features.jsonl";
};

int run_features(Context& ctx, const FeaturesArgs& a) {
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  const auto machine = annotations.machine_labels();
  std::size_t missing = 0;
  auto items = labeled_reals(store, machine, missing);
  auto rows = parallel_map(items, std::max(1u, std::thread::hardware_concurrency()), [](const LabeledReal& item) {
    json j = features::structural_features(item.review->text, item.review->review_id);
    j["paper_id"] = item.paper->paper_id;
    j["venue"] = item.paper->venue;
    j["year"] = item.paper->year;
    j["verdict"] = canonical_name(item.label->verdict);
    j["rating"] = item.review->rating ? json(*item.review->rating) : json(nullptr);
    j["confidence"] = item.review->confidence ? json(*item.review->confidence) : json(nullptr);
    return j;
  });
  write_output(ctx, a.out, jsonl_text(rows));
  json summary{{"reviews", rows.size()}, {"labels_without_review", missing}};
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("{} reviews measured ({} labels had no stored review)\n", rows.size(), missing);
  }
  return kExitOk;
}

struct StructureArgs {
  std::string features = "features.jsonl";
  std::string out = "table2.json";
};

int run_structure_report(Context& ctx, const StructureArgs& a) {
  std::vector<features::LabeledReview> reviews;
  jsonl::read(a.features, [&](const json& j, std::size_t line) {
    try {
      features::LabeledReview r;
      r.features = j.get<features::StructuralFeatures>();
      r.review_id = r.features.review_id;
      auto verdict = parse_verdict(j.at("verdict").get<std::string>());
      if (!verdict) throw ValidationError("unknown verdict");
      r.sufficient = *verdict == Verdict::SR;
      if (j.contains("rating") && !j["rating"].is_null()) r.rating = j["rating"].get<double>();
      if (j.contains("confidence") && !j["confidence"].is_null()) r.confidence = j["confidence"].get<double>();
      reviews.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(a.features, line, e.what());
    }
  });
  auto report = features::structure_report(reviews);
  auto j = features::to_json(report);
  write_output(ctx, a.out, j.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, j);
  } else {
    ctx.out << features::render_table(report);
  }
  return kExitOk;
}

struct SentimentArgs {
  std::string backend;
  std::string labels;
  std::string annotations;
  std::string store;
  std::string out = "sentiment.jsonl";
};

std::string sentiment_csv(const std::vector<quality::SentimentTable>& tables) {
  std::string csv = "venue,group,neg,neu,pos,neg_pct,neu_pct,pos_pct,chi2,p_value\n";
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      csv += fmt::format("{},{},{},{},{},{:.2f},{:.2f},{:.2f},{},{}\n", t.venue.empty() ? "all" : t.venue, row.group,
                         row.counts[0], row.counts[1], row.counts[2], row.percentages[0], row.percentages[1],
                         row.percentages[2], t.chi ? fmt::format("{:.4f}", t.chi->statistic) : "",
                         t.chi ? fmt::format("{:.6g}", t.chi->p_value) : "");
    }
  }
  return csv;
}

int run_sentiment(Context& ctx, const SentimentArgs& a) {
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  const auto machine = annotations.machine_labels();
  std::size_t missing = 0;
  auto items = labeled_reals(store, machine, missing);

  std::vector<quality::SentimentLabel> labels;
  if (!a.labels.empty()) {
    jsonl::read(a.labels, [&](const json& j, std::size_t) { labels.push_back(quality::sentiment_from_json(j)); });
  } else {
    auto client = make_client(ctx, backend_path(ctx, "sentiment", a.backend));
    std::vector<quality::TextItem> texts;
    for (const auto& item : items) texts.push_back({item.review->review_id, item.review->text});
    labels = quality::classify_sentiment(texts, *client);
    std::vector<json> lines;
    for (const auto& l : labels) lines.push_back(quality::to_json(l));
    write_output(ctx, a.out, jsonl_text(lines));
  }

  std::map<std::string, const LabeledReal*> by_id;
  for (const auto& item : items) by_id[item.review->review_id] = &item;
  std::vector<quality::LabeledSentiment> rows;
  std::size_t failed = 0;
  for (const auto& l : labels) {
    auto it = by_id.find(l.review_id);
    if (l.failure || it == by_id.end()) {
      ++failed;
      continue;
    }
    rows.push_back({it->second->paper->venue, it->second->label->verdict, l.label});
  }
  auto tables = quality::sentiment_tables(rows);
  json report = json::array();
  for (const auto& t : tables) report.push_back(quality::to_json(t));
  const fs::path out = a.labels.empty() ? fs::path(a.out) : fs::path(a.labels);
  write_output(ctx, sibling(out, ".summary.json"), report.dump(2) + "\n");
  write_output(ctx, sibling(out, ".csv"), sentiment_csv(tables));
  if (ctx.json_output) {
    print_json(ctx, json{{"tables", report}, {"unusable_labels", failed}});
  } else {
    for (const auto& t : tables) {
      ctx.out << fmt::format("{}\n", t.venue.empty() ? "All venues" : t.venue);
      for (const auto& row : t.rows) {
        ctx.out << fmt::format("  {}  NEG {:6.2f}%  NEU {:6.2f}%  POS {:6.2f}%\n", row.group, row.percentages[0],
                               row.percentages[1], row.percentages[2]);
      }
      ctx.out << fmt::format("  {}\n", t.chi ? t.render_chi() : t.chi_note.value_or("no test"));
    }
    if (failed > 0) ctx.out << fmt::format("{} reviews without a usable label were left out\n", failed);
  }
  return kExitOk;
}

struct AiDetectArgs {
  std::string tokens;
  std::string backend;
  std::string annotations;
  std::string store;
  std::string out = "ai_detect.jsonl";
  std::optional<double> threshold;
  std::optional<std::size_t> min_tokens;
};

int run_ai_detect(Context& ctx, const AiDetectArgs& a) {
  quality::BinocularsOptions options{a.threshold.value_or(ctx.config.binoculars_threshold),
                                     a.min_tokens.value_or(ctx.config.binoculars_min_tokens)};
  if (options.threshold <= 0) throw UsageError("--threshold must be > 0");
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  const auto machine = annotations.machine_labels();
  std::size_t missing = 0;
  auto items = labeled_reals(store, machine, missing);

  struct Outcome {
    std::optional<quality::BinocularsResult> result;
    std::string failure;
  };
  std::vector<Outcome> outcomes;
  if (!a.tokens.empty()) {
    auto token_map = quality::read_token_file(a.tokens);
    for (const auto& item : items) {
      auto it = token_map.find(item.review->review_id);
      if (it == token_map.end()) {
        outcomes.push_back({std::nullopt, "no token records"});
        continue;
      }
      try {
        outcomes.push_back({quality::binoculars_score(it->second, options, item.review->review_id), ""});
      } catch (const ValidationError& e) {
        outcomes.push_back({std::nullopt, e.what()});
      }
    }
  } else {
    auto client = make_client(ctx, backend_path(ctx, "logprob", a.backend));
    outcomes = parallel_map(items, client->config().max_in_flight, [&](const LabeledReal& item) -> Outcome {
      try {
        auto tokens = client->token_logprobs(item.review->text);
        return {quality::binoculars_score(tokens.tokens, options, item.review->review_id), ""};
      } catch (const Error& e) {
        return {std::nullopt, e.what()};
      }
    });
  }

  std::vector<quality::BinocularsResult> results;
  std::vector<json> lines;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (outcomes[i].result) {
      results.push_back(*outcomes[i].result);
      lines.push_back(quality::to_json(*outcomes[i].result));
    } else {
      ++failures;
      lines.push_back(json{{"review_id", items[i].review->review_id}, {"failure", outcomes[i].failure}});
    }
  }
  std::map<std::string, quality::ReviewContext> context;
  for (const auto& item : items) {
    context[item.review->review_id] = {item.paper->venue, item.paper->year, item.label->verdict};
  }
  auto temporal = quality::temporal_ai_counts(results, context);
  write_output(ctx, a.out, jsonl_text(lines));
  write_output(ctx, sibling(a.out, ".temporal.csv"), quality::temporal_csv(temporal));
  json rows = json::array();
  for (const auto& r : temporal) rows.push_back(quality::to_json(r));
  json summary{{"scored", results.size()}, {"failures", failures}, {"threshold", options.threshold},
               {"min_tokens", options.min_tokens}, {"temporal", rows}};
  write_output(ctx, sibling(a.out, ".summary.json"), summary.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, summary);
  } else {
    ctx.out << fmt::format("{} reviews scored at threshold {} ({} failures)\n", results.size(), options.threshold,
                           failures);
    ctx.out << quality::temporal_csv(temporal);
  }
  return kExitOk;
}

struct CalibrateArgs {
  std::string scores;
  double heldout = 0.0;
  std::string out;
};

int run_calibrate(Context& ctx, const CalibrateArgs& a) {
  if (a.heldout < 0 || a.heldout >= 1) throw UsageError("--heldout must be in [0, 1)");
  std::vector<quality::LabeledScore> samples;
  jsonl::read(a.scores, [&](const json& j, std::size_t line) {
    try {
      quality::LabeledScore s;
      s.score = j.at("score").get<double>();
      if (j.contains("ai")) {
        s.ai = j.at("ai").get<bool>();
      } else {
        const auto label = to_lower(j.at("label").get<std::string>());
        if (label != "ai" && label != "human") throw ValidationError("label must be 'ai' or 'human'");
        s.ai = label == "ai";
      }
      samples.push_back(s);
    } catch (const std::exception& e) {
      throw ParseError(a.scores, line, e.what());
    }
  });
  auto cal = quality::calibrate(std::move(samples), a.heldout, ctx.config.seed);
  auto j = quality::to_json(cal);
  if (!a.out.empty()) write_output(ctx, a.out, j.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, j);
  } else {
    ctx.out << fmt::format("threshold {:.6g}: accuracy {:.4f} on {} samples", cal.threshold, cal.accuracy, cal.n_fit);
    if (cal.heldout_accuracy) ctx.out << fmt::format(", held-out {:.4f} on {}", *cal.heldout_accuracy, cal.n_heldout);
    ctx.out << "\n";
  }
  return kExitOk;
}

struct SimilarityArgs {
  std::string backend;
  std::string annotations;
  std::string store;
  std::string synthetic;
  std::string out = "similarity.json";
};

int run_similarity(Context& ctx, const SimilarityArgs& a) {
  const auto backend = backend_path(ctx, "embed", a.backend);
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  const auto machine = annotations.machine_labels();
  std::size_t missing = 0;
  std::vector<quality::SimilarityPair> pairs;
  for (const auto& item : labeled_reals(store, machine, missing)) {
    pairs.push_back({item.review->review_id,
                     fmt::format("real/{}/{}", canonical_name(item.label->verdict), item.paper->venue),
                     item.paper->abstract, item.review->text});
  }
  if (!a.synthetic.empty()) {
    for (const auto& s : read_synthetics(a.synthetic)) {
      const auto* paper = store.find_paper(s.paper_id);
      if (paper == nullptr) throw ValidationError("synthetic review " + s.synthetic_id + " names an unknown paper");
      pairs.push_back({s.synthetic_id, fmt::format("synthetic/{}", canonical_name(s.target_category)), paper->abstract,
                       s.text});
    }
  }
  auto client = make_client(ctx, backend);
  auto stats = quality::similarity_distribution(pairs, *client);
  json report = json::array();
  for (const auto& s : stats) report.push_back(quality::to_json(s));
  write_output(ctx, a.out, report.dump(2) + "\n");
  write_output(ctx, sibling(a.out, ".csv"), quality::histogram_csv(stats));
  if (ctx.json_output) {
    print_json(ctx, report);
  } else {
    for (const auto& s : stats) {
      ctx.out << fmt::format("{:<32} n={:<6} peak {:+.2f}{}{}\n", s.group, s.cosines.size(), s.histogram.peak_center,
                             s.histogram.peak_tie ? " (tie)" : "",
                             s.failures.empty() ? "" : fmt::format(", {} zero-norm", s.failures.size()));
    }
  }
  return kExitOk;
}

struct BuildArgs {
  std::string regime;
  std::string annotations;
  std::string store;
  std::string synthetic;
  std::string out;
};

int run_build_dataset(Context& ctx, const BuildArgs& a) {
  auto regime = datasets::parse_regime(a.regime);
  if (!regime) throw UsageError("unknown regime '" + a.regime + "' (expected r_r, r_s, rs_r or rs_rs)");
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto store = open_existing_store(a.store.empty() ? ctx.config.store : fs::path(a.store));
  datasets::BuildInputs inputs;
  for (const auto& bundle : store.papers()) {
    inputs.reviews.insert(inputs.reviews.end(), bundle.reviews.begin(), bundle.reviews.end());
  }
  inputs.annotations = annotations.records();
  if (!a.synthetic.empty()) inputs.synthetics = read_synthetics(a.synthetic);

  auto data = datasets::build(*regime, inputs, ctx.config.split_ratios, ctx.config.seed);
  auto leakage = datasets::leakage_check(data.manifest, data.examples);
  if (!leakage.passed()) {
    for (const auto& v : leakage.violations) ctx.err << fmt::format("{}: {}\n", v.kind, v.detail);
    throw ValidationError(fmt::format("leakage check failed with {} violations; nothing written", leakage.violations.size()));
  }
  const fs::path out = a.out.empty() ? fs::path("datasets") / to_lower(datasets::to_string(*regime)) : fs::path(a.out);
  const auto manifest_text = datasets::to_json(data.manifest).dump(2) + "\n";
  bool unchanged = false;
  if (fs::exists(out / "manifest.json")) {
    if (jsonl::read_text(out / "manifest.json") == manifest_text) {
      unchanged = true;
    } else {
      fs::path backup;
      for (int n = 1;; ++n) {
        backup = out;
        backup += fmt::format(".~{}~", n);
        if (!fs::exists(backup)) break;
      }
      fs::rename(out, backup);
      ctx.err << fmt::format("{}: previous version kept as {}\n", out.string(), backup.string());
    }
  }
  if (unchanged) {
    ctx.err << fmt::format("{}: unchanged\n", out.string());
  } else {
    datasets::write(data, out);
  }
  auto manifest = datasets::to_json(data.manifest);
  if (ctx.json_output) {
    print_json(ctx, json{{"out", out.string()}, {"manifest", manifest}, {"leakage", datasets::to_json(leakage)}});
  } else {
    ctx.out << fmt::format("{} dataset (seed {}) in {}\n", datasets::to_string(*regime), ctx.config.seed, out.string());
    for (const auto& [split, origins] : data.manifest.counts) {
      for (const auto& [origin, c] : origins) {
        ctx.out << fmt::format("  {:<10} {:<9} SR {:>6}  DR {:>6}\n", split, origin, c.sr, c.dr);
      }
    }
    ctx.out << fmt::format("  duplicate texts: {}, labels without review text: {}\n", data.manifest.duplicate_texts,
                           data.manifest.unlabeled_reviews);
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string task;
  std::string pred;
  std::string gold;
  std::string regime;
  std::string model;
  std::string out;
};

int run_evaluate(Context& ctx, const EvaluateArgs& a) {
  auto task = evalkit::parse_task(a.task);
  if (!task) throw UsageError("unknown task '" + a.task + "' (expected binary or multilabel)");
  auto preds = evalkit::read_predictions(a.pred);
  std::vector<datasets::EncodedExample> gold;
  jsonl::read(a.gold, [&](const json& j, std::size_t line) {
    try {
      gold.push_back(datasets::example_from_json(j));
    } catch (const std::exception& e) {
      throw ParseError(a.gold, line, e.what());
    }
  });
  for (const auto& p : preds) {
    if (p.task != *task) throw ValidationError("prediction " + p.example_id + " is for a different task");
  }
  auto report = *task == evalkit::Task::Binary ? evalkit::macro_binary(preds, gold) : evalkit::macro_multilabel(preds, gold);
  report.regime = a.regime;
  report.model = a.model;
  auto j = evalkit::to_json(report);
  if (!a.out.empty()) write_output(ctx, a.out, j.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, j);
  } else {
    ctx.out << evalkit::render_table(report);
  }
  return kExitOk;
}

struct RegimeArgs {
  std::vector<std::string> reports;
  std::string baseline = "R_R";
  std::string out;
};

int run_regime_report(Context& ctx, const RegimeArgs& a) {
  std::vector<evalkit::EvalReport> reports;
  for (const auto& path : a.reports) {
    try {
      reports.push_back(evalkit::eval_report_from_json(json::parse(jsonl::read_text(path))));
    } catch (const json::exception& e) {
      throw ParseError(path, 1, e.what());
    }
  }
  auto table = evalkit::regime_report(reports, a.baseline);
  auto j = evalkit::to_json(table);
  if (!a.out.empty()) write_output(ctx, a.out, j.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, j);
  } else {
    ctx.out << evalkit::render_table(table);
  }
  return kExitOk;
}

struct AgreementArgs {
  int round = 1;
  std::string annotations;
  std::string reference = "machine";
  std::string out;
};

int run_agreement(Context& ctx, const AgreementArgs& a) {
  if (a.reference != "machine" && a.reference != "none") throw UsageError("--reference must be 'machine' or 'none'");
  auto annotations = open_existing_annotations(a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations));
  auto report = annotate::agreement_report(annotations.records(), a.round, a.reference == "machine");
  auto j = annotate::to_json(report);
  if (!a.out.empty()) write_output(ctx, a.out, j.dump(2) + "\n");
  if (ctx.json_output) {
    print_json(ctx, j);
  } else {
    ctx.out << fmt::format("round {}: {} items, {} raters\n", report.round, report.n_items, report.raters.size());
    ctx.out << fmt::format("average Cohen and Fleiss kappa: {}\n", report.render());
    ctx.out << report.footnote() << "\n";
  }
  return kExitOk;
}

struct ServeArgs {
  std::optional<int> port;
  std::string host = "127.0.0.1";
  std::string annotations;
  std::string store;
  std::string rounds;
};

int run_serve(Context& ctx, const ServeArgs& a) {
  ServeOptions options;
  options.annotations = a.annotations.empty() ? ctx.config.annotations : fs::path(a.annotations);
  if (!fs::exists(options.annotations)) {
    throw ValidationError("annotation file " + options.annotations.string() + " does not exist");
  }
  const fs::path store = a.store.empty() ? ctx.config.store : fs::path(a.store);
  if (fs::exists(store / "papers.jsonl")) options.store = store;
  if (!a.rounds.empty()) options.rounds = a.rounds;
  options.host = a.host;
  options.port = a.port.value_or(ctx.config.serve_port);
  if (options.port < 0 || options.port > 65535) throw UsageError("--port out of range");

  Server server(options);
  const int port = server.bind();
  ctx.out << port << std::endl;
  ctx.err << fmt::format("serving {} on http://{}:{}/\n", options.annotations.string(), options.host, port);

  g_stop_serve.store(false);
  auto prev_int = std::signal(SIGINT, on_stop_signal);
  auto prev_term = std::signal(SIGTERM, on_stop_signal);
  std::thread listener([&] { server.run(); });
  while (!g_stop_serve.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  listener.join();
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
  return kExitOk;
}

}  // namespace

void request_serve_stop() { g_stop_serve.store(true); }

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"reviewguard: deficient peer-review pipeline toolkit"};
  app.name("reviewguard");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool json_output = false;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_flag("--json", json_output, "Print machine-readable JSON instead of text");
  app.add_option("--seed", seed, "Override the configured seed");

  std::function<int(Context&)> handler;
  auto sub = [&](const char* name, const char* about, auto& args, auto run) {
    auto* cmd = app.add_subcommand(name, about);
    cmd->fallthrough();
    cmd->callback([&handler, &args, run] { handler = [&args, run](Context& ctx) { return run(ctx, args); }; });
    return cmd;
  };

  IngestArgs ingest;
  auto* c = sub("ingest", "Fetch one venue/year into the corpus store", ingest, run_ingest);
  c->add_option("--venue", ingest.venue, "Venue name, e.g. ICLR")->required();
  c->add_option("--year", ingest.year, "Conference year")->required();
  c->add_option("--store", ingest.store, "Store directory");
  c->add_option("--sources", ingest.sources, "Venue source mapping (JSON)");

  SelectArgs select;
  c = sub("select-conflicts", "Flag papers whose ratings conflict", select, run_select);
  c->add_option("--threshold", select.threshold, "Conflict threshold");
  c->add_option("--store", select.store, "Store directory");
  c->add_option("--out", select.out, "Consensus results (JSONL)");

  AnnotateArgs annotate_args;
  c = sub("annotate", "Label reviews of conflicting papers with an LLM", annotate_args, run_annotate);
  c->add_option("--input", annotate_args.input, "Conflicts file from select-conflicts")->required()->check(CLI::ExistingFile);
  c->add_option("--backend", annotate_args.backend, "Backend config");
  c->add_option("--out", annotate_args.out, "Annotation store (JSONL, appended)");
  c->add_option("--annotator", annotate_args.annotator, "Annotator id (defaults to the model id)");
  c->add_option("--store", annotate_args.store, "Store directory");
  c->add_option("--budget", annotate_args.budget, "Prompt token budget");

  AugmentArgs augment_args;
  c = sub("augment", "Generate one synthetic review per category for conflicting papers", augment_args, run_augment);
  c->add_option("--conflicts", augment_args.conflicts, "Conflicts file from select-conflicts")->required()->check(CLI::ExistingFile);
  c->add_option("--backend", augment_args.backend, "Backend config");
  c->add_option("--out", augment_args.out, "Synthetic reviews (JSONL)");
  c->add_option("--store", augment_args.store, "Store directory");
  c->add_option("--min-tokens", augment_args.min_tokens, "Minimum synthetic review length in tokens");
  c->add_option("--overlap-cap", augment_args.overlap_cap, "Longest allowed span copied from the abstract");

  FeaturesArgs features_args;
  c = sub("features", "Compute structural text features for labeled reviews", features_args, run_features);
  c->add_option("--annotations", features_args.annotations, "Annotation store");
  c->add_option("--store", features_args.store, "Store directory");
  c->add_option("--out", features_args.out, "Feature rows (JSONL)");

  StructureArgs structure;
  c = sub("structure-report", "Group means and Spearman correlations of text features", structure, run_structure_report);
  c->add_option("--features", structure.features, "Feature rows from the features command")->check(CLI::ExistingFile);
  c->add_option("--out", structure.out, "Report (JSON)");

  SentimentArgs sentiment;
  c = sub("sentiment", "Sentiment of SR vs DR reviews with a chi-square test", sentiment, run_sentiment);
  c->add_option("--backend", sentiment.backend, "Sentiment classifier backend config");
  c->add_option("--labels", sentiment.labels, "Reuse labels from an earlier run instead of classifying")->check(CLI::ExistingFile);
  c->add_option("--annotations", sentiment.annotations, "Annotation store");
  c->add_option("--store", sentiment.store, "Store directory");
  c->add_option("--out", sentiment.out, "Sentiment labels (JSONL)");

  AiDetectArgs ai;
  c = sub("ai-detect", "Binoculars scores and yearly AI-like counts", ai, run_ai_detect);
  auto* tokens_opt = c->add_option("--tokens", ai.tokens, "Per-token records keyed by review_id (JSONL)")->check(CLI::ExistingFile);
  c->add_option("--backend", ai.backend, "Log-probability backend config")->excludes(tokens_opt);
  c->add_option("--annotations", ai.annotations, "Annotation store");
  c->add_option("--store", ai.store, "Store directory");
  c->add_option("--out", ai.out, "Per-review scores (JSONL)");
  c->add_option("--threshold", ai.threshold, "Score below which a review counts as AI-like");
  c->add_option("--min-tokens", ai.min_tokens, "Reviews with fewer tokens get no verdict");

  CalibrateArgs calibrate;
  c = sub("calibrate", "Pick the Binoculars threshold from labeled scores", calibrate, run_calibrate);
  c->add_option("--scores", calibrate.scores, "Lines of {score, ai|label}")->required()->check(CLI::ExistingFile);
  c->add_option("--heldout", calibrate.heldout, "Fraction held out for accuracy");
  c->add_option("--out", calibrate.out, "Calibration (JSON)");

  SimilarityArgs similarity;
  c = sub("similarity", "Cosine similarity between abstracts and reviews", similarity, run_similarity);
  c->add_option("--backend", similarity.backend, "Embedding backend config");
  c->add_option("--annotations", similarity.annotations, "Annotation store");
  c->add_option("--store", similarity.store, "Store directory");
  c->add_option("--synthetic", similarity.synthetic, "Synthetic reviews to include")->check(CLI::ExistingFile);
  c->add_option("--out", similarity.out, "Per-group statistics (JSON)");

  BuildArgs build_args;
  c = sub("build-dataset", "Split labeled data into train/validation/test for one regime", build_args, run_build_dataset);
  c->add_option("--regime", build_args.regime, "r_r, r_s, rs_r or rs_rs")->required();
  c->add_option("--annotations", build_args.annotations, "Annotation store");
  c->add_option("--store", build_args.store, "Store directory");
  c->add_option("--synthetic", build_args.synthetic, "Synthetic reviews")->check(CLI::ExistingFile);
  c->add_option("--out", build_args.out, "Output directory (default datasets/<regime>)");

  EvaluateArgs evaluate;
  c = sub("evaluate", "Macro precision, recall and F1 of predictions", evaluate, run_evaluate);
  c->add_option("--task", evaluate.task, "binary or multilabel")->required();
  c->add_option("--pred", evaluate.pred, "Predictions (JSONL)")->required()->check(CLI::ExistingFile);
  c->add_option("--gold", evaluate.gold, "Gold split file (JSONL)")->required()->check(CLI::ExistingFile);
  c->add_option("--regime", evaluate.regime, "Regime label for the report");
  c->add_option("--model", evaluate.model, "Model label for the report");
  c->add_option("--out", evaluate.out, "Report (JSON)");

  RegimeArgs regime;
  c = sub("regime-report", "Compare evaluation reports across regimes", regime, run_regime_report);
  c->add_option("--reports", regime.reports, "Reports from evaluate")->required()->check(CLI::ExistingFile);
  c->add_option("--baseline", regime.baseline, "Baseline regime");
  c->add_option("--out", regime.out, "Table (JSON)");

  ServeArgs serve;
  c = sub("serve", "Serve the validation UI and its API", serve, run_serve);
  c->add_option("--port", serve.port, "Port (0 picks a free one)");
  c->add_option("--host", serve.host, "Listen address");
  c->add_option("--annotations", serve.annotations, "Annotation store");
  c->add_option("--store", serve.store, "Store directory");
  c->add_option("--rounds", serve.rounds, "Round registry (default <annotations>.rounds.json)");

  AgreementArgs agreement;
  c = sub("agreement", "Inter-annotator agreement for a validation round", agreement, run_agreement);
  c->add_option("--round", agreement.round, "Validation round (>= 1)")->required();
  c->add_option("--annotations", agreement.annotations, "Annotation store");
  c->add_option("--reference", agreement.reference, "machine (include round-0 labels as a rater) or none");
  c->add_option("--out", agreement.out, "Report (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    Context ctx{config_path.empty() ? RunConfig{} : load_run_config(config_path), json_output, out, err};
    if (seed) ctx.config.seed = *seed;
    ctx.config.validate();
    return handler(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const corpus::IngestAborted& e) {
    err << "error: " << e.what() << "\nrerun the same command to resume from " << e.resume_token() << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace reviewguard::cli
