#include <set>

#include <fmt/format.h>

#include "reviewguard/annotate/annotator.hpp"
#include "reviewguard/annotate/parse.hpp"
#include "reviewguard/taxonomy.hpp"
#include "reviewguard/util/parallel.hpp"

namespace reviewguard::annotate {

namespace {

constexpr const char* kRepairRequest =
    "Your previous reply could not be used ({}). Reply again with only the JSON array: exactly one object per "
    "review_id, verdict \"SR\" or \"DR\", subtypes drawn from the listed ids (empty for SR, at least one for DR).";

PaperAnnotation annotate_one(const corpus::PaperBundle& bundle, llmio::Client& client,
                             const AnnotatorOptions& options, const PromptTemplate& tmpl) {
  PaperAnnotation out;
  out.paper_id = bundle.paper.paper_id;
  AnnotationPrompt prompt;
  try {
    prompt = build_annotation_prompt(bundle.paper, bundle.reviews, options.prompt, tmpl);
  } catch (const ValidationError& e) {
    out.failure = e.what();
    return out;
  }
  out.dropped_ids = prompt.dropped_ids;
  const std::set<std::string> expected(prompt.included_ids.begin(), prompt.included_ids.end());

  std::vector<llmio::ChatMessage> messages;
  if (!prompt.system.empty()) messages.push_back({"system", prompt.system});
  messages.push_back({"user", prompt.user});

  std::string reply;
  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      messages.push_back({"assistant", reply});
      messages.push_back({"user", fmt::format(kRepairRequest, problem)});
    }
    try {
      reply = client.chat(messages).text;
      ++out.model_calls;
    } catch (const llmio::BackendError& e) {
      out.failure = std::string("backend: ") + e.what();
      return out;
    }
    try {
      out.records = parse_annotation(reply, expected);
      break;
    } catch (const AnnotationParseError& e) {
      problem = e.what();
      if (attempt == 1) {
        const UnparseableAnnotation err(problem, reply);
        out.failure = err.what();
        out.raw_reply = err.raw();
      }
    }
  }
  const auto annotator = options.annotator_id.empty() ? client.config().model_id : options.annotator_id;
  const auto criteria = options.criteria_version.empty() ? taxonomy_version() : options.criteria_version;
  for (auto& r : out.records) {
    r.source = Source::Llm;
    r.round = 0;
    r.annotator_id = annotator;
    r.template_hash = prompt.template_hash;
    r.criteria_version = criteria;
  }
  return out;
}

}  // namespace

std::vector<PaperAnnotation> annotate_papers(const std::vector<corpus::PaperBundle>& papers, llmio::Client& client,
                                             const AnnotatorOptions& options, const PromptTemplate& tmpl) {
  return parallel_map(papers, static_cast<std::size_t>(std::max(1, options.max_parallel)),
                      [&](const corpus::PaperBundle& b) { return annotate_one(b, client, options, tmpl); });
}

}  // namespace reviewguard::annotate
