#include <algorithm>
#include <chrono>
#include <sstream>

#include <fmt/format.h>

#include "reviewguard/augment/synthetic.hpp"
#include "reviewguard/features/text_metrics.hpp"
#include "reviewguard/util/parallel.hpp"
#include "reviewguard/util/prompt_template.hpp"
#include "reviewguard/util/strings.hpp"

namespace reviewguard::augment {

using nlohmann::json;

json to_json(const SyntheticReview& r) {
  return json{{"synthetic_id", r.synthetic_id},
              {"paper_id", r.paper_id},
              {"target_category", canonical_name(r.target_category)},
              {"text", r.text},
              {"model_id", r.model_id},
              {"template_hash", r.template_hash},
              {"sampling", {{"temperature", r.sampling.temperature}, {"top_p", r.sampling.top_p}}},
              {"created_at", r.created_at}};
}

SyntheticReview synthetic_from_json(const json& j) {
  SyntheticReview r;
  j.at("synthetic_id").get_to(r.synthetic_id);
  j.at("paper_id").get_to(r.paper_id);
  const auto cat = j.at("target_category").get<std::string>();
  auto c = parse_category(cat);
  if (!c) throw ValidationError("unknown target_category '" + cat + "'");
  r.target_category = *c;
  j.at("text").get_to(r.text);
  r.model_id = j.value("model_id", std::string{});
  r.template_hash = j.value("template_hash", std::string{});
  if (j.contains("sampling")) {
    r.sampling.temperature = j.at("sampling").value("temperature", r.sampling.temperature);
    r.sampling.top_p = j.at("sampling").value("top_p", r.sampling.top_p);
  }
  r.created_at = j.value("created_at", std::string{});
  return r;
}

json to_json(const GapEntry& g) {
  return json{{"paper_id", g.paper_id},
              {"category", canonical_name(g.category)},
              {"reason", g.reason},
              {"attempts", g.attempts}};
}

GapEntry gap_from_json(const json& j) {
  GapEntry g;
  j.at("paper_id").get_to(g.paper_id);
  auto c = parse_category(j.at("category").get<std::string>());
  if (!c) throw ValidationError("unknown gap category");
  g.category = *c;
  g.reason = j.value("reason", std::string{});
  g.attempts = j.value("attempts", 0);
  return g;
}

std::size_t longest_common_span(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

namespace {

std::string normalize_label(std::string_view line) {
  std::string out;
  for (char c : line) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_') {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (c == ' ' || c == '\t' || c == '/' || c == '-') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool is_label_line(std::string_view line, Category category) {
  auto t = trim(line);
  while (!t.empty() && (t.front() == '#' || t.front() == '*' || t.front() == '-' || t.front() == '>')) {
    t = trim(t.substr(1));
  }
  const auto lower = to_lower(t);
  for (const char* key : {"category", "type", "review type", "label", "subtype", "sub-type", "target"}) {
    const std::string k(key);
    if (lower.rfind(k, 0) == 0) {
      auto rest = trim(std::string_view(lower).substr(k.size()));
      rest = trim(rest.substr(rest.find_first_not_of("*") == std::string_view::npos ? rest.size()
                                                                                    : rest.find_first_not_of("*")));
      if (!rest.empty() && rest.front() == ':') return true;
    }
  }
  const auto n = normalize_label(t);
  if (n.empty()) return false;
  std::string display = display_name(category);
  const auto paren = display.find(" (");
  for (const auto& label : {std::string(canonical_name(category)), display, display.substr(0, paren)}) {
    if (n == normalize_label(label)) return true;
  }
  return false;
}

bool id_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string strip_token(const std::string& text, const std::string& token) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto hit = text.find(token, pos);
    if (hit == std::string::npos) break;
    const bool left = hit == 0 || !id_char(text[hit - 1]);
    const bool right = hit + token.size() >= text.size() || !id_char(text[hit + token.size()]);
    out.append(text, pos, hit - pos);
    if (!(left && right)) out += token;
    pos = hit + token.size();
  }
  out.append(text, pos);
  return out;
}

std::string utc_now() {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now().time_since_epoch());
  return iso8601_from_millis(ms.count());
}

}  // namespace

std::string remove_category_echo(const std::string& text, Category category) {
  std::istringstream in(text);
  std::vector<std::string> kept;
  std::string line;
  while (std::getline(in, line)) {
    if (!is_label_line(line, category)) kept.push_back(strip_token(line, std::string(canonical_name(category))));
  }
  while (!kept.empty() && trim(kept.front()).empty()) kept.erase(kept.begin());
  while (!kept.empty() && trim(kept.back()).empty()) kept.pop_back();
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i > 0) out += '\n';
    out += kept[i];
  }
  return out;
}

std::vector<std::string> check_text(const std::string& text, const std::string& abstract,
                                    const ValidationRules& rules) {
  std::vector<std::string> problems;
  const auto tokens = features::words(text);
  if (tokens.size() < rules.min_tokens || tokens.empty()) problems.emplace_back("length");
  if (!abstract.empty() && rules.overlap_cap > 0 &&
      longest_common_span(tokens, features::words(abstract)) >= rules.overlap_cap) {
    problems.emplace_back("overlap");
  }
  return problems;
}

ValidationReport validate_synthetic(const std::vector<SyntheticReview>& batch,
                                    const std::map<std::string, std::string>& abstracts,
                                    const ValidationRules& rules) {
  ValidationReport rep;
  rep.records = batch.size();
  std::map<std::string, std::vector<const SyntheticReview*>> by_text;
  for (const auto& r : batch) {
    const auto it = abstracts.find(r.paper_id);
    for (const auto& p : check_text(r.text, it == abstracts.end() ? std::string{} : it->second, rules)) {
      (p == "length" ? rep.length_failures : rep.overlap_failures)++;
      rep.failures.emplace_back(r.synthetic_id, p);
    }
    by_text[std::string(trim(r.text))].push_back(&r);
  }
  for (const auto& [text, group] : by_text) {
    if (text.empty() || group.size() < 2) continue;
    const bool mixed = std::any_of(group.begin(), group.end(), [&](const SyntheticReview* r) {
      return r->target_category != group.front()->target_category;
    });
    if (!mixed) continue;
    for (const auto* r : group) {
      ++rep.duplicate_failures;
      rep.failures.emplace_back(r->synthetic_id, "duplicate");
    }
  }
  std::sort(rep.failures.begin(), rep.failures.end());
  return rep;
}

json to_json(const ValidationReport& r) {
  json failures = json::array();
  for (const auto& [id, rule] : r.failures) failures.push_back({{"synthetic_id", id}, {"rule", rule}});
  return json{{"records", r.records},
              {"passed", r.passed()},
              {"length_failures", r.length_failures},
              {"overlap_failures", r.overlap_failures},
              {"duplicate_failures", r.duplicate_failures},
              {"failures", failures}};
}

PaperSynthesis generate_for_paper(const corpus::PaperRecord& paper, llmio::Client& client,
                                  const AugmentOptions& options) {
  PaperSynthesis out;
  const auto now = options.now ? options.now : utc_now;
  if (trim(paper.abstract).empty()) {
    for (auto c : kAllCategories) out.gaps.push_back({paper.paper_id, c, "empty abstract", 0});
    return out;
  }
  for (auto c : kAllCategories) {
    const auto tmpl = PromptTemplate::bundled(fmt::format("templates/augment/{}.txt", canonical_name(c)));
    const auto prompt = tmpl.render({{"title", paper.title},
                                     {"abstract", paper.abstract},
                                     {"name", display_name(c)},
                                     {"definition", definition(c)},
                                     {"min_tokens", std::to_string(options.rules.min_tokens)}});
    std::vector<llmio::ChatMessage> messages;
    if (!prompt.system.empty()) messages.push_back({"system", prompt.system});
    messages.push_back({"user", prompt.user});

    std::string reason;
    bool done = false;
    int attempts = 0;
    for (; attempts < 2 && !done;) {
      ++attempts;
      try {
        const auto text = remove_category_echo(std::string(trim(client.chat(messages).text)), c);
        const auto problems = check_text(text, paper.abstract, options.rules);
        if (problems.empty()) {
          SyntheticReview r;
          r.paper_id = paper.paper_id;
          r.synthetic_id = fmt::format("{}:{}", paper.paper_id, canonical_name(c));
          r.target_category = c;
          r.text = text;
          r.model_id = client.config().model_id;
          r.template_hash = tmpl.hash();
          r.sampling = {client.config().temperature, client.config().top_p};
          r.created_at = now();
          out.records.push_back(std::move(r));
          done = true;
        } else {
          reason = "validation failed:";
          for (const auto& p : problems) reason += " " + p;
        }
      } catch (const llmio::BackendError& e) {
        reason = std::string("backend: ") + e.what();
      }
    }
    if (!done) out.gaps.push_back({paper.paper_id, c, reason, attempts});
  }
  return out;
}

PaperSynthesis generate(const std::vector<corpus::PaperRecord>& papers, llmio::Client& client,
                        const AugmentOptions& options) {
  auto parts = parallel_map(papers, static_cast<std::size_t>(std::max(1, options.max_parallel)),
                            [&](const corpus::PaperRecord& p) { return generate_for_paper(p, client, options); });
  PaperSynthesis all;
  for (auto& p : parts) {
    std::move(p.records.begin(), p.records.end(), std::back_inserter(all.records));
    std::move(p.gaps.begin(), p.gaps.end(), std::back_inserter(all.gaps));
  }
  std::stable_sort(all.records.begin(), all.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.paper_id, a.target_category) < std::tie(b.paper_id, b.target_category);
  });
  std::stable_sort(all.gaps.begin(), all.gaps.end(), [](const auto& a, const auto& b) {
    return std::tie(a.paper_id, a.category) < std::tie(b.paper_id, b.category);
  });
  return all;
}

}  // namespace reviewguard::augment
