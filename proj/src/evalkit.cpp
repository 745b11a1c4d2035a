#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "reviewguard/evalkit/metrics.hpp"
#include "reviewguard/util/jsonl.hpp"

namespace reviewguard::evalkit {

using nlohmann::json;

std::string_view to_string(Task t) { return t == Task::Binary ? "binary" : "multilabel"; }

std::optional<Task> parse_task(std::string_view text) {
  if (text == "binary") return Task::Binary;
  if (text == "multilabel" || text == "multi-label") return Task::Multilabel;
  return std::nullopt;
}

void PredictionRecord::validate() const {
  if (example_id.empty()) throw ValidationError("prediction lacks example_id");
  if (task == Task::Binary && (!pred_binary || pred_labels)) {
    throw ValidationError("prediction " + example_id + ": binary task needs pred_binary only");
  }
  if (task == Task::Multilabel && (!pred_labels || pred_binary)) {
    throw ValidationError("prediction " + example_id + ": multilabel task needs pred_labels only");
  }
  if (pred_labels) {
    for (int b : *pred_labels) {
      if (b != 0 && b != 1) throw ValidationError("prediction " + example_id + ": malformed label vector");
    }
  }
}

json to_json(const PredictionRecord& p) {
  json j{{"example_id", p.example_id}, {"task", to_string(p.task)}};
  if (p.pred_binary) j["pred_binary"] = canonical_name(*p.pred_binary);
  if (p.pred_labels) j["pred_labels"] = *p.pred_labels;
  if (p.scores) j["scores"] = *p.scores;
  return j;
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord p;
  try {
    j.at("example_id").get_to(p.example_id);
    auto t = parse_task(j.at("task").get<std::string>());
    if (!t) throw ValidationError("unknown task");
    p.task = *t;
    if (j.contains("pred_binary") && !j.at("pred_binary").is_null()) {
      auto v = parse_verdict(j.at("pred_binary").get<std::string>());
      if (!v) throw ValidationError("unknown pred_binary");
      p.pred_binary = *v;
    }
    if (j.contains("pred_labels") && !j.at("pred_labels").is_null()) {
      const auto bits = j.at("pred_labels").get<std::vector<int>>();
      if (bits.size() != 6) throw ValidationError("pred_labels must have 6 entries");
      datasets::MultiLabel m{};
      std::copy(bits.begin(), bits.end(), m.begin());
      p.pred_labels = m;
    }
    if (j.contains("scores") && !j.at("scores").is_null()) p.scores = j.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed prediction: ") + e.what());
  }
  p.validate();
  return p;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  jsonl::read(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(prediction_from_json(j));
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), line, e.what());
    }
  });
  return out;
}

ClassMetrics class_metrics(std::string name, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassMetrics c;
  c.name = std::move(name);
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.support = tp + fn;
  std::vector<std::string> hits;
  if (tp + fp == 0) {
    hits.emplace_back("precision");
  } else {
    c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    hits.emplace_back("recall");
  } else {
    c.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (c.precision + c.recall == 0.0) {
    hits.emplace_back("F1");
  } else {
    c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
  }
  if (!hits.empty()) {
    std::string s;
    for (const auto& h : hits) s += (s.empty() ? "" : ", ") + h;
    c.zero_division = s;
  }
  return c;
}

namespace {

std::map<std::string, const PredictionRecord*> check_coverage(const std::vector<PredictionRecord>& preds,
                                                              const std::vector<datasets::EncodedExample>& gold,
                                                              Task task) {
  std::map<std::string, const PredictionRecord*> by_id;
  std::vector<std::string> extra;
  std::set<std::string> gold_ids;
  for (const auto& g : gold) gold_ids.insert(g.example_id);
  for (const auto& p : preds) {
    p.validate();
    if (p.task != task) throw ValidationError("prediction " + p.example_id + " is for the other task");
    if (!gold_ids.contains(p.example_id) || !by_id.emplace(p.example_id, &p).second) extra.push_back(p.example_id);
  }
  std::vector<std::string> missing;
  for (const auto& id : gold_ids) {
    if (!by_id.contains(id)) missing.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "coverage mismatch:";
    if (!missing.empty()) msg += fmt::format(" missing {}", fmt::join(missing, ","));
    if (!extra.empty()) msg += fmt::format(" extra/duplicate {}", fmt::join(extra, ","));
    throw CoverageError(msg, missing, extra);
  }
  return by_id;
}

void finish(EvalReport& r) {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  for (const auto& c : r.classes) {
    r.macro.precision += c.precision;
    r.macro.recall += c.recall;
    r.macro.f1 += c.f1;
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    if (c.zero_division) r.notes.push_back(fmt::format("{}: {} 0/0 set to 0", c.name, *c.zero_division));
  }
  const auto k = static_cast<double>(r.classes.size());
  r.macro.precision /= k;
  r.macro.recall /= k;
  r.macro.f1 /= k;
  const auto micro = class_metrics("micro", tp, fp, fn);
  r.micro = {micro.precision, micro.recall, micro.f1};
}

}  // namespace

EvalReport macro_binary(const std::vector<PredictionRecord>& preds, const std::vector<datasets::EncodedExample>& gold) {
  const auto by_id = check_coverage(preds, gold, Task::Binary);
  EvalReport r;
  r.task = Task::Binary;
  r.n_examples = gold.size();
  for (auto cls : {Verdict::SR, Verdict::DR}) {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (const auto& g : gold) {
      const bool pred = *by_id.at(g.example_id)->pred_binary == cls;
      const bool truth = g.binary_target == cls;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    r.classes.push_back(class_metrics(std::string(canonical_name(cls)), tp, fp, fn));
  }
  finish(r);
  return r;
}

EvalReport macro_multilabel(const std::vector<PredictionRecord>& preds,
                            const std::vector<datasets::EncodedExample>& gold) {
  const auto by_id = check_coverage(preds, gold, Task::Multilabel);
  EvalReport r;
  r.task = Task::Multilabel;
  r.n_examples = gold.size();
  for (auto cat : kSubtypes) {
    const auto k = subtype_index(cat);
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (const auto& g : gold) {
      const bool pred = (*by_id.at(g.example_id)->pred_labels)[k] == 1;
      const bool truth = g.multilabel_target[k] == 1;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    r.classes.push_back(class_metrics(std::string(canonical_name(cat)), tp, fp, fn));
  }
  finish(r);
  return r;
}

json to_json(const EvalReport& r) {
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"name", c.name},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"support", c.support},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"zero_division", c.zero_division ? json(*c.zero_division) : json(nullptr)}});
  }
  return json{{"task", to_string(r.task)},
              {"regime", r.regime},
              {"model", r.model},
              {"n_examples", r.n_examples},
              {"averaging", "macro (unweighted mean over classes)"},
              {"classes", classes},
              {"macro", {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}}},
              {"micro", {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1}}},
              {"notes", r.notes}};
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  auto t = parse_task(j.at("task").get<std::string>());
  if (!t) throw ValidationError("report: unknown task");
  r.task = *t;
  r.regime = j.value("regime", std::string{});
  r.model = j.value("model", std::string{});
  r.n_examples = j.value("n_examples", std::size_t{0});
  for (const auto& c : j.value("classes", json::array())) {
    ClassMetrics m;
    m.name = c.at("name").get<std::string>();
    m.tp = c.value("tp", std::int64_t{0});
    m.fp = c.value("fp", std::int64_t{0});
    m.fn = c.value("fn", std::int64_t{0});
    m.support = c.value("support", std::int64_t{0});
    m.precision = c.at("precision").get<double>();
    m.recall = c.at("recall").get<double>();
    m.f1 = c.at("f1").get<double>();
    if (c.contains("zero_division") && c.at("zero_division").is_string()) m.zero_division = c.at("zero_division").get<std::string>();
    r.classes.push_back(std::move(m));
  }
  const auto& macro = j.at("macro");
  r.macro = {macro.at("precision").get<double>(), macro.at("recall").get<double>(), macro.at("f1").get<double>()};
  if (j.contains("micro")) {
    const auto& micro = j.at("micro");
    r.micro = {micro.at("precision").get<double>(), micro.at("recall").get<double>(), micro.at("f1").get<double>()};
  }
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

std::string render_table(const EvalReport& r) {
  std::string out = fmt::format("{:<26} {:>9} {:>9} {:>9} {:>8}\n", "class", "precision", "recall", "F1", "support");
  for (const auto& c : r.classes) {
    out += fmt::format("{:<26} {:>9.4f} {:>9.4f} {:>9.4f} {:>8}{}\n", c.name, c.precision, c.recall, c.f1, c.support,
                       c.zero_division ? " †" : "");
  }
  out += fmt::format("{:<26} {:>9.4f} {:>9.4f} {:>9.4f} {:>8}\n", "macro", r.macro.precision, r.macro.recall,
                     r.macro.f1, r.n_examples);
  out += fmt::format("{:<26} {:>9.4f} {:>9.4f} {:>9.4f}\n", "micro", r.micro.precision, r.micro.recall, r.micro.f1);
  for (const auto& n : r.notes) out += "† " + n + "\n";
  return out;
}

RegimeTable regime_report(const std::vector<EvalReport>& reports, const std::string& baseline) {
  if (reports.size() < 2) throw ValidationError("regime report needs at least 2 reports");
  RegimeTable t;
  t.model = reports.front().model;
  t.task = reports.front().task;
  t.baseline = baseline;
  std::set<std::string> seen;
  for (const auto& r : reports) {
    if (r.model != t.model || r.task != t.task) throw ValidationError("regime report mixes models or tasks");
    if (!seen.insert(r.regime).second) throw ValidationError("regime " + r.regime + " reported twice");
  }
  auto base = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) { return r.regime == baseline; });
  if (base == reports.end()) throw ValidationError("no report for baseline regime " + baseline);

  auto cell = [](double v, double b) {
    RegimeCell c;
    c.value = v;
    if (b != 0.0) c.ratio = v / b;
    return c;
  };
  for (const auto& r : reports) {
    t.rows.push_back({r.regime, cell(r.macro.precision, base->macro.precision), cell(r.macro.recall, base->macro.recall),
                      cell(r.macro.f1, base->macro.f1)});
  }
  std::sort(t.rows.begin(), t.rows.end(), [](const RegimeRow& a, const RegimeRow& b) {
    auto rank = [](const std::string& s) {
      auto r = datasets::parse_regime(s);
      return r ? static_cast<int>(*r) : 99;
    };
    return std::make_pair(rank(a.regime), a.regime) < std::make_pair(rank(b.regime), b.regime);
  });
  for (auto member : {&RegimeRow::precision, &RegimeRow::recall, &RegimeRow::f1}) {
    double best = -1.0;
    for (const auto& row : t.rows) best = std::max(best, (row.*member).value);
    for (auto& row : t.rows) (row.*member).column_max = (row.*member).value == best;
  }
  return t;
}

json to_json(const RegimeTable& t) {
  auto cell = [](const RegimeCell& c) {
    return json{{"value", c.value}, {"ratio", c.ratio ? json(*c.ratio) : json("n/a")}, {"max", c.column_max}};
  };
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"regime", r.regime}, {"precision", cell(r.precision)}, {"recall", cell(r.recall)}, {"f1", cell(r.f1)}});
  }
  return json{{"model", t.model}, {"task", to_string(t.task)}, {"baseline", t.baseline}, {"rows", rows}};
}

std::string render_table(const RegimeTable& t) {
  auto cell = [](const RegimeCell& c) {
    const auto ratio = c.ratio ? fmt::format("x{:.2f}", *c.ratio) : std::string("n/a");
    return fmt::format("{:.4f}{} ({})", c.value, c.column_max ? "*" : " ", ratio);
  };
  std::string out = fmt::format("{} {} (ratios to {}; * = column max)\n", t.model.empty() ? "model" : t.model,
                                to_string(t.task), t.baseline);
  out += fmt::format("{:<8} {:<18} {:<18} {:<18}\n", "regime", "precision", "recall", "F1");
  for (const auto& r : t.rows) {
    out += fmt::format("{:<8} {:<18} {:<18} {:<18}\n", r.regime, cell(r.precision), cell(r.recall), cell(r.f1));
  }
  return out;
}

}  // namespace reviewguard::evalkit
