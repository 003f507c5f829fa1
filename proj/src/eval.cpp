#include "adr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "adr/errors.hpp"

namespace adr {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

const char* to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::kClassification: return "classification";
    case EvalMode::kNer: return "ner";
    case EvalMode::kNerNorm: return "ner+norm";
  }
  return "?";
}

const char* to_string(MatchType match) {
  switch (match) {
    case MatchType::kStrict: return "strict";
    case MatchType::kRelaxed: return "relaxed";
    case MatchType::kNotApplicable: return "n/a";
  }
  return "?";
}

double f1_score(double precision, double recall) {
  if (!(precision >= 0.0 && precision <= 1.0 && recall >= 0.0 && recall <= 1.0))
    throw std::invalid_argument("precision and recall must lie in [0,1]");
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

EvalReport make_report(EvalMode mode, MatchType match, std::size_t tp, std::size_t fp,
                       std::size_t fn) {
  EvalReport r{mode, match, tp, fp, fn, ratio(tp, tp + fp), ratio(tp, tp + fn), 0.0};
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

EvalReport score_classification(const LabelMap& predictions, const LabelMap& gold) {
  std::vector<std::string> only_pred, only_gold;
  for (const auto& [id, _] : predictions)
    if (!gold.count(id)) only_pred.push_back(id);
  for (const auto& [id, _] : gold)
    if (!predictions.count(id)) only_gold.push_back(id);
  if (!only_pred.empty() || !only_gold.empty()) {
    std::string msg = "prediction and gold ids differ;";
    if (!only_pred.empty()) {
      msg += " only in predictions:";
      for (const auto& id : only_pred) msg += " " + id;
    }
    if (!only_gold.empty()) {
      msg += " only in gold:";
      for (const auto& id : only_gold) msg += " " + id;
    }
    throw DataError(msg);
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [id, g] : gold) {
    const int p = predictions.at(id);
    if (p == 1 && g == 1) ++tp;
    else if (p == 1) ++fp;
    else if (g == 1) ++fn;
  }
  return make_report(EvalMode::kClassification, MatchType::kNotApplicable, tp, fp, fn);
}

bool match_spans(const MentionSpan& pred, const MentionSpan& gold, MatchType match,
                 bool with_norm) {
  bool ok = match == MatchType::kStrict
                ? pred.begin == gold.begin && pred.end == gold.end
                : std::max(pred.begin, gold.begin) < std::min(pred.end, gold.end);
  if (ok && with_norm) ok = pred.code.has_value() && gold.code.has_value() && *pred.code == *gold.code;
  return ok;
}

EvalReport score_ner(const SpanMap& predictions, const SpanMap& gold, MatchType match,
                     bool with_norm) {
  static const std::vector<MentionSpan> kNone;
  auto by_begin = [](const MentionSpan& a, const MentionSpan& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  };
  std::size_t tp = 0, fp = 0, fn = 0;
  auto score_tweet = [&](const std::vector<MentionSpan>& pred_in, const std::vector<MentionSpan>& gold_in) {
    auto pred = pred_in;
    auto gold_spans = gold_in;
    std::stable_sort(pred.begin(), pred.end(), by_begin);
    std::stable_sort(gold_spans.begin(), gold_spans.end(), by_begin);
    std::vector<bool> used(gold_spans.size(), false);
    std::size_t matched = 0;
    for (const auto& p : pred) {
      for (std::size_t g = 0; g < gold_spans.size(); ++g) {
        if (!used[g] && match_spans(p, gold_spans[g], match, with_norm)) {
          used[g] = true;
          ++matched;
          break;
        }
      }
    }
    tp += matched;
    fp += pred.size() - matched;
    fn += gold_spans.size() - matched;
  };
  for (const auto& [id, pred] : predictions) {
    const auto it = gold.find(id);
    score_tweet(pred, it == gold.end() ? kNone : it->second);
  }
  for (const auto& [id, g] : gold)
    if (!predictions.count(id)) score_tweet(kNone, g);
  return make_report(with_norm ? EvalMode::kNerNorm : EvalMode::kNer, match, tp, fp, fn);
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The slack keeps values such as 70.05 (stored as 70.04999...) rounding up.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string format_percent(double fraction, int decimals) {
  return fixed(round_half_up(fraction * 100.0, decimals), decimals);
}

std::string reports_to_tsv(const std::vector<EvalReport>& reports) {
  std::string out = "mode\tmatch\ttp\tfp\tfn\tP\tR\tF1\n";
  for (const auto& r : reports) {
    out += std::string(to_string(r.mode)) + "\t" + to_string(r.match) + "\t" +
           std::to_string(r.tp) + "\t" + std::to_string(r.fp) + "\t" + std::to_string(r.fn) +
           "\t" + fixed(r.precision, 6) + "\t" + fixed(r.recall, 6) + "\t" + fixed(r.f1, 6) + "\n";
  }
  return out;
}

std::string reports_to_table(const std::vector<EvalReport>& reports, int decimals) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-15s %-8s %8s %8s %8s %9s %9s %9s\n", "mode", "match", "tp",
                "fp", "fn", "P", "R", "F1");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-15s %-8s %8zu %8zu %8zu %9s %9s %9s\n", to_string(r.mode),
                  to_string(r.match), r.tp, r.fp, r.fn, format_percent(r.precision, decimals).c_str(),
                  format_percent(r.recall, decimals).c_str(), format_percent(r.f1, decimals).c_str());
    out += line;
  }
  return out;
}

}  // namespace adr
