#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "adr/corpus.hpp"

namespace adr {

enum class EvalMode { kClassification, kNer, kNerNorm };
enum class MatchType { kStrict, kRelaxed, kNotApplicable };

const char* to_string(EvalMode mode);
const char* to_string(MatchType match);

struct EvalReport {
  EvalMode mode = EvalMode::kClassification;
  MatchType match = MatchType::kNotApplicable;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean; 0 when p + r = 0. Throws std::invalid_argument outside [0,1].
double f1_score(double precision, double recall);

// Builds a report from confusion counts (zero denominators give 0).
EvalReport make_report(EvalMode mode, MatchType match, std::size_t tp, std::size_t fp,
                       std::size_t fn);

using LabelMap = std::map<std::string, int>;
using SpanMap = std::map<std::string, std::vector<MentionSpan>>;

// Label 1 is the positive class. Throws DataError listing ids present in only
// one of the maps.
EvalReport score_classification(const LabelMap& predictions, const LabelMap& gold);

// Strict: identical offsets. Relaxed: at least one shared character. With
// normalization the codes must also be equal.
bool match_spans(const MentionSpan& pred, const MentionSpan& gold, MatchType match,
                 bool with_norm);

// Greedy one-to-one matching per tweet: predictions in begin order, each paired
// with the first unmatched compatible gold span.
EvalReport score_ner(const SpanMap& predictions, const SpanMap& gold, MatchType match,
                     bool with_norm);

// Half-up rounding to `decimals` places.
double round_half_up(double value, int decimals);
// value in [0,1] rendered as a percentage with `decimals` places.
std::string format_percent(double fraction, int decimals);

std::string reports_to_tsv(const std::vector<EvalReport>& reports);
std::string reports_to_table(const std::vector<EvalReport>& reports, int decimals);

}  // namespace adr
