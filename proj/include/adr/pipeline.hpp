#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "adr/checkpoint.hpp"
#include "adr/corpus.hpp"
#include "adr/eval.hpp"
#include "adr/preprocess.hpp"
#include "adr/tokenize.hpp"
#include "adr/train.hpp"

namespace adr {

// Runs fn(i) for i in [0, n) on up to `threads` threads. Each index is
// visited exactly once, so writes to per-index slots are deterministic.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct TextPipeline {
  const ResourceTables& tables;
  const Vocab& vocab;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t threads = 1;

  std::vector<NormalizedTweet> normalize_all(const std::vector<RawTweet>& tweets) const;
  TokenizedTweet tokenize(const NormalizedTweet& tweet) const;
};

struct Lexicon {
  std::vector<Concept> concepts;           // sorted by code
  std::map<std::string, std::size_t> index;

  static Lexicon from_mentions(const ExtractionDataset& data);
  static Lexicon from_concepts(std::vector<Concept> concepts);
};

std::vector<ClassifierExample> make_classifier_examples(const ClassificationDataset& data,
                                                        const TextPipeline& pipeline);

// Projects gold mentions onto normalized text (merging any that collide after
// projection) and BIO-encodes them.
std::vector<TaggingExample> make_tagging_examples(const ExtractionDataset& data,
                                                  const TextPipeline& pipeline);

// One example per gold mention. Throws DataError for a mention without a code
// or with a code missing from the lexicon.
std::vector<ConceptExample> make_concept_examples(const ExtractionDataset& data,
                                                  const Lexicon& lexicon,
                                                  const TextPipeline& pipeline);

LabelMap predict_labels(const ModelParams& params, const std::vector<RawTweet>& tweets,
                        const TextPipeline& pipeline);

// Argmax tags -> spans -> original-text mentions, per tweet id.
SpanMap predict_mentions(const ModelParams& params, const std::vector<RawTweet>& tweets,
                         const TextPipeline& pipeline);

// Fills code and term of every mention with the normalizer's argmax concept.
void assign_concepts(SpanMap& mentions, const ModelParams& normalizer,
                     const std::vector<Concept>& concepts, const TextPipeline& pipeline);

LabelMap gold_labels(const ClassificationDataset& data);
SpanMap gold_mentions(const ExtractionDataset& data);

}  // namespace adr
