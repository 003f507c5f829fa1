#include "adr/pipeline.hpp"

#include <algorithm>
#include <thread>

#include "adr/errors.hpp"
#include "adr/spans.hpp"

namespace adr {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<NormalizedTweet> TextPipeline::normalize_all(const std::vector<RawTweet>& tweets) const {
  std::vector<NormalizedTweet> out(tweets.size());
  parallel_for(tweets.size(), threads, [&](std::size_t i) { out[i] = normalize(tweets[i], tables); });
  return out;
}

TokenizedTweet TextPipeline::tokenize(const NormalizedTweet& tweet) const {
  return encode(tweet.text, vocab, max_len);
}

Lexicon Lexicon::from_mentions(const ExtractionDataset& data) {
  std::map<std::string, std::string> terms;
  for (const auto& r : data.records)
    for (const auto& m : r.mentions)
      if (m.code) terms.emplace(*m.code, m.term);
  std::vector<Concept> concepts;
  for (auto& [code, term] : terms) concepts.push_back({code, term});
  return from_concepts(std::move(concepts));
}

Lexicon Lexicon::from_concepts(std::vector<Concept> concepts) {
  Lexicon lex;
  lex.concepts = std::move(concepts);
  for (std::size_t i = 0; i < lex.concepts.size(); ++i) lex.index.emplace(lex.concepts[i].code, i);
  return lex;
}

std::vector<ClassifierExample> make_classifier_examples(const ClassificationDataset& data,
                                                        const TextPipeline& pipeline) {
  std::vector<RawTweet> tweets;
  for (const auto& r : data.records) tweets.push_back(r.tweet);
  const auto normalized = pipeline.normalize_all(tweets);
  std::vector<ClassifierExample> out;
  for (std::size_t i = 0; i < normalized.size(); ++i)
    out.push_back({pipeline.tokenize(normalized[i]).ids, static_cast<int>(data.records[i].label)});
  return out;
}

std::vector<TaggingExample> make_tagging_examples(const ExtractionDataset& data,
                                                  const TextPipeline& pipeline) {
  const auto normalized = pipeline.normalize_all(tweets_of(data));
  std::vector<TaggingExample> out;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const auto tokens = pipeline.tokenize(normalized[i]);
    std::vector<TextSpan> spans;
    for (const auto& m : data.records[i].mentions) {
      const auto projected = project_span_to_normalized(m, normalized[i]);
      if (!projected) continue;
      if (!spans.empty() && projected->begin < spans.back().end)
        spans.back().end = std::max(spans.back().end, projected->end);
      else
        spans.push_back(*projected);
    }
    out.push_back({tokens.ids, spans_to_bio(tokens, spans),
                   data.records[i].mentions.empty() ? 0 : 1});
  }
  return out;
}

std::vector<ConceptExample> make_concept_examples(const ExtractionDataset& data,
                                                  const Lexicon& lexicon,
                                                  const TextPipeline& pipeline) {
  std::vector<RawTweet> mentions;
  std::vector<std::size_t> labels;
  for (const auto& r : data.records) {
    for (const auto& m : r.mentions) {
      if (!m.code) throw DataError("tweet " + r.tweet.id + ": mention '" + m.surface + "' has no code");
      const auto it = lexicon.index.find(*m.code);
      if (it == lexicon.index.end())
        throw DataError("tweet " + r.tweet.id + ": code " + *m.code + " is not in the lexicon");
      mentions.push_back({r.tweet.id, m.surface});
      labels.push_back(it->second);
    }
  }
  const auto normalized = pipeline.normalize_all(mentions);
  std::vector<ConceptExample> out;
  for (std::size_t i = 0; i < normalized.size(); ++i)
    out.push_back({pipeline.tokenize(normalized[i]).ids, labels[i]});
  return out;
}

LabelMap predict_labels(const ModelParams& params, const std::vector<RawTweet>& tweets,
                        const TextPipeline& pipeline) {
  const auto normalized = pipeline.normalize_all(tweets);
  std::vector<int> labels(tweets.size());
  parallel_for(tweets.size(), pipeline.threads, [&](std::size_t i) {
    const auto out = forward(pipeline.tokenize(normalized[i]), params, Mode::kEval, 0);
    labels[i] = decide(classify_tweet(out.sequence_start(), params));
  });
  LabelMap result;
  for (std::size_t i = 0; i < tweets.size(); ++i) result[tweets[i].id] = labels[i];
  return result;
}

SpanMap predict_mentions(const ModelParams& params, const std::vector<RawTweet>& tweets,
                         const TextPipeline& pipeline) {
  const auto normalized = pipeline.normalize_all(tweets);
  std::vector<std::vector<MentionSpan>> found(tweets.size());
  parallel_for(tweets.size(), pipeline.threads, [&](std::size_t i) {
    const auto tokens = pipeline.tokenize(normalized[i]);
    const auto out = forward(tokens, params, Mode::kEval, 0);
    std::vector<BioTag> tags;
    for (const auto& dist : tag_tokens(out, params)) {
      const auto best = std::max_element(dist.begin(), dist.end()) - dist.begin();
      tags.push_back(static_cast<BioTag>(best));
    }
    for (const auto& span : bio_to_spans(tags, tokens))
      found[i].push_back(project_span_to_original(span, normalized[i]));
  });
  SpanMap result;
  for (std::size_t i = 0; i < tweets.size(); ++i) result[tweets[i].id] = std::move(found[i]);
  return result;
}

void assign_concepts(SpanMap& mentions, const ModelParams& normalizer,
                     const std::vector<Concept>& concepts, const TextPipeline& pipeline) {
  if (concepts.size() != normalizer.config.n_concepts)
    throw MismatchError("normalizer has " + std::to_string(normalizer.config.n_concepts) +
                        " concepts but its lexicon lists " + std::to_string(concepts.size()));
  std::vector<MentionSpan*> flat;
  for (auto& [id, spans] : mentions)
    for (auto& m : spans) flat.push_back(&m);
  parallel_for(flat.size(), pipeline.threads, [&](std::size_t i) {
    const auto probs = normalize_mention(flat[i]->surface, normalizer, pipeline.vocab, pipeline.tables);
    Eigen::Index best = 0;
    probs.maxCoeff(&best);
    flat[i]->code = concepts[static_cast<std::size_t>(best)].code;
    flat[i]->term = concepts[static_cast<std::size_t>(best)].term;
  });
}

LabelMap gold_labels(const ClassificationDataset& data) {
  LabelMap out;
  for (const auto& r : data.records) out[r.tweet.id] = static_cast<int>(r.label);
  return out;
}

SpanMap gold_mentions(const ExtractionDataset& data) {
  SpanMap out;
  for (const auto& r : data.records) out[r.tweet.id] = r.mentions;
  return out;
}

}  // namespace adr
