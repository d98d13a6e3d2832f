#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scr/harness/config.hpp"
#include "scr/models/qa_instance.hpp"
#include "scr/proposal/embedding_store.hpp"
#include "scr/proposal/tagger.hpp"

namespace scr::harness {

struct CorpusMeta {
  std::size_t n_objects = 8;
  std::size_t d_obj = 16;
  std::size_t max_q_len = 14;
  double image_w = 64.0, image_h = 64.0;
  double shift = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> vocab;  // includes "<unk>" at id 0
  std::vector<std::string> answers;          // answer id -> text
};

// A generated corpus plus the resources the proposal builders need.
struct Corpus {
  CorpusMeta meta;
  std::vector<models::QaInstance> train, test;
  proposal::EmbeddingStore store;
  proposal::LexiconTagger tagger;
};

// State QA task: each scene holds exactly one object of the question's type
// plus distractors of other types and pure-noise fillers. The asked-about
// object carries a type channel (always on) and a state channel that encodes
// the answer. The type channel correlates with the majority answer, so it is
// a learnable shortcut; the state channel is the real signal. Train answer
// priors are skewed per type by `shift`; test priors favor a different state.
Corpus gen_toy_qa(const ToyQaConfig& cfg);

void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

// Proposal indices for one instance under the configured method; empty means
// unusable (the instance trains on plain BCE and is excluded from FSR).
std::vector<std::size_t> instance_proposal(const models::QaInstance& inst,
                                           const std::string& method, const Corpus& corpus,
                                           double threshold, std::size_t k);

std::vector<std::vector<std::size_t>> corpus_proposals(const std::vector<models::QaInstance>& data,
                                                       const std::string& method,
                                                       const Corpus& corpus, double threshold,
                                                       std::size_t k);

}  // namespace scr::harness
