#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scr/proposal/embedding_store.hpp"
#include "scr/proposal/object_meta.hpp"
#include "scr/proposal/tagger.hpp"

namespace scr::proposal {

// Candidate influential objects for one instance. Scores descend; an empty
// set is the explicit "unusable" marker that disables the sensitivity losses
// for the instance.
struct ProposalSet {
  std::vector<std::size_t> indices;
  std::vector<double> scores;
  std::string method;  // visual | textual | qa
  bool usable() const { return !indices.empty(); }
};

// Attention-energy density ratio per box: mean normalized energy per cell
// inside the box over mean energy per cell outside. All mass inside gives an
// infinity sentinel (ranks first). A box covering the whole map is an error.
std::vector<double> score_objects_visual(const AttentionMap& map,
                                         const std::vector<ObjectMeta>& objects, double image_w,
                                         double image_h);

// Top-k objects by visual score, ties to the lower index.
ProposalSet build_proposal_visual(const std::vector<double>& scores, std::size_t k);

// Objects whose category embedding has cosine similarity > threshold against
// any extracted noun, ranked by best similarity, top-k.
ProposalSet build_proposal_textual(const std::vector<std::string>& nouns,
                                   const std::vector<ObjectMeta>& objects,
                                   const EmbeddingStore& store, double threshold = 0.6,
                                   std::size_t k = 6);

// Same construction with nouns drawn from the question and answer text.
ProposalSet build_proposal_qa(const std::string& question, const std::string& answer,
                              const std::vector<ObjectMeta>& objects, const EmbeddingStore& store,
                              const PosTagger& tagger, double threshold = 0.6, std::size_t k = 6);

// Fraction of b's members also present in a; 0 when b is empty.
double overlap_fraction(const ProposalSet& a, const ProposalSet& b);

}  // namespace scr::proposal
