#include "scr/proposal/proposal.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace scr::proposal {

namespace {

// Rank descending by score, ties to the lower index, keep at most k.
ProposalSet top_k(std::vector<std::size_t> idx, const std::vector<double>& scores, std::size_t k,
                  std::string method) {
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  if (idx.size() > k) idx.resize(k);
  ProposalSet out;
  out.method = std::move(method);
  out.indices = idx;
  for (std::size_t i : idx) out.scores.push_back(scores[i]);
  return out;
}

}  // namespace

std::vector<double> score_objects_visual(const AttentionMap& map,
                                         const std::vector<ObjectMeta>& objects, double image_w,
                                         double image_h) {
  if (map.empty() || map.values.size() != map.h * map.w) {
    throw std::runtime_error("visual: malformed attention map");
  }
  if (image_w <= 0 || image_h <= 0) throw std::runtime_error("visual: invalid image extent");
  double total = 0.0;
  for (double v : map.values) {
    if (v < 0.0) throw std::runtime_error("visual: negative attention energy");
    total += v;
  }
  if (total <= 0.0) throw std::runtime_error("visual: attention map carries no energy");

  // Cell (r, c) belongs to a box when its center falls inside, with pixel
  // coordinates scaled onto the map grid.
  const double sx = static_cast<double>(map.w) / image_w;
  const double sy = static_cast<double>(map.h) / image_h;
  std::vector<double> scores;
  scores.reserve(objects.size());
  for (const auto& obj : objects) {
    const auto& b = obj.box;
    if (b.x2 <= b.x1 || b.y2 <= b.y1) throw std::runtime_error("visual: degenerate box");
    double inside = 0.0, outside = 0.0;
    std::size_t n_in = 0;
    for (std::size_t r = 0; r < map.h; ++r) {
      for (std::size_t c = 0; c < map.w; ++c) {
        const double cx = (static_cast<double>(c) + 0.5);
        const double cy = (static_cast<double>(r) + 0.5);
        if (cx >= b.x1 * sx && cx <= b.x2 * sx && cy >= b.y1 * sy && cy <= b.y2 * sy) {
          inside += map.values[r * map.w + c];
          ++n_in;
        } else {
          outside += map.values[r * map.w + c];
        }
      }
    }
    const std::size_t n_out = map.h * map.w - n_in;
    if (n_out == 0) throw std::runtime_error("visual: box covers the entire image");
    if (n_in == 0) {
      scores.push_back(0.0);
      continue;
    }
    // The common normalizer cancels in the density ratio.
    const double din = inside / static_cast<double>(n_in);
    const double dout = outside / static_cast<double>(n_out);
    scores.push_back(dout == 0.0 ? std::numeric_limits<double>::infinity() : din / dout);
  }
  return scores;
}

ProposalSet build_proposal_visual(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  return top_k(std::move(idx), scores, k, "visual");
}

ProposalSet build_proposal_textual(const std::vector<std::string>& nouns,
                                   const std::vector<ObjectMeta>& objects,
                                   const EmbeddingStore& store, double threshold, std::size_t k) {
  std::vector<std::vector<double>> noun_vecs;
  noun_vecs.reserve(nouns.size());
  for (const auto& n : nouns) noun_vecs.push_back(store.phrase(n));

  std::vector<double> scores(objects.size(), -1.0);
  std::vector<std::size_t> passing;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::vector<double> cat = store.phrase(objects[i].category);
    double best = -1.0;
    for (const auto& nv : noun_vecs) best = std::max(best, cosine(cat, nv));
    scores[i] = best;
    if (best > threshold) passing.push_back(i);
  }
  return top_k(std::move(passing), scores, k, "textual");
}

ProposalSet build_proposal_qa(const std::string& question, const std::string& answer,
                              const std::vector<ObjectMeta>& objects, const EmbeddingStore& store,
                              const PosTagger& tagger, double threshold, std::size_t k) {
  auto nouns = extract_nouns(question + " " + answer, tagger);
  ProposalSet set = build_proposal_textual(nouns, objects, store, threshold, k);
  set.method = "qa";
  return set;
}

double overlap_fraction(const ProposalSet& a, const ProposalSet& b) {
  if (b.indices.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : b.indices) {
    if (std::find(a.indices.begin(), a.indices.end(), i) != a.indices.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(b.indices.size());
}

}  // namespace scr::proposal
