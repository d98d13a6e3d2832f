#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scr::proposal {

// Word vectors from a Glove-format text file: one "word f1 f2 ... fd" line
// per entry, uniform dimension. Immutable after load.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  static EmbeddingStore load(const std::string& path);

  void insert(const std::string& word, std::vector<double> vec);
  std::optional<std::vector<double>> lookup(const std::string& word) const;

  // Sum of the word vectors of a whitespace-split phrase (the multi-word
  // rule). Unknown words contribute nothing; an all-unknown phrase gives the
  // zero vector.
  std::vector<double> phrase(const std::string& text) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

// Cosine similarity; zero when either vector is all-zero (absent embedding).
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// 1 - cosine, the distance used for answer weighting; range [0, 2].
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace scr::proposal
