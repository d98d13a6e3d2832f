#include "scr/proposal/embedding_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scr::proposal {

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("embeddings: cannot open " + path);
  EmbeddingStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (word.empty() || vec.empty() || !ls.eof()) {
      throw std::runtime_error("embeddings: malformed line " + std::to_string(lineno) + " in " +
                               path);
    }
    store.insert(word, std::move(vec));
  }
  if (store.size() == 0) throw std::runtime_error("embeddings: " + path + " holds no vectors");
  return store;
}

void EmbeddingStore::insert(const std::string& word, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw std::runtime_error("embeddings: dimension mismatch for word '" + word + "': got " +
                             std::to_string(vec.size()) + ", table uses " + std::to_string(dim_));
  }
  table_[word] = std::move(vec);
}

std::optional<std::vector<double>> EmbeddingStore::lookup(const std::string& word) const {
  auto it = table_.find(word);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> EmbeddingStore::phrase(const std::string& text) const {
  std::vector<double> sum(dim_, 0.0);
  std::istringstream ls(text);
  std::string word;
  while (ls >> word) {
    auto vec = lookup(word);
    if (!vec) continue;
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += (*vec)[i];
  }
  return sum;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::runtime_error("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  return 1.0 - cosine(a, b);
}

}  // namespace scr::proposal
