#pragma once

#include <set>
#include <string>
#include <vector>

namespace scr::proposal {

// Pluggable part-of-speech decision: only the noun/non-noun split matters.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual bool is_noun(const std::string& word) const = 0;
};

// Deterministic tagger: a noun wordlist plus a conservative fallback that
// accepts unknown words with typical noun suffixes.
class LexiconTagger : public PosTagger {
 public:
  LexiconTagger();  // bundled default wordlist
  explicit LexiconTagger(std::set<std::string> nouns);
  static LexiconTagger load(const std::string& path);  // one noun per line, appended to defaults

  void add(const std::string& noun);
  bool is_noun(const std::string& word) const override;

 private:
  std::set<std::string> nouns_;
};

// Lowercased nouns in order of first appearance, duplicates removed. Tokens
// are maximal alphabetic runs.
std::vector<std::string> extract_nouns(const std::string& text, const PosTagger& tagger);

}  // namespace scr::proposal
