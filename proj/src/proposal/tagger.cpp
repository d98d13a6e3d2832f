#include "scr/proposal/tagger.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace scr::proposal {

namespace {

const char* const kDefaultNouns[] = {
    "man",    "woman",  "boy",     "girl",   "child",  "person", "dog",     "cat",
    "bird",   "horse",  "sheep",   "cow",    "bear",   "zebra",  "giraffe", "elephant",
    "banana", "apple",  "pizza",   "cake",   "donut",  "sandwich", "carrot", "orange",
    "ball",   "racket", "bat",     "glove",  "kite",   "frisbee", "skateboard", "surfboard",
    "car",    "bus",    "train",   "truck",  "bicycle", "motorcycle", "boat", "plane",
    "table",  "chair",  "couch",   "bed",    "toilet", "tv",      "laptop", "phone",
    "book",   "clock",  "vase",    "scissors", "bottle", "cup",   "fork",   "knife",
    "spoon",  "bowl",   "umbrella", "handbag", "tie",   "suitcase", "hat",  "shirt",
    "street", "field",  "court",   "park",   "beach",  "kitchen", "room",   "tennis",
    "baseball", "soccer", "grass",  "tree",   "flower", "sign",   "light",  "window",
};

const char* const kNounSuffixes[] = {"tion", "sion", "ness", "ment", "ship", "ism", "ity"};

std::string lower(const std::string& w) {
  std::string out = w;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

LexiconTagger::LexiconTagger() {
  for (const char* n : kDefaultNouns) nouns_.insert(n);
}

LexiconTagger::LexiconTagger(std::set<std::string> nouns) : nouns_(std::move(nouns)) {}

LexiconTagger LexiconTagger::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("tagger: cannot open noun list " + path);
  LexiconTagger tagger;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) tagger.add(lower(line));
  }
  return tagger;
}

void LexiconTagger::add(const std::string& noun) { nouns_.insert(lower(noun)); }

bool LexiconTagger::is_noun(const std::string& word) const {
  const std::string w = lower(word);
  if (nouns_.count(w)) return true;
  for (const char* suf : kNounSuffixes) {
    const std::string s(suf);
    if (w.size() > s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0) return true;
  }
  return false;
}

std::vector<std::string> extract_nouns(const std::string& text, const PosTagger& tagger) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      if (tagger.is_noun(token) && seen.insert(token).second) out.push_back(token);
      token.clear();
    }
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace scr::proposal
