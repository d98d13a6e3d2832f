#include "scr/harness/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "scr/harness/errors.hpp"
#include "scr/harness/io.hpp"
#include "scr/proposal/proposal.hpp"
#include "scr/rng.hpp"

namespace scr::harness {

using models::QaInstance;
using nlohmann::json;

namespace {

constexpr const char* kNouns[] = {"dog", "banana", "car", "kite"};
constexpr std::size_t kMaxTemplates = std::size(kNouns);
// Shared state vocabulary: every template asks about the same three states,
// so each answer's overall frequency stays flat and only the per-template
// conditional prior is skewed.
constexpr const char* kStates[] = {"clean", "dirty", "broken"};
constexpr std::size_t kNStates = std::size(kStates);
constexpr const char* kFillers[] = {"rock", "tree", "wall", "fence"};
constexpr std::size_t kAttnSide = 8;
// The type channel is always on for the asked-about object, so it correlates
// with the per-template majority answer and the short pretrain budget
// latches onto it; the weaker state channel is the real signal the fine-tune
// stages are meant to re-route credit onto. Distractors carry random states
// on the same shared dims, so reading the true state requires attending to
// the asked-about object.
constexpr double kTypeGain = 2.0;
constexpr double kStateGain = 1.0;

std::size_t state_dim(std::size_t state) { return kMaxTemplates + state; }

// State prior per template: `major` gets 1/3 + shift * 2/3, the rest split
// the remainder evenly.
std::size_t sample_state(std::mt19937_64& rng, std::size_t major, double shift) {
  const double q = 1.0 / 3.0 + shift * 2.0 / 3.0;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double u = coin(rng);
  if (u < q) return major;
  const std::size_t other = u < q + (1.0 - q) / 2.0 ? 1 : 2;
  return (major + other) % 3;
}

QaInstance make_instance(std::mt19937_64& rng, const CorpusMeta& meta, std::size_t n_templates,
                         std::size_t group, std::size_t major_state, double shift) {
  const std::size_t state = sample_state(rng, major_state, shift);
  const std::string answer = kStates[state];
  const std::size_t a_gt = state;

  // Slots: the asked-about object, one distractor per other active template,
  // noise fillers for the rest, all in random slots.
  const std::size_t n = meta.n_objects;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t causal = order[0];
  std::vector<std::string> slot_name(n);
  std::vector<int> slot_type(n, -1);   // template id whose type channel is on
  std::vector<int> slot_state(n, -1);  // state carried on the shared dims
  std::uniform_int_distribution<std::size_t> any_state(0, kNStates - 1);
  slot_name[causal] = kNouns[group];
  slot_type[causal] = static_cast<int>(group);
  slot_state[causal] = static_cast<int>(state);
  for (std::size_t s = 1; s < n; ++s) {
    if (s < n_templates) {
      const std::size_t other = (group + s) % n_templates;
      slot_name[order[s]] = kNouns[other];
      slot_type[order[s]] = static_cast<int>(other);
      slot_state[order[s]] = static_cast<int>(any_state(rng));
    } else {
      slot_name[order[s]] = kFillers[(s - n_templates) % std::size(kFillers)];
    }
  }

  QaInstance inst;
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> feats(n * meta.d_obj);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < meta.d_obj; ++d) {
      double v = noise(rng);
      if (slot_type[i] >= 0 && d == static_cast<std::size_t>(slot_type[i])) v += kTypeGain;
      if (slot_state[i] >= 0 && d == state_dim(static_cast<std::size_t>(slot_state[i]))) {
        v += kStateGain;
      }
      feats[i * meta.d_obj + d] = v;
    }
  }
  inst.v = autodiff::Tensor::from_data({n, meta.d_obj}, std::move(feats));

  const std::string noun = kNouns[group];
  inst.question_text = "how is the " + noun + " here";
  for (const std::string& w :
       {std::string("how"), std::string("is"), std::string("the"), noun, std::string("here")}) {
    inst.question.push_back(meta.vocab.at(w));
  }
  inst.answer_text = answer;
  inst.a_gt = a_gt;
  inst.gold.assign(meta.answers.size(), 0.0);
  inst.gold[a_gt] = 1.0;
  inst.qtype = noun;
  inst.explanation = "the " + noun + " is " + answer;

  // Objects tile a 4x2 grid of 16x32-pixel regions; boxes sit inside their
  // region so they never overlap.
  inst.image_w = meta.image_w;
  inst.image_h = meta.image_h;
  for (std::size_t i = 0; i < n; ++i) {
    const double rx = static_cast<double>(i % 4) * 16.0;
    const double ry = static_cast<double>(i / 4) * 32.0;
    inst.objects.push_back({slot_name[i], {rx + 2.0, ry + 6.0, rx + 14.0, ry + 26.0}});
  }

  // Synthetic human attention: a Gaussian bump over the asked-about object.
  const auto& cb = inst.objects[causal].box;
  const double bx = (cb.x1 + cb.x2) / 2.0 * kAttnSide / meta.image_w;
  const double by = (cb.y1 + cb.y2) / 2.0 * kAttnSide / meta.image_h;
  inst.attention.h = kAttnSide;
  inst.attention.w = kAttnSide;
  const double sigma = 1.2;
  for (std::size_t r = 0; r < kAttnSide; ++r) {
    for (std::size_t c = 0; c < kAttnSide; ++c) {
      const double dx = static_cast<double>(c) + 0.5 - bx;
      const double dy = static_cast<double>(r) + 0.5 - by;
      inst.attention.values.push_back(std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
    }
  }

  models::validate_instance(inst);
  return inst;
}

// Object-category nouns, embedded so text mentions can be matched to objects.
std::vector<std::string> noun_words() {
  std::vector<std::string> out;
  for (const char* n : kNouns) out.emplace_back(n);
  for (const char* f : kFillers) out.emplace_back(f);
  return out;
}

// Everything the embedding store covers: answers (for answer weights) plus
// the object-category nouns (for proposal matching).
std::vector<std::string> embedded_words() {
  std::vector<std::string> out;
  for (const char* s : kStates) out.emplace_back(s);
  for (const auto& w : noun_words()) out.push_back(w);
  return out;
}

std::vector<QaInstance> make_split(std::mt19937_64& rng, const CorpusMeta& meta,
                                   std::size_t n_templates, std::size_t count, bool test_split,
                                   double shift) {
  std::vector<QaInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t group = i % n_templates;
    // The designated per-template majority rotates between the splits, which
    // inverts every conditional prior while keeping the overall answer
    // frequencies flat.
    const std::size_t major = (group + (test_split ? 1 : 0)) % kNStates;
    out.push_back(make_instance(rng, meta, n_templates, group, major, shift));
  }
  return out;
}

json instance_to_json(const QaInstance& inst) {
  json j;
  j["question_text"] = inst.question_text;
  j["tokens"] = inst.question;
  j["answer"] = inst.answer_text;
  j["a_gt"] = inst.a_gt;
  j["gold"] = inst.gold;
  j["qtype"] = inst.qtype;
  j["explanation"] = inst.explanation;
  j["image_w"] = inst.image_w;
  j["image_h"] = inst.image_h;
  json objs = json::array();
  for (const auto& o : inst.objects) {
    objs.push_back({{"category", o.category}, {"box", {o.box.x1, o.box.y1, o.box.x2, o.box.y2}}});
  }
  j["objects"] = objs;
  json feats = json::array();
  for (std::size_t r = 0; r < inst.v.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < inst.v.cols(); ++c) row.push_back(inst.v.at(r, c));
    feats.push_back(row);
  }
  j["features"] = feats;
  j["attention"] = {
      {"h", inst.attention.h}, {"w", inst.attention.w}, {"values", inst.attention.values}};
  return j;
}

QaInstance instance_from_json(const json& j, const CorpusMeta& meta) {
  QaInstance inst;
  inst.question_text = j.at("question_text").get<std::string>();
  inst.question = j.at("tokens").get<std::vector<std::size_t>>();
  inst.answer_text = j.at("answer").get<std::string>();
  inst.a_gt = j.at("a_gt").get<std::size_t>();
  inst.gold = j.at("gold").get<std::vector<double>>();
  inst.qtype = j.at("qtype").get<std::string>();
  inst.explanation = j.at("explanation").get<std::string>();
  inst.image_w = j.at("image_w").get<double>();
  inst.image_h = j.at("image_h").get<double>();
  for (const auto& o : j.at("objects")) {
    const auto box = o.at("box").get<std::vector<double>>();
    if (box.size() != 4) throw ConfigError("corpus: object box must have 4 coordinates");
    inst.objects.push_back({o.at("category").get<std::string>(), {box[0], box[1], box[2], box[3]}});
  }
  const auto feats = j.at("features").get<std::vector<std::vector<double>>>();
  if (feats.empty() || feats.size() != inst.objects.size()) {
    throw ConfigError("corpus: features and objects disagree");
  }
  std::vector<double> flat;
  flat.reserve(feats.size() * meta.d_obj);
  for (const auto& row : feats) {
    if (row.size() != meta.d_obj) throw ConfigError("corpus: feature row has wrong width");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  inst.v = autodiff::Tensor::from_data({feats.size(), meta.d_obj}, std::move(flat));
  const auto& att = j.at("attention");
  inst.attention.h = att.at("h").get<std::size_t>();
  inst.attention.w = att.at("w").get<std::size_t>();
  inst.attention.values = att.at("values").get<std::vector<double>>();
  for (std::size_t t : inst.question) {
    if (t >= meta.vocab.size()) throw ConfigError("corpus: token id outside the vocabulary");
  }
  if (inst.gold.size() != meta.answers.size()) throw ConfigError("corpus: gold width mismatch");
  models::validate_instance(inst);
  return inst;
}

}  // namespace

Corpus gen_toy_qa(const ToyQaConfig& cfg) {
  validate(cfg);
  Corpus corpus;
  CorpusMeta& meta = corpus.meta;
  meta.n_objects = cfg.n_objects;
  meta.d_obj = cfg.d_obj;
  meta.max_q_len = cfg.max_q_len;
  meta.shift = cfg.shift;
  meta.seed = cfg.seed;

  meta.vocab["<unk>"] = 0;
  for (const char* w : {"how", "is", "the", "here"}) meta.vocab[w] = meta.vocab.size();
  for (const char* n : kNouns) meta.vocab[n] = meta.vocab.size();
  for (const char* s : kStates) meta.answers.emplace_back(s);

  std::mt19937_64 train_rng(mix_seed(cfg.seed, 11));
  std::mt19937_64 test_rng(mix_seed(cfg.seed, 12));
  corpus.train = make_split(train_rng, meta, cfg.n_templates, cfg.n_train, false, cfg.shift);
  corpus.test = make_split(test_rng, meta, cfg.n_templates, cfg.n_test, true, cfg.shift);

  // Synthetic Glove vectors: a deterministic unit vector per word, with 300
  // dimensions so distinct words land far below the 0.6 match threshold.
  std::mt19937_64 emb_rng(mix_seed(cfg.seed, 13));
  std::normal_distribution<double> gauss(0.0, 1.0);
  proposal::EmbeddingStore store(300);
  for (const auto& word : embedded_words()) {
    std::vector<double> v(300);
    double norm2 = 0.0;
    for (auto& x : v) {
      x = gauss(emb_rng);
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    store.insert(word, v);
  }
  corpus.store = std::move(store);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  ensure_dir(dir);
  const CorpusMeta& meta = corpus.meta;

  json m;
  m["n_objects"] = meta.n_objects;
  m["d_obj"] = meta.d_obj;
  m["max_q_len"] = meta.max_q_len;
  m["image_w"] = meta.image_w;
  m["image_h"] = meta.image_h;
  m["shift"] = meta.shift;
  m["seed"] = meta.seed;
  m["vocab"] = meta.vocab;
  m["answers"] = meta.answers;
  write_text(dir + "/meta.json", m.dump(2) + "\n");

  const std::pair<const char*, const std::vector<models::QaInstance>*> splits[] = {
      {"train", &corpus.train}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    std::ostringstream os;
    for (const auto& inst : *split) os << instance_to_json(inst).dump() << '\n';
    write_text(dir + "/" + std::string(name) + ".jsonl", os.str());
  }

  std::ostringstream emb;
  for (const auto& word : embedded_words()) {
    emb << word;
    for (double v : *corpus.store.lookup(word)) emb << ' ' << fmt(v);
    emb << '\n';
  }
  write_text(dir + "/embeddings.txt", emb.str());

  std::ostringstream nouns;
  for (const auto& word : noun_words()) nouns << word << '\n';
  write_text(dir + "/nouns.txt", nouns.str());
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  json m;
  try {
    m = json::parse(read_text(dir + "/meta.json"));
  } catch (const json::exception& e) {
    throw ConfigError("corpus: meta.json is not valid JSON: " + std::string(e.what()));
  }
  CorpusMeta& meta = corpus.meta;
  try {
    meta.n_objects = m.at("n_objects").get<std::size_t>();
    meta.d_obj = m.at("d_obj").get<std::size_t>();
    meta.max_q_len = m.at("max_q_len").get<std::size_t>();
    meta.image_w = m.at("image_w").get<double>();
    meta.image_h = m.at("image_h").get<double>();
    meta.shift = m.at("shift").get<double>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.vocab = m.at("vocab").get<std::map<std::string, std::size_t>>();
    meta.answers = m.at("answers").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError("corpus: meta.json is missing fields: " + std::string(e.what()));
  }
  if (meta.answers.empty() || meta.vocab.empty() || !meta.vocab.count("<unk>")) {
    throw ConfigError("corpus: meta.json lacks answers or a vocabulary with <unk>");
  }

  const std::pair<const char*, std::vector<models::QaInstance>*> splits[] = {
      {"train", &corpus.train}, {"test", &corpus.test}};
  for (const auto& [name, split] : splits) {
    std::istringstream is(read_text(dir + "/" + std::string(name) + ".jsonl"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        split->push_back(instance_from_json(json::parse(line), meta));
      } catch (const json::exception& e) {
        throw ConfigError("corpus: " + std::string(name) + ".jsonl line " +
                          std::to_string(lineno) + ": " + e.what());
      }
    }
    if (split->empty()) throw ConfigError("corpus: empty split " + std::string(name));
  }

  corpus.store = proposal::EmbeddingStore::load(dir + "/embeddings.txt");
  corpus.tagger = proposal::LexiconTagger::load(dir + "/nouns.txt");
  return corpus;
}

std::vector<std::size_t> instance_proposal(const models::QaInstance& inst,
                                           const std::string& method, const Corpus& corpus,
                                           double threshold, std::size_t k) {
  if (method == "textual") {
    if (inst.explanation.empty()) return {};
    auto nouns = proposal::extract_nouns(inst.explanation, corpus.tagger);
    return proposal::build_proposal_textual(nouns, inst.objects, corpus.store, threshold, k)
        .indices;
  }
  if (method == "qa") {
    return proposal::build_proposal_qa(inst.question_text, inst.answer_text, inst.objects,
                                       corpus.store, corpus.tagger, threshold, k)
        .indices;
  }
  if (method == "visual") {
    if (inst.attention.empty()) return {};
    auto scores =
        proposal::score_objects_visual(inst.attention, inst.objects, inst.image_w, inst.image_h);
    return proposal::build_proposal_visual(scores, k).indices;
  }
  throw ConfigError("unknown proposal method '" + method + "'");
}

std::vector<std::vector<std::size_t>> corpus_proposals(const std::vector<models::QaInstance>& data,
                                                       const std::string& method,
                                                       const Corpus& corpus, double threshold,
                                                       std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(data.size());
  for (const auto& inst : data) out.push_back(instance_proposal(inst, method, corpus, threshold, k));
  return out;
}

}  // namespace scr::harness
