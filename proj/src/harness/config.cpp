#include "scr/harness/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "scr/harness/errors.hpp"

namespace scr::harness {

namespace {

using nlohmann::json;

// Pulls typed values out of one JSON object while tracking which keys were
// consumed; leftovers are config errors.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + name_ + "." + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void parse_synthetic(const json& j, SyntheticConfig& cfg) {
  Section s(j, "synthetic");
  s.get("train_p", cfg.train_p);
  s.get("n_train", cfg.n_train);
  s.get("n_test", cfg.n_test);
  s.get("depth", cfg.depth);
  s.get("hidden", cfg.hidden);
  s.get("pretrain_epochs", cfg.pretrain_epochs);
  s.get("pretrain_lr", cfg.pretrain_lr);
  s.get("finetune_epochs", cfg.finetune_epochs);
  s.get("finetune_lr", cfg.finetune_lr);
  s.get("lambda_infl", cfg.lambda_infl);
  s.get("lambda_crit", cfg.lambda_crit);
  s.get("batch", cfg.batch);
  s.get("raster", cfg.raster);
  s.get("raster_lo", cfg.raster_lo);
  s.get("raster_hi", cfg.raster_hi);
  s.get("seed", cfg.seed);
  s.finish();
}

void parse_toyqa(const json& j, ToyQaConfig& cfg) {
  Section s(j, "toyqa");
  s.get("n_train", cfg.n_train);
  s.get("n_test", cfg.n_test);
  s.get("shift", cfg.shift);
  s.get("n_objects", cfg.n_objects);
  s.get("d_obj", cfg.d_obj);
  s.get("d_word", cfg.d_word);
  s.get("max_q_len", cfg.max_q_len);
  s.get("hidden", cfg.hidden);
  s.get("pretrain_epochs", cfg.pretrain_epochs);
  s.get("pretrain_lr", cfg.pretrain_lr);
  s.get("strengthen_epochs", cfg.strengthen_epochs);
  s.get("strengthen_lr", cfg.strengthen_lr);
  s.get("joint_epochs", cfg.joint_epochs);
  s.get("joint_lr", cfg.joint_lr);
  s.get("lambda_infl", cfg.lambda_infl);
  s.get("lambda_crit", cfg.lambda_crit);
  s.get("proposal_method", cfg.proposal_method);
  s.get("proposal_size", cfg.proposal_size);
  s.get("proposal_threshold", cfg.proposal_threshold);
  s.get("bucket_size", cfg.bucket_size);
  s.get("val_fraction", cfg.val_fraction);
  s.get("seed", cfg.seed);
  s.finish();
}

void parse_sweep(const json& j, SweepConfig& cfg) {
  Section s(j, "sweep");
  s.get("lambda_infl", cfg.lambda_infl);
  s.get("lambda_crit", cfg.lambda_crit);
  s.get("proposal_size", cfg.proposal_size);
  s.get("seeds", cfg.seeds);
  s.finish();
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  Config cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "synthetic") {
      parse_synthetic(it.value(), cfg.synthetic);
    } else if (it.key() == "toyqa") {
      parse_toyqa(it.value(), cfg.toyqa);
    } else if (it.key() == "sweep") {
      parse_sweep(it.value(), cfg.sweep);
    } else {
      throw ConfigError("unknown config section '" + it.key() + "'");
    }
  }
  validate(cfg.synthetic);
  validate(cfg.toyqa);
  validate(cfg.sweep);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.train_p.empty()) throw ConfigError("synthetic.train_p must be non-empty");
  for (double p : cfg.train_p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("synthetic.train_p entries must lie in (0,1)");
  }
  if (cfg.n_train == 0 || cfg.n_test == 0) throw ConfigError("synthetic dataset sizes must be positive");
  if (cfg.depth < 2) throw ConfigError("synthetic.depth must be at least 2");
  if (cfg.hidden == 0) throw ConfigError("synthetic.hidden must be positive");
  if (cfg.pretrain_lr <= 0 || cfg.finetune_lr <= 0) throw ConfigError("synthetic learning rates must be positive");
  if (cfg.lambda_infl < 0 || cfg.lambda_crit < 0) throw ConfigError("synthetic loss weights must be non-negative");
  if (cfg.batch == 0 || cfg.batch > cfg.n_train) throw ConfigError("synthetic.batch must be in [1, n_train]");
  if (cfg.raster < 2) throw ConfigError("synthetic.raster must be at least 2");
  if (!(cfg.raster_lo < cfg.raster_hi)) throw ConfigError("synthetic raster bounds are inverted");
}

void validate(const ToyQaConfig& cfg) {
  if (cfg.n_train == 0 || cfg.n_test == 0) throw ConfigError("toyqa dataset sizes must be positive");
  if (!(cfg.shift >= 0.0 && cfg.shift <= 1.0)) throw ConfigError("toyqa.shift must lie in [0,1]");
  if (cfg.n_objects < 2) throw ConfigError("toyqa.n_objects must be at least 2");
  if (cfg.d_obj < 16) throw ConfigError("toyqa.d_obj must be at least 16 (type one-hots plus state channels)");
  if (cfg.d_word == 0 || cfg.hidden == 0) throw ConfigError("toyqa model dims must be positive");
  if (cfg.max_q_len < 5) throw ConfigError("toyqa.max_q_len must be at least 5");
  if (cfg.pretrain_lr <= 0 || cfg.strengthen_lr <= 0 || cfg.joint_lr <= 0) {
    throw ConfigError("toyqa learning rates must be positive");
  }
  if (cfg.lambda_infl < 0 || cfg.lambda_crit < 0) throw ConfigError("toyqa loss weights must be non-negative");
  if (cfg.proposal_method != "visual" && cfg.proposal_method != "textual" &&
      cfg.proposal_method != "qa") {
    throw ConfigError("toyqa.proposal_method must be visual, textual, or qa");
  }
  if (cfg.proposal_size == 0) throw ConfigError("toyqa.proposal_size must be positive");
  if (cfg.bucket_size == 0) throw ConfigError("toyqa.bucket_size must be positive");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 0.5)) {
    throw ConfigError("toyqa.val_fraction must lie in (0, 0.5)");
  }
}

void validate(const SweepConfig& cfg) {
  if (cfg.lambda_infl.empty() || cfg.lambda_crit.empty() || cfg.proposal_size.empty() ||
      cfg.seeds.empty()) {
    throw ConfigError("sweep grids and seeds must be non-empty");
  }
  for (double v : cfg.lambda_infl) {
    if (v < 0) throw ConfigError("sweep.lambda_infl entries must be non-negative");
  }
  for (double v : cfg.lambda_crit) {
    if (v < 0) throw ConfigError("sweep.lambda_crit entries must be non-negative");
  }
  for (std::size_t k : cfg.proposal_size) {
    if (k == 0) throw ConfigError("sweep.proposal_size entries must be positive");
  }
}

}  // namespace scr::harness
