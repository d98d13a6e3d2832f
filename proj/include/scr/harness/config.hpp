#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scr::harness {

struct SyntheticConfig {
  std::vector<double> train_p{0.05, 0.1, 0.2, 0.5};
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  std::size_t depth = 15;
  std::size_t hidden = 256;
  std::size_t pretrain_epochs = 100;
  double pretrain_lr = 1e-3;
  std::size_t finetune_epochs = 50;
  double finetune_lr = 1e-5;
  double lambda_infl = 20.0;
  double lambda_crit = 1000.0;
  std::size_t batch = 1000;  // full batch: the whole train set fits one step
  std::size_t raster = 200;
  double raster_lo = -8.0;
  double raster_hi = 8.0;
  std::uint64_t seed = 7;
};

struct ToyQaConfig {
  // corpus generation
  std::size_t n_train = 600;
  std::size_t n_test = 300;
  double shift = 0.8;           // per-template answer-prior skew, inverted at test
  std::size_t n_templates = 3;  // question templates; 3 keeps overall answer counts flat
  std::size_t n_objects = 8;
  std::size_t d_obj = 16;
  std::size_t d_word = 16;
  std::size_t max_q_len = 14;

  // model
  std::size_t hidden = 32;

  // three-stage schedule
  std::size_t pretrain_epochs = 20;
  double pretrain_lr = 1e-3;
  std::size_t strengthen_epochs = 15;
  double strengthen_lr = 1e-5;
  std::size_t joint_epochs = 15;
  double joint_lr = 1e-5;
  double lambda_infl = 20.0;
  double lambda_crit = 2000.0;

  std::string proposal_method = "textual";  // visual | textual | qa
  std::size_t proposal_size = 6;
  double proposal_threshold = 0.6;
  std::size_t bucket_size = 5;
  double val_fraction = 0.1;
  std::uint64_t seed = 7;
};

struct SweepConfig {
  std::vector<double> lambda_infl{5.0, 20.0, 60.0, 80.0};
  std::vector<double> lambda_crit{0.0};
  std::vector<std::size_t> proposal_size{6};
  std::vector<std::uint64_t> seeds{7};
};

struct Config {
  SyntheticConfig synthetic;
  ToyQaConfig toyqa;
  SweepConfig sweep;
};

// Parses the JSON config file and validates every field. Unknown keys are
// rejected so typos cannot silently fall back to defaults. A missing section
// keeps its defaults.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);

void validate(const SyntheticConfig& cfg);
void validate(const ToyQaConfig& cfg);
void validate(const SweepConfig& cfg);

}  // namespace scr::harness
