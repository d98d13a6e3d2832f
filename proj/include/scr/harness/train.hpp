#pragma once

#include <string>
#include <vector>

#include "scr/harness/config.hpp"
#include "scr/harness/corpus.hpp"
#include "scr/metrics/metrics.hpp"
#include "scr/models/qa_model.hpp"

namespace scr::harness {

struct StageResult {
  std::string stage;
  double val_soft = 0.0;  // validation score of the selected checkpoint
  metrics::EvalReport test;
};

struct TrainOutputs {
  std::vector<StageResult> stages;
};

models::QaConfig qa_config(const Corpus& corpus, const ToyQaConfig& cfg);

// Runs the selected stage ("pretrain", "strengthen", "joint") or the full
// "all" schedule. Later stages initialize from the previous stage's
// checkpoint in out_dir. Writes per-stage checkpoints, loss CSVs,
// EvalReport JSONs, and results.csv.
TrainOutputs run_stages(const Corpus& corpus, const ToyQaConfig& cfg, const std::string& out_dir,
                        const std::string& stage = "all");

// Test-split evaluation of a checkpointed model, with proposals built by
// cfg.proposal_method.
metrics::EvalReport evaluate_checkpoint(const Corpus& corpus, const ToyQaConfig& cfg,
                                        const std::string& checkpoint_path);

// Mean fraction of textual-proposal members recovered by the QA-parsing
// method over the test split.
double qa_textual_overlap(const Corpus& corpus, const ToyQaConfig& cfg);

// Grid over lambda_infl x lambda_crit x proposal_size x seeds, sharing one
// pretrain checkpoint per seed. Writes sweep.csv plus per-cell artifacts.
void run_sweep(const Corpus& corpus, const ToyQaConfig& base, const SweepConfig& sweep,
               const std::string& out_dir);

}  // namespace scr::harness
