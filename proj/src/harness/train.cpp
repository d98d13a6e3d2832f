#include "scr/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "scr/autodiff/adam.hpp"
#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"
#include "scr/harness/errors.hpp"
#include "scr/harness/io.hpp"
#include "scr/losses/losses.hpp"
#include "scr/models/checkpoint.hpp"
#include "scr/proposal/proposal.hpp"
#include "scr/rng.hpp"

namespace scr::harness {

using autodiff::Tensor;
using models::QaInstance;
using models::QaModel;

namespace {

struct StagePlan {
  std::string name;
  std::string init_from;  // checkpoint name of the previous stage, empty for none
  std::size_t epochs = 0;
  double lr = 0.0;
  double lambda_infl = 0.0;
  double lambda_crit = 0.0;
  std::uint64_t salt = 0;
  // Pretraining keeps the best-validation epoch; the fine-tune stages keep
  // their final weights (validation scores barely move there, so best-epoch
  // selection would just freeze the incoming model).
  bool select_best = false;
};

std::vector<StagePlan> full_schedule(const ToyQaConfig& cfg) {
  return {
      {"pretrain", "", cfg.pretrain_epochs, cfg.pretrain_lr, 0.0, 0.0, 21, true},
      {"strengthen", "pretrain", cfg.strengthen_epochs, cfg.strengthen_lr, cfg.lambda_infl, 0.0,
       22, false},
      {"joint", "strengthen", cfg.joint_epochs, cfg.joint_lr, cfg.lambda_infl, cfg.lambda_crit,
       23, false},
  };
}

double val_soft_score(const QaModel& model, const std::vector<QaInstance>& data,
                      const std::vector<std::size_t>& idx) {
  autodiff::NoGradGuard ng;
  double sum = 0.0;
  for (std::size_t i : idx) {
    const QaInstance& inst = data[i];
    Tensor p = model.predict(inst.v, model.encode_question(inst.question));
    sum += inst.gold[autodiff::argmax(p.data())];
  }
  return sum / static_cast<double>(idx.size());
}

std::vector<std::vector<double>> snapshot(const std::vector<autodiff::Adam::Param>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor.data());
  return out;
}

void restore(std::vector<autodiff::Adam::Param>& params,
             const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].tensor.mutable_data() = snap[i];
}

// One full stage over the training split. Returns the validation score of
// the restored best-epoch parameters and appends the per-step loss log.
double train_stage(QaModel& model, std::vector<autodiff::Adam::Param>& params,
                   const Corpus& corpus, const ToyQaConfig& cfg, const StagePlan& plan,
                   const std::vector<std::size_t>& train_idx,
                   const std::vector<std::size_t>& val_idx,
                   const std::vector<std::vector<std::size_t>>& proposals,
                   const std::vector<std::vector<double>>& weights, const std::string& out_dir) {
  autodiff::Adam opt(params, plan.lr);
  std::vector<Tensor> wrt;
  for (auto& p : params) wrt.push_back(p.tensor);

  losses::JointConfig jc;
  jc.lambda_infl = plan.lambda_infl;
  jc.lambda_crit = plan.lambda_crit;
  jc.bucket_capacity = cfg.bucket_size;
  const bool needs_proposals = plan.lambda_infl != 0.0 || plan.lambda_crit != 0.0;
  static const std::vector<std::size_t> kNoProposal;

  std::mt19937_64 rng(mix_seed(cfg.seed, plan.salt));
  const std::size_t batch =
      std::min<std::size_t>(384, std::max<std::size_t>(1, train_idx.size() / 10));

  std::ostringstream log;
  log << "step,l_vqa,l_infl,l_crit,total\n";

  double best_soft = plan.select_best ? val_soft_score(model, corpus.train, val_idx) : -1.0;
  std::vector<std::vector<double>> best_params = snapshot(params);
  std::vector<std::size_t> order = train_idx;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < plan.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      Tensor acc = Tensor::zeros({1});
      double vqa_sum = 0.0, infl_sum = 0.0, crit_sum = 0.0;
      try {
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = order[start + k];
          const auto& proposal = needs_proposals ? proposals[i] : kNoProposal;
          auto bd = losses::joint_loss(model, corpus.train[i], proposal, weights[i], jc);
          acc = autodiff::add(acc, bd.total);
          vqa_sum += bd.l_vqa.value();
          infl_sum += bd.l_infl.value();
          crit_sum += bd.l_crit.value();
        }
        Tensor batch_loss = autodiff::mul_scalar(acc, 1.0 / static_cast<double>(len));
        if (!std::isfinite(batch_loss.value())) {
          throw DivergenceError(plan.name, step, "non-finite loss");
        }
        opt.step(autodiff::grad(batch_loss, wrt));
        log << step << ',' << fmt(vqa_sum / static_cast<double>(len)) << ','
            << fmt(infl_sum / static_cast<double>(len)) << ','
            << fmt(crit_sum / static_cast<double>(len)) << ',' << fmt(batch_loss.value()) << '\n';
      } catch (const DivergenceError&) {
        throw;
      } catch (const std::runtime_error& e) {
        throw DivergenceError(plan.name, step, e.what());
      }
      ++step;
    }
    const double soft = val_soft_score(model, corpus.train, val_idx);
    if (plan.select_best && soft > best_soft) {
      best_soft = soft;
      best_params = snapshot(params);
    }
  }

  write_text(out_dir + "/loss_" + plan.name + ".csv", log.str());
  if (plan.select_best) {
    restore(params, best_params);
    return best_soft;
  }
  return val_soft_score(model, corpus.train, val_idx);
}

std::string tag(double v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  for (auto& c : s) {
    if (c == '.') c = '_';
  }
  return s;
}

}  // namespace

models::QaConfig qa_config(const Corpus& corpus, const ToyQaConfig& cfg) {
  models::QaConfig qc;
  qc.vocab = corpus.meta.vocab.size();
  qc.d_word = cfg.d_word;
  qc.d_obj = corpus.meta.d_obj;
  qc.hidden = cfg.hidden;
  qc.n_answers = corpus.meta.answers.size();
  qc.max_q_len = corpus.meta.max_q_len;
  return qc;
}

TrainOutputs run_stages(const Corpus& corpus, const ToyQaConfig& cfg, const std::string& out_dir,
                        const std::string& stage) {
  validate(cfg);
  ensure_dir(out_dir);

  std::vector<StagePlan> schedule = full_schedule(cfg);
  if (stage != "all") {
    auto it = std::find_if(schedule.begin(), schedule.end(),
                           [&](const StagePlan& p) { return p.name == stage; });
    if (it == schedule.end()) {
      throw ConfigError("unknown stage '" + stage + "': expected pretrain, strengthen, joint, or all");
    }
    schedule = {*it};
  }

  QaModel model(qa_config(corpus, cfg), mix_seed(cfg.seed, 1));
  auto params = model.params();
  if (!schedule.front().init_from.empty()) {
    const std::string prev = out_dir + "/" + schedule.front().init_from + ".ckpt";
    try {
      models::load_checkpoint(prev, params);
    } catch (const std::runtime_error& e) {
      throw ConfigError("stage '" + schedule.front().name + "' needs the checkpoint " + prev +
                        ": " + e.what());
    }
  }

  // Per-instance proposal sets and answer weights are fixed inputs of the
  // objective, so they are built once.
  auto train_proposals = corpus_proposals(corpus.train, cfg.proposal_method, corpus,
                                          cfg.proposal_threshold, cfg.proposal_size);
  auto test_proposals = corpus_proposals(corpus.test, cfg.proposal_method, corpus,
                                         cfg.proposal_threshold, cfg.proposal_size);
  std::vector<std::vector<double>> weights;
  weights.reserve(corpus.train.size());
  for (const auto& inst : corpus.train) {
    std::vector<double> w(corpus.meta.answers.size());
    for (std::size_t a = 0; a < w.size(); ++a) {
      w[a] = losses::answer_weight(corpus.meta.answers[a], inst.answer_text, corpus.store);
    }
    weights.push_back(std::move(w));
  }

  std::vector<std::size_t> idx(corpus.train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 split_rng(mix_seed(cfg.seed, 2));
  std::shuffle(idx.begin(), idx.end(), split_rng);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(idx.size()))));
  std::vector<std::size_t> val_idx(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::vector<std::size_t> train_idx(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));

  const bool any_usable =
      std::any_of(train_proposals.begin(), train_proposals.end(),
                  [](const std::vector<std::size_t>& p) { return !p.empty(); });
  for (const auto& plan : schedule) {
    if (plan.lambda_infl != 0.0 && !any_usable) {
      throw ConfigError("stage '" + plan.name +
                        "' needs proposal sets, but no training instance has a usable one");
    }
  }

  TrainOutputs out;
  std::ostringstream results;
  results << "stage,val_soft,"
          << metrics::EvalReport::csv_header() << '\n';
  for (const auto& plan : schedule) {
    const double val_soft = train_stage(model, params, corpus, cfg, plan, train_idx, val_idx,
                                        train_proposals, weights, out_dir);
    models::save_checkpoint(out_dir + "/" + plan.name + ".ckpt", params);

    StageResult res;
    res.stage = plan.name;
    res.val_soft = val_soft;
    res.test = metrics::evaluate(model, corpus.test, test_proposals);
    write_text(out_dir + "/eval_" + plan.name + ".json", res.test.to_json() + "\n");
    results << plan.name << ',' << fmt(val_soft) << ',' << res.test.csv_row() << '\n';
    out.stages.push_back(std::move(res));
  }
  write_text(out_dir + "/results.csv", results.str());
  return out;
}

metrics::EvalReport evaluate_checkpoint(const Corpus& corpus, const ToyQaConfig& cfg,
                                        const std::string& checkpoint_path) {
  QaModel model(qa_config(corpus, cfg), mix_seed(cfg.seed, 1));
  auto params = model.params();
  try {
    models::load_checkpoint(checkpoint_path, params);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("cannot load checkpoint: ") + e.what());
  }
  auto proposals = corpus_proposals(corpus.test, cfg.proposal_method, corpus,
                                    cfg.proposal_threshold, cfg.proposal_size);
  return metrics::evaluate(model, corpus.test, proposals);
}

double qa_textual_overlap(const Corpus& corpus, const ToyQaConfig& cfg) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& inst : corpus.test) {
    auto nouns = proposal::extract_nouns(inst.explanation, corpus.tagger);
    auto textual = proposal::build_proposal_textual(nouns, inst.objects, corpus.store,
                                                    cfg.proposal_threshold, cfg.proposal_size);
    if (!textual.usable()) continue;
    auto qa = proposal::build_proposal_qa(inst.question_text, inst.answer_text, inst.objects,
                                          corpus.store, corpus.tagger, cfg.proposal_threshold,
                                          cfg.proposal_size);
    sum += proposal::overlap_fraction(qa, textual);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

void run_sweep(const Corpus& corpus, const ToyQaConfig& base, const SweepConfig& sweep,
               const std::string& out_dir) {
  validate(sweep);
  ensure_dir(out_dir);
  std::ostringstream csv;
  csv << "seed,lambda_infl,lambda_crit,proposal_size,pretrain_soft,pretrain_fsr,joint_soft,"
         "joint_fsr\n";

  for (std::uint64_t seed : sweep.seeds) {
    ToyQaConfig seed_cfg = base;
    seed_cfg.seed = seed;
    const std::string seed_dir = out_dir + "/seed" + std::to_string(seed);
    auto pre = run_stages(corpus, seed_cfg, seed_dir, "pretrain");
    const auto& pre_rep = pre.stages.front().test;

    for (double li : sweep.lambda_infl) {
      for (double lc : sweep.lambda_crit) {
        for (std::size_t k : sweep.proposal_size) {
          ToyQaConfig cell_cfg = seed_cfg;
          cell_cfg.lambda_infl = li;
          cell_cfg.lambda_crit = lc;
          cell_cfg.proposal_size = k;
          const std::string cell_dir =
              seed_dir + "/li" + tag(li) + "_lc" + tag(lc) + "_k" + std::to_string(k);
          ensure_dir(cell_dir);
          std::filesystem::copy_file(seed_dir + "/pretrain.ckpt", cell_dir + "/pretrain.ckpt",
                                     std::filesystem::copy_options::overwrite_existing);
          run_stages(corpus, cell_cfg, cell_dir, "strengthen");
          auto joint = run_stages(corpus, cell_cfg, cell_dir, "joint");
          const auto& rep = joint.stages.front().test;
          csv << seed << ',' << fmt(li) << ',' << fmt(lc) << ',' << k << ','
              << fmt(pre_rep.soft) << ',' << fmt(pre_rep.fsr) << ',' << fmt(rep.soft) << ','
              << fmt(rep.fsr) << '\n';
        }
      }
    }
  }
  write_text(out_dir + "/sweep.csv", csv.str());
}

}  // namespace scr::harness
