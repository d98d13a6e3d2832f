#include "scr/harness/synthetic.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "scr/autodiff/adam.hpp"
#include "scr/autodiff/grad.hpp"
#include "scr/autodiff/ops.hpp"
#include "scr/harness/errors.hpp"
#include "scr/harness/io.hpp"
#include "scr/harness/plot.hpp"
#include "scr/losses/losses.hpp"
#include "scr/models/mlp.hpp"
#include "scr/rng.hpp"

namespace scr::harness {

using autodiff::Tensor;
using models::MlpClassifier;

namespace {

struct Batch {
  Tensor x, gold;
  std::vector<int> label;
};

std::vector<Batch> make_batches(const SynthSet& set, std::size_t batch) {
  std::vector<Batch> out;
  const std::size_t n = set.label.size();
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t len = std::min(batch, n - start);
    std::vector<double> x(len * 2), g(len * 2);
    std::vector<int> y(len);
    for (std::size_t i = 0; i < len; ++i) {
      x[i * 2] = set.x.at(start + i, 0);
      x[i * 2 + 1] = set.x.at(start + i, 1);
      y[i] = set.label[start + i];
      g[i * 2 + static_cast<std::size_t>(y[i])] = 1.0;
    }
    out.push_back({Tensor::from_data({len, 2}, std::move(x)),
                   Tensor::from_data({len, 2}, std::move(g)), std::move(y)});
  }
  return out;
}

double accuracy(const MlpClassifier& model, const SynthSet& set) {
  autodiff::NoGradGuard ng;
  Tensor p = model.forward(set.x);
  auto pred = autodiff::argmax_axis(p, 1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (static_cast<int>(pred[i]) == set.label[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Predicted class over the [lo,hi]^2 grid, row-major with row = y index.
std::vector<std::uint8_t> raster_classes(const MlpClassifier& model, const SyntheticConfig& cfg) {
  autodiff::NoGradGuard ng;
  const std::size_t n = cfg.raster;
  const double span = cfg.raster_hi - cfg.raster_lo;
  std::vector<std::uint8_t> out(n * n);
  const std::size_t rows_per_chunk = std::max<std::size_t>(1, 2000 / n);
  for (std::size_t r0 = 0; r0 < n; r0 += rows_per_chunk) {
    const std::size_t rows = std::min(rows_per_chunk, n - r0);
    std::vector<double> pts(rows * n * 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = cfg.raster_lo + (static_cast<double>(r0 + r) + 0.5) / n * span;
      for (std::size_t c = 0; c < n; ++c) {
        pts[(r * n + c) * 2] = cfg.raster_lo + (static_cast<double>(c) + 0.5) / n * span;
        pts[(r * n + c) * 2 + 1] = y;
      }
    }
    Tensor p = model.forward(Tensor::from_data({rows * n, 2}, std::move(pts)));
    auto cls = autodiff::argmax_axis(p, 1);
    for (std::size_t i = 0; i < cls.size(); ++i) {
      out[r0 * n + i] = static_cast<std::uint8_t>(cls[i]);
    }
  }
  return out;
}

// Mean x of the first left-to-right class change per raster row, restricted
// to rows inside the data band (cluster centers sit at y = 3, sd ~1.4), so
// the statistic tracks the boundary where the samples actually live. A
// raster with one class everywhere reports the grid edge the boundary lies
// beyond.
double boundary_position(const std::vector<std::uint8_t>& raster, const SyntheticConfig& cfg) {
  const std::size_t n = cfg.raster;
  const double span = cfg.raster_hi - cfg.raster_lo;
  double sum = 0.0;
  std::size_t rows = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double y = cfg.raster_lo + (static_cast<double>(r) + 0.5) / n * span;
    if (y < 1.0 || y > 5.0) continue;
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if (raster[r * n + c] != raster[r * n + c + 1]) {
        sum += cfg.raster_lo + (static_cast<double>(c) + 1.0) / n * span;
        ++rows;
        break;
      }
    }
  }
  if (rows == 0) return raster[(n / 2) * n] == 1 ? cfg.raster_lo : cfg.raster_hi;
  return sum / static_cast<double>(rows);
}

std::vector<std::pair<double, double>> boundary_polyline(const std::vector<std::uint8_t>& raster,
                                                         const SyntheticConfig& cfg) {
  const std::size_t n = cfg.raster;
  const double span = cfg.raster_hi - cfg.raster_lo;
  std::vector<std::pair<double, double>> line;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if (raster[r * n + c] != raster[r * n + c + 1]) {
        line.emplace_back(cfg.raster_lo + (static_cast<double>(c) + 1.0) / n * span,
                          cfg.raster_lo + (static_cast<double>(r) + 0.5) / n * span);
        break;
      }
    }
  }
  return line;
}

std::string raster_csv(const std::vector<std::uint8_t>& raster, std::size_t n) {
  std::ostringstream os;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c) os << ',';
      os << static_cast<int>(raster[r * n + c]);
    }
    os << '\n';
  }
  return os.str();
}

void pretrain(MlpClassifier& model, const std::vector<Batch>& batches,
              const SyntheticConfig& cfg) {
  auto params = model.params();
  autodiff::Adam opt(params, cfg.pretrain_lr);
  std::vector<Tensor> wrt;
  for (auto& p : params) wrt.push_back(p.tensor);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    for (const auto& b : batches) {
      Tensor p = model.forward(b.x);
      Tensor loss = losses::vqa_loss(p, b.gold);
      if (!std::isfinite(loss.value())) throw DivergenceError("pretrain", step, "non-finite loss");
      try {
        opt.step(autodiff::grad(loss, wrt));
      } catch (const std::runtime_error& e) {
        throw DivergenceError("pretrain", step, e.what());
      }
      ++step;
    }
  }
}

// Joint fine-tuning on BCE + lambda_infl * L_infl + lambda_crit * L_crit with
// dimension 0 as the designated influential object. Per-sample input
// gradients come from one backward per class; the rows are independent.
// Appends one CSV row per optimizer step to loss_csv.
void finetune(MlpClassifier& model, const std::vector<Batch>& batches,
              const SyntheticConfig& cfg, std::ostringstream& loss_csv) {
  auto params = model.params();
  autodiff::Adam opt(params, cfg.finetune_lr);
  std::vector<Tensor> wrt;
  for (auto& p : params) wrt.push_back(p.tensor);
  const Tensor e0 = Tensor::from_data({2, 1}, {1.0, 0.0});
  const Tensor e1 = Tensor::from_data({2, 1}, {0.0, 1.0});

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    for (const auto& b : batches) {
      const std::size_t n = b.label.size();
      Tensor xg = Tensor::from_data(b.x.shape(), b.x.data(), true);
      Tensor p = model.forward(xg);
      Tensor l_vqa = losses::vqa_loss(p, b.gold);

      Tensor g0 = autodiff::grad(autodiff::sum(autodiff::matmul(p, e0)), {xg}, true)[0];
      Tensor g1 = autodiff::grad(autodiff::sum(autodiff::matmul(p, e1)), {xg}, true)[0];

      // Per-row routing masks: which class gradient is the gt / wrong one.
      std::vector<double> ym(n * 2), bucket(n);
      for (std::size_t i = 0; i < n; ++i) {
        ym[i * 2] = ym[i * 2 + 1] = static_cast<double>(b.label[i]);
        const double p_gt = p.at(i, static_cast<std::size_t>(b.label[i]));
        const double p_wr = p.at(i, static_cast<std::size_t>(1 - b.label[i]));
        bucket[i] = p_wr > p_gt ? 1.0 : 0.0;
      }
      Tensor y = Tensor::from_data({n, 2}, std::move(ym));
      Tensor not_y = autodiff::add_scalar(autodiff::neg(y), 1.0);
      Tensor s_gt = g0 * not_y + g1 * y;
      Tensor s_wr = g0 * y + g1 * not_y;

      Tensor viol = autodiff::relu(autodiff::matmul(s_gt, e1) - autodiff::matmul(s_gt, e0));
      Tensor l_infl = autodiff::mean(viol);

      Tensor gaps = autodiff::matmul(s_wr, e0) - autodiff::matmul(s_gt, e0);
      Tensor l_crit = autodiff::mean(Tensor::from_data({n, 1}, std::move(bucket)) * gaps);

      Tensor total = l_vqa + cfg.lambda_infl * l_infl + cfg.lambda_crit * l_crit;
      loss_csv << step << ',' << fmt(l_vqa.value()) << ',' << fmt(l_infl.value()) << ','
               << fmt(l_crit.value()) << ',' << fmt(total.value()) << '\n';
      if (!std::isfinite(total.value())) throw DivergenceError("finetune", step, "non-finite loss");
      try {
        opt.step(autodiff::grad(total, wrt));
      } catch (const std::runtime_error& e) {
        throw DivergenceError("finetune", step, e.what());
      }
      ++step;
    }
  }
}

SynthStageResult stage_result(const MlpClassifier& model, const SynthSet& test,
                              const SyntheticConfig& cfg) {
  SynthStageResult out;
  out.accuracy = accuracy(model, test);
  out.raster = raster_classes(model, cfg);
  out.boundary_x = boundary_position(out.raster, cfg);
  return out;
}

std::string p_tag(double p) {
  std::ostringstream os;
  os << p;
  std::string s = os.str();
  for (auto& c : s) {
    if (c == '.') c = '_';
  }
  return s;
}

}  // namespace

SynthSet gen_synthetic(std::size_t n, double p_class0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, std::sqrt(2.0));
  std::vector<double> x(n * 2), g(n * 2, 0.0);
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = coin(rng) < p_class0 ? 0 : 1;
    label[i] = cls;
    x[i * 2] = (cls == 0 ? -3.0 : 3.0) + noise(rng);
    x[i * 2 + 1] = 3.0 + noise(rng);
    g[i * 2 + static_cast<std::size_t>(cls)] = 1.0;
  }
  return {Tensor::from_data({n, 2}, std::move(x)), Tensor::from_data({n, 2}, std::move(g)),
          std::move(label)};
}

std::vector<SynthRun> run_synthetic(const SyntheticConfig& cfg, const std::string& out_dir) {
  validate(cfg);
  ensure_dir(out_dir);

  std::vector<SynthRun> runs;
  std::vector<Panel> panels(2 * cfg.train_p.size());
  std::ostringstream summary;
  summary << "p,acc_pretrain,acc_finetune,gap,boundary_pretrain,boundary_finetune\n";

  for (std::size_t pi = 0; pi < cfg.train_p.size(); ++pi) {
    const double p = cfg.train_p[pi];
    const std::uint64_t base = mix_seed(cfg.seed, 100 + pi);
    SynthSet train = gen_synthetic(cfg.n_train, p, mix_seed(base, 0));
    SynthSet test = gen_synthetic(cfg.n_test, 1.0 - p, mix_seed(base, 1));
    auto batches = make_batches(train, cfg.batch);

    models::MlpClassifier model({2, cfg.hidden, cfg.depth, 2}, mix_seed(base, 2));
    pretrain(model, batches, cfg);
    SynthStageResult pre = stage_result(model, test, cfg);

    std::ostringstream loss_csv;
    loss_csv << "step,l_vqa,l_infl,l_crit,joint\n";
    finetune(model, batches, cfg, loss_csv);
    SynthStageResult fin = stage_result(model, test, cfg);

    runs.push_back({p, pre, fin});
    summary << fmt(p) << ',' << fmt(pre.accuracy) << ',' << fmt(fin.accuracy) << ','
            << fmt(fin.accuracy - pre.accuracy) << ',' << fmt(pre.boundary_x) << ','
            << fmt(fin.boundary_x) << '\n';

    const std::string tag = p_tag(p);
    write_text(out_dir + "/raster_p" + tag + "_pretrain.csv", raster_csv(pre.raster, cfg.raster));
    write_text(out_dir + "/raster_p" + tag + "_finetune.csv", raster_csv(fin.raster, cfg.raster));
    write_text(out_dir + "/losses_p" + tag + ".csv", loss_csv.str());

    for (int stage = 0; stage < 2; ++stage) {
      const SynthStageResult& res = stage == 0 ? pre : fin;
      Panel& panel = panels[static_cast<std::size_t>(stage) * cfg.train_p.size() + pi];
      std::ostringstream title;
      title << "p=" << p << (stage == 0 ? " pretrain" : " finetune") << " acc=";
      title.precision(3);
      title << std::fixed << res.accuracy;
      panel.title = title.str();
      panel.lo = cfg.raster_lo;
      panel.hi = cfg.raster_hi;
      const std::size_t shown = std::min<std::size_t>(250, test.label.size());
      for (std::size_t i = 0; i < shown; ++i) {
        panel.points.push_back({test.x.at(i, 0), test.x.at(i, 1), test.label[i]});
      }
      panel.boundary = boundary_polyline(res.raster, cfg);
    }
  }

  write_text(out_dir + "/summary.csv", summary.str());
  write_text(out_dir + "/plot.svg", render_panels(panels, cfg.train_p.size()));
  return runs;
}

}  // namespace scr::harness
