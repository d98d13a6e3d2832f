#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scr/autodiff/tensor.hpp"
#include "scr/harness/config.hpp"

namespace scr::harness {

// Two-Gaussian mixture sample: class 0 ~ N([-3,3], 2I), class 1 ~ N([3,3], 2I).
// p_class0 is the class-0 mixing probability.
struct SynthSet {
  autodiff::Tensor x;     // n x 2
  autodiff::Tensor gold;  // n x 2 one-hot
  std::vector<int> label;
};

SynthSet gen_synthetic(std::size_t n, double p_class0, std::uint64_t seed);

struct SynthStageResult {
  double accuracy = 0.0;
  double boundary_x = 0.0;             // mean horizontal boundary position
  std::vector<std::uint8_t> raster;    // raster x raster predicted classes
};

struct SynthRun {
  double p = 0.0;
  SynthStageResult pretrain, finetune;
};

// The full prior-shift experiment: for every p, pretrain on BCE with class-0
// prior p, fine-tune with the sensitivity objective, evaluate on the
// inverted prior. Writes summary.csv, per-stage rasters, and plot.svg into
// out_dir.
std::vector<SynthRun> run_synthetic(const SyntheticConfig& cfg, const std::string& out_dir);

}  // namespace scr::harness
