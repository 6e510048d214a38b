#pragma once

#include <functional>
#include <string>

#include "satin/labels.hpp"
#include "satin/model.hpp"
#include "satin/synth.hpp"

namespace satin {

struct TrainConfig {
  int64_t steps = 2000;
  int64_t batch_size = 8;
  double lr_start = 1e-3;
  double lr_end = 1e-5;  // log-spaced schedule from lr_start to lr_end
  double momentum = 0.9;
  double weight_decay = 0.005;
  double clip_norm = 100.0;  // global gradient-norm clip; <= 0 disables
  LossWeights loss;
  bool aux = true;
  uint64_t data_seed = 7;
  int64_t clips = 64;  // synthetic training clips
  SynthConfig synth;
  int jobs = 1;                 // worker threads over batch samples
  int64_t checkpoint_every = 500;
  int64_t log_every = 10;
  std::string out_dir;          // checkpoints + report; empty = none
};

// lr at a given step, log-spaced over [lr_start, lr_end].
double lr_at(const TrainConfig& cfg, int64_t step);

// One SGD update over every trainable parameter:
//   v <- momentum*v + g + weight_decay*p;  p <- p - lr*v
// Gradients must already be averaged; buffers are zeroed afterwards.
void sgd_step(ParamStore& params, double lr, double momentum, double weight_decay);

struct StepStats {
  int64_t step = 0;
  double lr = 0;
  double heatmap = 0, offset = 0, symmetry = 0, total = 0;
  double grad_norm = 0;  // global gradient norm before clipping
  bool skipped = false;  // non-finite gradients, update not applied
};

struct TrainResult {
  bool diverged = false;
  int64_t steps_done = 0;
  double final_loss = 0;
};

// Full training loop over procedurally generated pairs. Deterministic for a
// fixed config at jobs=1. Writes report.csv (step,lr,L_hm,L_os,L_st,L_total)
// and periodic weights checkpoints into cfg.out_dir when set; the callback
// (optional) observes every step. Aborts when the loss exceeds 10x the
// initial loss for 100 consecutive steps.
TrainResult train(Model& model, const TrainConfig& cfg,
                  const std::function<void(const StepStats&)>& on_step = {});

}  // namespace satin
