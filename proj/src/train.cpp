#include "satin/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>
#include <vector>

#include "satin/serialize.hpp"

namespace satin {

double lr_at(const TrainConfig& cfg, int64_t step) {
  if (cfg.steps <= 1) return cfg.lr_start;
  double t = double(step) / double(cfg.steps - 1);
  return std::exp((1 - t) * std::log(cfg.lr_start) + t * std::log(cfg.lr_end));
}

void sgd_step(ParamStore& params, double lr, double momentum, double weight_decay) {
  for (auto& p : params.all()) {
    if (!p->trainable) continue;
    if (!p->grad.defined()) p->grad = Tensor(p->value.shape(), 0.0);
    if (!p->velocity.defined()) p->velocity = Tensor(p->value.shape(), 0.0);
    for (int64_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad.data()[i] + weight_decay * p->value.data()[i];
      double v = momentum * p->velocity.data()[i] + g;
      p->velocity.data()[i] = v;
      p->value.data()[i] -= lr * v;
    }
  }
  params.zero_grads();
}

namespace {

// One batch element's completed backward pass, folded in sample order.
struct SampleWork {
  std::unique_ptr<Tape> tape;
  double heatmap = 0, offset = 0, symmetry = 0, total = 0;
  bool ok = false;
};

SampleWork run_sample(const Model& model, const TrainConfig& cfg, const CropConfig& crop,
                      const SynthVideo& video, uint64_t seed) {
  SampleWork w;
  Rng rng(seed);
  PairSample s = make_pair(video, crop, rng);

  w.tape = std::make_unique<Tape>(true);
  Fwd f{*w.tape, true};
  Var ex = ops::leaf(*w.tape, s.exemplar);
  Var cand = ops::leaf(*w.tape, s.candidate);
  Model::Out out = model.forward(f, ex, cand, cfg.aux);

  PairTargets t = make_targets(s.gt, double(model.cfg.stride()), model.cfg.origin(),
                               model.cfg.response_extent());
  LossBreakdown loss = pair_loss(out, t, cfg.loss, cfg.aux);
  double total = loss.total.val().data()[0];
  if (!std::isfinite(total)) return w;

  w.tape->backward(loss.total.id);
  w.heatmap = loss.heatmap;
  w.offset = loss.offset;
  w.symmetry = loss.symmetry;
  w.total = total;
  w.ok = true;
  return w;
}

bool grads_finite(const ParamStore& params) {
  for (auto& p : params.all()) {
    if (!p->grad.defined()) continue;
    for (int64_t i = 0; i < p->grad.size(); ++i)
      if (!std::isfinite(p->grad.data()[i])) return false;
  }
  return true;
}

void fold_bn(Tape& tape) {
  for (auto& o : tape.bn_observations) {
    for (int64_t i = 0; i < o.mean.size(); ++i) {
      double& rm = o.running_mean->value.data()[i];
      double& rv = o.running_var->value.data()[i];
      rm = (1 - o.momentum) * rm + o.momentum * o.mean.data()[i];
      rv = (1 - o.momentum) * rv + o.momentum * o.var.data()[i];
    }
  }
}

}  // namespace

TrainResult train(Model& model, const TrainConfig& cfg,
                  const std::function<void(const StepStats&)>& on_step) {
  check(cfg.steps > 0 && cfg.batch_size > 0 && cfg.clips > 0, "train: bad config");
  CropConfig crop;
  crop.exemplar_size = model.cfg.exemplar_size;
  crop.candidate_size = model.cfg.candidate_size;

  std::vector<SynthVideo> clips;
  clips.reserve(size_t(cfg.clips));
  for (int64_t i = 0; i < cfg.clips; ++i)
    clips.push_back(SynthVideo::sample(cfg.synth, uint64_t(i)));

  std::ofstream report;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    report.open(cfg.out_dir + "/report.csv");
    report << "step,lr,L_hm,L_os,L_st,L_total\n";
  }

  Rng sampler(Rng::mix(cfg.data_seed, 0x7a11));
  model.params.zero_grads();

  TrainResult res;
  double initial_loss = -1;
  int overflow_run = 0;
  int jobs = std::max(1, cfg.jobs);

  for (int64_t step = 0; step < cfg.steps; ++step) {
    double lr = lr_at(cfg, step);

    // Draw the whole batch's clip/seed schedule up front so jobs>1 consumes
    // the sampler identically to jobs=1.
    std::vector<int64_t> clip_idx(size_t(cfg.batch_size));
    std::vector<uint64_t> seeds(size_t(cfg.batch_size));
    for (int64_t b = 0; b < cfg.batch_size; ++b) {
      clip_idx[size_t(b)] = sampler.uniform_int(cfg.clips);
      seeds[size_t(b)] = Rng::mix(uint64_t(sampler.uniform_int(int64_t(1) << 62)), uint64_t(b));
    }

    std::vector<SampleWork> work(size_t(cfg.batch_size));
    for (int64_t base = 0; base < cfg.batch_size; base += jobs) {
      int64_t hi = std::min<int64_t>(base + jobs, cfg.batch_size);
      std::vector<std::thread> pool;
      for (int64_t b = base + 1; b < hi; ++b)
        pool.emplace_back([&, b] {
          work[size_t(b)] = run_sample(model, cfg, crop, clips[size_t(clip_idx[size_t(b)])],
                                       seeds[size_t(b)]);
        });
      work[size_t(base)] = run_sample(model, cfg, crop, clips[size_t(clip_idx[size_t(base)])],
                                      seeds[size_t(base)]);
      for (auto& th : pool) th.join();
      // Fold gradients and BN statistics in sample order.
      for (int64_t b = base; b < hi; ++b) {
        if (work[size_t(b)].ok) {
          work[size_t(b)].tape->accumulate_param_grads();
          fold_bn(*work[size_t(b)].tape);
        }
        work[size_t(b)].tape.reset();
      }
    }

    StepStats st;
    st.step = step;
    st.lr = lr;
    int64_t ok = 0;
    for (auto& w : work)
      if (w.ok) {
        st.heatmap += w.heatmap;
        st.offset += w.offset;
        st.symmetry += w.symmetry;
        st.total += w.total;
        ++ok;
      }

    if (ok == 0 || !grads_finite(model.params)) {
      st.skipped = true;
      std::fprintf(stderr, "train: step %lld skipped (non-finite loss or gradients)\n",
                   (long long)step);
      model.params.zero_grads();
    } else {
      st.heatmap /= double(ok);
      st.offset /= double(ok);
      st.symmetry /= double(ok);
      st.total /= double(ok);
      for (auto& p : model.params.all())
        if (p->grad.defined())
          for (int64_t i = 0; i < p->grad.size(); ++i) p->grad.data()[i] /= double(ok);
      {
        double sq = 0;
        for (auto& p : model.params.all())
          if (p->trainable && p->grad.defined())
            for (int64_t i = 0; i < p->grad.size(); ++i)
              sq += p->grad.data()[i] * p->grad.data()[i];
        double norm = std::sqrt(sq);
        st.grad_norm = norm;
        if (cfg.clip_norm > 0 && norm > cfg.clip_norm) {
          double sc = cfg.clip_norm / norm;
          for (auto& p : model.params.all())
            if (p->trainable && p->grad.defined())
              for (int64_t i = 0; i < p->grad.size(); ++i) p->grad.data()[i] *= sc;
        }
      }
      sgd_step(model.params, lr, cfg.momentum, cfg.weight_decay);
    }

    if (report.is_open() && (step % std::max<int64_t>(1, cfg.log_every) == 0 ||
                             step == cfg.steps - 1)) {
      char line[160];
      std::snprintf(line, sizeof line, "%lld,%.8g,%.8g,%.8g,%.8g,%.8g\n", (long long)step, lr,
                    st.heatmap, st.offset, st.symmetry, st.total);
      report << line;
    }
    if (on_step) on_step(st);
    res.steps_done = step + 1;
    res.final_loss = st.total;

    if (!st.skipped) {
      if (initial_loss < 0) initial_loss = st.total;
      overflow_run = st.total > 10 * initial_loss ? overflow_run + 1 : 0;
      if (overflow_run >= 100) {
        std::fprintf(stderr, "train: diverged at step %lld (loss %.4g vs initial %.4g)\n",
                     (long long)step, st.total, initial_loss);
        res.diverged = true;
        break;
      }
    }

    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)
      save_params(cfg.out_dir + "/ckpt_" + std::to_string(step + 1) + ".satin", model.params);
  }

  if (!cfg.out_dir.empty()) save_params(cfg.out_dir + "/weights.satin", model.params);
  return res;
}

}  // namespace satin
