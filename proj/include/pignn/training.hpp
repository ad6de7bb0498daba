#pragma once

#include "pignn/graph.hpp"
#include "pignn/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace pignn {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 300;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  // Halve the learning rate after `plateau_patience` epochs without a new best
  // validation loss. Off by default.
  bool plateau_decay = false;
  int plateau_patience = 20;
  double plateau_factor = 0.5;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // mean per-graph loss seen during the epoch
  std::vector<double> val_loss;    // after the epoch's last update
  int best_epoch = -1;             // 0-based
  double best_val_loss = 0;
  std::vector<int> train_indices;
  std::vector<int> val_indices;
};

struct TrainResult {
  PiGnnParams best_params;
  TrainReport report;
  ModelDims dims;
};

// Disjoint cover of [0, N) split by `fractions` (which must sum to 1),
// deterministic in seed; classification datasets are stratified by class.
std::vector<std::vector<int>> split(const Dataset& ds, const std::vector<double>& fractions,
                                    std::uint64_t seed);

struct AdamState {
  PiGnnParams m;
  PiGnnParams v;
  int t = 0;

  static AdamState zeros_like(const PiGnnParams& params);
};

// One bias-corrected Adam update; increments state.t.
void adam_step(PiGnnParams& params, const PiGnnParams& grads, AdamState& state,
               const TrainConfig& cfg, double learning_rate);
inline void adam_step(PiGnnParams& params, const PiGnnParams& grads, AdamState& state,
                      const TrainConfig& cfg) {
  adam_step(params, grads, state, cfg, cfg.learning_rate);
}

// Mean loss over the graphs at `indices`, without recording gradients.
double mean_loss(const Dataset& ds, const std::vector<int>& indices, const PiGnnParams& params,
                 const PiGnnConfig& cfg, const ModelDims& dims);

// Gradient of the mean loss over a batch. Returns the loss.
double batch_gradient(const Dataset& ds, const std::vector<int>& batch, const PiGnnParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims, PiGnnParams& grads);

// Seeded mini-batch Adam; returns the parameters of the epoch with the lowest
// validation loss. Progress lines "epoch,train_loss,val_loss" go to `progress`
// when it is non-null. Throws on a non-finite loss.
TrainResult train(const Dataset& ds, const PiGnnConfig& model_cfg, const TrainConfig& train_cfg,
                  std::ostream* progress = nullptr);

}  // namespace pignn
