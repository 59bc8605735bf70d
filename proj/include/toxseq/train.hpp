#pragma once

// Losses, backpropagation through time, the finite-difference oracle, Adam and
// the training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxseq/data_io.hpp"
#include "toxseq/error.hpp"
#include "toxseq/model.hpp"

namespace toxseq {

using Gradients = ParamTensors;

// Binary cross-entropy with p clipped to [1e-12, 1 - 1e-12].
double bce_loss(double p, double y) noexcept;
double mse_loss(double pred, double y) noexcept;

/// One training example. Labels with mask 0 are never read.
struct Example {
  EncodedSequence seq;
  Vector labels;
  std::vector<std::uint8_t> mask;
  std::optional<Vector> dropout_mask;  // scaled mask over the 2*units representation
};

Example make_example(const BilstmModel& model, const DatasetRecord& record);

struct LossAndGrad {
  double loss = 0.0;        // mean over unmasked label entries
  std::size_t entries = 0;  // unmasked label entries in the batch
  Gradients grads;
};

// Mean masked loss (BCE for classification, MSE for regression).
// Throws EmptyBatch.
double batch_loss(const BilstmModel& model, std::span<const Example> batch);

// Exact gradient of batch_loss. Throws EmptyBatch.
LossAndGrad backward(const BilstmModel& model, std::span<const Example> batch);

/// (f(x + eps) - f(x - eps)) / (2 eps). Throws InvalidArgument for eps <= 0.
template <class F>
double central_difference(F&& f, double x, double eps);

// Central differences of batch_loss for every parameter, one at a time.
Gradients finite_diff_grad(const BilstmModel& model, std::span<const Example> batch,
                           double eps = 1e-4);

struct BlockError {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;  // |a - n| / max(|n|, 1e-8)
  double max_abs_error = 0.0;
};

struct GradientComparison {
  std::vector<BlockError> blocks;
  double max_rel_error = 0.0;
};

GradientComparison compare_gradients(const Gradients& analytic, const Gradients& numeric);

struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros_like(const ParamTensors& params, double beta1 = 0.9, double beta2 = 0.999,
                              double epsilon = 1e-8);
};

// Throws ShapeMismatch when grads or state do not match params.
void adam_step(ParamTensors& params, const Gradients& grads, AdamState& state, double lr);

// Each entry is 0 with probability rate, otherwise 1 / (1 - rate).
// Throws RateOutOfRange unless 0 <= rate < 1.
Vector make_dropout_mask(Rng& rng, std::size_t width, double rate);

double global_norm(const Gradients& grads);
// Rescales so the global norm is at most max_norm; returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_metric = 0.0;
};

struct TrainHistory {
  std::string metric_name;  // "roc_auc", "rmse" or "valid_loss"
  bool higher_is_better = true;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  // "epoch,train_loss,valid_metric"
  void write_csv(std::ostream& os) const;
  void save_csv(const std::filesystem::path& path) const;
};

struct TrainObserver {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const std::string&)> on_message;
};

struct TrainResult {
  BilstmModel model;
  TrainHistory history;
};

// Builds the vocabulary from train_set, initialises from config.seed and runs
// mini-batch Adam, returning the snapshot from the best validation epoch.
// Throws EmptyDataset, NonFiniteLoss.
TrainResult train(const Hyperparams& config, std::span<const DatasetRecord> train_set,
                  std::span<const DatasetRecord> valid_set, const TaskSchema& schema,
                  const TrainObserver& observer = {});

// Gradient-check fixture: a random small model and batch derived from a seed.
struct GradCheckFixture {
  BilstmModel model;
  std::vector<Example> batch;
};

struct GradCheckSpec {
  std::uint64_t seed = 1;
  TaskKind kind = TaskKind::Classification;
  std::size_t units = 3;
  std::size_t embed_dim = 4;
  std::size_t vocab_size = 8;
  std::size_t n_tasks = 2;
  std::size_t max_len = 6;
  std::size_t batch_size = 2;
  bool dropout = false;
  double dropout_rate = 0.3;
};

GradCheckFixture make_gradcheck_fixture(const GradCheckSpec& spec);

// ---------------------------------------------------------------------------

template <class F>
double central_difference(F&& f, double x, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "central_difference: eps must be > 0");
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

}  // namespace toxseq
