#pragma once

// Bidirectional LSTM over character embeddings with a dense per-task head.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxseq/smiles_codec.hpp"
#include "toxseq/task.hpp"
#include "toxseq/tensor.hpp"

namespace toxseq {

struct Hyperparams {
  std::size_t units = 32;  // per direction
  std::size_t embed_dim = 32;
  double dropout_rate = 0.3;
  double learning_rate = 0.1;
  std::size_t max_len = 0;  // 0: longest training SMILES, capped at 256
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Optimizer and loop settings.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::size_t patience = 10;  // 0 disables early stopping
  double init_scale = 0.0;    // 0: Glorot uniform per tensor

  // Throws InvalidArgument for out-of-range values.
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

/// Weights and biases of one LSTM direction. Every gate matrix is
/// units x (units + input_dim) and multiplies the concatenation [h_prev, x].
struct LstmParams {
  Matrix W_f, W_i, W_o, W_c;
  Vector b_f, b_i, b_o, b_c;

  static LstmParams zeros(std::size_t units, std::size_t input_dim);
  std::size_t units() const noexcept { return b_f.size(); }
  std::size_t input_dim() const noexcept { return W_f.cols() - b_f.size(); }
  bool operator==(const LstmParams&) const = default;
};

struct LstmState {
  Vector h;
  Vector c;
  static LstmState zeros(std::size_t units) { return {Vector(units, 0.0), Vector(units, 0.0)}; }
};

struct GateActivations {
  Vector f, i, o, c_tilde;
};

struct StepTrace {
  LstmState state;
  GateActivations gates;
};

struct DirectionTrace {
  LstmState final;
  std::vector<StepTrace> steps;  // in processing order
};

/// Every trainable tensor. Gradients and Adam moments share this layout.
struct ParamTensors {
  Matrix embedding;  // vocab_size x embed_dim
  LstmParams forward_cell;
  LstmParams backward_cell;
  Matrix head_W;  // n_tasks x 2*units
  Vector head_b;  // n_tasks

  static ParamTensors zeros_like(const ParamTensors& p);

  struct Block {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<double> values;
  };
  struct ConstBlock {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<const double> values;
  };
  // embedding, fwd.W_f, fwd.W_i, fwd.W_o, fwd.W_c, fwd.b_f, ..., bwd.*, head_W, head_b.
  std::vector<Block> blocks();
  std::vector<ConstBlock> blocks() const;
  std::size_t parameter_count() const;

  bool operator==(const ParamTensors&) const = default;
};

struct BilstmModel {
  Vocabulary vocab;
  ParamTensors params;
  TaskKind task_kind = TaskKind::Classification;
  std::vector<std::string> task_names;
  Hyperparams config;

  std::size_t units() const noexcept { return params.forward_cell.units(); }
  std::size_t embed_dim() const noexcept { return params.embedding.cols(); }
  std::size_t n_tasks() const noexcept { return params.head_b.size(); }
  std::size_t max_len() const noexcept { return config.max_len; }

  // Seeded Glorot-uniform initialisation (or uniform init_scale when set);
  // biases start at zero. config.max_len must already be resolved.
  static BilstmModel initialize(Vocabulary vocab, TaskKind kind,
                                std::vector<std::string> task_names, const Hyperparams& config);
};

std::vector<Vector> embed(const BilstmModel& model, const EncodedSequence& seq);

std::pair<LstmState, GateActivations> lstm_cell_step(const LstmParams& p,
                                                     std::span<const double> x_t,
                                                     const LstmState& prev);

// Runs from a zero state over inputs, last-to-first when reversed.
DirectionTrace run_direction(const LstmParams& p, std::span<const Vector> inputs, bool reversed);

struct ForwardTrace {
  std::vector<Vector> inputs;  // embedded tokens, sequence order
  DirectionTrace fwd;
  DirectionTrace bwd;          // steps run from the last token to the first
  Vector representation;       // [h_fwd_final, h_bwd_final]
  std::optional<Vector> dropout_mask;
  Vector head_input;           // representation * mask
  Vector logits;
  Vector output;               // sigmoid(logits) or logits
};

// dropout_mask, when given, must have 2*units entries (already scaled).
ForwardTrace forward(const BilstmModel& model, const EncodedSequence& seq,
                     const std::optional<Vector>& dropout_mask = std::nullopt);

// Encodes with the model's vocabulary and max_len; no dropout.
Vector predict(const BilstmModel& model, std::string_view smiles);

void write_model(std::ostream& os, const BilstmModel& model);
BilstmModel read_model(std::istream& is);
void save_model(const BilstmModel& model, const std::filesystem::path& path);
BilstmModel load_model(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace toxseq
