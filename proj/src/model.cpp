#include "toxseq/model.hpp"

#include <cmath>

#include "toxseq/error.hpp"

namespace toxseq {

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (units == 0) fail("units must be >= 1");
  if (embed_dim == 0) fail("embed_dim must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail("Adam epsilon must be > 0");
  if (init_scale < 0.0) fail("init_scale must be >= 0");
}

LstmParams LstmParams::zeros(std::size_t units, std::size_t input_dim) {
  const std::size_t cols = units + input_dim;
  return {Matrix(units, cols), Matrix(units, cols), Matrix(units, cols), Matrix(units, cols),
          Vector(units, 0.0),  Vector(units, 0.0),  Vector(units, 0.0),  Vector(units, 0.0)};
}

ParamTensors ParamTensors::zeros_like(const ParamTensors& p) {
  return {Matrix(p.embedding.rows(), p.embedding.cols()),
          LstmParams::zeros(p.forward_cell.units(), p.forward_cell.input_dim()),
          LstmParams::zeros(p.backward_cell.units(), p.backward_cell.input_dim()),
          Matrix(p.head_W.rows(), p.head_W.cols()), Vector(p.head_b.size(), 0.0)};
}

namespace {

template <class Self, class BlockT>
std::vector<BlockT> collect_blocks(Self& p) {
  std::vector<BlockT> out;
  auto mat = [&](std::string name, auto& m) { out.push_back({std::move(name), m.rows(), m.cols(), m.flat()}); };
  auto vec = [&](std::string name, auto& v) { out.push_back({std::move(name), 1, v.size(), {v.data(), v.size()}}); };
  mat("embedding", p.embedding);
  for (auto [prefix, cell] : {std::pair{"fwd.", &p.forward_cell}, std::pair{"bwd.", &p.backward_cell}}) {
    const std::string pre = prefix;
    mat(pre + "W_f", cell->W_f);
    mat(pre + "W_i", cell->W_i);
    mat(pre + "W_o", cell->W_o);
    mat(pre + "W_c", cell->W_c);
    vec(pre + "b_f", cell->b_f);
    vec(pre + "b_i", cell->b_i);
    vec(pre + "b_o", cell->b_o);
    vec(pre + "b_c", cell->b_c);
  }
  mat("head_W", p.head_W);
  vec("head_b", p.head_b);
  return out;
}

}  // namespace

std::vector<ParamTensors::Block> ParamTensors::blocks() {
  return collect_blocks<ParamTensors, Block>(*this);
}

std::vector<ParamTensors::ConstBlock> ParamTensors::blocks() const {
  return collect_blocks<const ParamTensors, ConstBlock>(*this);
}

std::size_t ParamTensors::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.values.size();
  return n;
}

BilstmModel BilstmModel::initialize(Vocabulary vocab, TaskKind kind,
                                    std::vector<std::string> task_names,
                                    const Hyperparams& config) {
  config.validate();
  if (task_names.empty()) throw Error(ErrorKind::InvalidArgument, "model needs at least one task");
  if (config.max_len == 0) throw Error(ErrorKind::InvalidArgument, "max_len must be resolved before init");

  const std::size_t u = config.units;
  const std::size_t e = config.embed_dim;
  const std::size_t v = vocab.size();
  const std::size_t n = task_names.size();

  Rng rng = Rng::derive(config.seed, 0x696e6974);  // "init"
  auto draw = [&](std::size_t rows, std::size_t cols) {
    const double scale = config.init_scale > 0.0 ? config.init_scale : glorot_scale(cols, rows);
    return init_uniform(rng, rows, cols, scale);
  };

  BilstmModel m;
  m.vocab = std::move(vocab);
  m.task_kind = kind;
  m.task_names = std::move(task_names);
  m.config = config;
  m.params.embedding = draw(v, e);
  for (LstmParams* cell : {&m.params.forward_cell, &m.params.backward_cell}) {
    *cell = LstmParams::zeros(u, e);
    cell->W_f = draw(u, u + e);
    cell->W_i = draw(u, u + e);
    cell->W_o = draw(u, u + e);
    cell->W_c = draw(u, u + e);
  }
  m.params.head_W = draw(n, 2 * u);
  m.params.head_b = Vector(n, 0.0);
  return m;
}

std::vector<Vector> embed(const BilstmModel& model, const EncodedSequence& seq) {
  if (seq.true_length == 0 || seq.true_length > seq.tokens.size())
    throw Error(ErrorKind::TokenOutOfRange, "invalid true_length " + std::to_string(seq.true_length));
  const Matrix& table = model.params.embedding;
  std::vector<Vector> out;
  out.reserve(seq.true_length);
  for (std::size_t t = 0; t < seq.true_length; ++t) {
    const Token tok = seq.tokens[t];
    if (tok >= table.rows())
      throw Error(ErrorKind::TokenOutOfRange,
                  "token " + std::to_string(tok) + " at position " + std::to_string(t) +
                      " exceeds embedding rows " + std::to_string(table.rows()));
    const auto row = table.row(tok);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

std::pair<LstmState, GateActivations> lstm_cell_step(const LstmParams& p,
                                                     std::span<const double> x_t,
                                                     const LstmState& prev) {
  const std::size_t u = p.units();
  if (x_t.size() != p.input_dim() || prev.h.size() != u || prev.c.size() != u)
    throw Error(ErrorKind::DimensionMismatch,
                "cell expects input " + std::to_string(p.input_dim()) + " and state " +
                    std::to_string(u) + ", got " + std::to_string(x_t.size()) + " and " +
                    std::to_string(prev.h.size()));

  const Vector hx = concat(prev.h, x_t);
  GateActivations g{sigmoid(affine(p.W_f, hx, p.b_f)), sigmoid(affine(p.W_i, hx, p.b_i)),
                    sigmoid(affine(p.W_o, hx, p.b_o)), tanh_v(affine(p.W_c, hx, p.b_c))};

  LstmState next{Vector(u), Vector(u)};
  for (std::size_t k = 0; k < u; ++k) {
    next.c[k] = g.f[k] * prev.c[k] + g.i[k] * g.c_tilde[k];
    next.h[k] = g.o[k] * tanh_clamped(next.c[k]);
  }
  return {std::move(next), std::move(g)};
}

DirectionTrace run_direction(const LstmParams& p, std::span<const Vector> inputs, bool reversed) {
  if (inputs.empty()) throw Error(ErrorKind::EmptyInput, "run_direction needs at least one input");
  DirectionTrace trace;
  trace.steps.reserve(inputs.size());
  LstmState state = LstmState::zeros(p.units());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vector& x = inputs[reversed ? inputs.size() - 1 - k : k];
    auto [next, gates] = lstm_cell_step(p, x, state);
    state = next;
    trace.steps.push_back({std::move(next), std::move(gates)});
  }
  trace.final = std::move(state);
  return trace;
}

ForwardTrace forward(const BilstmModel& model, const EncodedSequence& seq,
                     const std::optional<Vector>& dropout_mask) {
  const std::size_t width = 2 * model.units();
  if (dropout_mask && dropout_mask->size() != width)
    throw Error(ErrorKind::DimensionMismatch,
                "dropout mask has " + std::to_string(dropout_mask->size()) + " entries, expected " +
                    std::to_string(width));
  if (model.params.head_W.cols() != width)
    throw Error(ErrorKind::DimensionMismatch, "head width does not match 2*units");

  ForwardTrace tr;
  tr.inputs = embed(model, seq);
  tr.fwd = run_direction(model.params.forward_cell, tr.inputs, false);
  tr.bwd = run_direction(model.params.backward_cell, tr.inputs, true);
  tr.representation = concat(tr.fwd.final.h, tr.bwd.final.h);
  tr.dropout_mask = dropout_mask;
  tr.head_input = tr.representation;
  if (dropout_mask)
    for (std::size_t k = 0; k < width; ++k) tr.head_input[k] *= (*dropout_mask)[k];
  tr.logits = affine(model.params.head_W, tr.head_input, model.params.head_b);
  tr.output = model.task_kind == TaskKind::Classification ? sigmoid(tr.logits) : tr.logits;
  return tr;
}

Vector predict(const BilstmModel& model, std::string_view smiles) {
  return forward(model, encode(model.vocab, smiles, model.max_len())).output;
}

}  // namespace toxseq
