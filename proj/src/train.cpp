#include "toxseq/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "numfmt.hpp"
#include "toxseq/error.hpp"
#include "toxseq/kernels.hpp"
#include "toxseq/metrics.hpp"

namespace toxseq {

double bce_loss(double p, double y) noexcept {
  constexpr double kClip = 1e-12;
  p = std::clamp(p, kClip, 1.0 - kClip);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double mse_loss(double pred, double y) noexcept {
  const double d = pred - y;
  return d * d;
}

Example make_example(const BilstmModel& model, const DatasetRecord& record) {
  return {encode(model.vocab, record.smiles, model.max_len()), record.labels, record.mask, std::nullopt};
}

namespace {

std::size_t count_entries(std::span<const Example> batch) {
  std::size_t n = 0;
  for (const auto& ex : batch)
    for (auto m : ex.mask) n += m != 0;
  return n;
}

double entry_loss(TaskKind kind, double out, double y) {
  return kind == TaskKind::Classification ? bce_loss(out, y) : mse_loss(out, y);
}

void check_labels(const BilstmModel& model, const Example& ex) {
  if (ex.labels.size() != model.n_tasks() || ex.mask.size() != model.n_tasks())
    throw Error(ErrorKind::DimensionMismatch,
                "example has " + std::to_string(ex.labels.size()) + " labels, model has " +
                    std::to_string(model.n_tasks()) + " tasks");
}

// Backpropagates dh_final through one direction, accumulating parameter
// gradients into g and input gradients into dx (indexed in sequence order).
void backprop_direction(const LstmParams& p, const DirectionTrace& trace,
                        std::span<const Vector> inputs, bool reversed, const Vector& dh_final,
                        LstmParams& g, std::vector<Vector>& dx) {
  const auto& K = kernels::active();
  const std::size_t u = p.units();
  const std::size_t e = p.input_dim();
  const std::size_t cols = u + e;
  const std::size_t steps = trace.steps.size();

  Vector dh = dh_final;
  Vector dc(u, 0.0);
  Vector dz_f(u), dz_i(u), dz_o(u), dz_c(u);
  Vector dhx(cols);
  const Vector zeros(u, 0.0);

  for (std::size_t k = steps; k-- > 0;) {
    const StepTrace& st = trace.steps[k];
    const GateActivations& a = st.gates;
    const Vector& h_prev = k > 0 ? trace.steps[k - 1].state.h : zeros;
    const Vector& c_prev = k > 0 ? trace.steps[k - 1].state.c : zeros;
    const std::size_t pos = reversed ? steps - 1 - k : k;
    const Vector hx = concat(h_prev, inputs[pos]);

    for (std::size_t j = 0; j < u; ++j) {
      const double tc = tanh_clamped(st.state.c[j]);
      dz_o[j] = dh[j] * tc * a.o[j] * (1.0 - a.o[j]);
      dc[j] += dh[j] * a.o[j] * (1.0 - tc * tc);
      dz_f[j] = dc[j] * c_prev[j] * a.f[j] * (1.0 - a.f[j]);
      dz_i[j] = dc[j] * a.c_tilde[j] * a.i[j] * (1.0 - a.i[j]);
      dz_c[j] = dc[j] * a.i[j] * (1.0 - a.c_tilde[j] * a.c_tilde[j]);
    }

    std::fill(dhx.begin(), dhx.end(), 0.0);
    const std::pair<const Matrix*, Matrix*> mats[] = {
        {&p.W_f, &g.W_f}, {&p.W_i, &g.W_i}, {&p.W_o, &g.W_o}, {&p.W_c, &g.W_c}};
    const Vector* dzs[] = {&dz_f, &dz_i, &dz_o, &dz_c};
    Vector* dbs[] = {&g.b_f, &g.b_i, &g.b_o, &g.b_c};
    for (int gate = 0; gate < 4; ++gate) {
      const Vector& dz = *dzs[gate];
      K.outer_acc(mats[gate].second->flat().data(), u, cols, dz.data(), hx.data());
      for (std::size_t j = 0; j < u; ++j) (*dbs[gate])[j] += dz[j];
      K.gemv_t_acc(mats[gate].first->flat().data(), u, cols, dz.data(), dhx.data());
    }

    for (std::size_t j = 0; j < u; ++j) {
      dh[j] = dhx[j];
      dc[j] *= a.f[j];
    }
    Vector& dxp = dx[pos];
    for (std::size_t j = 0; j < e; ++j) dxp[j] += dhx[u + j];
  }
}

}  // namespace

double batch_loss(const BilstmModel& model, std::span<const Example> batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "batch is empty");
  const std::size_t entries = count_entries(batch);
  if (entries == 0) return 0.0;
  double sum = 0.0;
  for (const auto& ex : batch) {
    check_labels(model, ex);
    if (std::none_of(ex.mask.begin(), ex.mask.end(), [](auto m) { return m != 0; })) continue;
    const auto tr = forward(model, ex.seq, ex.dropout_mask);
    for (std::size_t t = 0; t < model.n_tasks(); ++t)
      if (ex.mask[t]) sum += entry_loss(model.task_kind, tr.output[t], ex.labels[t]);
  }
  return sum / static_cast<double>(entries);
}

LossAndGrad backward(const BilstmModel& model, std::span<const Example> batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "batch is empty");
  const auto& K = kernels::active();
  LossAndGrad out;
  out.grads = Gradients::zeros_like(model.params);
  out.entries = count_entries(batch);
  if (out.entries == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(out.entries);
  const std::size_t u = model.units();
  const std::size_t n_tasks = model.n_tasks();
  const bool classification = model.task_kind == TaskKind::Classification;
  Gradients& g = out.grads;
  double sum = 0.0;

  for (const auto& ex : batch) {
    check_labels(model, ex);
    if (std::none_of(ex.mask.begin(), ex.mask.end(), [](auto m) { return m != 0; })) continue;
    const ForwardTrace tr = forward(model, ex.seq, ex.dropout_mask);

    // dL/dlogit: (p - y)/N for sigmoid + BCE, 2(pred - y)/N for MSE.
    Vector dz(n_tasks, 0.0);
    for (std::size_t t = 0; t < n_tasks; ++t) {
      if (!ex.mask[t]) continue;
      const double o = tr.output[t];
      const double y = ex.labels[t];
      sum += entry_loss(model.task_kind, o, y);
      dz[t] = classification ? (o - y) * inv_n : 2.0 * (o - y) * inv_n;
    }

    K.outer_acc(g.head_W.flat().data(), n_tasks, 2 * u, dz.data(), tr.head_input.data());
    for (std::size_t t = 0; t < n_tasks; ++t) g.head_b[t] += dz[t];
    Vector drep(2 * u, 0.0);
    K.gemv_t_acc(model.params.head_W.flat().data(), n_tasks, 2 * u, dz.data(), drep.data());
    if (tr.dropout_mask)
      for (std::size_t k = 0; k < 2 * u; ++k) drep[k] *= (*tr.dropout_mask)[k];

    std::vector<Vector> dx(tr.inputs.size(), Vector(model.embed_dim(), 0.0));
    const Vector dh_fwd(drep.begin(), drep.begin() + static_cast<std::ptrdiff_t>(u));
    const Vector dh_bwd(drep.begin() + static_cast<std::ptrdiff_t>(u), drep.end());
    backprop_direction(model.params.forward_cell, tr.fwd, tr.inputs, false, dh_fwd, g.forward_cell, dx);
    backprop_direction(model.params.backward_cell, tr.bwd, tr.inputs, true, dh_bwd, g.backward_cell, dx);

    for (std::size_t pos = 0; pos < dx.size(); ++pos) {
      auto row = g.embedding.row(ex.seq.tokens[pos]);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += dx[pos][j];
    }
  }
  out.loss = sum * inv_n;
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::NonFiniteLoss, "loss is not finite");
  return out;
}

Gradients finite_diff_grad(const BilstmModel& model, std::span<const Example> batch, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "finite difference eps must be > 0");
  BilstmModel work = model;
  Gradients grads = Gradients::zeros_like(model.params);
  auto params = work.params.blocks();
  auto out = grads.blocks();
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t k = 0; k < params[b].values.size(); ++k) {
      double& theta = params[b].values[k];
      const double original = theta;
      out[b].values[k] = central_difference(
          [&](double value) {
            theta = value;
            return batch_loss(work, batch);
          },
          original, eps);
      theta = original;
    }
  }
  return grads;
}

GradientComparison compare_gradients(const Gradients& analytic, const Gradients& numeric) {
  GradientComparison cmp;
  const auto a = analytic.blocks();
  const auto n = numeric.blocks();
  if (a.size() != n.size()) throw Error(ErrorKind::ShapeMismatch, "gradient layouts differ");
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (a[b].values.size() != n[b].values.size())
      throw Error(ErrorKind::ShapeMismatch, "block " + a[b].name + " differs in size");
    BlockError be{a[b].name, a[b].values.size(), 0.0, 0.0};
    for (std::size_t k = 0; k < a[b].values.size(); ++k) {
      const double abs_err = std::abs(a[b].values[k] - n[b].values[k]);
      const double rel = abs_err / std::max(std::abs(n[b].values[k]), 1e-8);
      be.max_abs_error = std::max(be.max_abs_error, abs_err);
      be.max_rel_error = std::max(be.max_rel_error, rel);
    }
    cmp.max_rel_error = std::max(cmp.max_rel_error, be.max_rel_error);
    cmp.blocks.push_back(std::move(be));
  }
  return cmp;
}

AdamState AdamState::zeros_like(const ParamTensors& params, double beta1, double beta2, double epsilon) {
  return {Gradients::zeros_like(params), Gradients::zeros_like(params), 0, beta1, beta2, epsilon};
}

void adam_step(ParamTensors& params, const Gradients& grads, AdamState& state, double lr) {
  auto p = params.blocks();
  const auto g = grads.blocks();
  auto m = state.m.blocks();
  auto v = state.v.blocks();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
    throw Error(ErrorKind::ShapeMismatch, "Adam: block count mismatch");
  for (std::size_t b = 0; b < p.size(); ++b)
    if (g[b].values.size() != p[b].values.size() || m[b].values.size() != p[b].values.size() ||
        v[b].values.size() != p[b].values.size())
      throw Error(ErrorKind::ShapeMismatch, "Adam: block " + p[b].name + " differs in size");

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const kernels::AdamCoeffs k{lr,
                              state.beta1,
                              state.beta2,
                              1.0 - state.beta1,
                              1.0 - state.beta2,
                              1.0 - std::pow(state.beta1, t),
                              1.0 - std::pow(state.beta2, t),
                              state.epsilon};
  const auto& K = kernels::active();
  for (std::size_t b = 0; b < p.size(); ++b)
    K.adam_update(p[b].values.data(), m[b].values.data(), v[b].values.data(), g[b].values.data(),
                  p[b].values.size(), k);
}

Vector make_dropout_mask(Rng& rng, std::size_t width, double rate) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw Error(ErrorKind::RateOutOfRange, "dropout rate must be in [0, 1), got " + detail::format_shortest(rate));
  const double keep_scale = 1.0 / (1.0 - rate);
  Vector mask(width);
  for (double& m : mask) m = rng.uniform01() < rate ? 0.0 : keep_scale;
  return mask;
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& b : grads.blocks())
    for (double v : b.values) sq += v * v;
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& b : grads.blocks())
      for (double& v : b.values) v *= scale;
  }
  return norm;
}

void TrainHistory::write_csv(std::ostream& os) const {
  os << "epoch,train_loss,valid_metric\n";
  for (const auto& e : epochs)
    os << e.epoch << ',' << detail::format_full(e.train_loss) << ',' << detail::format_full(e.valid_metric) << '\n';
}

void TrainHistory::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_csv(os);
}

namespace {

struct ValidationScore {
  double value;
  std::string name;
  bool higher_is_better;
};

ValidationScore score_validation(const BilstmModel& model, std::span<const Example> valid,
                                 std::span<const DatasetRecord> records, const TaskSchema& schema) {
  std::vector<Vector> outputs;
  outputs.reserve(valid.size());
  for (const auto& ex : valid) outputs.push_back(forward(model, ex.seq).output);
  try {
    const EvalReport r = evaluate_outputs(outputs, records, schema);
    if (schema.kind() == TaskKind::Regression) return {r.mean, "rmse", false};
    return {r.mean, "roc_auc", true};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NothingEvaluable) throw;
    return {batch_loss(model, valid), "valid_loss", false};
  }
}

}  // namespace

TrainResult train(const Hyperparams& config, std::span<const DatasetRecord> train_set,
                  std::span<const DatasetRecord> valid_set, const TaskSchema& schema,
                  const TrainObserver& observer) {
  config.validate();
  schema.validate();
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  if (valid_set.empty()) throw Error(ErrorKind::EmptyDataset, "validation set is empty");
  auto say = [&](const std::string& msg) {
    if (observer.on_message) observer.on_message(msg);
  };

  const auto train_smiles = smiles_of(train_set);
  Hyperparams cfg = config;
  if (cfg.max_len == 0) cfg.max_len = default_max_len(train_smiles);
  BilstmModel model = BilstmModel::initialize(Vocabulary::build(train_smiles), schema.kind(),
                                              schema.task_names(), cfg);
  if (schema.kind() == TaskKind::Regression) {
    // Start the output bias at the mean training target.
    double sum = 0.0;
    for (const auto& r : train_set) sum += r.labels.at(0);
    model.params.head_b[0] = sum / static_cast<double>(train_set.size());
  }

  std::vector<Example> train_ex, valid_ex;
  std::size_t truncated = 0;
  for (const auto& r : train_set) {
    train_ex.push_back(make_example(model, r));
    truncated += train_ex.back().seq.truncated;
  }
  for (const auto& r : valid_set) {
    valid_ex.push_back(make_example(model, r));
    truncated += valid_ex.back().seq.truncated;
  }
  if (truncated > 0)
    say("warning: " + std::to_string(truncated) + " SMILES longer than max_len=" +
        std::to_string(cfg.max_len) + " were truncated");

  Rng shuffle_rng = Rng::derive(cfg.seed, 0x73687566);  // "shuf"
  Rng dropout_rng = Rng::derive(cfg.seed, 0x64726f70);  // "drop"
  AdamState adam = AdamState::zeros_like(model.params, cfg.beta1, cfg.beta2, cfg.adam_epsilon);

  TrainHistory history;
  ParamTensors best_params = model.params;
  double best_score = 0.0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_ex.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t loss_entries = 0;
    std::vector<Example> batch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        Example ex = train_ex[order[k]];
        if (cfg.dropout_rate > 0.0)
          ex.dropout_mask = make_dropout_mask(dropout_rng, 2 * cfg.units, cfg.dropout_rate);
        batch.push_back(std::move(ex));
      }
      auto diverged = [&] {
        return Error(ErrorKind::NonFiniteLoss,
                     "non-finite loss or gradient at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(start / cfg.batch_size + 1) + " (learning_rate=" +
                         detail::format_shortest(cfg.learning_rate) + "); try a smaller learning rate");
      };
      LossAndGrad lg;
      try {
        lg = backward(model, batch);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NonFiniteLoss) throw diverged();
        throw;
      }
      if (!std::isfinite(global_norm(lg.grads))) throw diverged();
      if (lg.entries == 0) continue;
      if (cfg.clip_norm > 0.0) clip_global_norm(lg.grads, cfg.clip_norm);
      adam_step(model.params, lg.grads, adam, cfg.learning_rate);
      loss_sum += lg.loss * static_cast<double>(lg.entries);
      loss_entries += lg.entries;
    }

    const double train_loss = loss_entries ? loss_sum / static_cast<double>(loss_entries) : 0.0;
    const ValidationScore vs = score_validation(model, valid_ex, valid_set, schema);
    if (!std::isfinite(train_loss) || !std::isfinite(vs.value))
      throw Error(ErrorKind::NonFiniteLoss, "non-finite metric after epoch " + std::to_string(epoch));
    if (history.epochs.empty()) {
      history.metric_name = vs.name;
      history.higher_is_better = vs.higher_is_better;
    }
    const EpochRecord rec{epoch, train_loss, vs.value};
    history.epochs.push_back(rec);
    if (observer.on_epoch) observer.on_epoch(rec);

    const bool improved = epoch == 1 || (vs.higher_is_better ? vs.value > best_score : vs.value < best_score);
    if (improved) {
      best_score = vs.value;
      best_params = model.params;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      say("early stop after epoch " + std::to_string(epoch) + " (best epoch " +
          std::to_string(history.best_epoch) + ")");
      break;
    }
  }

  if (history.epochs.empty()) history.best_epoch = 0;
  else model.params = std::move(best_params);
  return {std::move(model), std::move(history)};
}

GradCheckFixture make_gradcheck_fixture(const GradCheckSpec& spec) {
  if (spec.vocab_size < 3) throw Error(ErrorKind::InvalidArgument, "gradcheck vocabulary needs >= 3 entries");
  if (spec.max_len == 0 || spec.batch_size == 0 || spec.n_tasks == 0)
    throw Error(ErrorKind::InvalidArgument, "gradcheck sizes must be positive");

  static constexpr std::string_view kAlphabet = "CNO()=c1#[]@+-SPFIlBrs23456789";
  if (spec.vocab_size - 2 > kAlphabet.size()) throw Error(ErrorKind::InvalidArgument, "gradcheck vocabulary too large");
  Vocabulary vocab = Vocabulary::from_chars(kAlphabet.substr(0, spec.vocab_size - 2));

  Hyperparams cfg;
  cfg.units = spec.units;
  cfg.embed_dim = spec.embed_dim;
  cfg.max_len = spec.max_len;
  cfg.seed = spec.seed;
  cfg.dropout_rate = spec.dropout ? spec.dropout_rate : 0.0;
  std::vector<std::string> names;
  for (std::size_t t = 0; t < spec.n_tasks; ++t) names.push_back("task" + std::to_string(t));
  GradCheckFixture fx{BilstmModel::initialize(std::move(vocab), spec.kind, std::move(names), cfg), {}};

  Rng rng = Rng::derive(spec.seed, 0x67726164);  // "grad"
  auto& p = fx.model.params;
  for (LstmParams* cell : {&p.forward_cell, &p.backward_cell})
    for (Vector* b : {&cell->b_f, &cell->b_i, &cell->b_o, &cell->b_c})
      for (double& v : *b) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.head_b) v = rng.uniform(-0.5, 0.5);

  for (std::size_t n = 0; n < spec.batch_size; ++n) {
    Example ex;
    const std::size_t len = 1 + static_cast<std::size_t>(rng.below(spec.max_len));
    ex.seq.tokens.assign(spec.max_len, Vocabulary::kPad);
    ex.seq.true_length = len;
    for (std::size_t k = 0; k < len; ++k)
      ex.seq.tokens[k] = static_cast<Token>(1 + rng.below(spec.vocab_size - 1));
    for (std::size_t t = 0; t < spec.n_tasks; ++t) {
      ex.labels.push_back(spec.kind == TaskKind::Classification ? static_cast<double>(rng.below(2))
                                                                : rng.uniform(-2.0, 2.0));
      ex.mask.push_back(1);
    }
    if (spec.dropout) ex.dropout_mask = make_dropout_mask(rng, 2 * spec.units, spec.dropout_rate);
    fx.batch.push_back(std::move(ex));
  }
  return fx;
}

}  // namespace toxseq
