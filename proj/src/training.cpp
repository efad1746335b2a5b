#include "stablerec/learned.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace stablerec {

const char* to_string(TrainMode mode) {
  switch (mode) {
  case TrainMode::NN: return "NN";
  case TrainMode::ReNN: return "ReNN";
  case TrainMode::StNN: return "StNN";
  case TrainMode::StReNN: return "StReNN";
  }
  return "Unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  for (TrainMode m : {TrainMode::NN, TrainMode::ReNN, TrainMode::StNN, TrainMode::StReNN})
    if (name == to_string(m)) return m;
  throw ParameterError("unknown training mode '" + name + "' (expected NN, ReNN, StNN or StReNN)");
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

DatasetPairs build_dataset(std::span<const Vector> signals, const OperatorPtr& op, TrainMode mode,
                           const TikhonovConfig* tikhonov, int stabilizer_k, double input_noise_delta,
                           double target_noise_delta, std::uint64_t seed) {
  if (signals.empty()) throw ParameterError("build_dataset: no signals");
  if (!op) throw ParameterError("build_dataset: null operator");
  if (input_noise_delta < 0.0 || target_noise_delta < 0.0) throw ParameterError("build_dataset: negative noise level");
  const bool stabilized = mode == TrainMode::StNN || mode == TrainMode::StReNN;
  const bool regularized_target = mode == TrainMode::ReNN || mode == TrainMode::StReNN;
  if ((stabilized || regularized_target) && !tikhonov)
    throw ParameterError(std::string("build_dataset: mode ") + to_string(mode) + " needs a Tikhonov configuration");
  if (stabilized && stabilizer_k < 1) throw ParameterError("build_dataset: stabilizer k must be at least 1");

  std::shared_ptr<Tikhonov> is;
  std::shared_ptr<Stabilizer> phi;
  if (regularized_target) is = stablerec::tikhonov(op, *tikhonov);
  if (stabilized) phi = stablerec::stabilizer(op, StabilizerSpec{stabilizer_k, *tikhonov});

  DatasetPairs data;
  data.mode = mode;
  data.provenance = {target_noise_delta, input_noise_delta, stabilized ? stabilizer_k : 0,
                     tikhonov ? tikhonov->lambda : 0.0, seed};
  for (std::size_t i = 0; i < signals.size(); ++i) {
    require_size(signals[i], op->cols(), "build_dataset signal");
    Vector y = op->apply(signals[i]);
    if (target_noise_delta > 0.0) axpy(1.0, gaussian_vector(y.size(), target_noise_delta, derive_seed(seed, i, 0)), y);

    Vector target = regularized_target ? is->reconstruct(y) : signals[i];
    Vector input = y;
    if (input_noise_delta > 0.0)
      axpy(1.0, gaussian_vector(y.size(), input_noise_delta, derive_seed(seed, i, 1)), input);
    if (stabilized) input = phi->reconstruct(input);
    data.inputs.push_back(std::move(input));
    data.targets.push_back(std::move(target));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> resolve_indices(const DatasetPairs& data, std::span<const std::size_t> indices) {
  if (data.inputs.empty() || data.inputs.size() != data.targets.size())
    throw ParameterError("dataset must hold a non-empty, equal number of inputs and targets");
  std::vector<std::size_t> out(indices.begin(), indices.end());
  if (out.empty()) {
    out.resize(data.size());
    std::iota(out.begin(), out.end(), 0);
  }
  for (std::size_t i : out)
    if (i >= data.size()) throw ParameterError("batch index out of range");
  return out;
}

double batch_loss(const Model& model, const std::vector<Vector>& inputs, const DatasetPairs& data,
                  const std::vector<std::size_t>& idx) {
  double loss = 0.0;
  for (std::size_t i : idx) {
    const Vector out = model.forward(inputs[i]);
    loss += squared_norm(subtract(out, data.targets[i])) / static_cast<double>(model.dim());
  }
  return loss / static_cast<double>(idx.size());
}

LossAndGradient loss_and_gradients_on(const Model& model, const std::vector<Vector>& inputs,
                                      const DatasetPairs& data, const std::vector<std::size_t>& idx,
                                      long batch_index) {
  LossAndGradient out;
  out.gradient.assign(model.parameter_count(), 0.0);
  const double n = static_cast<double>(model.dim());
  const double scale = 2.0 / (n * static_cast<double>(idx.size()));
  for (std::size_t i : idx) {
    require_size(data.targets[i], model.dim(), "target");
    const Vector output = model.forward(inputs[i]);
    Vector residual = subtract(output, data.targets[i]);
    out.loss += squared_norm(residual) / n;
    for (double& v : residual) v *= scale;
    model.backward(inputs[i], residual, out.gradient);
  }
  out.loss /= static_cast<double>(idx.size());
  if (!std::isfinite(out.loss)) throw NumericalError("loss is not finite", batch_index);
  return out;
}

} // namespace

LossAndGradient loss_and_gradients(const Model& model, const DatasetPairs& data, std::span<const std::size_t> indices,
                                   long batch_index) {
  const std::vector<std::size_t> idx = resolve_indices(data, indices);
  return loss_and_gradients_on(model, data.inputs, data, idx, batch_index);
}

Vector finite_difference_gradient(const Model& model, const DatasetPairs& data, std::span<const std::size_t> indices,
                                  double relative_step) {
  const std::vector<std::size_t> idx = resolve_indices(data, indices);
  std::unique_ptr<Model> probe = model.clone();
  Vector grad(model.parameter_count());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const double theta = model.parameters()[j];
    const double h = relative_step * std::max(1.0, std::abs(theta));
    // Raw parameter edits (no projection) so each coordinate moves independently.
    probe->mutable_parameters()[j] = theta + h;
    const double plus = batch_loss(*probe, data.inputs, data, idx);
    probe->mutable_parameters()[j] = theta - h;
    const double minus = batch_loss(*probe, data.inputs, data, idx);
    probe->mutable_parameters()[j] = theta;
    grad[j] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void validate(const TrainConfig& config) {
  if (config.epochs < 0) throw ParameterError("epochs must be non-negative");
  if (!(config.learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (config.batch_size < 1) throw ParameterError("batch_size must be positive");
  if (config.noise_injection_delta < 0.0 || config.noisy_target_delta < 0.0)
    throw ParameterError("noise levels must be non-negative");
  if (!(config.lr_decay > 0.0) || config.lr_decay > 1.0) throw ParameterError("lr_decay must be in (0, 1]");
}

TrainResult train(const Model& initial, const DatasetPairs& data, const TrainConfig& config) {
  validate(config);
  const std::vector<std::size_t> all = resolve_indices(data, {});
  for (const Vector& in : data.inputs) require_size(in, initial.dim(), "training input");

  TrainResult result;
  result.model = initial.clone();
  Model& model = *result.model;
  result.checkpoints.push_back({0, model.parameters()});

  const std::size_t count = data.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), count);
  const std::size_t batches_per_epoch = (count + batch - 1) / batch;
  const double total_steps = static_cast<double>(batches_per_epoch) * std::max(1, config.epochs);

  const std::size_t p = model.parameter_count();
  Vector m(p, 0.0), v(p, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  std::vector<Vector> inputs = data.inputs;
  std::vector<std::size_t> order = all;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.noise_injection_delta > 0.0) {
      for (std::size_t i = 0; i < count; ++i) {
        inputs[i] = data.inputs[i];
        axpy(1.0,
             gaussian_vector(inputs[i].size(), config.noise_injection_delta,
                             derive_seed(config.seed, static_cast<std::uint64_t>(epoch), i)),
             inputs[i]);
      }
    }
    if (config.shuffle) {
      std::mt19937_64 gen(derive_seed(config.seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(epoch)));
      // Fisher-Yates with an explicit modulo draw so the permutation does not
      // depend on the standard library's distribution implementation.
      for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[gen() % i]);
    }

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t begin = b * batch, end = std::min(count, begin + batch);
      const std::vector<std::size_t> idx(order.begin() + static_cast<long>(begin), order.begin() + static_cast<long>(end));
      LossAndGradient lg;
      try {
        lg = loss_and_gradients_on(model, inputs, data, idx, static_cast<long>(b));
      } catch (const NumericalError&) {
        throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch), epoch);
      }
      epoch_loss += lg.loss * static_cast<double>(idx.size());

      ++step;
      const double lr =
          config.learning_rate * std::pow(config.lr_decay, static_cast<double>(step - 1) / std::max(1.0, total_steps - 1));
      Vector& theta = model.mutable_parameters();
      if (config.optimizer == OptimizerKind::SGD) {
        for (std::size_t j = 0; j < p; ++j) theta[j] -= lr * lg.gradient[j];
      } else {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t j = 0; j < p; ++j) {
          const double g = lg.gradient[j];
          m[j] = beta1 * m[j] + (1.0 - beta1) * g;
          v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
          theta[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + adam_eps);
        }
      }
      model.project();
      if (!all_finite(model.parameters()))
        throw TrainingDivergedError("parameters became non-finite at epoch " + std::to_string(epoch), epoch);
    }
    epoch_loss /= static_cast<double>(count);
    if (!std::isfinite(epoch_loss))
      throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch), epoch);
    result.loss_curve.push_back(epoch_loss);

    const bool requested =
        std::find(config.checkpoint_epochs.begin(), config.checkpoint_epochs.end(), epoch) != config.checkpoint_epochs.end();
    if (requested || epoch == config.epochs) result.checkpoints.push_back({epoch, model.parameters()});
  }
  return result;
}

std::unique_ptr<Model> restore(const Model& model, const Checkpoint& checkpoint) {
  std::unique_ptr<Model> out = model.clone();
  if (checkpoint.parameters.size() != out->parameter_count()) throw ShapeError("checkpoint does not match the model");
  out->mutable_parameters() = checkpoint.parameters;
  return out;
}

void write_loss_curve_csv(const Vector& loss_curve, std::ostream& out) {
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < loss_curve.size(); ++i) out << (i + 1) << ',' << format_number(loss_curve[i]) << '\n';
}

} // namespace stablerec
