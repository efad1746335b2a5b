#ifndef STABLEREC_LEARNED_HPP
#define STABLEREC_LEARNED_HPP

#include "stablerec/reconstruct.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stablerec {

enum class TrainMode { NN, ReNN, StNN, StReNN };

const char* to_string(TrainMode mode);
/// Accepts the exact names; throws ParameterError otherwise.
TrainMode parse_train_mode(const std::string& name);

struct DatasetProvenance {
  double target_noise_delta = 0.0;
  double input_noise_delta = 0.0;
  int k = 0;          // 0 when no stabilizer is applied
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

struct DatasetPairs {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
  TrainMode mode = TrainMode::NN;
  DatasetProvenance provenance;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// Pairs for one training mode. With target noise delta > 0 every sample gets
/// one draw e_i shared by the input data A x_i + e_i and the Tikhonov target.
/// Input noise (independent draws) perturbs only the inputs, before phi_k.
/// `tikhonov` is required for every mode except NN.
DatasetPairs build_dataset(std::span<const Vector> signals, const OperatorPtr& op, TrainMode mode,
                           const TikhonovConfig* tikhonov, int stabilizer_k, double input_noise_delta,
                           double target_noise_delta, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// A parameterized map R^n -> R^n on an image grid.
class Model {
public:
  Model(Shape shape, Vector parameters);
  virtual ~Model() = default;

  virtual std::string family() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
  /// Channel widths for the checkpoint header (empty when not applicable).
  virtual std::vector<std::uint32_t> channels() const { return {}; }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim() const noexcept { return shape_.size(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  const Vector& parameters() const noexcept { return params_; }
  /// Replaces all parameters (count must match) and re-projects.
  void set_parameters(Vector params);
  Vector& mutable_parameters() noexcept { return params_; }

  Vector forward(std::span<const double> y) const;
  /// Adds d(loss)/d(params) to `grad_params` given d(loss)/d(output).
  void backward(std::span<const double> y, std::span<const double> grad_output, std::span<double> grad_params) const;
  /// Restores parameter constraints after an update (no-op by default).
  virtual void project() {}

protected:
  virtual Vector forward_impl(std::span<const double> y) const = 0;
  virtual void backward_impl(std::span<const double> y, std::span<const double> grad_output,
                             std::span<double> grad_params) const = 0;

  Shape shape_;
  Vector params_;
};

/// Per-frequency complex gains; parameters are [Re g_0..Re g_{n-1}, Im g_0..Im g_{n-1}].
/// forward(y) = Re(ifft2(g ⊙ fft2(y))).
class LinearFourierFilter final : public Model {
public:
  explicit LinearFourierFilter(const Shape& shape, Complex initial_gain = 1.0);
  LinearFourierFilter(const Shape& shape, std::span<const Complex> gains);

  std::string family() const override { return "linear_fourier_filter"; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<LinearFourierFilter>(*this); }

  Complex gain(std::size_t frequency) const;
  ComplexVector gains() const;
  /// g_f <- (g_f + conj(g_{-f})) / 2.
  void project() override;

protected:
  Vector forward_impl(std::span<const double> y) const override;
  void backward_impl(std::span<const double> y, std::span<const double> grad_output,
                     std::span<double> grad_params) const override;
};

/// 3x3 periodic convolutions with ReLU between layers and an optional input skip.
class ConvNetModel final : public Model {
public:
  /// Random He-style initialization from `seed`; the last layer is scaled down
  /// so the residual network starts near the identity.
  ConvNetModel(const Shape& shape, std::vector<std::uint32_t> channels = {1, 8, 8, 1}, bool residual = true,
               std::uint64_t seed = 0);

  std::string family() const override { return "convnet"; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<ConvNetModel>(*this); }
  std::vector<std::uint32_t> channels() const override { return channels_; }
  bool residual() const noexcept { return residual_; }

  std::size_t layer_count() const noexcept { return channels_.size() - 1; }
  /// Offset of layer l's weights [c_out][c_in][3][3] in the parameter vector; biases follow.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;

  static std::size_t count_parameters(const std::vector<std::uint32_t>& channels);

protected:
  Vector forward_impl(std::span<const double> y) const override;
  void backward_impl(std::span<const double> y, std::span<const double> grad_output,
                     std::span<double> grad_params) const override;

private:
  // Pre-activations of every layer for one input.
  std::vector<Vector> run(std::span<const double> y) const;

  std::vector<std::uint32_t> channels_;
  bool residual_;
  std::vector<std::size_t> offsets_;
};

// ---------------------------------------------------------------------------
// Loss and training
// ---------------------------------------------------------------------------

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Mean over the selected pairs of ||model(input) - target||^2 / n, with its
/// analytic gradient. Empty `indices` means the whole dataset.
LossAndGradient loss_and_gradients(const Model& model, const DatasetPairs& data,
                                   std::span<const std::size_t> indices = {}, long batch_index = -1);

/// Central finite differences of the same loss (step 1e-5 * max(1, |theta|)).
Vector finite_difference_gradient(const Model& model, const DatasetPairs& data,
                                  std::span<const std::size_t> indices = {}, double relative_step = 1e-5);

enum class OptimizerKind { Adam, SGD };

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-4;
  int batch_size = 8;
  OptimizerKind optimizer = OptimizerKind::Adam;
  /// Fresh N(0, delta^2) noise added to every input in every epoch.
  double noise_injection_delta = 0.0;
  /// Recorded for provenance; target noise is applied by build_dataset.
  double noisy_target_delta = 0.0;
  std::uint64_t seed = 0;
  /// Learning-rate multiplier reached at the final step (exponential schedule; 1 = constant).
  double lr_decay = 1.0;
  /// Epochs after which parameters are saved; epoch 0 and the last epoch are always kept.
  std::vector<int> checkpoint_epochs;
  bool shuffle = true;
};

void validate(const TrainConfig& config);

struct Checkpoint {
  int epoch = 0;
  Vector parameters;
};

struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<Checkpoint> checkpoints;
  Vector loss_curve; // mean loss per epoch
};

TrainResult train(const Model& initial, const DatasetPairs& data, const TrainConfig& config);

/// Copy of `model` with the checkpoint's parameters.
std::unique_ptr<Model> restore(const Model& model, const Checkpoint& checkpoint);

void write_loss_curve_csv(const Vector& loss_curve, std::ostream& out);

// ---------------------------------------------------------------------------
// Checkpoint files and reconstructor wrapping
// ---------------------------------------------------------------------------

/// Binary container: magic, family, shape, channels, then little-endian f64 parameters.
void save_model(const Model& model, const std::string& path);
std::unique_ptr<Model> load_model(const std::string& path);

class ModelReconstructor final : public Reconstructor {
public:
  explicit ModelReconstructor(std::shared_ptr<const Model> model, std::string model_path = {});

  std::size_t input_dim() const override { return model_->dim(); }
  std::size_t output_dim() const override { return model_->dim(); }
  ReconstructorKind kind() const override { return ReconstructorKind::Learned; }
  nlohmann::json describe() const override;

  const Model& model() const noexcept { return *model_; }

protected:
  Vector evaluate(std::span<const double> y) const override { return model_->forward(y); }

private:
  std::shared_ptr<const Model> model_;
  std::string path_;
};

/// The bare model, or model ∘ stabilizer when one is given.
ReconstructorPtr as_reconstructor(std::shared_ptr<const Model> model, ReconstructorPtr stabilizer = nullptr);

} // namespace stablerec

#endif
