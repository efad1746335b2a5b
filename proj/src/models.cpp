#include "stablerec/learned.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

namespace stablerec {

// ---------------------------------------------------------------------------
// Model base
// ---------------------------------------------------------------------------

Model::Model(Shape shape, Vector parameters) : shape_(shape), params_(std::move(parameters)) { validate_shape(shape_); }

void Model::set_parameters(Vector params) {
  if (params.size() != params_.size())
    throw ShapeError("set_parameters: expected " + std::to_string(params_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  params_ = std::move(params);
  project();
}

Vector Model::forward(std::span<const double> y) const {
  require_size(y, dim(), "model input");
  return forward_impl(y);
}

void Model::backward(std::span<const double> y, std::span<const double> grad_output,
                     std::span<double> grad_params) const {
  require_size(y, dim(), "model input");
  require_size(grad_output, dim(), "model output gradient");
  if (grad_params.size() != params_.size()) throw ShapeError("backward: gradient buffer has the wrong length");
  backward_impl(y, grad_output, grad_params);
}

// ---------------------------------------------------------------------------
// LinearFourierFilter
// ---------------------------------------------------------------------------

LinearFourierFilter::LinearFourierFilter(const Shape& shape, Complex initial_gain) : Model(shape, {}) {
  require_fft_shape(shape);
  const std::size_t n = shape.size();
  params_.assign(2 * n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    params_[f] = initial_gain.real();
    params_[n + f] = initial_gain.imag();
  }
  project();
}

LinearFourierFilter::LinearFourierFilter(const Shape& shape, std::span<const Complex> gains) : Model(shape, {}) {
  require_fft_shape(shape);
  const std::size_t n = shape.size();
  if (gains.size() != n) throw ShapeError("LinearFourierFilter: one gain per frequency required");
  params_.assign(2 * n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    params_[f] = gains[f].real();
    params_[n + f] = gains[f].imag();
  }
  project();
}

Complex LinearFourierFilter::gain(std::size_t frequency) const {
  return {params_[frequency], params_[dim() + frequency]};
}

ComplexVector LinearFourierFilter::gains() const {
  ComplexVector g(dim());
  for (std::size_t f = 0; f < g.size(); ++f) g[f] = gain(f);
  return g;
}

void LinearFourierFilter::project() {
  const std::size_t n = dim();
  Vector next = params_;
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t m = mirror_index(f, shape_);
    next[f] = 0.5 * (params_[f] + params_[m]);
    next[n + f] = 0.5 * (params_[n + f] - params_[n + m]);
  }
  params_ = std::move(next);
}

Vector LinearFourierFilter::forward_impl(std::span<const double> y) const {
  ComplexVector spectrum = fft2(y, shape_);
  for (std::size_t f = 0; f < spectrum.size(); ++f) spectrum[f] *= gain(f);
  return ifft2_real(spectrum, shape_);
}

void LinearFourierFilter::backward_impl(std::span<const double> y, std::span<const double> grad_output,
                                        std::span<double> grad_params) const {
  // out_p = Re((1/n) sum_f g_f yhat_f e^{+i theta_f p}); with w = dL/dout real,
  // sum_p w_p e^{+i theta_f p} = conj(what_f).
  const std::size_t n = dim();
  const ComplexVector yhat = fft2(y, shape_);
  const ComplexVector what = fft2(grad_output, shape_);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t f = 0; f < n; ++f) {
    const Complex z = yhat[f] * std::conj(what[f]);
    grad_params[f] += z.real() * inv_n;
    grad_params[n + f] -= z.imag() * inv_n;
  }
}

// ---------------------------------------------------------------------------
// ConvNetModel
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kTaps = 9;

// neighbors[k * n + p]: index of pixel p shifted by tap k (dr, dc in {-1,0,1}), periodic.
std::vector<std::size_t> neighbor_table(const Shape& shape) {
  const std::size_t h = shape.height, w = shape.width, n = shape.size();
  std::vector<std::size_t> table(kTaps * n);
  for (std::size_t k = 0; k < kTaps; ++k) {
    const long dr = static_cast<long>(k / 3) - 1, dc = static_cast<long>(k % 3) - 1;
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t rr = static_cast<std::size_t>((static_cast<long>(r) + dr + static_cast<long>(h)) % static_cast<long>(h));
        const std::size_t cc = static_cast<std::size_t>((static_cast<long>(c) + dc + static_cast<long>(w)) % static_cast<long>(w));
        table[k * n + r * w + c] = rr * w + cc;
      }
  }
  return table;
}

} // namespace

std::size_t ConvNetModel::count_parameters(const std::vector<std::uint32_t>& channels) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < channels.size(); ++l)
    total += static_cast<std::size_t>(channels[l + 1]) * channels[l] * kTaps + channels[l + 1];
  return total;
}

ConvNetModel::ConvNetModel(const Shape& shape, std::vector<std::uint32_t> channels, bool residual,
                           std::uint64_t seed)
    : Model(shape, {}), channels_(std::move(channels)), residual_(residual) {
  if (channels_.size() < 2) throw ParameterError("ConvNetModel: need at least two channel widths");
  for (std::uint32_t c : channels_)
    if (c == 0) throw ParameterError("ConvNetModel: channel widths must be positive");
  if (channels_.front() != 1 || channels_.back() != 1)
    throw ParameterError("ConvNetModel: input and output must have one channel");

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < channels_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(channels_[l + 1]) * channels_[l] * kTaps + channels_[l + 1];
  }
  params_.assign(offset, 0.0);

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double fan_in = static_cast<double>(channels_[l] * kTaps);
    double stddev = std::sqrt(2.0 / fan_in);
    if (l + 1 == layer_count()) stddev *= 0.1;
    const std::size_t count = static_cast<std::size_t>(channels_[l + 1]) * channels_[l] * kTaps;
    for (std::size_t i = 0; i < count; ++i) params_[offsets_[l] + i] = stddev * normal(gen);
  }
}

std::size_t ConvNetModel::bias_offset(std::size_t layer) const {
  return offsets_[layer] + static_cast<std::size_t>(channels_[layer + 1]) * channels_[layer] * kTaps;
}

std::vector<Vector> ConvNetModel::run(std::span<const double> y) const {
  const std::size_t n = dim();
  const std::vector<std::size_t> nb = neighbor_table(shape_);
  std::vector<Vector> pre;
  Vector act(y.begin(), y.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t cin = channels_[l], cout = channels_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = params_.data() + bias_offset(l);
    Vector z(cout * n);
    for (std::size_t co = 0; co < cout; ++co) {
      double* zc = z.data() + co * n;
      for (std::size_t p = 0; p < n; ++p) zc[p] = b[co];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* ac = act.data() + ci * n;
        const double* wk = w + (co * cin + ci) * kTaps;
        for (std::size_t k = 0; k < kTaps; ++k) {
          const double wt = wk[k];
          if (wt == 0.0) continue;
          const std::size_t* idx = nb.data() + k * n;
          for (std::size_t p = 0; p < n; ++p) zc[p] += wt * ac[idx[p]];
        }
      }
    }
    if (l + 1 < layer_count()) {
      act = z;
      for (double& v : act) v = v > 0.0 ? v : 0.0;
    }
    pre.push_back(std::move(z));
  }
  return pre;
}

Vector ConvNetModel::forward_impl(std::span<const double> y) const {
  std::vector<Vector> pre = run(y);
  Vector out = std::move(pre.back());
  if (residual_) axpy(1.0, y, out);
  return out;
}

void ConvNetModel::backward_impl(std::span<const double> y, std::span<const double> grad_output,
                                 std::span<double> grad_params) const {
  const std::size_t n = dim();
  const std::vector<std::size_t> nb = neighbor_table(shape_);
  const std::vector<Vector> pre = run(y);

  Vector g(grad_output.begin(), grad_output.end()); // d loss / d z_l
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t cin = channels_[l], cout = channels_[l + 1];
    Vector act;
    if (l == 0) {
      act.assign(y.begin(), y.end());
    } else {
      act = pre[l - 1];
      for (double& v : act) v = v > 0.0 ? v : 0.0;
    }
    const double* w = params_.data() + offsets_[l];
    double* gw = grad_params.data() + offsets_[l];
    double* gb = grad_params.data() + bias_offset(l);
    Vector gact(cin * n, 0.0);
    for (std::size_t co = 0; co < cout; ++co) {
      const double* gc = g.data() + co * n;
      double bsum = 0.0;
      for (std::size_t p = 0; p < n; ++p) bsum += gc[p];
      gb[co] += bsum;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* ac = act.data() + ci * n;
        double* gac = gact.data() + ci * n;
        const std::size_t base = (co * cin + ci) * kTaps;
        for (std::size_t k = 0; k < kTaps; ++k) {
          const std::size_t* idx = nb.data() + k * n;
          double s = 0.0;
          for (std::size_t p = 0; p < n; ++p) s += gc[p] * ac[idx[p]];
          gw[base + k] += s;
          const double wt = w[base + k];
          if (l > 0 && wt != 0.0)
            for (std::size_t p = 0; p < n; ++p) gac[idx[p]] += wt * gc[p];
        }
      }
    }
    if (l > 0) {
      const Vector& z = pre[l - 1];
      for (std::size_t i = 0; i < gact.size(); ++i) gact[i] = z[i] > 0.0 ? gact[i] : 0.0;
      g = std::move(gact);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint files
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'R', 'E', 'C', 'M', 'D', 'L', '1'};

template <typename T> void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double value) { put_le(buf, std::bit_cast<std::uint64_t>(value)); }

class Reader {
public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T> T get() {
    need(sizeof(T), "integer field");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t count) {
    need(count, "byte field");
    std::string out = data_.substr(pos_, count);
    pos_ += count;
    return out;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t count, const char* what) {
    if (data_.size() - pos_ < count) throw ParseError(std::string("model file truncated in ") + what, pos_);
  }
  std::string data_;
  std::size_t pos_ = 0;
};

} // namespace

void save_model(const Model& model, const std::string& path) {
  std::string buf(kMagic, sizeof(kMagic));
  const std::string family = model.family();
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(family.size()));
  buf += family;
  put_le<std::uint64_t>(buf, model.shape().height);
  put_le<std::uint64_t>(buf, model.shape().width);
  const std::vector<std::uint32_t> channels = model.channels();
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(channels.size()));
  for (std::uint32_t c : channels) put_le<std::uint32_t>(buf, c);
  const auto* conv = dynamic_cast<const ConvNetModel*>(&model);
  buf.push_back(conv && conv->residual() ? 1 : 0);
  put_le<std::uint64_t>(buf, model.parameter_count());
  for (double v : model.parameters()) put_f64(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::unique_ptr<Model> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  if (r.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw ParseError("bad model magic", 0);
  const auto family_len = r.get<std::uint32_t>();
  if (family_len > 256) throw ParseError("implausible family name length", r.pos());
  const std::string family = r.get_bytes(family_len);
  const Shape shape{r.get<std::uint64_t>(), r.get<std::uint64_t>()};
  const auto nchan = r.get<std::uint32_t>();
  if (nchan > 1024) throw ParseError("implausible channel count", r.pos());
  std::vector<std::uint32_t> channels(nchan);
  for (auto& c : channels) c = r.get<std::uint32_t>();
  const bool residual = r.get_bytes(1)[0] != 0;
  const std::size_t count_pos = r.pos();
  const auto count = r.get<std::uint64_t>();

  std::unique_ptr<Model> model;
  if (family == "linear_fourier_filter") {
    model = std::make_unique<LinearFourierFilter>(shape);
  } else if (family == "convnet") {
    model = std::make_unique<ConvNetModel>(shape, channels, residual, 0);
  } else {
    throw ParseError("unknown model family '" + family + "'", sizeof(kMagic) + 4);
  }
  if (count != model->parameter_count()) throw ParseError("parameter count does not match the header", count_pos);
  Vector params(count);
  for (double& v : params) v = r.get_f64();
  if (!r.done()) throw ParseError("trailing bytes after parameters", r.pos());
  // Raw assignment: the stored parameters are already projected.
  model->mutable_parameters() = std::move(params);
  return model;
}

// ---------------------------------------------------------------------------
// Reconstructor wrapping
// ---------------------------------------------------------------------------

ModelReconstructor::ModelReconstructor(std::shared_ptr<const Model> model, std::string model_path)
    : model_(std::move(model)), path_(std::move(model_path)) {
  if (!model_) throw ParameterError("ModelReconstructor: null model");
}

nlohmann::json ModelReconstructor::describe() const {
  return {{"kind", "Learned"}, {"family", model_->family()}, {"model_path", path_}};
}

ReconstructorPtr as_reconstructor(std::shared_ptr<const Model> model, ReconstructorPtr stabilizer) {
  auto bare = std::make_shared<ModelReconstructor>(std::move(model));
  if (!stabilizer) return bare;
  return compose(bare, std::move(stabilizer));
}

} // namespace stablerec
