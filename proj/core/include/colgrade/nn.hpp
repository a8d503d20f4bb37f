#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "colgrade/errors.hpp"
#include "colgrade/rng.hpp"
#include "colgrade/volume.hpp"

// Minimal differentiable-network engine: just the pieces the Q-network, the
// denoising auto-encoder and the grading CNN need. Templated on the scalar
// so production runs at float while gradient checks run at double.
namespace colgrade::nn {

template <class T>
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};  // (channels, z, y, x); x fastest
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::array<int, 4> s, T fill = T(0))
      : shape(s),
        data(static_cast<std::size_t>(s[0]) * s[1] * s[2] * s[3], fill) {}

  static Tensor vec(int n, T fill = T(0)) { return Tensor({n, 1, 1, 1}, fill); }

  std::size_t size() const { return data.size(); }

  T& at(int c, int z, int y, int x) {
    return data[((static_cast<std::size_t>(c) * shape[1] + z) * shape[2] + y) *
                    shape[3] +
                x];
  }
  T at(int c, int z, int y, int x) const {
    return data[((static_cast<std::size_t>(c) * shape[1] + z) * shape[2] + y) *
                    shape[3] +
                x];
  }
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  // Accumulates parameter gradients (until zero_grad) and returns the
  // gradient with respect to the layer input.
  virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
  virtual void collect(std::vector<std::vector<T>*>& params,
                       std::vector<std::vector<T>*>& grads) {}
  virtual void init(Rng&) {}
  virtual std::uint32_t kind() const = 0;
  virtual std::vector<std::uint32_t> meta() const = 0;
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

// Layer kind tags for the checkpoint container.
inline constexpr std::uint32_t kConv3d = 1, kTConv3d = 2, kDense = 3,
                               kFlatten = 4, kTanh = 5, kSigmoid = 6,
                               kSoftmax = 7;

namespace detail {

inline int conv_out_dim(int n, int k, int s, int p) {
  if (n + 2 * p < k) throw ShapeError("conv3d: input smaller than kernel");
  return (n + 2 * p - k) / s + 1;
}

template <class T>
void glorot(std::vector<T>& w, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace detail

// Valid cross-correlation with symmetric zero padding. pad = k/2 with
// stride 2 halves even input sizes exactly (64 -> 32 -> 16 -> 8 -> 4).
template <class T>
class Conv3d : public Layer<T> {
 public:
  Conv3d(int in_ch, int out_ch, int k, int stride, int pad)
      : in_(in_ch), out_(out_ch), k_(k), s_(stride), p_(pad),
        w_(static_cast<std::size_t>(out_ch) * in_ch * k * k * k),
        b_(out_ch), gw_(w_.size()), gb_(b_.size()) {
    if (in_ch < 1 || out_ch < 1 || k < 1 || stride < 1 || pad < 0)
      throw ShapeError("conv3d: bad construction");
  }

  void init(Rng& rng) override {
    detail::glorot(w_, in_ * k_ * k_ * k_, out_ * k_ * k_ * k_, rng);
    std::fill(b_.begin(), b_.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (x.shape[0] != in_) throw ShapeError("conv3d: channel mismatch");
    x_ = x;
    const int nz = x.shape[1], ny = x.shape[2], nx = x.shape[3];
    const int oz = detail::conv_out_dim(nz, k_, s_, p_);
    const int oy = detail::conv_out_dim(ny, k_, s_, p_);
    const int ox = detail::conv_out_dim(nx, k_, s_, p_);
    Tensor<T> y({out_, oz, oy, ox});
    for (int co = 0; co < out_; ++co) {
      for (int z = 0; z < oz; ++z)
        for (int yy = 0; yy < oy; ++yy)
          for (int xx = 0; xx < ox; ++xx) {
            T acc = b_[co];
            for (int ci = 0; ci < in_; ++ci)
              for (int dz = 0; dz < k_; ++dz) {
                const int iz = z * s_ + dz - p_;
                if (iz < 0 || iz >= nz) continue;
                for (int dy = 0; dy < k_; ++dy) {
                  const int iy = yy * s_ + dy - p_;
                  if (iy < 0 || iy >= ny) continue;
                  const T* wrow = &w_[weight_index(co, ci, dz, dy, 0)];
                  for (int dx = 0; dx < k_; ++dx) {
                    const int ix = xx * s_ + dx - p_;
                    if (ix < 0 || ix >= nx) continue;
                    acc += wrow[dx] * x.at(ci, iz, iy, ix);
                  }
                }
              }
            y.at(co, z, yy, xx) = acc;
          }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const int nz = x_.shape[1], ny = x_.shape[2], nx = x_.shape[3];
    Tensor<T> gx(x_.shape);
    for (int co = 0; co < out_; ++co) {
      for (int z = 0; z < gy.shape[1]; ++z)
        for (int yy = 0; yy < gy.shape[2]; ++yy)
          for (int xx = 0; xx < gy.shape[3]; ++xx) {
            const T g = gy.at(co, z, yy, xx);
            gb_[co] += g;
            for (int ci = 0; ci < in_; ++ci)
              for (int dz = 0; dz < k_; ++dz) {
                const int iz = z * s_ + dz - p_;
                if (iz < 0 || iz >= nz) continue;
                for (int dy = 0; dy < k_; ++dy) {
                  const int iy = yy * s_ + dy - p_;
                  if (iy < 0 || iy >= ny) continue;
                  for (int dx = 0; dx < k_; ++dx) {
                    const int ix = xx * s_ + dx - p_;
                    if (ix < 0 || ix >= nx) continue;
                    gw_[weight_index(co, ci, dz, dy, dx)] +=
                        g * x_.at(ci, iz, iy, ix);
                    gx.at(ci, iz, iy, ix) +=
                        g * w_[weight_index(co, ci, dz, dy, dx)];
                  }
                }
              }
          }
    }
    return gx;
  }

  void collect(std::vector<std::vector<T>*>& params,
               std::vector<std::vector<T>*>& grads) override {
    params.push_back(&w_);
    params.push_back(&b_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
  }

  std::uint32_t kind() const override { return kConv3d; }
  std::vector<std::uint32_t> meta() const override {
    return {static_cast<std::uint32_t>(in_), static_cast<std::uint32_t>(out_),
            static_cast<std::uint32_t>(k_), static_cast<std::uint32_t>(s_),
            static_cast<std::uint32_t>(p_)};
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Conv3d>(*this);
  }

  std::vector<T>& weights() { return w_; }
  std::vector<T>& bias() { return b_; }

 private:
  std::size_t weight_index(int co, int ci, int dz, int dy, int dx) const {
    return (((static_cast<std::size_t>(co) * in_ + ci) * k_ + dz) * k_ + dy) *
               k_ +
           dx;
  }

  int in_, out_, k_, s_, p_;
  std::vector<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

// Structural adjoint of Conv3d with the same kernel/stride/padding; output
// spatial size is fixed at stride * input size, so stride 2 doubles 8 -> 16.
// Weight layout (in_ch, out_ch, k, k, k) mirrors the virtual forward
// convolution that maps our output back to our input.
template <class T>
class TConv3d : public Layer<T> {
 public:
  TConv3d(int in_ch, int out_ch, int k, int stride, int pad)
      : in_(in_ch), out_(out_ch), k_(k), s_(stride), p_(pad),
        w_(static_cast<std::size_t>(in_ch) * out_ch * k * k * k),
        b_(out_ch), gw_(w_.size()), gb_(b_.size()) {
    if (in_ch < 1 || out_ch < 1 || k < 1 || stride < 1 || pad < 0)
      throw ShapeError("tconv3d: bad construction");
  }

  void init(Rng& rng) override {
    detail::glorot(w_, in_ * k_ * k_ * k_, out_ * k_ * k_ * k_, rng);
    std::fill(b_.begin(), b_.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (x.shape[0] != in_) throw ShapeError("tconv3d: channel mismatch");
    x_ = x;
    const int nz = x.shape[1], ny = x.shape[2], nx = x.shape[3];
    const int Nz = nz * s_, Ny = ny * s_, Nx = nx * s_;
    // The virtual conv (N, k, s, p) must land back on (nz, ny, nx).
    if (detail::conv_out_dim(Nz, k_, s_, p_) != nz ||
        detail::conv_out_dim(Ny, k_, s_, p_) != ny ||
        detail::conv_out_dim(Nx, k_, s_, p_) != nx)
      throw ShapeError("tconv3d: geometry does not invert");
    Tensor<T> y({out_, Nz, Ny, Nx});
    for (int j = 0; j < in_; ++j) {
      for (int z = 0; z < nz; ++z)
        for (int yy = 0; yy < ny; ++yy)
          for (int xx = 0; xx < nx; ++xx) {
            const T v = x.at(j, z, yy, xx);
            if (v == T(0)) continue;
            for (int m = 0; m < out_; ++m)
              for (int dz = 0; dz < k_; ++dz) {
                const int iz = z * s_ + dz - p_;
                if (iz < 0 || iz >= Nz) continue;
                for (int dy = 0; dy < k_; ++dy) {
                  const int iy = yy * s_ + dy - p_;
                  if (iy < 0 || iy >= Ny) continue;
                  for (int dx = 0; dx < k_; ++dx) {
                    const int ix = xx * s_ + dx - p_;
                    if (ix < 0 || ix >= Nx) continue;
                    y.at(m, iz, iy, ix) +=
                        v * w_[weight_index(j, m, dz, dy, dx)];
                  }
                }
              }
          }
    }
    for (int m = 0; m < out_; ++m)
      for (int z = 0; z < Nz; ++z)
        for (int yy = 0; yy < Ny; ++yy)
          for (int xx = 0; xx < Nx; ++xx) y.at(m, z, yy, xx) += b_[m];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const int nz = x_.shape[1], ny = x_.shape[2], nx = x_.shape[3];
    const int Nz = gy.shape[1], Ny = gy.shape[2], Nx = gy.shape[3];
    Tensor<T> gx(x_.shape);
    for (int m = 0; m < out_; ++m) {
      T acc = T(0);
      for (int z = 0; z < Nz; ++z)
        for (int yy = 0; yy < Ny; ++yy)
          for (int xx = 0; xx < Nx; ++xx) acc += gy.at(m, z, yy, xx);
      gb_[m] += acc;
    }
    for (int j = 0; j < in_; ++j) {
      for (int z = 0; z < nz; ++z)
        for (int yy = 0; yy < ny; ++yy)
          for (int xx = 0; xx < nx; ++xx) {
            const T xv = x_.at(j, z, yy, xx);
            T acc = T(0);
            for (int m = 0; m < out_; ++m)
              for (int dz = 0; dz < k_; ++dz) {
                const int iz = z * s_ + dz - p_;
                if (iz < 0 || iz >= Nz) continue;
                for (int dy = 0; dy < k_; ++dy) {
                  const int iy = yy * s_ + dy - p_;
                  if (iy < 0 || iy >= Ny) continue;
                  for (int dx = 0; dx < k_; ++dx) {
                    const int ix = xx * s_ + dx - p_;
                    if (ix < 0 || ix >= Nx) continue;
                    const T g = gy.at(m, iz, iy, ix);
                    acc += g * w_[weight_index(j, m, dz, dy, dx)];
                    gw_[weight_index(j, m, dz, dy, dx)] += g * xv;
                  }
                }
              }
            gx.at(j, z, yy, xx) = acc;
          }
    }
    return gx;
  }

  void collect(std::vector<std::vector<T>*>& params,
               std::vector<std::vector<T>*>& grads) override {
    params.push_back(&w_);
    params.push_back(&b_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
  }

  std::uint32_t kind() const override { return kTConv3d; }
  std::vector<std::uint32_t> meta() const override {
    return {static_cast<std::uint32_t>(in_), static_cast<std::uint32_t>(out_),
            static_cast<std::uint32_t>(k_), static_cast<std::uint32_t>(s_),
            static_cast<std::uint32_t>(p_)};
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<TConv3d>(*this);
  }

  std::vector<T>& weights() { return w_; }
  std::vector<T>& bias() { return b_; }

 private:
  std::size_t weight_index(int j, int m, int dz, int dy, int dx) const {
    return (((static_cast<std::size_t>(j) * out_ + m) * k_ + dz) * k_ + dy) *
               k_ +
           dx;
  }

  int in_, out_, k_, s_, p_;
  std::vector<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

template <class T>
class Dense : public Layer<T> {
 public:
  Dense(int in, int out)
      : in_(in), out_(out), w_(static_cast<std::size_t>(in) * out), b_(out),
        gw_(w_.size()), gb_(b_.size()) {
    if (in < 1 || out < 1) throw ShapeError("dense: bad construction");
  }

  void init(Rng& rng) override {
    detail::glorot(w_, in_, out_, rng);
    std::fill(b_.begin(), b_.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (static_cast<int>(x.size()) != in_)
      throw ShapeError("dense: input size mismatch");
    x_ = x;
    Tensor<T> y = Tensor<T>::vec(out_);
    for (int o = 0; o < out_; ++o) {
      T acc = b_[o];
      const T* row = &w_[static_cast<std::size_t>(o) * in_];
      for (int i = 0; i < in_; ++i) acc += row[i] * x.data[i];
      y.data[o] = acc;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(x_.shape);
    for (int o = 0; o < out_; ++o) {
      const T g = gy.data[o];
      gb_[o] += g;
      T* grow = &gw_[static_cast<std::size_t>(o) * in_];
      const T* row = &w_[static_cast<std::size_t>(o) * in_];
      for (int i = 0; i < in_; ++i) {
        grow[i] += g * x_.data[i];
        gx.data[i] += g * row[i];
      }
    }
    return gx;
  }

  void collect(std::vector<std::vector<T>*>& params,
               std::vector<std::vector<T>*>& grads) override {
    params.push_back(&w_);
    params.push_back(&b_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
  }

  std::uint32_t kind() const override { return kDense; }
  std::vector<std::uint32_t> meta() const override {
    return {static_cast<std::uint32_t>(in_), static_cast<std::uint32_t>(out_)};
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Dense>(*this);
  }

  std::vector<T>& weights() { return w_; }
  std::vector<T>& bias() { return b_; }

 private:
  int in_, out_;
  std::vector<T> w_, b_, gw_, gb_;
  Tensor<T> x_;
};

template <class T>
class Flatten : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    shape_ = x.shape;
    Tensor<T> y = x;
    y.shape = {static_cast<int>(x.size()), 1, 1, 1};
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    gx.shape = shape_;
    return gx;
  }
  std::uint32_t kind() const override { return kFlatten; }
  std::vector<std::uint32_t> meta() const override { return {}; }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Flatten>(*this);
  }

 private:
  std::array<int, 4> shape_{};
};

template <class T>
class Tanh : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    y_ = x;
    for (auto& v : y_.data) v = std::tanh(v);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data[i] *= T(1) - y_.data[i] * y_.data[i];
    return gx;
  }
  std::uint32_t kind() const override { return kTanh; }
  std::vector<std::uint32_t> meta() const override { return {}; }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Tanh>(*this);
  }

 private:
  Tensor<T> y_;
};

template <class T>
class Sigmoid : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    y_ = x;
    for (auto& v : y_.data) v = T(1) / (T(1) + std::exp(-v));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data[i] *= y_.data[i] * (T(1) - y_.data[i]);
    return gx;
  }
  std::uint32_t kind() const override { return kSigmoid; }
  std::vector<std::uint32_t> meta() const override { return {}; }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Sigmoid>(*this);
  }

 private:
  Tensor<T> y_;
};

template <class T>
class Softmax : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    y_ = x;
    T mx = y_.data[0];
    for (T v : y_.data) mx = std::max(mx, v);
    T sum = T(0);
    for (auto& v : y_.data) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : y_.data) v /= sum;
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    T dot = T(0);
    for (std::size_t i = 0; i < gy.size(); ++i) dot += gy.data[i] * y_.data[i];
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data[i] = y_.data[i] * (gy.data[i] - dot);
    return gx;
  }
  std::uint32_t kind() const override { return kSoftmax; }
  std::vector<std::uint32_t> meta() const override { return {}; }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Softmax>(*this);
  }

 private:
  Tensor<T> y_;
};

template <class T>
class Network {
 public:
  Network() = default;
  Network(const Network& other) { *this = other; }
  Network& operator=(const Network& other) {
    layers_.clear();
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
    return *this;
  }
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  template <class L, class... Args>
  L& add(Args&&... args) {
    auto l = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *l;
    layers_.push_back(std::move(l));
    return ref;
  }
  void add_layer(std::unique_ptr<Layer<T>> l) { layers_.push_back(std::move(l)); }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      g = (*it)->backward(g);
    return g;
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l->init(rng);
  }
  void zero_grad() {
    std::vector<std::vector<T>*> p, g;
    collect(p, g);
    for (auto* gv : g) std::fill(gv->begin(), gv->end(), T(0));
  }
  void collect(std::vector<std::vector<T>*>& params,
               std::vector<std::vector<T>*>& grads) {
    for (auto& l : layers_) l->collect(params, grads);
  }
  std::size_t param_count() {
    std::vector<std::vector<T>*> p, g;
    collect(p, g);
    std::size_t n = 0;
    for (auto* pv : p) n += pv->size();
    return n;
  }

  std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer<T>>>& layers() const {
    return layers_;
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

struct SgdConfig {
  double lr = 0.001;
  double decay = 1e-6;
  double momentum = 0.9;
};

// v <- momentum*v - lr_t*g, w <- w + v, with the inverse-time schedule
// lr_t = lr / (1 + decay*t). t counts completed updates.
template <class T>
class Sgd {
 public:
  explicit Sgd(SgdConfig cfg = {}) : cfg_(cfg) {
    if (!(cfg.lr > 0)) throw ConfigError("sgd: lr must be > 0");
    if (cfg.momentum < 0 || cfg.momentum >= 1)
      throw ConfigError("sgd: momentum must be in [0,1)");
  }

  void step(Network<T>& net) {
    std::vector<std::vector<T>*> p, g;
    net.collect(p, g);
    if (vel_.empty()) {
      vel_.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) vel_[i].resize(p[i]->size());
    }
    const T lr_t = static_cast<T>(cfg_.lr / (1.0 + cfg_.decay * t_));
    const T m = static_cast<T>(cfg_.momentum);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto& w = *p[i];
      auto& gr = *g[i];
      auto& v = vel_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = m * v[j] - lr_t * gr[j];
        w[j] += v[j];
      }
    }
    ++t_;
  }

  long iterations() const { return t_; }
  double current_lr() const { return cfg_.lr / (1.0 + cfg_.decay * t_); }

 private:
  SgdConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<T>> vel_;
};

// Mean squared error over all elements: loss = mean((pred - target)^2).
template <class T>
std::pair<T, Tensor<T>> mse_loss(const Tensor<T>& pred,
                                 const Tensor<T>& target) {
  if (pred.size() != target.size()) throw ShapeError("mse: size mismatch");
  const T n = static_cast<T>(pred.size());
  Tensor<T> grad(pred.shape);
  T loss = T(0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred.data[i] - target.data[i];
    loss += d * d;
    grad.data[i] = T(2) * d / n;
  }
  return {loss / n, grad};
}

// -w_label * log(pred[label]) on one probability vector.
template <class T>
std::pair<T, Tensor<T>> weighted_cce(const Tensor<T>& pred, int label,
                                     const std::vector<T>& class_weights) {
  if (label < 0 || label >= static_cast<int>(pred.size()) ||
      pred.size() != class_weights.size())
    throw ShapeError("cce: label/weight out of range");
  T sum = T(0);
  for (T v : pred.data) {
    if (v < T(-1e-4) || v > T(1) + T(1e-4))
      throw DomainError("cce: prediction is not a probability vector");
    sum += v;
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-3)
    throw DomainError("cce: prediction is not a probability vector");
  const T w = class_weights[label];
  const T p = std::max(pred.data[label], static_cast<T>(1e-12));
  Tensor<T> grad(pred.shape);
  grad.data[label] = -w / p;
  return {-w * std::log(p), grad};
}

// Binary cross-entropy on a single sigmoid output.
template <class T>
std::pair<T, Tensor<T>> weighted_bce(const Tensor<T>& pred, int label,
                                     const std::array<T, 2>& class_weights) {
  if (pred.size() != 1 || (label != 0 && label != 1))
    throw ShapeError("bce: expects one probability and a binary label");
  const T p = std::min(std::max(pred.data[0], static_cast<T>(1e-12)),
                       static_cast<T>(1) - static_cast<T>(1e-12));
  const T w = class_weights[label];
  Tensor<T> grad(pred.shape);
  if (label == 1) {
    grad.data[0] = -w / p;
    return {-w * std::log(p), grad};
  }
  grad.data[0] = w / (T(1) - p);
  return {-w * std::log(T(1) - p), grad};
}

// Cube channels are already stored per channel, x fastest, so they map
// straight onto the (c, z, y, x) tensor layout.
template <class T>
Tensor<T> from_cube(const Cube& cube) {
  const int e = cube.edge;
  Tensor<T> t({static_cast<int>(cube.channels.size()), e, e, e});
  std::size_t w = 0;
  for (const auto& ch : cube.channels) {
    if (ch.size() != cube.voxels_per_channel())
      throw ShapeError("from_cube: channel size does not match edge");
    for (float v : ch) t.data[w++] = static_cast<T>(v);
  }
  return t;
}

// QNET1 checkpoint container, shared by every network in the project.
void save_network(const Network<float>& net, const std::string& path);
Network<float> load_network(const std::string& path);
std::string network_to_bytes(const Network<float>& net);
Network<float> network_from_bytes(const std::string& bytes, std::size_t& off);

}  // namespace colgrade::nn
