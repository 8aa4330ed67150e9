#pragma once

// Dense layers with hand-written backward passes. Activations are stored
// feature-major: one column per sample.

#include "artval/core.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace artval::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Mode { train, eval };

// Trainable tensor with its gradient and Adam moments.
template <class S>
struct Param {
  std::string name;
  Mat<S> value, grad, m, v;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Mat<S>::Zero(rows, cols)),
        grad(Mat<S>::Zero(rows, cols)),
        m(Mat<S>::Zero(rows, cols)),
        v(Mat<S>::Zero(rows, cols)) {}
};

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;  // required for dropout in train mode
};

template <class S>
void init_uniform(Mat<S>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>((2.0 * uniform01(rng) - 1.0) * bound);
}

template <class S>
class Affine {
 public:
  Affine() = default;
  Affine(int in, int out, Rng& rng) : weight_("weight", out, in), bias_("bias", out, 1) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    init_uniform(weight_.value, bound, rng);
    init_uniform(bias_.value, bound, rng);
  }

  static constexpr const char* kind() { return "affine"; }
  Eigen::Index in_dim() const { return weight_.value.cols(); }
  Eigen::Index out_dim() const { return weight_.value.rows(); }

  Mat<S> forward(const Mat<S>& x, const ForwardContext&) {
    input_ = x;
    Mat<S> y = weight_.value * x;
    y.colwise() += bias_.value.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    weight_.grad.noalias() += dy * input_.transpose();
    bias_.grad.col(0) += dy.rowwise().sum();
    return weight_.value.transpose() * dy;
  }

  std::vector<Param<S>*> params() { return {&weight_, &bias_}; }
  std::vector<Mat<S>*> buffers() { return {}; }

  Param<S>& weight() { return weight_; }
  Param<S>& bias() { return bias_; }

 private:
  Param<S> weight_, bias_;
  Mat<S> input_;
};

template <class S>
class ReLU {
 public:
  explicit ReLU(int dim = 0) : dim_(dim) {}
  static constexpr const char* kind() { return "relu"; }
  Eigen::Index in_dim() const { return dim_; }
  Eigen::Index out_dim() const { return dim_; }

  Mat<S> forward(const Mat<S>& x, const ForwardContext&) {
    output_ = x.cwiseMax(S(0));
    return output_;
  }
  Mat<S> backward(const Mat<S>& dy) {
    return (output_.array() > S(0)).select(dy, S(0));
  }
  std::vector<Param<S>*> params() { return {}; }
  std::vector<Mat<S>*> buffers() { return {}; }

 private:
  int dim_;
  Mat<S> output_;
};

template <class S>
class Sigmoid {
 public:
  explicit Sigmoid(int dim = 0) : dim_(dim) {}
  static constexpr const char* kind() { return "sigmoid"; }
  Eigen::Index in_dim() const { return dim_; }
  Eigen::Index out_dim() const { return dim_; }

  Mat<S> forward(const Mat<S>& x, const ForwardContext&) {
    output_ = x.unaryExpr([](S z) {
      return z >= S(0) ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
    });
    return output_;
  }
  Mat<S> backward(const Mat<S>& dy) {
    return dy.cwiseProduct(output_.cwiseProduct((S(1) - output_.array()).matrix()));
  }
  std::vector<Param<S>*> params() { return {}; }
  std::vector<Mat<S>*> buffers() { return {}; }

 private:
  int dim_;
  Mat<S> output_;
};

// Inverted dropout: scaled by 1/(1-p) at train time, identity at eval time.
template <class S>
class Dropout {
 public:
  explicit Dropout(int dim = 0, double p = 0.0) : dim_(dim), p_(p) {
    require(p >= 0 && p < 1, ErrorKind::invalid_argument, "dropout: p must be in [0,1)");
  }
  static constexpr const char* kind() { return "dropout"; }
  Eigen::Index in_dim() const { return dim_; }
  Eigen::Index out_dim() const { return dim_; }
  double p() const { return p_; }

  Mat<S> forward(const Mat<S>& x, const ForwardContext& ctx) {
    if (ctx.mode == Mode::eval || p_ == 0.0) {
      mask_.resize(0, 0);
      return x;
    }
    require(ctx.rng != nullptr, ErrorKind::invalid_argument, "dropout: train mode needs an rng");
    mask_.resize(x.rows(), x.cols());
    const S keep_scale = static_cast<S>(1.0 / (1.0 - p_));
    for (Eigen::Index i = 0; i < mask_.size(); ++i)
      mask_.data()[i] = uniform01(*ctx.rng) < p_ ? S(0) : keep_scale;
    return x.cwiseProduct(mask_);
  }
  Mat<S> backward(const Mat<S>& dy) {
    if (mask_.size() == 0) return dy;
    return dy.cwiseProduct(mask_);
  }
  std::vector<Param<S>*> params() { return {}; }
  std::vector<Mat<S>*> buffers() { return {}; }

 private:
  int dim_;
  double p_;
  Mat<S> mask_;
};

template <class S>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int dim, double momentum = 0.1, double eps = 1e-5)
      : gamma_("gamma", dim, 1),
        beta_("beta", dim, 1),
        running_mean_(Mat<S>::Zero(dim, 1)),
        running_var_(Mat<S>::Ones(dim, 1)),
        momentum_(momentum),
        eps_(eps) {
    gamma_.value.setOnes();
  }
  static constexpr const char* kind() { return "batchnorm"; }
  Eigen::Index in_dim() const { return gamma_.value.rows(); }
  Eigen::Index out_dim() const { return gamma_.value.rows(); }

  Mat<S> forward(const Mat<S>& x, const ForwardContext& ctx) {
    const Eigen::Index batch = x.cols();
    if (ctx.mode == Mode::train) {
      require(batch >= 2, ErrorKind::invalid_argument, "batchnorm: train mode needs batch >= 2");
      const Vec<S> mu = x.rowwise().mean();
      Mat<S> centered = x.colwise() - mu;
      const Vec<S> var = centered.array().square().rowwise().mean();
      inv_std_ = (var.array() + static_cast<S>(eps_)).rsqrt();
      xhat_ = centered.array().colwise() * inv_std_.array();
      const S m = static_cast<S>(momentum_);
      const S unbias = static_cast<S>(static_cast<double>(batch) / static_cast<double>(batch - 1));
      running_mean_.col(0) = (S(1) - m) * running_mean_.col(0) + m * mu;
      running_var_.col(0) = (S(1) - m) * running_var_.col(0) + m * unbias * var;
    } else {
      inv_std_ = (running_var_.col(0).array() + static_cast<S>(eps_)).rsqrt();
      xhat_ = (x.colwise() - running_mean_.col(0)).array().colwise() * inv_std_.array();
    }
    train_mode_ = ctx.mode == Mode::train;
    Mat<S> y = xhat_.array().colwise() * gamma_.value.col(0).array();
    y.colwise() += beta_.value.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    gamma_.grad.col(0) += dy.cwiseProduct(xhat_).rowwise().sum();
    beta_.grad.col(0) += dy.rowwise().sum();
    const Mat<S> dxhat = dy.array().colwise() * gamma_.value.col(0).array();
    if (!train_mode_) return dxhat.array().colwise() * inv_std_.array();
    const S b = static_cast<S>(dy.cols());
    const Vec<S> sum_dxhat = dxhat.rowwise().sum();
    const Vec<S> sum_dxhat_xhat = dxhat.cwiseProduct(xhat_).rowwise().sum();
    Mat<S> dx = (b * dxhat.array()).matrix();
    dx.colwise() -= sum_dxhat;
    dx -= (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().colwise() * (inv_std_.array() / b)).matrix();
  }

  std::vector<Param<S>*> params() { return {&gamma_, &beta_}; }
  std::vector<Mat<S>*> buffers() { return {&running_mean_, &running_var_}; }
  const Mat<S>& running_mean() const { return running_mean_; }
  const Mat<S>& running_var() const { return running_var_; }

 private:
  Param<S> gamma_, beta_;
  Mat<S> running_mean_, running_var_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Mat<S> xhat_;
  Vec<S> inv_std_;
  bool train_mode_ = false;
};

// Normalizes each sample across its features.
template <class S>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int dim, double eps = 1e-5) : gamma_("gamma", dim, 1), beta_("beta", dim, 1), eps_(eps) {
    gamma_.value.setOnes();
  }
  static constexpr const char* kind() { return "layernorm"; }
  Eigen::Index in_dim() const { return gamma_.value.rows(); }
  Eigen::Index out_dim() const { return gamma_.value.rows(); }

  Mat<S> forward(const Mat<S>& x, const ForwardContext&) {
    const Eigen::RowVectorX<S> mu = x.colwise().mean();
    Mat<S> centered = x.rowwise() - mu;
    const Eigen::RowVectorX<S> var = centered.array().square().colwise().mean();
    inv_std_ = (var.array() + static_cast<S>(eps_)).rsqrt();
    xhat_ = centered.array().rowwise() * inv_std_.array();
    Mat<S> y = xhat_.array().colwise() * gamma_.value.col(0).array();
    y.colwise() += beta_.value.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    gamma_.grad.col(0) += dy.cwiseProduct(xhat_).rowwise().sum();
    beta_.grad.col(0) += dy.rowwise().sum();
    const Mat<S> dxhat = dy.array().colwise() * gamma_.value.col(0).array();
    const S d = static_cast<S>(dy.rows());
    const Eigen::RowVectorX<S> sum_dxhat = dxhat.colwise().sum();
    const Eigen::RowVectorX<S> sum_dxhat_xhat = dxhat.cwiseProduct(xhat_).colwise().sum();
    Mat<S> dx = (d * dxhat.array()).matrix();
    dx.rowwise() -= sum_dxhat;
    dx -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().rowwise() * (inv_std_.array() / d)).matrix();
  }

  std::vector<Param<S>*> params() { return {&gamma_, &beta_}; }
  std::vector<Mat<S>*> buffers() { return {}; }

 private:
  Param<S> gamma_, beta_;
  double eps_ = 1e-5;
  Mat<S> xhat_;
  Eigen::RowVectorX<S> inv_std_;
};

template <class S>
using Layer = std::variant<Affine<S>, ReLU<S>, BatchNorm<S>, LayerNorm<S>, Dropout<S>, Sigmoid<S>>;

template <class S>
class LayerStack {
 public:
  LayerStack() = default;
  explicit LayerStack(std::string name) : name_(std::move(name)) {}

  template <class L>
  LayerStack& add(L layer) {
    if (!layers_.empty()) {
      const auto prev = out_dim();
      if (prev != layer.in_dim())
        fail(ErrorKind::invalid_argument, name_ + ": layer " + std::to_string(layers_.size()) + " (" +
                                              L::kind() + ") expects input " +
                                              std::to_string(layer.in_dim()) + ", previous output is " +
                                              std::to_string(prev));
    }
    layers_.emplace_back(std::move(layer));
    return *this;
  }

  Eigen::Index in_dim() const {
    return layers_.empty() ? 0 : std::visit([](const auto& l) { return l.in_dim(); }, layers_.front());
  }
  Eigen::Index out_dim() const {
    return layers_.empty() ? 0 : std::visit([](const auto& l) { return l.out_dim(); }, layers_.back());
  }

  Mat<S> forward(const Mat<S>& x, const ForwardContext& ctx) {
    if (!layers_.empty() && x.rows() != in_dim())
      fail(ErrorKind::invalid_argument, name_ + ": input has " + std::to_string(x.rows()) +
                                            " features, layer 0 expects " + std::to_string(in_dim()));
    Mat<S> h = x;
    outputs_finite_.assign(layers_.size(), true);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      h = std::visit([&](auto& l) { return l.forward(h, ctx); }, layers_[k]);
      outputs_finite_[k] = h.allFinite();
    }
    return h;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;)
      g = std::visit([&](auto& l) { return l.backward(g); }, layers_[k]);
    return g;
  }

  // Name of the first layer whose last forward output was non-finite.
  std::optional<std::string> first_nonfinite_layer() const {
    for (std::size_t k = 0; k < outputs_finite_.size(); ++k)
      if (!outputs_finite_[k])
        return name_ + "[" + std::to_string(k) + "]:" + layer_kind(k);
    return std::nullopt;
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto& l : layers_) {
      auto p = std::visit([](auto& x) { return x.params(); }, l);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::vector<Mat<S>*> buffers() {
    std::vector<Mat<S>*> out;
    for (auto& l : layers_) {
      auto b = std::visit([](auto& x) { return x.buffers(); }, l);
      out.insert(out.end(), b.begin(), b.end());
    }
    return out;
  }

  std::size_t size() const { return layers_.size(); }
  std::string layer_kind(std::size_t k) const {
    return std::visit([](const auto& l) { return std::string(std::decay_t<decltype(l)>::kind()); }, layers_[k]);
  }
  Layer<S>& layer(std::size_t k) { return layers_[k]; }
  const std::string& name() const { return name_; }

 private:
  std::string name_ = "stack";
  std::vector<Layer<S>> layers_;
  std::vector<bool> outputs_finite_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam step with bias correction; `step` is 1-based.
template <class S>
void adam_update(const std::vector<Param<S>*>& params, const AdamOptions& opt, long step) {
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
  const S b1 = static_cast<S>(opt.beta1), b2 = static_cast<S>(opt.beta2);
  const S lr = static_cast<S>(opt.learning_rate / c1);
  const S inv_c2 = static_cast<S>(1.0 / c2);
  const S eps = static_cast<S>(opt.eps);
  for (auto* p : params) {
    p->m = b1 * p->m + (S(1) - b1) * p->grad;
    p->v = b2 * p->v + (S(1) - b2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * p->m.array() / ((p->v.array() * inv_c2).sqrt() + eps);
  }
}

template <class S>
void zero_grad(const std::vector<Param<S>*>& params) {
  for (auto* p : params) p->grad.setZero();
}

}  // namespace artval::nn
