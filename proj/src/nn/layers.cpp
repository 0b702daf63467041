// Copyright 2026 The Coughnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coughnet/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coughnet::nn {

namespace {

// He-uniform: U(-b, b) with b = sqrt(6 / fan_in).
void he_uniform(Tensor& t, Index fan_in, Rng& rng) {
  const double b = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-b, b);
  for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng);
}

void require_rank(const Tensor& t, Index rank, std::string_view who) {
  if (t.rank() != rank) {
    throw Error(ErrorKind::shape, std::string(who) + " expects rank " + std::to_string(rank) +
                                      ", got " + to_string(t.shape()));
  }
}

void require_same_shape(const Shape& expected, const Tensor& got, std::string_view who) {
  if (got.shape() != expected) {
    throw Error(ErrorKind::shape, std::string(who) + " gradient shape " + to_string(got.shape()) +
                                      " != " + to_string(expected));
  }
}

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::relu: return "relu";
    case LayerKind::gap: return "global_avg_pool";
    case LayerKind::gmp: return "global_max_pool";
    case LayerKind::maxpool: return "maxpool2d";
    case LayerKind::residual_block: return "residual_block";
    case LayerKind::concat: return "parallel_concat";
    case LayerKind::softmax: return "softmax";
    case LayerKind::standardize: return "standardize";
    case LayerKind::sequential: return "sequential";
  }
  return "unknown";
}

std::vector<ParamRef> Layer::params(const std::string& prefix) {
  std::vector<ParamRef> out;
  collect_params(prefix, out);
  return out;
}

std::vector<StateRef> Layer::state(const std::string& prefix) {
  std::vector<StateRef> out;
  collect_state(prefix, out);
  return out;
}

Index Layer::parameter_count() {
  Index n = 0;
  for (const auto& p : params()) n += p.value->size();
  return n;
}

void Layer::require_forward(bool has_cache) const {
  if (!has_cache) {
    throw Error(ErrorKind::protocol,
                std::string(to_string(kind())) + ": backward called before forward");
  }
}

// ---------------------------------------------------------------- Dense

Dense::Dense(Index in_features, Index out_features, Rng& rng)
    : weight_({out_features, in_features}),
      bias_({out_features}),
      weight_grad_({out_features, in_features}),
      bias_grad_({out_features}) {
  if (in_features <= 0 || out_features <= 0) {
    throw Error(ErrorKind::parameter, "dense layer needs positive sizes");
  }
  he_uniform(weight_, in_features, rng);
}

Tensor Dense::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 2, "dense");
  if (input.dim(1) != in_features()) {
    throw Error(ErrorKind::shape, "dense expects " + std::to_string(in_features()) +
                                      " features, got " + to_string(input.shape()));
  }
  input_ = input;
  cached_ = true;
  Tensor out({input.dim(0), out_features()});
  out.matrix().noalias() = input.matrix() * weight_.matrix().transpose();
  out.matrix().rowwise() += bias_.data().transpose();
  return out;
}

Tensor Dense::backward(const Tensor& upstream) {
  require_forward(cached_);
  require_same_shape({input_.dim(0), out_features()}, upstream, "dense");
  weight_grad_.matrix().noalias() = upstream.matrix().transpose() * input_.matrix();
  bias_grad_.data() = upstream.matrix().colwise().sum().transpose();
  Tensor dx(input_.shape());
  dx.matrix().noalias() = upstream.matrix() * weight_.matrix();
  return dx;
}

void Dense::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({join(prefix, "weight"), &weight_, &weight_grad_});
  out.push_back({join(prefix, "bias"), &bias_, &bias_grad_});
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(Index in_channels, Index out_channels, Conv2dOptions options, Rng& rng)
    : options_(options), in_channels_(in_channels), out_channels_(out_channels) {
  if (in_channels <= 0 || out_channels <= 0 || options.kernel <= 0 || options.stride <= 0 ||
      options.padding < 0) {
    throw Error(ErrorKind::parameter, "invalid conv2d geometry");
  }
  const Index k = options.kernel;
  weight_ = Tensor({out_channels, in_channels, k, k});
  weight_grad_ = Tensor(weight_.shape());
  he_uniform(weight_, in_channels * k * k, rng);
  if (options.bias) {
    bias_ = Tensor({out_channels});
    bias_grad_ = Tensor({out_channels});
  }
}

Tensor Conv2d::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 4, "conv2d");
  if (input.dim(1) != in_channels_) {
    throw Error(ErrorKind::shape, "conv2d expects " + std::to_string(in_channels_) +
                                      " channels, got " + to_string(input.shape()));
  }
  const Index n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const Index k = options_.kernel, s = options_.stride, p = options_.padding;
  out_h_ = (h + 2 * p - k) / s + 1;
  out_w_ = (w + 2 * p - k) / s + 1;
  if (h + 2 * p < k || w + 2 * p < k || out_h_ <= 0 || out_w_ <= 0) {
    throw Error(ErrorKind::shape, "conv2d input " + to_string(input.shape()) +
                                      " smaller than kernel");
  }
  const Index plane = out_h_ * out_w_;
  const Index cols = n * plane;
  columns_.setZero(in_channels_ * k * k, cols);
  const Scalar* x = input.ptr();
  for (Index c = 0; c < in_channels_; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* row = columns_.row((c * k + ky) * k + kx).data();
        for (Index b = 0; b < n; ++b) {
          const Scalar* src = x + (b * in_channels_ + c) * h * w;
          Scalar* dst = row + b * plane;
          for (Index oy = 0; oy < out_h_; ++oy) {
            const Index iy = oy * s - p + ky;
            if (iy < 0 || iy >= h) continue;
            for (Index ox = 0; ox < out_w_; ++ox) {
              const Index ix = ox * s - p + kx;
              if (ix >= 0 && ix < w) dst[oy * out_w_ + ox] = src[iy * w + ix];
            }
          }
        }
      }
    }
  }
  input_shape_ = input.shape();
  cached_ = true;

  const ConstMatrixMap wmat(weight_.ptr(), out_channels_, in_channels_ * k * k);
  RowMatrix y = wmat * columns_;
  if (options_.bias) y.colwise() += bias_.data();
  Tensor out({n, out_channels_, out_h_, out_w_});
  for (Index b = 0; b < n; ++b) {
    MatrixMap(out.ptr() + b * out_channels_ * plane, out_channels_, plane) =
        y.middleCols(b * plane, plane);
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& upstream) {
  require_forward(cached_);
  const Index n = input_shape_[0], h = input_shape_[2], w = input_shape_[3];
  require_same_shape({n, out_channels_, out_h_, out_w_}, upstream, "conv2d");
  const Index k = options_.kernel, s = options_.stride, p = options_.padding;
  const Index plane = out_h_ * out_w_;

  RowMatrix dy(out_channels_, n * plane);
  for (Index b = 0; b < n; ++b) {
    dy.middleCols(b * plane, plane) =
        ConstMatrixMap(upstream.ptr() + b * out_channels_ * plane, out_channels_, plane);
  }
  MatrixMap(weight_grad_.ptr(), out_channels_, in_channels_ * k * k).noalias() =
      dy * columns_.transpose();
  if (options_.bias) bias_grad_.data() = dy.rowwise().sum();

  const ConstMatrixMap wmat(weight_.ptr(), out_channels_, in_channels_ * k * k);
  RowMatrix dcols = wmat.transpose() * dy;
  Tensor dx(input_shape_);
  Scalar* g = dx.ptr();
  for (Index c = 0; c < in_channels_; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* row = dcols.row((c * k + ky) * k + kx).data();
        for (Index b = 0; b < n; ++b) {
          Scalar* dst = g + (b * in_channels_ + c) * h * w;
          const Scalar* src = row + b * plane;
          for (Index oy = 0; oy < out_h_; ++oy) {
            const Index iy = oy * s - p + ky;
            if (iy < 0 || iy >= h) continue;
            for (Index ox = 0; ox < out_w_; ++ox) {
              const Index ix = ox * s - p + kx;
              if (ix >= 0 && ix < w) dst[iy * w + ix] += src[oy * out_w_ + ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({join(prefix, "weight"), &weight_, &weight_grad_});
  if (options_.bias) out.push_back({join(prefix, "bias"), &bias_, &bias_grad_});
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(Index features, double momentum, double eps)
    : features_(features),
      momentum_(momentum),
      eps_(eps),
      gamma_(Tensor::constant({features}, 1.0)),
      beta_({features}),
      gamma_grad_({features}),
      beta_grad_({features}),
      running_mean_({features}),
      running_var_(Tensor::constant({features}, 1.0)) {
  if (features <= 0) throw Error(ErrorKind::parameter, "batchnorm needs positive width");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorKind::parameter, "batchnorm momentum must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw Error(ErrorKind::parameter, "batchnorm eps must be positive");
}

namespace {

// Views an [N, C, ...] tensor as N blocks of C x inner.
struct ChannelLayout {
  Index n, c, inner;
};

ChannelLayout channel_layout(const Tensor& t, Index features) {
  if (t.rank() != 2 && t.rank() != 4) {
    throw Error(ErrorKind::shape, "batchnorm expects rank 2 or 4, got " + to_string(t.shape()));
  }
  if (t.dim(1) != features) {
    throw Error(ErrorKind::shape, "batchnorm expects " + std::to_string(features) +
                                      " channels, got " + to_string(t.shape()));
  }
  const Index inner = t.rank() == 4 ? t.dim(2) * t.dim(3) : 1;
  return {t.dim(0), features, inner};
}

Eigen::VectorXd channel_sum(const Scalar* data, const ChannelLayout& l) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(l.c);
  for (Index b = 0; b < l.n; ++b) {
    sum += ConstMatrixMap(data + b * l.c * l.inner, l.c, l.inner).rowwise().sum();
  }
  return sum;
}

}  // namespace

Tensor BatchNorm::forward(const Tensor& input, const Pass& pass) {
  const ChannelLayout l = channel_layout(input, features_);
  Eigen::VectorXd mean, var;
  if (pass.mode == Mode::train) {
    if (l.n < 2) {
      throw Error(ErrorKind::degenerate, "batchnorm training needs a batch of at least 2");
    }
    const double m = static_cast<double>(l.n * l.inner);
    mean = channel_sum(input.ptr(), l) / m;
    var = Eigen::VectorXd::Zero(l.c);
    for (Index b = 0; b < l.n; ++b) {
      ConstMatrixMap block(input.ptr() + b * l.c * l.inner, l.c, l.inner);
      var += (block.colwise() - mean).array().square().matrix().rowwise().sum();
    }
    var /= m;
    running_mean_.data() = momentum_ * running_mean_.data() + (1.0 - momentum_) * mean;
    running_var_.data() = momentum_ * running_var_.data() + (1.0 - momentum_) * var;
  } else {
    mean = running_mean_.data();
    var = running_var_.data();
  }
  inv_std_ = (var.array() + eps_).rsqrt().matrix();

  normalized_ = Tensor(input.shape());
  Tensor out(input.shape());
  for (Index b = 0; b < l.n; ++b) {
    const Index off = b * l.c * l.inner;
    ConstMatrixMap x(input.ptr() + off, l.c, l.inner);
    MatrixMap xhat(normalized_.ptr() + off, l.c, l.inner);
    MatrixMap y(out.ptr() + off, l.c, l.inner);
    xhat = inv_std_.asDiagonal() * (x.colwise() - mean);
    y = gamma_.data().asDiagonal() * xhat;
    y.colwise() += beta_.data();
  }
  cached_mode_ = pass.mode;
  cached_ = true;
  return out;
}

Tensor BatchNorm::backward(const Tensor& upstream) {
  require_forward(cached_);
  require_same_shape(normalized_.shape(), upstream, "batchnorm");
  const ChannelLayout l = channel_layout(upstream, features_);
  const double m = static_cast<double>(l.n * l.inner);

  Eigen::VectorXd sum_dy = channel_sum(upstream.ptr(), l);
  Eigen::VectorXd sum_dy_xhat = Eigen::VectorXd::Zero(l.c);
  for (Index b = 0; b < l.n; ++b) {
    const Index off = b * l.c * l.inner;
    sum_dy_xhat += ConstMatrixMap(upstream.ptr() + off, l.c, l.inner)
                       .cwiseProduct(ConstMatrixMap(normalized_.ptr() + off, l.c, l.inner))
                       .rowwise()
                       .sum();
  }
  gamma_grad_.data() = sum_dy_xhat;
  beta_grad_.data() = sum_dy;

  const Eigen::VectorXd scale = gamma_.data().cwiseProduct(inv_std_);
  Tensor dx(upstream.shape());
  for (Index b = 0; b < l.n; ++b) {
    const Index off = b * l.c * l.inner;
    ConstMatrixMap dy(upstream.ptr() + off, l.c, l.inner);
    ConstMatrixMap xhat(normalized_.ptr() + off, l.c, l.inner);
    MatrixMap g(dx.ptr() + off, l.c, l.inner);
    if (cached_mode_ == Mode::train) {
      // dx = gamma * inv_std / m * (m * dy - sum(dy) - xhat * sum(dy * xhat))
      g = dy * m;
      g.colwise() -= sum_dy;
      g -= sum_dy_xhat.asDiagonal() * xhat;
      g = (scale / m).asDiagonal() * g;
    } else {
      g = scale.asDiagonal() * dy;
    }
  }
  return dx;
}

void BatchNorm::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({join(prefix, "gamma"), &gamma_, &gamma_grad_});
  out.push_back({join(prefix, "beta"), &beta_, &beta_grad_});
}

void BatchNorm::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  out.push_back({join(prefix, "running_mean"), &running_mean_});
  out.push_back({join(prefix, "running_var"), &running_var_});
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), seed_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::parameter, "dropout rate must be in [0, 1)");
  }
}

Tensor Dropout::forward(const Tensor& input, const Pass& pass) {
  cached_ = true;
  identity_ = pass.mode == Mode::infer || rate_ == 0.0;
  if (identity_) return input;
  const double keep = 1.0 / (1.0 - rate_);
  mask_.resize(input.size());
  for (Index i = 0; i < input.size(); ++i) {
    mask_[i] = hash_uniform(seed_, pass.step, static_cast<std::uint64_t>(i)) < rate_ ? 0.0 : keep;
  }
  Tensor out(input.shape());
  out.data() = input.data().cwiseProduct(mask_);
  return out;
}

Tensor Dropout::backward(const Tensor& upstream) {
  require_forward(cached_);
  if (identity_) return upstream;
  if (upstream.size() != mask_.size()) {
    throw Error(ErrorKind::shape, "dropout gradient shape " + to_string(upstream.shape()));
  }
  Tensor dx(upstream.shape());
  dx.data() = upstream.data().cwiseProduct(mask_);
  return dx;
}

// ---------------------------------------------------------------- ReLU

Tensor Relu::forward(const Tensor& input, const Pass& /*pass*/) {
  active_ = (input.data().array() > 0.0).cast<double>().matrix();
  cached_ = true;
  Tensor out(input.shape());
  out.data() = input.data().cwiseMax(0.0);
  return out;
}

Tensor Relu::backward(const Tensor& upstream) {
  require_forward(cached_);
  if (upstream.size() != active_.size()) {
    throw Error(ErrorKind::shape, "relu gradient shape " + to_string(upstream.shape()));
  }
  Tensor dx(upstream.shape());
  dx.data() = upstream.data().cwiseProduct(active_);
  return dx;
}

// ---------------------------------------------------------------- pooling

Tensor GlobalAvgPool::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 4, "global_avg_pool");
  input_shape_ = input.shape();
  cached_ = true;
  const Index rows = input.dim(0) * input.dim(1), inner = input.dim(2) * input.dim(3);
  Tensor out({input.dim(0), input.dim(1)});
  out.data() = ConstMatrixMap(input.ptr(), rows, inner).rowwise().mean();
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& upstream) {
  require_forward(cached_);
  require_same_shape({input_shape_[0], input_shape_[1]}, upstream, "global_avg_pool");
  const Index rows = input_shape_[0] * input_shape_[1], inner = input_shape_[2] * input_shape_[3];
  Tensor dx(input_shape_);
  MatrixMap(dx.ptr(), rows, inner).colwise() = upstream.data() / static_cast<double>(inner);
  return dx;
}

Tensor GlobalMaxPool::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 4, "global_max_pool");
  input_shape_ = input.shape();
  const Index rows = input.dim(0) * input.dim(1), inner = input.dim(2) * input.dim(3);
  if (inner == 0) throw Error(ErrorKind::shape, "global_max_pool over empty plane");
  ConstMatrixMap x(input.ptr(), rows, inner);
  Tensor out({input.dim(0), input.dim(1)});
  argmax_.assign(static_cast<std::size_t>(rows), 0);
  for (Index r = 0; r < rows; ++r) {
    Index idx = 0;
    out[r] = x.row(r).maxCoeff(&idx);
    argmax_[static_cast<std::size_t>(r)] = idx;
  }
  cached_ = true;
  return out;
}

Tensor GlobalMaxPool::backward(const Tensor& upstream) {
  require_forward(cached_);
  require_same_shape({input_shape_[0], input_shape_[1]}, upstream, "global_max_pool");
  const Index inner = input_shape_[2] * input_shape_[3];
  Tensor dx(input_shape_);
  for (Index r = 0; r < upstream.size(); ++r) {
    dx[r * inner + argmax_[static_cast<std::size_t>(r)]] = upstream[r];
  }
  return dx;
}

MaxPool2d::MaxPool2d(Index kernel, Index stride, Index padding)
    : kernel_(kernel), stride_(stride), padding_(padding) {
  if (kernel <= 0 || stride <= 0 || padding < 0 || 2 * padding > kernel) {
    throw Error(ErrorKind::parameter, "invalid maxpool geometry");
  }
}

Tensor MaxPool2d::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 4, "maxpool2d");
  const Index planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  const Index oh = (h + 2 * padding_ - kernel_) / stride_ + 1;
  const Index ow = (w + 2 * padding_ - kernel_) / stride_ + 1;
  if (h + 2 * padding_ < kernel_ || w + 2 * padding_ < kernel_) {
    throw Error(ErrorKind::shape, "maxpool2d input " + to_string(input.shape()) +
                                      " smaller than kernel");
  }
  input_shape_ = input.shape();
  Tensor out({input.dim(0), input.dim(1), oh, ow});
  argmax_.assign(static_cast<std::size_t>(out.size()), 0);
  for (Index pl = 0; pl < planes; ++pl) {
    const Scalar* x = input.ptr() + pl * h * w;
    for (Index oy = 0; oy < oh; ++oy) {
      for (Index ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        Index arg = -1;
        for (Index ky = 0; ky < kernel_; ++ky) {
          const Index iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < kernel_; ++kx) {
            const Index ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= w) continue;
            if (arg < 0 || x[iy * w + ix] > best) {
              best = x[iy * w + ix];
              arg = iy * w + ix;
            }
          }
        }
        const Index o = (pl * oh + oy) * ow + ox;
        out[o] = best;
        argmax_[static_cast<std::size_t>(o)] = pl * h * w + arg;
      }
    }
  }
  cached_ = true;
  return out;
}

Tensor MaxPool2d::backward(const Tensor& upstream) {
  require_forward(cached_);
  if (upstream.size() != static_cast<Index>(argmax_.size())) {
    throw Error(ErrorKind::shape, "maxpool2d gradient shape " + to_string(upstream.shape()));
  }
  Tensor dx(input_shape_);
  for (Index o = 0; o < upstream.size(); ++o) dx[argmax_[static_cast<std::size_t>(o)]] += upstream[o];
  return dx;
}

// ---------------------------------------------------------------- Softmax

Tensor Softmax::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 2, "softmax");
  output_ = Tensor(input.shape());
  auto y = output_.matrix();
  y = input.matrix();
  y.colwise() -= y.rowwise().maxCoeff();
  y = y.array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  cached_ = true;
  return output_;
}

Tensor Softmax::backward(const Tensor& upstream) {
  require_forward(cached_);
  require_same_shape(output_.shape(), upstream, "softmax");
  const auto y = output_.matrix();
  const Eigen::VectorXd dot = upstream.matrix().cwiseProduct(y).rowwise().sum();
  Tensor dx(upstream.shape());
  dx.matrix() = y.cwiseProduct((upstream.matrix().colwise() - dot));
  return dx;
}

// ---------------------------------------------------------------- Standardize

Standardize::Standardize(Index features)
    : mean_({features}), scale_(Tensor::constant({features}, 1.0)) {
  if (features <= 0) throw Error(ErrorKind::parameter, "standardize needs positive width");
}

void Standardize::fit(const Tensor& sample) {
  require_rank(sample, 2, "standardize");
  if (sample.dim(1) != mean_.size()) {
    throw Error(ErrorKind::shape, "standardize fit width mismatch: " + to_string(sample.shape()));
  }
  if (sample.dim(0) == 0) throw Error(ErrorKind::empty_input, "standardize fit on no rows");
  const auto x = sample.matrix();
  mean_.data() = x.colwise().mean().transpose();
  const Eigen::VectorXd var =
      (x.rowwise() - mean_.data().transpose()).array().square().colwise().mean().transpose();
  scale_.data() = var.cwiseSqrt().cwiseMax(1e-8);
}

Tensor Standardize::forward(const Tensor& input, const Pass& /*pass*/) {
  require_rank(input, 2, "standardize");
  if (input.dim(1) != mean_.size()) {
    throw Error(ErrorKind::shape, "standardize expects " + std::to_string(mean_.size()) +
                                      " features, got " + to_string(input.shape()));
  }
  cached_ = true;
  Tensor out(input.shape());
  out.matrix() = (input.matrix().rowwise() - mean_.data().transpose()) *
                 scale_.data().cwiseInverse().asDiagonal();
  return out;
}

Tensor Standardize::backward(const Tensor& upstream) {
  require_forward(cached_);
  Tensor dx(upstream.shape());
  dx.matrix() = upstream.matrix() * scale_.data().cwiseInverse().asDiagonal();
  return dx;
}

void Standardize::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  out.push_back({join(prefix, "mean"), &mean_});
  out.push_back({join(prefix, "scale"), &scale_});
}

// ---------------------------------------------------------------- containers

Sequential::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    layers_ = std::move(copy.layers_);
  }
  return *this;
}

Sequential& Sequential::add(LayerPtr layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Tensor Sequential::forward(const Tensor& input, const Pass& pass) {
  Tensor x = input;
  for (auto& l : layers_) x = l->forward(x, pass);
  return x;
}

Tensor Sequential::backward(const Tensor& upstream) {
  Tensor g = upstream;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params(join(prefix, std::to_string(i)), out);
  }
}

void Sequential::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_state(join(prefix, std::to_string(i)), out);
  }
}

ResidualBlock::ResidualBlock(Sequential main, Sequential shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

Tensor ResidualBlock::forward(const Tensor& input, const Pass& pass) {
  Tensor y = main_.forward(input, pass);
  Tensor s = shortcut_.forward(input, pass);
  if (y.shape() != s.shape()) {
    throw Error(ErrorKind::shape, "residual branch " + to_string(y.shape()) +
                                      " vs shortcut " + to_string(s.shape()));
  }
  y.data() += s.data();
  active_ = (y.data().array() > 0.0).cast<double>().matrix();
  y.data() = y.data().cwiseMax(0.0);
  cached_ = true;
  return y;
}

Tensor ResidualBlock::backward(const Tensor& upstream) {
  require_forward(cached_);
  Tensor g(upstream.shape());
  g.data() = upstream.data().cwiseProduct(active_);
  Tensor dx = main_.backward(g);
  dx.data() += shortcut_.backward(g).data();
  return dx;
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  main_.collect_params(join(prefix, "main"), out);
  shortcut_.collect_params(join(prefix, "shortcut"), out);
}

void ResidualBlock::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  main_.collect_state(join(prefix, "main"), out);
  shortcut_.collect_state(join(prefix, "shortcut"), out);
}

ParallelConcat::ParallelConcat(std::vector<Sequential> branches)
    : branches_(std::move(branches)) {
  if (branches_.empty()) throw Error(ErrorKind::parameter, "parallel concat needs a branch");
}

Tensor ParallelConcat::forward(const Tensor& input, const Pass& pass) {
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  widths_.clear();
  for (auto& b : branches_) {
    outs.push_back(b.forward(input, pass));
    require_rank(outs.back(), 2, "parallel concat branch");
    widths_.push_back(outs.back().dim(1));
  }
  std::vector<const Tensor*> parts;
  for (const auto& o : outs) parts.push_back(&o);
  cached_ = true;
  return concat_columns(parts);
}

Tensor ParallelConcat::backward(const Tensor& upstream) {
  require_forward(cached_);
  std::vector<Tensor> grads = split_columns(upstream, widths_);
  Tensor dx = branches_[0].backward(grads[0]);
  for (std::size_t i = 1; i < branches_.size(); ++i) dx.data() += branches_[i].backward(grads[i]).data();
  return dx;
}

void ParallelConcat::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i].collect_params(join(prefix, "branch" + std::to_string(i)), out);
  }
}

void ParallelConcat::collect_state(const std::string& prefix, std::vector<StateRef>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i].collect_state(join(prefix, "branch" + std::to_string(i)), out);
  }
}

Tensor concat_columns(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw Error(ErrorKind::shape, "concat of nothing");
  const Index n = parts[0]->dim(0);
  Index width = 0;
  for (const Tensor* p : parts) {
    require_rank(*p, 2, "concat");
    if (p->dim(0) != n) throw Error(ErrorKind::shape, "concat batch sizes differ");
    width += p->dim(1);
  }
  Tensor out({n, width});
  Index col = 0;
  for (const Tensor* p : parts) {
    out.matrix().middleCols(col, p->dim(1)) = p->matrix();
    col += p->dim(1);
  }
  return out;
}

std::vector<Tensor> split_columns(const Tensor& whole, const std::vector<Index>& widths) {
  require_rank(whole, 2, "split");
  Index total = 0;
  for (Index w : widths) total += w;
  if (total != whole.dim(1)) {
    throw Error(ErrorKind::shape, "split widths do not cover " + to_string(whole.shape()));
  }
  std::vector<Tensor> out;
  Index col = 0;
  for (Index w : widths) {
    Tensor part({whole.dim(0), w});
    part.matrix() = whole.matrix().middleCols(col, w);
    out.push_back(std::move(part));
    col += w;
  }
  return out;
}

}  // namespace coughnet::nn
