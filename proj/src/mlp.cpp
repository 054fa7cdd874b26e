#include "nsdt/mlp.hpp"

#include <cmath>

namespace nsdt {

double stable_sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void OperatorMlp::init(const std::string& name, int input_width,
                       const std::vector<int>& hidden, Rng& rng) {
  input_ = input_width;
  layers_.clear();
  int fan_in = input_width;
  auto add_layer = [&](int fan_out, const std::string& tag) {
    Layer layer;
    layer.w.name = name + "/" + tag + "/w";
    layer.b.name = name + "/" + tag + "/b";
    layer.w.value.resize(fan_out, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Index r = 0; r < layer.w.value.rows(); ++r)
      for (Index c = 0; c < layer.w.value.cols(); ++c)
        layer.w.value(r, c) = rng.uniform(-limit, limit);
    layer.b.value = Matrix::Zero(1, fan_out);
    layer.w.zero_grad();
    layer.b.zero_grad();
    layers_.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t h = 0; h < hidden.size(); ++h)
    add_layer(hidden[h], "h" + std::to_string(h));
  add_layer(1, "out");
}

Vector OperatorMlp::forward(const Matrix& X, MlpCache* cache, double dropout,
                            Rng* rng) const {
  if (X.cols() != input_) throw NsdtError("OperatorMlp: input width mismatch");
  if (dropout > 0 && rng == nullptr)
    throw NsdtError("OperatorMlp: dropout requires an rng");
  if (cache) {
    cache->inputs.clear();
    cache->pre_act.clear();
    cache->mask.clear();
  }
  Matrix a = X;
  const std::size_t n_hidden = layers_.size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    if (cache) cache->inputs.push_back(a);
    Matrix h = ((a * layers_[l].w.value.transpose()).rowwise() +
                layers_[l].b.value.row(0))
                   .array()
                   .tanh();
    if (cache) cache->pre_act.push_back(h);
    if (dropout > 0) {
      Matrix m(h.rows(), h.cols());
      const double scale = 1.0 / (1.0 - dropout);
      for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
          m(r, c) = rng->uniform() < dropout ? 0.0 : scale;
      h.array() *= m.array();
      if (cache) cache->mask.push_back(std::move(m));
    }
    a = std::move(h);
  }
  if (cache) cache->inputs.push_back(a);
  const Layer& out = layers_.back();
  Vector z = a * out.w.value.row(0).transpose();
  z.array() += out.b.value(0, 0);
  Vector y(z.size());
  for (Index i = 0; i < z.size(); ++i) y[i] = stable_sigmoid(z[i]);
  if (cache) cache->y = y;
  return y;
}

double OperatorMlp::forward_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Matrix X(1, x.size());
  X.row(0) = x;
  return forward(X)[0];
}

Matrix OperatorMlp::backward(const MlpCache& cache, const Vector& dy) {
  Layer& out = layers_.back();
  const Vector& y = cache.y;
  const Vector dz = dy.array() * y.array() * (1.0 - y.array());

  const Matrix& a_last = cache.inputs.back();
  out.w.grad.row(0) += (dz.transpose() * a_last).row(0);
  out.b.grad(0, 0) += dz.sum();
  Matrix da = dz * out.w.value.row(0);  // n x last_hidden

  const std::size_t n_hidden = layers_.size() - 1;
  for (std::size_t l = n_hidden; l-- > 0;) {
    if (!cache.mask.empty()) da.array() *= cache.mask[l].array();
    const Matrix& h = cache.pre_act[l];
    const Matrix dzl = da.array() * (1.0 - h.array().square());
    layers_[l].w.grad += dzl.transpose() * cache.inputs[l];
    layers_[l].b.grad.row(0) += dzl.colwise().sum();
    da = dzl * layers_[l].w.value;
  }
  return da;
}

void OperatorMlp::mirror_complement_of(const OperatorMlp& other) {
  if (!initialized() || layers_.size() != other.layers_.size())
    throw NsdtError("mirror_complement_of: initialize with matching shape first");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].w.value.rows() != other.layers_[l].w.value.rows() ||
        layers_[l].w.value.cols() != other.layers_[l].w.value.cols())
      throw NsdtError("mirror_complement_of: layer shape mismatch");
    layers_[l].w.value = other.layers_[l].w.value;
    layers_[l].b.value = other.layers_[l].b.value;
  }
  layers_.back().w.value = -layers_.back().w.value;
  layers_.back().b.value = -layers_.back().b.value;
}

std::vector<Tensor*> OperatorMlp::parameters() {
  std::vector<Tensor*> out;
  for (Layer& l : layers_) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Tensor*> OperatorMlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers_) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

}  // namespace nsdt
