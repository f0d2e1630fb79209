#include "vill/nn.hpp"

#include <algorithm>
#include <cmath>

#include "vill/errors.hpp"

namespace vill {
namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NumericError(std::string("non-finite ") + what);
}

Matrix affine(const Dense& layer, const Matrix& x) {
  Matrix out = matmul(x, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
  }
  if (layer.activation == Activation::tanh) {
    for (double& v : out.data()) v = std::tanh(v);
  }
  return out;
}

DenseGrad zero_grad(const Dense& layer) {
  return {Matrix(layer.weight.rows(), layer.weight.cols()),
          std::vector<double>(layer.bias.size(), 0.0)};
}

void check_congruent(const Dense& layer, const DenseGrad& g) {
  if (g.weight.rows() != layer.weight.rows() || g.weight.cols() != layer.weight.cols() ||
      g.bias.size() != layer.bias.size()) {
    throw ShapeError("gradient shape does not match model");
  }
}

// Propagates dL/d(layer output) back through `layer`, filling its gradient
// and returning dL/d(layer input).
Matrix backprop_dense(const Dense& layer, const Matrix& input, const Matrix& output,
                      Matrix upstream, DenseGrad& grad) {
  if (layer.activation == Activation::tanh) {
    auto& d = upstream.data();
    const auto& y = output.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 1.0 - y[k] * y[k];
  }
  grad.weight = matmul_tn(input, upstream);
  grad.bias.assign(layer.bias.size(), 0.0);
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    auto r = upstream.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) grad.bias[j] += r[j];
  }
  return matmul_nt(upstream, layer.weight);
}

void sgd_dense(Dense& layer, const DenseGrad& g, DenseGrad& v, const OptimState& st) {
  auto& w = layer.weight.data();
  auto& vw = v.weight.data();
  const auto& gw = g.weight.data();
  for (std::size_t k = 0; k < w.size(); ++k) {
    vw[k] = st.momentum * vw[k] - st.learning_rate * gw[k];
    w[k] += vw[k];
  }
  for (std::size_t k = 0; k < layer.bias.size(); ++k) {
    v.bias[k] = st.momentum * v.bias[k] - st.learning_rate * g.bias[k];
    layer.bias[k] += v.bias[k];
  }
}

bool finite(const DenseGrad& g) {
  if (!g.weight.all_finite()) return false;
  return std::all_of(g.bias.begin(), g.bias.end(), [](double x) { return std::isfinite(x); });
}

template <class Fn>
void for_each_block(const Model& m, Fn&& fn) {
  for (const auto& l : m.extractor) {
    fn(l.weight.data());
    fn(l.bias);
  }
  fn(m.head.weight.data());
  fn(m.head.bias);
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ArgumentError("unknown activation '" + name + "'");
}

std::size_t Model::input_dim() const {
  return extractor.empty() ? head.in_dim() : extractor.front().in_dim();
}

void Model::validate() const {
  std::size_t dim = input_dim();
  auto check = [&](const Dense& l, const char* name) {
    if (l.in_dim() != dim) throw ShapeError(std::string(name) + ": layer dimensions do not compose");
    if (l.bias.size() != l.out_dim()) throw ShapeError(std::string(name) + ": bias length mismatch");
    dim = l.out_dim();
  };
  for (const auto& l : extractor) check(l, "extractor");
  check(head, "head");
  if (head.activation != Activation::identity) throw ShapeError("head must be linear");
  if (num_classes() < 2) throw ShapeError("head needs at least 2 classes");
}

Model init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                 std::size_t num_classes, Rng& rng) {
  if (input_dim == 0 || num_classes < 2) throw ArgumentError("init_model: degenerate dimensions");
  auto make = [&rng](std::size_t in, std::size_t out, Activation act) {
    Dense layer{Matrix(in, out), std::vector<double>(out), act};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    return layer;
  };
  Model model;
  std::size_t dim = input_dim;
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ArgumentError("init_model: zero-width hidden layer");
    model.extractor.push_back(make(dim, h, Activation::tanh));
    dim = h;
  }
  model.head = make(dim, num_classes, Activation::identity);
  return model;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw NumericError("softmax: non-finite input");
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto p = softmax(logits.row(i));
    std::copy(p.begin(), p.end(), probs.row(i).begin());
  }
  return probs;
}

ForwardTrace forward_trace(const Model& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  ForwardTrace trace;
  trace.input = batch;
  trace.outputs.reserve(model.extractor.size());
  const Matrix* x = &trace.input;
  for (const auto& layer : model.extractor) {
    trace.outputs.push_back(affine(layer, *x));
    x = &trace.outputs.back();
  }
  trace.result.features = *x;
  trace.result.logits = affine(model.head, *x);
  check_finite(trace.result.logits, "logits");
  trace.result.probs = softmax_rows(trace.result.logits);
  return trace;
}

ForwardResult forward(const Model& model, const Matrix& batch) {
  return std::move(forward_trace(model, batch).result);
}

Gradients backward(const Model& model, const ForwardTrace& trace, const Matrix& logit_grad,
                   const Matrix* feature_grad) {
  const Matrix& logits = trace.result.logits;
  if (logit_grad.rows() != logits.rows() || logit_grad.cols() != logits.cols()) {
    throw ShapeError("backward: upstream gradient shape does not match logits");
  }
  const Matrix& features = trace.features();
  Gradients grads;
  grads.extractor.resize(model.extractor.size());
  Matrix upstream = backprop_dense(model.head, features, logits, logit_grad, grads.head);
  if (feature_grad != nullptr) {
    if (feature_grad->rows() != features.rows() || feature_grad->cols() != features.cols()) {
      throw ShapeError("backward: feature gradient shape does not match features");
    }
    auto& u = upstream.data();
    const auto& f = feature_grad->data();
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += f[k];
  }
  for (std::size_t i = model.extractor.size(); i-- > 0;) {
    const Matrix& input = i == 0 ? trace.input : trace.outputs[i - 1];
    upstream = backprop_dense(model.extractor[i], input, trace.outputs[i], std::move(upstream),
                              grads.extractor[i]);
  }
  return grads;
}

Gradients backward(const Model& model, const Matrix& batch, const Matrix& logit_grad) {
  return backward(model, forward_trace(model, batch), logit_grad);
}

Gradients zeros_like(const Model& model) {
  Gradients g;
  for (const auto& l : model.extractor) g.extractor.push_back(zero_grad(l));
  g.head = zero_grad(model.head);
  return g;
}

void accumulate(Gradients& acc, const Gradients& g, double scale) {
  if (acc.extractor.size() != g.extractor.size()) throw ShapeError("accumulate: layer count mismatch");
  auto add = [scale](DenseGrad& a, const DenseGrad& b) {
    if (a.weight.size() != b.weight.size() || a.bias.size() != b.bias.size()) {
      throw ShapeError("accumulate: shape mismatch");
    }
    for (std::size_t k = 0; k < a.weight.size(); ++k) a.weight.data()[k] += scale * b.weight.data()[k];
    for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += scale * b.bias[k];
  };
  for (std::size_t i = 0; i < g.extractor.size(); ++i) add(acc.extractor[i], g.extractor[i]);
  add(acc.head, g.head);
}

OptimState make_optim_state(const Model& model, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must be in [0, 1)");
  return {learning_rate, momentum, zeros_like(model)};
}

void sgd_step(Model& model, const Gradients& grads, OptimState& state) {
  if (grads.extractor.size() != model.extractor.size() ||
      state.velocity.extractor.size() != model.extractor.size()) {
    throw ShapeError("sgd_step: layer count mismatch");
  }
  for (std::size_t i = 0; i < model.extractor.size(); ++i) {
    check_congruent(model.extractor[i], grads.extractor[i]);
    check_congruent(model.extractor[i], state.velocity.extractor[i]);
    if (!finite(grads.extractor[i])) throw NumericError("sgd_step: non-finite gradient");
  }
  check_congruent(model.head, grads.head);
  check_congruent(model.head, state.velocity.head);
  if (!finite(grads.head)) throw NumericError("sgd_step: non-finite gradient");

  for (std::size_t i = 0; i < model.extractor.size(); ++i) {
    sgd_dense(model.extractor[i], grads.extractor[i], state.velocity.extractor[i], state);
  }
  sgd_dense(model.head, grads.head, state.velocity.head, state);
}

std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  for_each_block(model, [&n](const std::vector<double>& v) { n += v.size(); });
  return n;
}

std::vector<double> flatten(const Model& model) {
  std::vector<double> out;
  out.reserve(parameter_count(model));
  for_each_block(model, [&out](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

std::vector<double> flatten(const Gradients& grads) {
  std::vector<double> out;
  auto put = [&out](const DenseGrad& g) {
    out.insert(out.end(), g.weight.data().begin(), g.weight.data().end());
    out.insert(out.end(), g.bias.begin(), g.bias.end());
  };
  for (const auto& g : grads.extractor) put(g);
  put(grads.head);
  return out;
}

void assign_parameters(Model& model, std::span<const double> params) {
  if (params.size() != parameter_count(model)) throw ShapeError("assign_parameters: size mismatch");
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& v) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), v.size(), v.begin());
    pos += v.size();
  };
  for (auto& l : model.extractor) {
    take(l.weight.data());
    take(l.bias);
  }
  take(model.head.weight.data());
  take(model.head.bias);
}

}  // namespace vill
