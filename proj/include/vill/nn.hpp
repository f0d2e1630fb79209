#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vill/matrix.hpp"
#include "vill/rng.hpp"

namespace vill {

enum class Activation { identity, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Affine map x -> act(x W + b); weight is (in x out).
struct Dense {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  friend bool operator==(const Dense&, const Dense&) = default;
};

// Feature extractor G (a stack of Dense layers, possibly empty = identity)
// followed by a linear classifier head F of shape d x C.
struct Model {
  std::vector<Dense> extractor;
  Dense head;

  std::size_t input_dim() const;
  std::size_t feature_dim() const { return head.in_dim(); }
  std::size_t num_classes() const { return head.out_dim(); }

  // Throws ShapeError if layers do not compose.
  void validate() const;

  friend bool operator==(const Model&, const Model&) = default;
};

struct DenseGrad {
  Matrix weight;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<DenseGrad> extractor;
  DenseGrad head;
};

struct OptimState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  Gradients velocity;
};

struct ForwardResult {
  Matrix features;
  Matrix logits;
  Matrix probs;
};

// Activations kept for the backward pass. outputs[i] is the output of
// extractor layer i; outputs.back() (or the input, if the extractor is empty)
// are the features.
struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> outputs;
  ForwardResult result;

  const Matrix& features() const { return result.features; }
};

// Extractor hidden dims, e.g. {32, 16}: input -> 32 -> 16 -> C, tanh hidden units.
Model init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                 std::size_t num_classes, Rng& rng);

std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

ForwardTrace forward_trace(const Model& model, const Matrix& batch);
ForwardResult forward(const Model& model, const Matrix& batch);

// Reverse-mode gradient of a scalar loss L given dL/dlogits and, optionally,
// a direct dL/dfeatures contribution (feature-level losses such as alignment).
Gradients backward(const Model& model, const ForwardTrace& trace, const Matrix& logit_grad,
                   const Matrix* feature_grad = nullptr);
Gradients backward(const Model& model, const Matrix& batch, const Matrix& logit_grad);

Gradients zeros_like(const Model& model);
// acc += scale * g
void accumulate(Gradients& acc, const Gradients& g, double scale = 1.0);

OptimState make_optim_state(const Model& model, double learning_rate, double momentum);
// velocity <- momentum * velocity - lr * grad; param <- param + velocity
void sgd_step(Model& model, const Gradients& grads, OptimState& state);

// Flat parameter views in a fixed order: extractor layers (weight, bias), then head.
std::size_t parameter_count(const Model& model);
std::vector<double> flatten(const Model& model);
std::vector<double> flatten(const Gradients& grads);
void assign_parameters(Model& model, std::span<const double> params);

}  // namespace vill
