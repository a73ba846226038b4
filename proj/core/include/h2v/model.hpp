#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace h2v {

using Matrix = Eigen::MatrixXf;
using Vector = Eigen::VectorXf;

inline constexpr size_t kHidden1 = 1000;
inline constexpr size_t kHidden2 = 100;
inline constexpr size_t kEmbeddingDim = kHidden2;

struct ModelDims {
  size_t input = 0;
  size_t hidden1 = kHidden1;
  size_t hidden2 = kHidden2;
  size_t output = 14;

  bool operator==(const ModelDims&) const = default;
};

// Full parameter set of the three-layer network plus the metadata that
// makes a weight file self-describing: the feature layout it was
// trained against, the class order, and the training-set priors used
// for calibration.
struct ModelWeights {
  Matrix w1, w2, w3;  // (h1 x in), (h2 x h1), (out x h2)
  Vector b1, b2, b3;
  std::string layout_version;
  std::vector<std::string> class_order;
  std::vector<double> priors;  // empty until trained

  ModelDims dims() const;
  bool all_finite() const;
};

// He-scaled gaussian init (std sqrt(2/fan_in)), zero biases.
// Bit-deterministic per seed.
ModelWeights init_weights(uint64_t seed, const ModelDims& dims,
                          std::string layout_version,
                          std::vector<std::string> class_order);

enum class ForwardMode { Train, Eval };

// Per-batch intermediate state retained for backprop. Samples are
// columns throughout.
struct ForwardTrace {
  Matrix x;
  Matrix z1, h1;  // h1 after ReLU and dropout
  Matrix z2, h2;
  Matrix probs;
  Matrix mask1, mask2;  // inverted-dropout multipliers (0 or 2)
  bool training = false;
};

// h1 = relu(W1 x + b1), h2 = relu(W2 h1 + b2), out = sigmoid(W3 h2 + b3).
// Train mode applies inverted dropout (keep 0.5) after each hidden
// activation, so eval needs no rescaling. Eval mode is deterministic.
Matrix forward(const Matrix& x, const ModelWeights& w, ForwardMode mode,
               uint64_t dropout_seed = 0, ForwardTrace* trace = nullptr);

// The website embedding: h2 after ReLU, eval semantics, length hidden2.
std::vector<float> embed_features(const std::vector<float>& features,
                                  const ModelWeights& w);

struct Gradients {
  Matrix w1, w2, w3;
  Vector b1, b2, b3;
};

// Exact gradients for grad_out = dL/d(probabilities), composed through
// sigmoid, ReLU and the recorded dropout masks.
Gradients backward(const ForwardTrace& trace, const ModelWeights& w,
                   const Matrix& grad_out);

// ---- serialization (see docs/weights-format.md) ----

// Writes the weight file and returns its content checksum.
uint64_t save_weights(const std::string& path, const ModelWeights& w);

struct LoadedModel {
  ModelWeights weights;
  uint64_t checksum = 0;
};

LoadedModel load_weights(const std::string& path);
// Additionally enforces layout_version equality (ErrorKind::Compatibility).
LoadedModel load_weights_checked(const std::string& path,
                                 const std::string& expected_layout_version);

// Checksum of the serialized form; save/load round-trips preserve it.
uint64_t weights_checksum(const ModelWeights& w);

}  // namespace h2v
