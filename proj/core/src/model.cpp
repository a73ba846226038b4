#include "h2v/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "binio.hpp"
#include "h2v/error.hpp"
#include "h2v/util.hpp"

namespace h2v {

namespace {

// Keeps probabilities inside the open interval even where float
// rounding would saturate the sigmoid.
constexpr float kProbFloor = std::numeric_limits<float>::min();
const float kProbCeil = 1.0f - std::ldexp(1.0f, -24);

float sigmoid_f(float z) {
  double s = 1.0 / (1.0 + std::exp(-static_cast<double>(z)));
  float f = static_cast<float>(s);
  if (f < kProbFloor) f = kProbFloor;
  if (f > kProbCeil) f = kProbCeil;
  return f;
}

// Dropout multipliers in {0, 2}: inverted dropout with keep 0.5.
// Column-major fill order, bit-stable per seed.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
  Matrix mask(rows, cols);
  float* data = mask.data();
  const Eigen::Index n = rows * cols;
  for (Eigen::Index i = 0; i < n; ++i)
    data[i] = (rng.next() >> 63) ? 2.0f : 0.0f;
  return mask;
}

void check_dims_match(const ModelWeights& w) {
  if (w.w1.rows() != w.b1.size() || w.w2.rows() != w.b2.size() ||
      w.w3.rows() != w.b3.size() || w.w2.cols() != w.w1.rows() ||
      w.w3.cols() != w.w2.rows()) {
    raise(ErrorKind::Shape, "inconsistent weight shapes");
  }
}

}  // namespace

ModelDims ModelWeights::dims() const {
  ModelDims d;
  d.input = static_cast<size_t>(w1.cols());
  d.hidden1 = static_cast<size_t>(w1.rows());
  d.hidden2 = static_cast<size_t>(w2.rows());
  d.output = static_cast<size_t>(w3.rows());
  return d;
}

bool ModelWeights::all_finite() const {
  return w1.allFinite() && w2.allFinite() && w3.allFinite() &&
         b1.allFinite() && b2.allFinite() && b3.allFinite();
}

ModelWeights init_weights(uint64_t seed, const ModelDims& dims,
                          std::string layout_version,
                          std::vector<std::string> class_order) {
  if (dims.input == 0 || dims.hidden1 == 0 || dims.hidden2 == 0 ||
      dims.output == 0) {
    raise(ErrorKind::Shape, "model dimensions must be positive");
  }
  if (class_order.size() != dims.output) {
    raise(ErrorKind::Shape, "class order size " +
                                std::to_string(class_order.size()) +
                                " does not match output dim " +
                                std::to_string(dims.output));
  }
  ModelWeights w;
  w.layout_version = std::move(layout_version);
  w.class_order = std::move(class_order);

  SplitMix64 rng(seed ^ 0x6832766d6f64656cULL);
  auto he_fill = [&rng](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    float* data = m.data();
    const Eigen::Index n = rows * cols;
    for (Eigen::Index i = 0; i < n; ++i)
      data[i] = static_cast<float>(rng.next_gaussian() * scale);
  };
  he_fill(w.w1, static_cast<Eigen::Index>(dims.hidden1),
          static_cast<Eigen::Index>(dims.input));
  he_fill(w.w2, static_cast<Eigen::Index>(dims.hidden2),
          static_cast<Eigen::Index>(dims.hidden1));
  he_fill(w.w3, static_cast<Eigen::Index>(dims.output),
          static_cast<Eigen::Index>(dims.hidden2));
  w.b1 = Vector::Zero(static_cast<Eigen::Index>(dims.hidden1));
  w.b2 = Vector::Zero(static_cast<Eigen::Index>(dims.hidden2));
  w.b3 = Vector::Zero(static_cast<Eigen::Index>(dims.output));
  return w;
}

Matrix forward(const Matrix& x, const ModelWeights& w, ForwardMode mode,
               uint64_t dropout_seed, ForwardTrace* trace) {
  check_dims_match(w);
  if (x.rows() != w.w1.cols()) {
    raise(ErrorKind::Shape, "input width " + std::to_string(x.rows()) +
                                " does not match model input " +
                                std::to_string(w.w1.cols()));
  }
  const bool training = mode == ForwardMode::Train;

  Matrix z1 = (w.w1 * x).colwise() + w.b1;
  Matrix h1 = z1.cwiseMax(0.0f);
  Matrix mask1, mask2;
  if (training) {
    SplitMix64 rng(dropout_seed ^ 0x64726f70ULL);
    mask1 = dropout_mask(h1.rows(), h1.cols(), rng);
    h1 = h1.cwiseProduct(mask1);
  }

  Matrix z2 = (w.w2 * h1).colwise() + w.b2;
  Matrix h2 = z2.cwiseMax(0.0f);
  if (training) {
    SplitMix64 rng(dropout_seed ^ 0x64726f7032ULL);
    mask2 = dropout_mask(h2.rows(), h2.cols(), rng);
    h2 = h2.cwiseProduct(mask2);
  }

  Matrix z3 = (w.w3 * h2).colwise() + w.b3;
  Matrix probs = z3.unaryExpr([](float v) { return sigmoid_f(v); });

  if (trace) {
    trace->x = x;
    trace->z1 = std::move(z1);
    trace->h1 = std::move(h1);
    trace->z2 = std::move(z2);
    trace->h2 = std::move(h2);
    trace->probs = probs;
    trace->mask1 = std::move(mask1);
    trace->mask2 = std::move(mask2);
    trace->training = training;
  }
  return probs;
}

std::vector<float> embed_features(const std::vector<float>& features,
                                  const ModelWeights& w) {
  check_dims_match(w);
  if (static_cast<Eigen::Index>(features.size()) != w.w1.cols()) {
    raise(ErrorKind::Shape, "input width " + std::to_string(features.size()) +
                                " does not match model input " +
                                std::to_string(w.w1.cols()));
  }
  Eigen::Map<const Vector> x(features.data(),
                             static_cast<Eigen::Index>(features.size()));
  Vector h1 = ((w.w1 * x) + w.b1).cwiseMax(0.0f);
  Vector h2 = ((w.w2 * h1) + w.b2).cwiseMax(0.0f);
  return std::vector<float>(h2.data(), h2.data() + h2.size());
}

Gradients backward(const ForwardTrace& trace, const ModelWeights& w,
                   const Matrix& grad_out) {
  if (grad_out.rows() != trace.probs.rows() ||
      grad_out.cols() != trace.probs.cols()) {
    raise(ErrorKind::Shape, "grad_out shape does not match the trace batch");
  }
  // dz3 = dL/ds * sigmoid'(z3), with sigmoid'(z3) = s (1 - s).
  Matrix dz3 = grad_out.cwiseProduct(
      trace.probs.cwiseProduct(Matrix::Ones(trace.probs.rows(),
                                            trace.probs.cols()) -
                               trace.probs));

  Gradients g;
  g.w3 = dz3 * trace.h2.transpose();
  g.b3 = dz3.rowwise().sum();

  Matrix dh2 = w.w3.transpose() * dz3;
  if (trace.training) dh2 = dh2.cwiseProduct(trace.mask2);
  Matrix dz2 = dh2.cwiseProduct(
      trace.z2.unaryExpr([](float v) { return v > 0.0f ? 1.0f : 0.0f; }));

  g.w2 = dz2 * trace.h1.transpose();
  g.b2 = dz2.rowwise().sum();

  Matrix dh1 = w.w2.transpose() * dz2;
  if (trace.training) dh1 = dh1.cwiseProduct(trace.mask1);
  Matrix dz1 = dh1.cwiseProduct(
      trace.z1.unaryExpr([](float v) { return v > 0.0f ? 1.0f : 0.0f; }));

  g.w1 = dz1 * trace.x.transpose();
  g.b1 = dz1.rowwise().sum();
  return g;
}

// ---- serialization ----

namespace {

constexpr char kWeightsMagic[4] = {'H', '2', 'V', 'W'};
constexpr uint32_t kWeightsVersion = 1;

void put_matrix_rowmajor(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) binio::put_f32(out, m(r, c));
}

void put_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) binio::put_f32(out, v(i));
}

void serialize_weights(std::ostream& out, const ModelWeights& w) {
  out.write(kWeightsMagic, 4);
  binio::put_u32(out, kWeightsVersion);
  binio::put_string(out, w.layout_version);
  binio::put_u32(out, static_cast<uint32_t>(w.class_order.size()));
  for (const auto& c : w.class_order) binio::put_string(out, c);
  const ModelDims dims = w.dims();
  binio::put_u32(out, 4);
  binio::put_u32(out, static_cast<uint32_t>(dims.input));
  binio::put_u32(out, static_cast<uint32_t>(dims.hidden1));
  binio::put_u32(out, static_cast<uint32_t>(dims.hidden2));
  binio::put_u32(out, static_cast<uint32_t>(dims.output));
  binio::put_u32(out, static_cast<uint32_t>(w.priors.size()));
  for (double p : w.priors) binio::put_f64(out, p);
  put_matrix_rowmajor(out, w.w1);
  put_vector(out, w.b1);
  put_matrix_rowmajor(out, w.w2);
  put_vector(out, w.b2);
  put_matrix_rowmajor(out, w.w3);
  put_vector(out, w.b3);
}

Matrix get_matrix_rowmajor(std::istream& in, uint32_t rows, uint32_t cols) {
  Matrix m(rows, cols);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) m(r, c) = binio::get_f32(in, "weights");
  return m;
}

Vector get_vector(std::istream& in, uint32_t n) {
  Vector v(n);
  for (uint32_t i = 0; i < n; ++i) v(i) = binio::get_f32(in, "weights");
  return v;
}

}  // namespace

uint64_t weights_checksum(const ModelWeights& w) {
  std::ostringstream buf(std::ios::binary);
  serialize_weights(buf, w);
  const std::string bytes = buf.str();
  return fnv1a64(bytes.data(), bytes.size());
}

uint64_t save_weights(const std::string& path, const ModelWeights& w) {
  check_dims_match(w);
  if (!w.all_finite())
    raise(ErrorKind::Numeric, "refusing to save non-finite weights");
  if (!w.priors.empty() && w.priors.size() != w.class_order.size())
    raise(ErrorKind::Shape, "priors size does not match class count");

  std::ostringstream buf(std::ios::binary);
  serialize_weights(buf, w);
  const std::string bytes = buf.str();
  const uint64_t checksum = fnv1a64(bytes.data(), bytes.size());

  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  binio::put_u64(out, checksum);
  if (!out) raise(ErrorKind::Io, path + ": write failure");
  return checksum;
}

LoadedModel load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::Io, "cannot open " + path);
  std::stringstream whole;
  whole << f.rdbuf();
  const std::string bytes = whole.str();
  if (bytes.size() < 12 + 8)
    raise(ErrorKind::Corruption, path + ": truncated file");

  const std::string body = bytes.substr(0, bytes.size() - 8);
  uint64_t stored = 0;
  for (int i = 7; i >= 0; --i)
    stored = (stored << 8) |
             static_cast<unsigned char>(bytes[bytes.size() - 8 + i]);
  const uint64_t computed = fnv1a64(body.data(), body.size());
  if (stored != computed)
    raise(ErrorKind::Corruption, path + ": checksum mismatch");

  std::istringstream in(body, std::ios::binary);
  char magic[4];
  if (!binio::try_read(in, magic, 4) || std::memcmp(magic, kWeightsMagic, 4))
    raise(ErrorKind::Corruption, path + ": bad magic");
  uint32_t version = binio::get_u32(in, "weights");
  if (version != kWeightsVersion)
    raise(ErrorKind::Compatibility,
          path + ": unsupported weights version " + std::to_string(version));

  LoadedModel loaded;
  loaded.checksum = stored;
  ModelWeights& w = loaded.weights;
  w.layout_version = binio::get_string(in, "weights");
  uint32_t class_count = binio::get_u32(in, "weights");
  if (class_count > 4096)
    raise(ErrorKind::Corruption, path + ": absurd class count");
  for (uint32_t i = 0; i < class_count; ++i)
    w.class_order.push_back(binio::get_string(in, "weights"));
  uint32_t dim_count = binio::get_u32(in, "weights");
  if (dim_count != 4)
    raise(ErrorKind::Corruption, path + ": expected 4 dims");
  uint32_t input = binio::get_u32(in, "weights");
  uint32_t hidden1 = binio::get_u32(in, "weights");
  uint32_t hidden2 = binio::get_u32(in, "weights");
  uint32_t output = binio::get_u32(in, "weights");
  if (output != class_count)
    raise(ErrorKind::Corruption, path + ": output dim != class count");
  uint32_t prior_count = binio::get_u32(in, "weights");
  if (prior_count != 0 && prior_count != output)
    raise(ErrorKind::Corruption, path + ": priors count mismatch");
  for (uint32_t i = 0; i < prior_count; ++i)
    w.priors.push_back(binio::get_f64(in, "weights"));

  w.w1 = get_matrix_rowmajor(in, hidden1, input);
  w.b1 = get_vector(in, hidden1);
  w.w2 = get_matrix_rowmajor(in, hidden2, hidden1);
  w.b2 = get_vector(in, hidden2);
  w.w3 = get_matrix_rowmajor(in, output, hidden2);
  w.b3 = get_vector(in, output);

  // No trailing garbage.
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0)
    raise(ErrorKind::Corruption, path + ": trailing bytes after parameters");
  return loaded;
}

LoadedModel load_weights_checked(const std::string& path,
                                 const std::string& expected_layout_version) {
  LoadedModel loaded = load_weights(path);
  if (loaded.weights.layout_version != expected_layout_version) {
    raise(ErrorKind::Compatibility,
          path + ": weights were trained for feature layout \"" +
              loaded.weights.layout_version + "\", runtime expects \"" +
              expected_layout_version + "\"");
  }
  return loaded;
}

}  // namespace h2v
