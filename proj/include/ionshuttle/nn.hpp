#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ionshuttle::nn {

struct NetShape {
  int input = 0;
  int hidden = 512;
  int blocks = 3;
  int output = 1;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

std::size_t param_count(const NetShape& shape);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Dense residual network:
//   z = W0 x + b0
//   z = z + W2 relu(W1 relu(z) + b1) + b2     (repeated `blocks` times)
//   y = Wout relu(z) + bout
// Samples are stored as columns. All parameters live in one flat buffer so
// optimizers and checkpoints can treat them uniformly.
template <typename Scalar>
class ResidualNet {
 public:
  using Mat = Matrix<Scalar>;

  struct Cache {
    Mat input;
    std::vector<Mat> stream;  // residual stream entering each block, then the final stream
    std::vector<Mat> inner;   // pre-activation of the first layer inside each block
  };

  ResidualNet() = default;
  explicit ResidualNet(NetShape shape);

  const NetShape& shape() const { return shape_; }
  std::span<Scalar> params() { return params_; }
  std::span<const Scalar> params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  // Orthogonal weights with the given gains, zero biases.
  void init_orthogonal(std::mt19937_64& rng, double hidden_gain, double head_gain);

  Mat forward(const Mat& x, Cache* cache = nullptr) const;

  // Accumulates dLoss/dparams into `grad` given dLoss/doutput.
  void backward(const Cache& cache, const Mat& d_output, std::span<Scalar> grad) const;

  template <typename Other>
  ResidualNet<Other> cast() const {
    ResidualNet<Other> out(shape_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<Other>(params_[i]);
    return out;
  }

 private:
  struct Offsets {
    std::size_t w0, b0, head_w, head_b;
    std::vector<std::size_t> w1, b1, w2, b2;
  };

  Eigen::Map<const Mat> weight(std::size_t offset, int rows, int cols) const;
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> bias(std::size_t offset, int rows) const;

  NetShape shape_;
  Offsets off_;
  std::vector<Scalar> params_;
};

// Masked categorical over columns of `logits` (n_act x batch). Masks are
// row-major batch x n_act bytes. Illegal actions get log-probability -inf and
// probability exactly 0. Throws ContractViolation on an all-masked row.
template <typename Scalar>
struct MaskedCategorical {
  Matrix<Scalar> log_probs;  // -inf on illegal entries
  Matrix<Scalar> probs;

  MaskedCategorical(const Matrix<Scalar>& logits, std::span<const std::uint8_t> masks);

  Scalar entropy(int column) const;
  int sample(int column, std::mt19937_64& rng) const;
  int argmax(int column) const;
};

template <typename Scalar>
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-5);
  void step(std::span<Scalar> params, std::span<const Scalar> grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Scalar> m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

extern template class ResidualNet<float>;
extern template class ResidualNet<double>;
extern template struct MaskedCategorical<float>;
extern template struct MaskedCategorical<double>;
extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace ionshuttle::nn
