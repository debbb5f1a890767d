#include "ionshuttle/nn.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "ionshuttle/error.hpp"

namespace ionshuttle::nn {

std::size_t param_count(const NetShape& s) {
  const std::size_t h = static_cast<std::size_t>(s.hidden);
  return h * s.input + h + s.blocks * 2 * (h * h + h) + static_cast<std::size_t>(s.output) * h +
         s.output;
}

template <typename Scalar>
ResidualNet<Scalar>::ResidualNet(NetShape shape) : shape_(shape) {
  require(shape.input >= 1 && shape.hidden >= 1 && shape.blocks >= 0 && shape.output >= 1,
          ErrorKind::InvalidInput, "invalid network shape");
  const std::size_t h = static_cast<std::size_t>(shape.hidden);
  std::size_t pos = 0;
  off_.w0 = pos;
  pos += h * shape.input;
  off_.b0 = pos;
  pos += h;
  for (int b = 0; b < shape.blocks; ++b) {
    off_.w1.push_back(pos);
    pos += h * h;
    off_.b1.push_back(pos);
    pos += h;
    off_.w2.push_back(pos);
    pos += h * h;
    off_.b2.push_back(pos);
    pos += h;
  }
  off_.head_w = pos;
  pos += h * shape.output;
  off_.head_b = pos;
  pos += shape.output;
  params_.assign(pos, Scalar(0));
}

template <typename Scalar>
Eigen::Map<const typename ResidualNet<Scalar>::Mat> ResidualNet<Scalar>::weight(std::size_t offset,
                                                                               int rows,
                                                                               int cols) const {
  return Eigen::Map<const Mat>(params_.data() + offset, rows, cols);
}

template <typename Scalar>
Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> ResidualNet<Scalar>::bias(
    std::size_t offset, int rows) const {
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(params_.data() + offset, rows);
}

namespace {

template <typename Scalar>
void orthogonal_fill(Scalar* data, int rows, int cols, double gain, std::mt19937_64& rng) {
  const int n = std::max(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Eigen::Map<Matrix<Scalar>> out(data, rows, cols);
  out = (gain * q.topLeftCorner(rows, cols)).template cast<Scalar>();
}

}  // namespace

template <typename Scalar>
void ResidualNet<Scalar>::init_orthogonal(std::mt19937_64& rng, double hidden_gain,
                                          double head_gain) {
  std::fill(params_.begin(), params_.end(), Scalar(0));
  const int h = shape_.hidden;
  orthogonal_fill(params_.data() + off_.w0, h, shape_.input, hidden_gain, rng);
  for (int b = 0; b < shape_.blocks; ++b) {
    orthogonal_fill(params_.data() + off_.w1[b], h, h, hidden_gain, rng);
    orthogonal_fill(params_.data() + off_.w2[b], h, h, hidden_gain, rng);
  }
  orthogonal_fill(params_.data() + off_.head_w, shape_.output, h, head_gain, rng);
}

template <typename Scalar>
typename ResidualNet<Scalar>::Mat ResidualNet<Scalar>::forward(const Mat& x, Cache* cache) const {
  require(x.rows() == shape_.input, ErrorKind::InvalidInput,
          "observation length " + std::to_string(x.rows()) + " does not match network input " +
              std::to_string(shape_.input));
  const int h = shape_.hidden;
  Mat z = weight(off_.w0, h, shape_.input) * x;
  z.colwise() += bias(off_.b0, h);
  if (cache) {
    cache->input = x;
    cache->stream.clear();
    cache->inner.clear();
  }
  for (int b = 0; b < shape_.blocks; ++b) {
    Mat u = weight(off_.w1[b], h, h) * z.cwiseMax(Scalar(0));
    u.colwise() += bias(off_.b1[b], h);
    Mat next = z + weight(off_.w2[b], h, h) * u.cwiseMax(Scalar(0));
    next.colwise() += bias(off_.b2[b], h);
    if (cache) {
      cache->stream.push_back(std::move(z));
      cache->inner.push_back(std::move(u));
    }
    z = std::move(next);
  }
  Mat y = weight(off_.head_w, shape_.output, h) * z.cwiseMax(Scalar(0));
  y.colwise() += bias(off_.head_b, shape_.output);
  if (cache) cache->stream.push_back(std::move(z));
  return y;
}

template <typename Scalar>
void ResidualNet<Scalar>::backward(const Cache& cache, const Mat& d_output,
                                   std::span<Scalar> grad) const {
  require(grad.size() == params_.size(), ErrorKind::InvalidInput, "gradient buffer size mismatch");
  const int h = shape_.hidden;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  auto gw = [&](std::size_t off, int rows, int cols) {
    return Eigen::Map<Mat>(grad.data() + off, rows, cols);
  };
  auto gb = [&](std::size_t off, int rows) { return Eigen::Map<Vec>(grad.data() + off, rows); };
  auto relu_mask = [](const Mat& m) {
    return m.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
  };

  const Mat& final_stream = cache.stream.back();
  gw(off_.head_w, shape_.output, h).noalias() += d_output * final_stream.cwiseMax(Scalar(0)).transpose();
  gb(off_.head_b, shape_.output) += d_output.rowwise().sum();
  Mat dz = (weight(off_.head_w, shape_.output, h).transpose() * d_output)
               .cwiseProduct(relu_mask(final_stream));

  for (int b = shape_.blocks - 1; b >= 0; --b) {
    const Mat& z_in = cache.stream[b];
    const Mat& u = cache.inner[b];
    gw(off_.w2[b], h, h).noalias() += dz * u.cwiseMax(Scalar(0)).transpose();
    gb(off_.b2[b], h) += dz.rowwise().sum();
    Mat du = (weight(off_.w2[b], h, h).transpose() * dz).cwiseProduct(relu_mask(u));
    gw(off_.w1[b], h, h).noalias() += du * z_in.cwiseMax(Scalar(0)).transpose();
    gb(off_.b1[b], h) += du.rowwise().sum();
    dz += (weight(off_.w1[b], h, h).transpose() * du).cwiseProduct(relu_mask(z_in));
  }

  gw(off_.w0, h, shape_.input).noalias() += dz * cache.input.transpose();
  gb(off_.b0, h) += dz.rowwise().sum();
}

template <typename Scalar>
MaskedCategorical<Scalar>::MaskedCategorical(const Matrix<Scalar>& logits,
                                             std::span<const std::uint8_t> masks) {
  const auto n_act = logits.rows();
  const auto batch = logits.cols();
  require(masks.size() == static_cast<std::size_t>(n_act * batch), ErrorKind::InvalidInput,
          "mask size does not match logits");
  constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
  log_probs.resize(n_act, batch);
  probs.resize(n_act, batch);
  for (Eigen::Index c = 0; c < batch; ++c) {
    const std::uint8_t* m = masks.data() + c * n_act;
    Scalar max_logit = kNegInf;
    for (Eigen::Index a = 0; a < n_act; ++a) {
      if (m[a]) max_logit = std::max(max_logit, logits(a, c));
    }
    require(max_logit != kNegInf, ErrorKind::ContractViolation,
            "action mask has no legal action");
    Scalar sum = 0;
    for (Eigen::Index a = 0; a < n_act; ++a) {
      if (m[a]) sum += std::exp(logits(a, c) - max_logit);
    }
    const Scalar log_norm = max_logit + std::log(sum);
    for (Eigen::Index a = 0; a < n_act; ++a) {
      if (m[a]) {
        log_probs(a, c) = logits(a, c) - log_norm;
        probs(a, c) = std::exp(log_probs(a, c));
      } else {
        log_probs(a, c) = kNegInf;
        probs(a, c) = 0;
      }
    }
  }
}

template <typename Scalar>
Scalar MaskedCategorical<Scalar>::entropy(int column) const {
  Scalar h = 0;
  for (Eigen::Index a = 0; a < probs.rows(); ++a) {
    if (probs(a, column) > 0) h -= probs(a, column) * log_probs(a, column);
  }
  return h;
}

template <typename Scalar>
int MaskedCategorical<Scalar>::sample(int column, std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last_legal = -1;
  for (Eigen::Index a = 0; a < probs.rows(); ++a) {
    if (log_probs(a, column) == -std::numeric_limits<Scalar>::infinity()) continue;
    last_legal = static_cast<int>(a);
    acc += static_cast<double>(probs(a, column));
    if (u < acc) return last_legal;
  }
  return last_legal;
}

template <typename Scalar>
int MaskedCategorical<Scalar>::argmax(int column) const {
  Eigen::Index best = 0;
  probs.col(column).maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename Scalar>
Adam<Scalar>::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, Scalar(0)), v_(n, Scalar(0)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

template <typename Scalar>
void Adam<Scalar>::step(std::span<Scalar> params, std::span<const Scalar> grad, double lr) {
  require(params.size() == m_.size() && grad.size() == m_.size(), ErrorKind::InvalidInput,
          "optimizer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const Scalar step_size = static_cast<Scalar>(lr * std::sqrt(c2) / c1);
  const Scalar eps_hat = static_cast<Scalar>(eps_ * std::sqrt(c2));
  const Scalar b1 = static_cast<Scalar>(beta1_);
  const Scalar b2 = static_cast<Scalar>(beta2_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grad[i];
    v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grad[i] * grad[i];
    params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) + eps_hat);
  }
}

template class ResidualNet<float>;
template class ResidualNet<double>;
template struct MaskedCategorical<float>;
template struct MaskedCategorical<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace ionshuttle::nn
