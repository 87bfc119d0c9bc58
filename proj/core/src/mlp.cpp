#include "amp/mlp.hpp"

#include <cmath>
#include <numbers>

#include "amp/error.hpp"

namespace amp {
namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0) {
    throw Error(ErrorKind::kInvalidInput, "network dimensions must be positive");
  }
  for (int h : hidden) {
    if (h <= 0) throw Error(ErrorKind::kInvalidInput, "hidden layer widths must be positive");
  }
}

std::string MlpSpec::describe() const {
  std::string s = std::to_string(input_dim);
  for (int h : hidden) s += "-" + std::to_string(h);
  return s + "-" + std::to_string(output_dim);
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  MlpParams p;
  for (int l = 0; l < spec.num_layers(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(spec.layer_output(l), spec.layer_input(l)));
    p.biases.push_back(Eigen::VectorXd::Zero(spec.layer_output(l)));
  }
  return p;
}

std::size_t MlpParams::size() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

bool MlpParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) s += weights[l].squaredNorm() + biases[l].squaredNorm();
  return s;
}

void MlpParams::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void MlpParams::axpy(double alpha, const MlpParams& x) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].noalias() += alpha * x.weights[l];
    biases[l].noalias() += alpha * x.biases[l];
  }
}

void MlpParams::scale(double alpha) {
  for (auto& w : weights) w *= alpha;
  for (auto& b : biases) b *= alpha;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size()) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(k, weights[l].size()) = weights[l].reshaped();
    k += weights[l].size();
    flat.segment(k, biases[l].size()) = biases[l];
    k += biases[l].size();
  }
  return flat;
}

void MlpParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(size())) {
    throw Error(ErrorKind::kDimensionMismatch, "flat parameter vector has the wrong size");
  }
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(k, weights[l].size());
    k += weights[l].size();
    biases[l] = flat.segment(k, biases[l].size());
    k += biases[l].size();
  }
}

Mlp::Mlp(MlpSpec spec, MlpParams params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (!params_.same_shape(MlpParams::zeros(spec_))) {
    throw Error(ErrorKind::kDimensionMismatch, "parameters do not match network " + spec_.describe());
  }
}

Mlp::Mlp(MlpSpec spec, Rng& rng, double output_scale) : spec_(std::move(spec)) {
  spec_.validate();
  params_ = MlpParams::zeros(spec_);
  for (int l = 0; l < spec_.num_layers(); ++l) {
    Eigen::MatrixXd& w = params_.weights[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -bound, bound);
    }
  }
  params_.weights.back() *= output_scale;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (rows != spec_.input_dim) {
    throw Error(ErrorKind::kDimensionMismatch, "network " + spec_.describe() + " got input of size " +
                                                   std::to_string(rows));
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  check_input(x.size());
  Eigen::VectorXd a = x;
  const int n = spec_.num_layers();
  for (int l = 0; l < n; ++l) {
    Eigen::VectorXd z = params_.weights[l] * a + params_.biases[l];
    a = l + 1 < n ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double Mlp::forward_scalar(const Eigen::VectorXd& x) const {
  if (spec_.output_dim != 1) throw Error(ErrorKind::kDimensionMismatch, "network output is not scalar");
  return forward(x)[0];
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  MlpCache cache;
  return forward_batch(x, cache);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, MlpCache& cache) const {
  check_input(x.rows());
  const int n = spec_.num_layers();
  cache.inputs.resize(n);
  cache.pre.resize(n);
  Eigen::MatrixXd a = x;
  for (int l = 0; l < n; ++l) {
    cache.inputs[l] = a;
    cache.pre[l] = (params_.weights[l] * a).colwise() + params_.biases[l];
    a = l + 1 < n ? relu(cache.pre[l]) : cache.pre[l];
  }
  cache.output = a;
  return a;
}

void Mlp::backward(const MlpCache& cache, const Eigen::MatrixXd& output_grad, MlpParams& grads,
                   Eigen::MatrixXd* input_grad) const {
  const int n = spec_.num_layers();
  if (static_cast<int>(cache.pre.size()) != n || output_grad.rows() != spec_.output_dim ||
      output_grad.cols() != cache.output.cols() || !grads.same_shape(params_)) {
    throw Error(ErrorKind::kDimensionMismatch, "backward: cache or gradient does not match the network");
  }
  Eigen::MatrixXd delta = output_grad;
  for (int l = n - 1; l >= 0; --l) {
    grads.weights[l].noalias() += delta * cache.inputs[l].transpose();
    grads.biases[l].noalias() += delta.rowwise().sum();
    if (l == 0 && input_grad == nullptr) break;
    Eigen::MatrixXd g = params_.weights[l].transpose() * delta;
    if (l == 0) {
      *input_grad = std::move(g);
    } else {
      delta = g.cwiseProduct(relu_mask(cache.pre[l - 1]));
    }
  }
}

Eigen::MatrixXd Mlp::input_gradient_batch(const Eigen::MatrixXd& x) const {
  if (spec_.output_dim != 1) {
    throw Error(ErrorKind::kDimensionMismatch, "input_gradient requires a scalar-output network");
  }
  MlpCache cache;
  forward_batch(x, cache);
  const int n = spec_.num_layers();
  Eigen::MatrixXd g = params_.weights[n - 1].transpose().replicate(1, x.cols());
  for (int l = n - 2; l >= 0; --l) {
    g = params_.weights[l].transpose() * g.cwiseProduct(relu_mask(cache.pre[l]));
  }
  return g;
}

Eigen::VectorXd Mlp::input_gradient(const Eigen::VectorXd& x) const {
  return input_gradient_batch(x);
}

double Mlp::input_grad_norm_sq(const Eigen::MatrixXd& x, MlpParams* grads, double scale) const {
  if (spec_.output_dim != 1) {
    throw Error(ErrorKind::kDimensionMismatch, "input gradient penalty requires a scalar-output network");
  }
  MlpCache cache;
  forward_batch(x, cache);
  const int n = spec_.num_layers();
  const Eigen::Index batch = x.cols();
  // Input-gradient chain: g_{n-1} = W_{n-1}^T, delta_l = m_l * g_l,
  // g_{l-1} = W_l^T delta_l. Keep every delta for the second pass.
  std::vector<Eigen::MatrixXd> masks(n - 1);
  std::vector<Eigen::MatrixXd> deltas(n);
  deltas[n - 1] = Eigen::MatrixXd::Ones(1, batch);
  Eigen::MatrixXd g = params_.weights[n - 1].transpose().replicate(1, batch);
  for (int l = n - 2; l >= 0; --l) {
    masks[l] = relu_mask(cache.pre[l]);
    deltas[l] = g.cwiseProduct(masks[l]);
    g = params_.weights[l].transpose() * deltas[l];
  }
  const double value = g.squaredNorm();
  if (grads == nullptr) return value;
  // Second pass, forward through the chain: u is d(value)/d(g_{l}).
  Eigen::MatrixXd u = 2.0 * g;
  for (int l = 0; l < n; ++l) {
    grads->weights[l].noalias() += scale * deltas[l] * u.transpose();
    if (l + 1 < n) u = (params_.weights[l] * u).cwiseProduct(masks[l]);
  }
  return value;
}

MlpParams backward_single(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& output_grad,
                          Eigen::VectorXd* input_grad) {
  MlpCache cache;
  net.forward_batch(x, cache);
  MlpParams grads = MlpParams::zeros(net.spec());
  Eigen::MatrixXd gin;
  net.backward(cache, output_grad, grads, input_grad ? &gin : nullptr);
  if (input_grad) *input_grad = gin.col(0);
  return grads;
}

MlpParams grad_of_input_grad_norm(const Mlp& net, const Eigen::VectorXd& x) {
  MlpParams grads = MlpParams::zeros(net.spec());
  net.input_grad_norm_sq(x, &grads);
  return grads;
}

SgdMomentum::SgdMomentum(const MlpSpec& spec, double stepsize, double momentum)
    : stepsize_(stepsize), momentum_(momentum), velocity_(MlpParams::zeros(spec)) {}

bool SgdMomentum::step(MlpParams& params, const MlpParams& grads) {
  if (!grads.all_finite()) {
    ++rejected_;
    return false;
  }
  if (!velocity_.same_shape(params)) {
    throw Error(ErrorKind::kDimensionMismatch, "optimizer state does not match parameters");
  }
  velocity_.scale(momentum_);
  velocity_.axpy(1.0, grads);
  params.axpy(-stepsize_, velocity_);
  return true;
}

double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& sigma) {
  const double d = static_cast<double>(action.size());
  const double quad = (action - mean).cwiseQuotient(sigma).squaredNorm();
  return -0.5 * quad - sigma.array().log().sum() - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

GaussianSample gaussian_sample_logprob(const Eigen::VectorXd& mean, const Eigen::VectorXd& sigma,
                                       Rng& rng) {
  if (!(sigma.array() > 0.0).all()) throw Error(ErrorKind::kInvalidInput, "action std must be positive");
  GaussianSample s;
  s.action.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) s.action[i] = mean[i] + sigma[i] * standard_normal(rng);
  s.log_prob = gaussian_log_prob(s.action, mean, sigma);
  return s;
}

GaussianPolicy::GaussianPolicy(Mlp mean_net, Eigen::VectorXd sigma)
    : net_(std::move(mean_net)), sigma_(std::move(sigma)) {
  if (sigma_.size() != net_.spec().output_dim) {
    throw Error(ErrorKind::kDimensionMismatch, "one action std per action dimension required");
  }
  if (!(sigma_.array() > 0.0).all()) throw Error(ErrorKind::kInvalidInput, "action std must be positive");
}

GaussianSample GaussianPolicy::sample(const Eigen::VectorXd& obs, Rng& rng) const {
  return gaussian_sample_logprob(net_.forward(obs), sigma_, rng);
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
  return gaussian_log_prob(action, net_.forward(obs), sigma_);
}

}  // namespace amp
