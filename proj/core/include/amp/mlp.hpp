#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "amp/rng.hpp"

namespace amp {

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;  // ReLU layers
  int output_dim = 1;       // linear output layer

  int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_input(int layer) const { return layer == 0 ? input_dim : hidden[layer - 1]; }
  int layer_output(int layer) const { return layer + 1 == num_layers() ? output_dim : hidden[layer]; }
  void validate() const;
  std::string describe() const;  // e.g. "24-256-128-1"
  bool operator==(const MlpSpec& other) const = default;
};

/// Weights and biases of every layer. Also used for gradients and momentum.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // out x in
  std::vector<Eigen::VectorXd> biases;

  static MlpParams zeros(const MlpSpec& spec);
  std::size_t size() const;
  bool all_finite() const;
  double squared_norm() const;
  void set_zero();
  void axpy(double alpha, const MlpParams& x);  // this += alpha * x
  void scale(double alpha);
  bool same_shape(const MlpParams& other) const;

  // Flat views in layer order (W0, b0, W1, b1, ...), column-major weights.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

/// Activations recorded by a batched forward pass; columns are samples.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activations of each layer
  Eigen::MatrixXd output;
};

/// Dense ReLU network with a linear output layer, 64-bit throughout.
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, MlpParams params);
  // Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases. The output
  // layer is multiplied by `output_scale`.
  Mlp(MlpSpec spec, Rng& rng, double output_scale = 1.0);

  const MlpSpec& spec() const { return spec_; }
  const MlpParams& params() const { return params_; }
  MlpParams& params() { return params_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, MlpCache& cache) const;
  double forward_scalar(const Eigen::VectorXd& x) const;

  /// Reverse mode: adds d(loss)/d(params) into `grads` given d(loss)/d(output)
  /// for each sample column. Writes d(loss)/d(input) when `input_grad` is set.
  void backward(const MlpCache& cache, const Eigen::MatrixXd& output_grad, MlpParams& grads,
                Eigen::MatrixXd* input_grad = nullptr) const;

  /// Gradient of the scalar output with respect to the input.
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd input_gradient_batch(const Eigen::MatrixXd& x) const;

  /// Sum over columns of ||grad_x D(x)||^2 for a scalar-output net; adds
  /// `scale` times its parameter gradient into `grads` (double backprop with
  /// the ReLU masks held fixed).
  double input_grad_norm_sq(const Eigen::MatrixXd& x, MlpParams* grads, double scale = 1.0) const;

 private:
  void check_input(Eigen::Index rows) const;

  MlpSpec spec_;
  MlpParams params_;
};

/// Convenience wrappers on a single input.
MlpParams backward_single(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& output_grad,
                          Eigen::VectorXd* input_grad = nullptr);
MlpParams grad_of_input_grad_norm(const Mlp& net, const Eigen::VectorXd& x);

/// m <- momentum * m + g; p <- p - stepsize * m. A step with a non-finite
/// gradient is rejected and reported by returning false.
class SgdMomentum {
 public:
  SgdMomentum() = default;
  SgdMomentum(const MlpSpec& spec, double stepsize, double momentum);

  bool step(MlpParams& params, const MlpParams& grads);
  double stepsize() const { return stepsize_; }
  double momentum() const { return momentum_; }
  void set_stepsize(double s) { stepsize_ = s; }
  const MlpParams& velocity() const { return velocity_; }
  MlpParams& velocity() { return velocity_; }
  int rejected_steps() const { return rejected_; }

 private:
  double stepsize_ = 0.0;
  double momentum_ = 0.0;
  MlpParams velocity_;
  int rejected_ = 0;
};

struct GaussianSample {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

// Diagonal Gaussian log-density.
double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& sigma);
GaussianSample gaussian_sample_logprob(const Eigen::VectorXd& mean, const Eigen::VectorXd& sigma,
                                       Rng& rng);

/// Policy: MLP mean with a fixed diagonal covariance that training never
/// changes.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(Mlp mean_net, Eigen::VectorXd sigma);

  const Mlp& mean_net() const { return net_; }
  Mlp& mean_net() { return net_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  int action_dim() const { return static_cast<int>(sigma_.size()); }

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const { return net_.forward(obs); }
  GaussianSample sample(const Eigen::VectorXd& obs, Rng& rng) const;
  double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;

 private:
  Mlp net_;
  Eigen::VectorXd sigma_;
};

}  // namespace amp
