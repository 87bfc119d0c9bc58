#include "amp/prior.hpp"

#include <algorithm>
#include <cmath>

#include "amp/error.hpp"

namespace amp {

double style_reward(double d) { return std::max(0.0, 1.0 - 0.25 * (d - 1.0) * (d - 1.0)); }

double lsgan_loss(const Eigen::VectorXd& real, const Eigen::VectorXd& fake) {
  if (real.size() == 0 || fake.size() == 0) throw Error(ErrorKind::kEmpty, "lsgan_loss needs non-empty batches");
  return (real.array() - 1.0).square().mean() + (fake.array() + 1.0).square().mean();
}

PenaltyResult gradient_penalty(const Mlp& disc, const Eigen::MatrixXd& real_inputs) {
  if (real_inputs.cols() == 0) throw Error(ErrorKind::kEmpty, "gradient_penalty needs a non-empty batch");
  PenaltyResult r;
  r.grads = MlpParams::zeros(disc.spec());
  const double inv = 1.0 / static_cast<double>(real_inputs.cols());
  r.penalty = disc.input_grad_norm_sq(real_inputs, &r.grads, inv) * inv;
  return r;
}

DiscObjective discriminator_objective(const Mlp& disc, const Eigen::MatrixXd& real,
                                      const Eigen::MatrixXd& fake, double w_gp, MlpParams* grads) {
  if (real.cols() == 0 || fake.cols() == 0) throw Error(ErrorKind::kEmpty, "discriminator batches are empty");
  DiscObjective o;
  MlpCache real_cache;
  MlpCache fake_cache;
  const Eigen::VectorXd d_real = disc.forward_batch(real, real_cache).row(0).transpose();
  const Eigen::VectorXd d_fake = disc.forward_batch(fake, fake_cache).row(0).transpose();
  o.loss = lsgan_loss(d_real, d_fake);
  o.mean_real = d_real.mean();
  o.mean_fake = d_fake.mean();
  const double nr = static_cast<double>(real.cols());
  const double nf = static_cast<double>(fake.cols());
  if (grads != nullptr) {
    disc.backward(real_cache, (2.0 / nr) * (d_real.array() - 1.0).matrix().transpose(), *grads);
    disc.backward(fake_cache, (2.0 / nf) * (d_fake.array() + 1.0).matrix().transpose(), *grads);
  }
  if (w_gp > 0.0) {
    o.penalty = disc.input_grad_norm_sq(real, grads, 0.5 * w_gp / nr) / nr;
  } else {
    o.penalty = disc.input_grad_norm_sq(real, nullptr) / nr;
  }
  o.objective = o.loss + 0.5 * w_gp * o.penalty;
  return o;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorKind::kInvalidInput, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) {
  if (entries_.size() < capacity_) {
    entries_.emplace_back(obs, next_obs);
    return;
  }
  entries_[head_] = {obs, next_obs};
  head_ = (head_ + 1) % capacity_;
}

void ReplayBuffer::push_sequence(const std::vector<Eigen::VectorXd>& observations) {
  for (std::size_t t = 0; t + 1 < observations.size(); ++t) push(observations[t], observations[t + 1]);
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> ReplayBuffer::sample(int count, Rng& rng) const {
  if (entries_.empty()) {
    throw Error(ErrorKind::kEmpty, "replay buffer is empty; collect rollouts before updating the discriminator");
  }
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(entries_[uniform_index(rng, entries_.size())]);
  return out;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> ReplayBuffer::ordered() const {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  out.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) out.push_back(entries_[(head_ + i) % entries_.size()]);
  return out;
}

void ReplayBuffer::restore(std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> entries,
                           std::size_t head) {
  if (entries.size() > capacity_ || (head != 0 && head >= entries.size())) {
    throw Error(ErrorKind::kInvalidInput, "replay buffer state is inconsistent");
  }
  entries_ = std::move(entries);
  head_ = head;
}

MotionPrior::MotionPrior(Mlp disc, FeatureStats stats, double stepsize, double momentum)
    : disc_(std::move(disc)), stats_(std::move(stats)), opt_(disc_.spec(), stepsize, momentum) {
  if (disc_.spec().input_dim != 2 * stats_.dim() || disc_.spec().output_dim != 1) {
    throw Error(ErrorKind::kDimensionMismatch,
                "discriminator " + disc_.spec().describe() + " does not take observation pairs of size " +
                    std::to_string(stats_.dim()));
  }
}

Eigen::VectorXd MotionPrior::input(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) const {
  Eigen::VectorXd x(2 * stats_.dim());
  x << stats_.normalize(obs), stats_.normalize(next_obs);
  return x;
}

double MotionPrior::score(const Eigen::VectorXd& obs, const Eigen::VectorXd& next_obs) const {
  return disc_.forward_scalar(input(obs, next_obs));
}

namespace {

Eigen::MatrixXd stack_pairs(const MotionPrior& prior,
                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
  Eigen::MatrixXd x(2 * prior.obs_dim(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) x.col(i) = prior.input(pairs[i].first, pairs[i].second);
  return x;
}

}  // namespace

DiscDiagnostics MotionPrior::update(const MotionDataset& dataset, const ReplayBuffer& replay,
                                    const DiscConfig& cfg, int updates, Rng& rng) {
  if (replay.empty()) {
    throw Error(ErrorKind::kEmpty, "replay buffer is empty; collect rollouts before updating the discriminator");
  }
  if (dataset.obs_dim() != stats_.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "dataset observations do not match the discriminator");
  }
  DiscDiagnostics diag;
  updates = std::max(1, updates);
  MlpParams grads = MlpParams::zeros(disc_.spec());
  for (int u = 0; u < updates; ++u) {
    const Eigen::MatrixXd real = stack_pairs(*this, dataset.sample_transitions(cfg.batch_size, rng, false));
    const Eigen::MatrixXd fake = stack_pairs(*this, replay.sample(cfg.batch_size, rng));
    grads.set_zero();
    const DiscObjective o = discriminator_objective(disc_, real, fake, cfg.w_gp, &grads);
    if (!opt_.step(disc_.params(), grads)) ++diag.rejected;
    diag.mean_d_real += o.mean_real;
    diag.mean_d_fake += o.mean_fake;
    diag.penalty += o.penalty;
    diag.loss += o.loss;
  }
  diag.updates = updates;
  diag.mean_d_real /= updates;
  diag.mean_d_fake /= updates;
  diag.penalty /= updates;
  diag.loss /= updates;
  return diag;
}

double MotionPrior::real_gradient_norm_sq(const MotionDataset& dataset, int count, Rng& rng) const {
  const Eigen::MatrixXd real = stack_pairs(*this, dataset.sample_transitions(count, rng, false));
  return disc_.input_grad_norm_sq(real, nullptr) / static_cast<double>(count);
}

}  // namespace amp
