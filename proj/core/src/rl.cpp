#include "amp/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "amp/error.hpp"

namespace amp {

double combine_rewards(double task_reward, double style_reward, double w_task, double w_style) {
  return w_task * task_reward + w_style * style_reward;
}

namespace {

void check_lengths(const std::vector<double>& rewards, const std::vector<double>& values) {
  if (rewards.size() != values.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "rewards and values must have equal length");
  }
}

}  // namespace

std::vector<double> td_lambda_targets(const std::vector<double>& rewards, const std::vector<double>& values,
                                      double bootstrap, double gamma, double lambda) {
  check_lengths(rewards, values);
  const std::size_t n = rewards.size();
  std::vector<double> g(n);
  double next_value = bootstrap;
  double next_return = bootstrap;
  for (std::size_t i = n; i-- > 0;) {
    g[i] = rewards[i] + gamma * ((1.0 - lambda) * next_value + lambda * next_return);
    next_value = values[i];
    next_return = g[i];
  }
  return g;
}

std::vector<double> gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                   double bootstrap, double gamma, double lambda) {
  check_lengths(rewards, values);
  const std::size_t n = rewards.size();
  std::vector<double> a(n);
  double next_value = bootstrap;
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    acc = delta + gamma * lambda * acc;
    a[i] = acc;
    next_value = values[i];
  }
  return a;
}

void normalize_in_place(std::vector<double>& x) {
  if (x.empty()) return;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(var / static_cast<double>(x.size())), 1e-8);
  for (double& v : x) v = (v - mean) / sd;
}

RunningNormalizer::RunningNormalizer(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

void RunningNormalizer::update(const std::vector<Eigen::VectorXd>& samples) {
  // Chan et al. parallel merge of the batch moments into the running ones.
  if (samples.empty()) return;
  const double n = static_cast<double>(samples.size());
  Eigen::VectorXd batch_mean = Eigen::VectorXd::Zero(dim());
  for (const auto& s : samples) batch_mean += s;
  batch_mean /= n;
  Eigen::VectorXd batch_m2 = Eigen::VectorXd::Zero(dim());
  for (const auto& s : samples) batch_m2 += (s - batch_mean).cwiseAbs2();
  const double total = count_ + n;
  const Eigen::VectorXd delta = batch_mean - mean_;
  mean_ += delta * (n / total);
  m2_ += batch_m2 + delta.cwiseAbs2() * (count_ * n / total);
  count_ = total;
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "observation does not match the normalizer");
  }
  if (count_ < 2.0) return x.cwiseMax(-kClip).cwiseMin(kClip);
  const Eigen::VectorXd sd = (m2_ / count_).cwiseSqrt().cwiseMax(1e-2);
  return (x - mean_).cwiseQuotient(sd).cwiseMax(-kClip).cwiseMin(kClip);
}

void RunningNormalizer::restore(double count, Eigen::VectorXd mean, Eigen::VectorXd m2) {
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

namespace {

constexpr std::uint64_t kCollectStream = 0xC011EC7;

Trajectory run_episode(Environment& env, const Agent& agent, const MotionPrior* prior,
                       const CollectConfig& cfg, std::uint64_t index) {
  Rng rng = make_rng(cfg.seed, {cfg.iteration, kCollectStream, index});
  Trajectory traj;
  env.reset(rng);
  Eigen::VectorXd phi = env.disc_observation();
  traj.disc_observations.push_back(phi);
  for (;;) {
    const Eigen::VectorXd obs = env.observation();
    const Eigen::VectorXd x = agent.input(obs);
    GaussianSample s;
    if (cfg.mean_actions) {
      s.action = agent.policy.mean(x);
      s.log_prob = gaussian_log_prob(s.action, s.action, agent.policy.sigma());
    } else {
      s = agent.policy.sample(x, rng);
    }
    const double value = agent.value.forward_scalar(x);
    const StepResult r = env.step(s.action, rng);
    const Eigen::VectorXd next_phi = env.disc_observation();
    const double rs = prior ? prior->reward(phi, next_phi) : 0.0;
    traj.observations.push_back(obs);
    traj.actions.push_back(std::move(s.action));
    traj.log_probs.push_back(s.log_prob);
    traj.task_rewards.push_back(r.task_reward);
    traj.style_rewards.push_back(rs);
    traj.rewards.push_back(combine_rewards(r.task_reward, rs, cfg.w_task, cfg.w_style));
    traj.values.push_back(value);
    traj.disc_observations.push_back(next_phi);
    phi = next_phi;
    if (r.end != EndKind::kNone) {
      traj.end = r.end;
      break;
    }
  }
  traj.final_value = agent.value.forward_scalar(agent.input(env.observation()));
  return traj;
}

}  // namespace

std::vector<Trajectory> collect_trajectories(const EnvFactory& make_env, const Agent& agent,
                                             const MotionPrior* prior, const CollectConfig& cfg) {
  const int workers = std::max(1, cfg.workers);
  std::vector<std::unique_ptr<Environment>> envs;
  for (int w = 0; w < workers; ++w) envs.push_back(make_env());

  std::vector<Trajectory> out;
  long total = 0;
  while (total < cfg.min_samples) {
    const std::uint64_t base = out.size();
    std::vector<Trajectory> round(workers);
    if (workers == 1) {
      round[0] = run_episode(*envs[0], agent, prior, cfg, base);
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(workers);
      for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          try {
            round[w] = run_episode(*envs[w], agent, prior, cfg, base + w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (auto& t : round) {
      if (total >= cfg.min_samples) break;
      total += t.length();
      out.push_back(std::move(t));
    }
  }
  return out;
}

PpoBatch build_ppo_batch(const std::vector<Trajectory>& trajectories, const Agent& agent, const PpoConfig& cfg) {
  int n = 0;
  for (const auto& t : trajectories) n += t.length();
  if (n == 0) throw Error(ErrorKind::kEmpty, "no samples to build a PPO batch");
  const int obs_dim = agent.policy.mean_net().spec().input_dim;
  PpoBatch b;
  b.inputs.resize(obs_dim, n);
  b.actions.resize(agent.policy.action_dim(), n);
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.targets.resize(n);
  std::vector<double> all_adv;
  all_adv.reserve(n);
  int k = 0;
  for (const auto& t : trajectories) {
    const auto adv = gae_advantages(t.rewards, t.values, t.bootstrap(), cfg.gamma, cfg.lambda);
    const auto tgt = td_lambda_targets(t.rewards, t.values, t.bootstrap(), cfg.gamma, cfg.lambda);
    for (int i = 0; i < t.length(); ++i, ++k) {
      b.inputs.col(k) = agent.input(t.observations[i]);
      b.actions.col(k) = t.actions[i];
      b.log_probs[k] = t.log_probs[i];
      b.targets[k] = tgt[i];
      all_adv.push_back(adv[i]);
    }
  }
  if (cfg.normalize_advantages) normalize_in_place(all_adv);
  b.advantages = Eigen::Map<const Eigen::VectorXd>(all_adv.data(), n);
  return b;
}

double ppo_policy_gradient(const GaussianPolicy& policy, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_probs,
                           const Eigen::VectorXd& advantages, double clip, MlpParams& grads,
                           double* mean_ratio, double* clip_fraction) {
  const Mlp& net = policy.mean_net();
  const Eigen::Index m = inputs.cols();
  MlpCache cache;
  const Eigen::MatrixXd mean = net.forward_batch(inputs, cache);
  const Eigen::ArrayXd inv_var = policy.sigma().array().square().inverse();
  Eigen::MatrixXd out_grad = Eigen::MatrixXd::Zero(mean.rows(), m);
  double loss = 0.0;
  double ratio_sum = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double logp = gaussian_log_prob(actions.col(i), mean.col(i), policy.sigma());
    const double ratio = std::exp(logp - old_log_probs[i]);
    const double a = advantages[i];
    const double unclipped = ratio * a;
    const double clipped_term = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    ratio_sum += ratio;
    if (clipped_term < unclipped) {
      loss -= clipped_term;
      ++clipped;  // gradient through the clipped branch is zero
    } else {
      loss -= unclipped;
      // d(-ratio a)/d(mean) = -a ratio (action - mean) / sigma^2
      out_grad.col(i) = (-a * ratio) * ((actions.col(i) - mean.col(i)).array() * inv_var).matrix();
    }
  }
  out_grad /= static_cast<double>(m);
  net.backward(cache, out_grad, grads);
  if (mean_ratio) *mean_ratio = ratio_sum / static_cast<double>(m);
  if (clip_fraction) *clip_fraction = static_cast<double>(clipped) / static_cast<double>(m);
  return loss / static_cast<double>(m);
}

PpoDiagnostics ppo_update(Agent& agent, SgdMomentum& policy_opt, SgdMomentum& value_opt,
                          const PpoBatch& batch, const PpoConfig& cfg, Rng& rng) {
  PpoDiagnostics d;
  const int n = batch.size();
  const int mb = std::max(1, std::min(cfg.minibatch, n));
  std::vector<int> order(n);
  MlpParams pgrad = MlpParams::zeros(agent.policy.mean_net().spec());
  MlpParams vgrad = MlpParams::zeros(agent.value.spec());
  double ratio_sum = 0.0;
  double clip_sum = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
    for (int start = 0; start + mb <= n; start += mb) {
      Eigen::MatrixXd x(batch.inputs.rows(), mb);
      Eigen::MatrixXd a(batch.actions.rows(), mb);
      Eigen::VectorXd lp(mb), adv(mb), tgt(mb);
      for (int j = 0; j < mb; ++j) {
        const int idx = order[start + j];
        x.col(j) = batch.inputs.col(idx);
        a.col(j) = batch.actions.col(idx);
        lp[j] = batch.log_probs[idx];
        adv[j] = batch.advantages[idx];
        tgt[j] = batch.targets[idx];
      }
      pgrad.set_zero();
      double ratio = 0.0;
      double clipf = 0.0;
      const double ploss = ppo_policy_gradient(agent.policy, x, a, lp, adv, cfg.clip, pgrad, &ratio, &clipf);

      vgrad.set_zero();
      MlpCache cache;
      const Eigen::MatrixXd v = agent.value.forward_batch(x, cache);
      const Eigen::RowVectorXd err = v.row(0) - tgt.transpose();
      const double vloss = err.squaredNorm() / mb;
      agent.value.backward(cache, (2.0 / mb) * err, vgrad);

      if (!std::isfinite(ploss) || !std::isfinite(vloss)) {
        ++d.skipped;
        continue;
      }
      if (!policy_opt.step(agent.policy.mean_net().params(), pgrad)) ++d.skipped;
      if (!value_opt.step(agent.value.params(), vgrad)) ++d.skipped;
      d.policy_loss += ploss;
      d.value_loss += vloss;
      ratio_sum += ratio;
      clip_sum += clipf;
      ++d.minibatches;
    }
  }
  if (d.minibatches > 0) {
    d.policy_loss /= d.minibatches;
    d.value_loss /= d.minibatches;
    d.mean_ratio = ratio_sum / d.minibatches;
    d.clip_fraction = clip_sum / d.minibatches;
  }
  return d;
}

}  // namespace amp
