#include "amp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "amp/error.hpp"
#include "amp/sim.hpp"

namespace amp {
namespace {

constexpr std::uint64_t kEvalStream = 0xE7A1;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

EpisodeRecord run_episode(const EnvFactory& make_env, const Agent& agent, const MotionPrior* prior,
                          const MotionDataset& dataset, const PoseSequence* reference,
                          const EvalOptions& opt, std::uint64_t index) {
  Rng rng = make_rng(opt.seed, {kEvalStream, index});
  std::unique_ptr<Environment> env = make_env();
  const CharacterModel& model = env->model();
  int max_steps = std::numeric_limits<int>::max();
  if (opt.imitation) {
    env->reset_to(dataset.reference_state(opt.clip, 0), rng);
    const MotionClip& clip = dataset.clips().at(opt.clip);
    max_steps = std::max(
        1, static_cast<int>(std::lround(clip.duration() * env->sim_config().control_hz)));
  } else {
    env->reset(rng);
  }
  EpisodeRecord rec;
  std::vector<double> task_rewards;
  double style_sum = 0.0;
  rec.poses.push_back(pose_points(model, env->state().q));
  Eigen::VectorXd phi = env->disc_observation();
  while (rec.length < max_steps) {
    const Eigen::VectorXd x = agent.input(env->observation());
    const Eigen::VectorXd action = opt.mean_actions ? agent.policy.mean(x) : agent.policy.sample(x, rng).action;
    const StepResult r = env->step(action, rng);
    ++rec.length;
    task_rewards.push_back(r.task_reward);
    const Eigen::VectorXd next_phi = env->disc_observation();
    if (prior != nullptr) style_sum += prior->reward(phi, next_phi);
    phi = next_phi;
    rec.poses.push_back(pose_points(model, env->state().q));
    if (r.end != EndKind::kNone) {
      rec.end = r.end;
      break;
    }
  }
  if (rec.end == EndKind::kNone) rec.end = EndKind::kTimeout;
  rec.task_return = normalized_task_return(task_rewards, env->horizon_steps());
  rec.style_reward = style_sum / rec.length;
  if (reference != nullptr) rec.dtw_error = dtw_align(rec.poses, *reference).mean_error;
  return rec;
}

}  // namespace

PoseFrame pose_points(const CharacterModel& model, const Eigen::VectorXd& q) {
  const Kinematics kin(model, q, Eigen::VectorXd::Zero(q.size()));
  PoseFrame f;
  f.root = kin.link_origin(0);
  for (const Joint& j : model.joints) f.joints.push_back(kin.link_origin(j.child));
  for (const EndEffector& e : model.end_effectors) f.joints.push_back(kin.point(e.link, e.offset));
  return f;
}

PoseSequence pose_sequence(const CharacterModel& model, const MotionClip& clip) {
  PoseSequence seq;
  seq.reserve(clip.frames.size());
  for (const Pose& p : clip.frames) seq.push_back(pose_points(model, p.to_state().q));
  return seq;
}

double pose_error(const PoseFrame& a, const PoseFrame& b) {
  if (a.joints.size() != b.joints.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "pose frames track " + std::to_string(a.joints.size()) + " and " +
                                                   std::to_string(b.joints.size()) + " points");
  }
  if (a.joints.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < a.joints.size(); ++j) {
    sum += ((a.joints[j] - a.root) - (b.joints[j] - b.root)).norm();
  }
  return sum / static_cast<double>(a.joints.size());
}

DtwResult dtw_align(const PoseSequence& a, const PoseSequence& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::kEmpty, "dtw_align needs non-empty sequences");
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // acc(i, j): minimum cost of a path from (0, 0) to (i, j); len breaks ties.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Constant(n, m, kInf);
  Eigen::MatrixXi len = Eigen::MatrixXi::Zero(n, m);
  Eigen::MatrixXi from = Eigen::MatrixXi::Constant(n, m, -1);  // 0 diag, 1 up (i-1), 2 left (j-1)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = pose_error(a[i], b[j]);
      if (i == 0 && j == 0) {
        acc(0, 0) = c;
        len(0, 0) = 1;
        continue;
      }
      double best = kInf;
      int best_len = 0;
      int dir = -1;
      auto consider = [&](int pi, int pj, int d) {
        if (pi < 0 || pj < 0) return;
        const double v = acc(pi, pj);
        if (v < best || (v == best && len(pi, pj) < best_len)) {
          best = v;
          best_len = len(pi, pj);
          dir = d;
        }
      };
      consider(i - 1, j - 1, 0);
      consider(i - 1, j, 1);
      consider(i, j - 1, 2);
      acc(i, j) = best + c;
      len(i, j) = best_len + 1;
      from(i, j) = dir;
    }
  }
  DtwResult r;
  r.total_cost = acc(n - 1, m - 1);
  int i = n - 1;
  int j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const int d = from(i, j);
    if (d == 0 || d == 1) --i;
    if (d == 0 || d == 2) --j;
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());
  r.mean_error = r.total_cost / static_cast<double>(r.path.size());
  return r;
}

double normalized_task_return(const std::vector<double>& task_rewards, int horizon_steps) {
  if (horizon_steps <= 0) throw Error(ErrorKind::kInvalidInput, "horizon must be positive");
  double sum = 0.0;
  for (double r : task_rewards) sum += r;
  return sum / static_cast<double>(horizon_steps);
}

EvalReport evaluate(const EnvFactory& make_env, const Agent& agent, const MotionPrior* prior,
                    const MotionDataset& dataset, const EvalOptions& options) {
  if (options.episodes < 1) throw Error(ErrorKind::kInvalidInput, "evaluation needs at least one episode");
  if (options.imitation && (options.clip < 0 || options.clip >= static_cast<int>(dataset.clips().size()))) {
    throw Error(ErrorKind::kInvalidInput, "reference clip index out of range");
  }
  PoseSequence reference;
  if (options.imitation) reference = pose_sequence(dataset.model(), dataset.clips()[options.clip]);
  const PoseSequence* ref = options.imitation ? &reference : nullptr;

  EvalReport report;
  report.mode = options.imitation ? "imitate" : "task";
  report.episodes = options.episodes;
  report.records.resize(options.episodes);
  const int workers = std::clamp(options.workers, 1, options.episodes);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      for (int e = w; e < options.episodes; e += workers) {
        report.records[e] = run_episode(make_env, agent, prior, dataset, ref, options, e);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> dtw, ret, style, length;
  for (const auto& r : report.records) {
    dtw.push_back(r.dtw_error);
    ret.push_back(r.task_return);
    style.push_back(r.style_reward);
    length.push_back(r.length);
  }
  report.mean_dtw_error = mean_of(dtw);
  report.std_dtw_error = std_of(dtw);
  report.mean_return = mean_of(ret);
  report.std_return = std_of(ret);
  report.mean_style_reward = mean_of(style);
  report.mean_length = mean_of(length);
  report.min_length = static_cast<int>(*std::min_element(length.begin(), length.end()));
  report.max_length = static_cast<int>(*std::max_element(length.begin(), length.end()));
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["episodes"] = episodes;
  j["mean_dtw_error"] = mean_dtw_error;
  j["std_dtw_error"] = std_dtw_error;
  j["mean_return"] = mean_return;
  j["std_return"] = std_return;
  j["mean_style_reward"] = mean_style_reward;
  j["mean_length"] = mean_length;
  j["min_length"] = min_length;
  j["max_length"] = max_length;
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& r : records) {
    eps.push_back({{"length", r.length},
                   {"task_return", r.task_return},
                   {"style_reward", r.style_reward},
                   {"dtw_error", r.dtw_error},
                   {"end", to_string(r.end)}});
  }
  j["per_episode"] = eps;
  return j.dump(2);
}

std::string EvalReport::csv_header() {
  return "mode,episodes,mean_dtw_error,std_dtw_error,mean_return,std_return,mean_style_reward,mean_length,"
         "min_length,max_length";
}

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out.precision(17);
  out << mode << ',' << episodes << ',' << mean_dtw_error << ',' << std_dtw_error << ',' << mean_return << ','
      << std_return << ',' << mean_style_reward << ',' << mean_length << ',' << min_length << ',' << max_length;
  return out.str();
}

std::string poses_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(9);
  out << "episode,step,point,x,y\n";
  for (std::size_t e = 0; e < report.records.size(); ++e) {
    const auto& poses = report.records[e].poses;
    for (std::size_t t = 0; t < poses.size(); ++t) {
      out << e << ',' << t << ",root," << poses[t].root.x() << ',' << poses[t].root.y() << '\n';
      for (std::size_t p = 0; p < poses[t].joints.size(); ++p) {
        out << e << ',' << t << ',' << p << ',' << poses[t].joints[p].x() << ',' << poses[t].joints[p].y() << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace amp
