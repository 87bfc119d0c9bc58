#include "amp/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amp/error.hpp"

namespace amp {
namespace {

constexpr char kMagic[8] = {'A', 'M', 'P', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  void vec(const Eigen::VectorXd& v) { mat(v); }
  void spec(const MlpSpec& s) {
    u64(static_cast<std::uint64_t>(s.input_dim));
    u64(s.hidden.size());
    for (int h : s.hidden) u64(static_cast<std::uint64_t>(h));
    u64(static_cast<std::uint64_t>(s.output_dim));
  }
  void params(const MlpParams& p) {
    u64(p.weights.size());
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      mat(p.weights[l]);
      vec(p.biases[l]);
    }
  }
  void optimizer(const SgdMomentum& o) {
    f64(o.stepsize());
    f64(o.momentum());
    params(o.velocity());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  std::uint64_t u64() {
    std::uint64_t v = 0;
    read(&v, sizeof v);
    return v;
  }
  double f64() {
    double v = 0;
    read(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = bounded(u64());
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  Eigen::MatrixXd mat() {
    const std::uint64_t r = bounded(u64());
    const std::uint64_t c = bounded(u64());
    Eigen::MatrixXd m(r, c);
    read(m.data(), r * c * sizeof(double));
    return m;
  }
  Eigen::VectorXd vec() {
    Eigen::MatrixXd m = mat();
    if (m.cols() != 1 && m.size() != 0) fail("expected a vector");
    return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
  }
  MlpSpec spec() {
    MlpSpec s;
    s.input_dim = static_cast<int>(bounded(u64()));
    const std::uint64_t n = bounded(u64());
    for (std::uint64_t i = 0; i < n; ++i) s.hidden.push_back(static_cast<int>(bounded(u64())));
    s.output_dim = static_cast<int>(bounded(u64()));
    return s;
  }
  MlpParams params(const MlpSpec& s) {
    MlpParams p;
    const std::uint64_t n = bounded(u64());
    for (std::uint64_t l = 0; l < n; ++l) {
      p.weights.push_back(mat());
      p.biases.push_back(vec());
    }
    if (!p.same_shape(MlpParams::zeros(s))) fail("parameters do not match network " + s.describe());
    return p;
  }
  SgdMomentum optimizer(const MlpSpec& s) {
    const double step = f64();
    const double mom = f64();
    SgdMomentum o(s, step, mom);
    o.velocity() = params(s);
    return o;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kSpecMismatch, "checkpoint '" + path_ + "': " + what);
  }

 private:
  std::uint64_t bounded(std::uint64_t n) const {
    if (n > (1ULL << 32)) fail("corrupt size field");
    return n;
  }
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
  }

  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const TrainingState& s) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write checkpoint '" + tmp + "'");
    out.write(kMagic, sizeof kMagic);
    Writer w(out);
    w.u64(kCheckpointVersion);
    w.str(config_to_text(s.config));
    w.str(s.character);
    w.u64(s.iteration);
    w.u64(static_cast<std::uint64_t>(s.samples));

    const Mlp& pnet = s.agent.policy.mean_net();
    w.spec(pnet.spec());
    w.params(pnet.params());
    w.vec(s.agent.policy.sigma());
    w.optimizer(s.policy_opt);
    w.spec(s.agent.value.spec());
    w.params(s.agent.value.params());
    w.optimizer(s.value_opt);
    w.u64(s.agent.normalize_inputs ? 1 : 0);
    w.f64(s.agent.normalizer.count());
    w.vec(s.agent.normalizer.mean());
    w.vec(s.agent.normalizer.m2());

    w.spec(s.prior.disc().spec());
    w.params(s.prior.disc().params());
    w.optimizer(s.prior.optimizer());
    w.vec(s.prior.stats().mean);
    w.vec(s.prior.stats().std);

    w.u64(s.replay.capacity());
    w.u64(s.replay.head());
    const auto& entries = s.replay.storage();
    w.u64(entries.size());
    for (const auto& [a, b] : entries) {
      w.vec(a);
      w.vec(b);
    }
    if (!out) throw Error(ErrorKind::kIo, "failed writing checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

TrainingState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
  Reader r(in, path);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("not an AMP checkpoint");
  const std::uint64_t version = r.u64();
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version) + " (expected " +
           std::to_string(kCheckpointVersion) + ")");
  }
  TrainingState s;
  apply_config_text(s.config, r.str(), path);
  s.character = r.str();
  s.iteration = r.u64();
  s.samples = static_cast<long long>(r.u64());

  const MlpSpec pspec = r.spec();
  MlpParams pparams = r.params(pspec);
  Eigen::VectorXd sigma = r.vec();
  if (sigma.size() != pspec.output_dim) r.fail("action std does not match the policy");
  s.agent.policy = GaussianPolicy(Mlp(pspec, std::move(pparams)), std::move(sigma));
  s.policy_opt = r.optimizer(pspec);
  const MlpSpec vspec = r.spec();
  MlpParams vparams = r.params(vspec);
  s.agent.value = Mlp(vspec, std::move(vparams));
  s.value_opt = r.optimizer(vspec);
  if (vspec.input_dim != pspec.input_dim || vspec.output_dim != 1) r.fail("value network does not match policy");
  s.agent.normalize_inputs = r.u64() != 0;
  const double count = r.f64();
  Eigen::VectorXd mean = r.vec();
  Eigen::VectorXd m2 = r.vec();
  if (mean.size() != pspec.input_dim || m2.size() != pspec.input_dim) r.fail("normalizer does not match policy");
  s.agent.normalizer = RunningNormalizer(pspec.input_dim);
  s.agent.normalizer.restore(count, std::move(mean), std::move(m2));

  const MlpSpec dspec = r.spec();
  MlpParams dparams = r.params(dspec);
  SgdMomentum dopt = r.optimizer(dspec);
  FeatureStats stats;
  stats.mean = r.vec();
  stats.std = r.vec();
  if (stats.mean.size() != stats.std.size() || dspec.input_dim != 2 * stats.mean.size()) {
    r.fail("discriminator does not match its observation statistics");
  }
  s.prior = MotionPrior(Mlp(dspec, std::move(dparams)), std::move(stats), dopt.stepsize(), dopt.momentum());
  s.prior.optimizer() = std::move(dopt);

  s.replay = ReplayBuffer(r.u64());
  const std::uint64_t head = r.u64();
  const std::uint64_t n = r.u64();
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Eigen::VectorXd a = r.vec();
    Eigen::VectorXd b = r.vec();
    entries.emplace_back(std::move(a), std::move(b));
  }
  try {
    s.replay.restore(std::move(entries), head);
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return s;
}

}  // namespace amp
