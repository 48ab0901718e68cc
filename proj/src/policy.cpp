#include "pedsim/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pedsim {

namespace {

// Orthogonal weight init: QR of a Gaussian matrix, sign-corrected so the
// factorization is unique, scaled by gain.
Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int tall = std::max(rows, cols);
  const int thin = std::min(rows, cols);
  Eigen::MatrixXd G(tall, thin);
  for (int r = 0; r < tall; ++r)
    for (int c = 0; c < thin; ++c) G(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(tall, thin);
  const Eigen::MatrixXd R =
      qr.matrixQR().topLeftCorner(thin, thin).triangularView<Eigen::Upper>();
  for (int j = 0; j < thin; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  if (rows >= cols) return gain * Q;
  return gain * Q.transpose();
}

void pack(Eigen::VectorXd& out, int& off, const double* data, int n) {
  std::memcpy(out.data() + off, data, sizeof(double) * n);
  off += n;
}

void unpack(const Eigen::VectorXd& in, int& off, double* data, int n) {
  std::memcpy(data, in.data() + off, sizeof(double) * n);
  off += n;
}

}  // namespace

MlpPolicy::MlpPolicy(int obs_dim, int n_actions, int hidden1, int hidden2,
                     Rng& rng) {
  W1_ = orthogonal(hidden1, obs_dim, std::sqrt(2.0), rng);
  b1_ = Eigen::VectorXd::Zero(hidden1);
  W2_ = orthogonal(hidden2, hidden1, std::sqrt(2.0), rng);
  b2_ = Eigen::VectorXd::Zero(hidden2);
  Wp_ = orthogonal(n_actions, hidden2, 0.01, rng);
  bp_ = Eigen::VectorXd::Zero(n_actions);
  Wv_ = orthogonal(1, hidden2, 1.0, rng);
  bv_ = 0;
}

void MlpPolicy::forward(const Eigen::MatrixXd& X, Eigen::MatrixXd& logits,
                        Eigen::VectorXd& values) const {
  const Eigen::MatrixXd H1 =
      ((X * W1_.transpose()).rowwise() + b1_.transpose()).array().tanh();
  const Eigen::MatrixXd H2 =
      ((H1 * W2_.transpose()).rowwise() + b2_.transpose()).array().tanh();
  logits = (H2 * Wp_.transpose()).rowwise() + bp_.transpose();
  values = H2 * Wv_.transpose();
  values.array() += bv_;
}

Eigen::VectorXd MlpPolicy::action_logits(const Eigen::VectorXd& obs) const {
  Eigen::MatrixXd logits;
  Eigen::VectorXd values;
  forward(obs.transpose(), logits, values);
  return logits.row(0);
}

double MlpPolicy::value(const Eigen::VectorXd& obs) const {
  Eigen::MatrixXd logits;
  Eigen::VectorXd values;
  forward(obs.transpose(), logits, values);
  return values(0);
}

int MlpPolicy::argmax_action(const Eigen::VectorXd& obs) const {
  int best = 0;
  action_logits(obs).maxCoeff(&best);
  return best;
}

int MlpPolicy::sample_action(const Eigen::VectorXd& obs, Rng& rng, double& logp,
                             double& value_out) const {
  Eigen::MatrixXd logits;
  Eigen::VectorXd values;
  forward(obs.transpose(), logits, values);
  value_out = values(0);
  const Eigen::MatrixXd lp = log_softmax_rows(logits);
  const Eigen::VectorXd p = lp.row(0).array().exp();
  const double u = rng.uniform();
  double acc = 0;
  int a = static_cast<int>(p.size()) - 1;
  for (int i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (u < acc) {
      a = i;
      break;
    }
  }
  logp = lp(0, a);
  return a;
}

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
  const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
  Eigen::MatrixXd shifted = logits.colwise() - mx;
  const Eigen::VectorXd lse =
      shifted.array().exp().rowwise().sum().log().matrix();
  return shifted.colwise() - lse;
}

MlpPolicy::LossStats MlpPolicy::ppo_loss_grad(
    const Eigen::MatrixXd& X, const Eigen::VectorXi& actions,
    const Eigen::VectorXd& old_logp, const Eigen::VectorXd& advantages,
    const Eigen::VectorXd& returns, double clip, double vf_coef,
    double ent_coef, Eigen::VectorXd& grad) const {
  const int B = static_cast<int>(X.rows());
  const int A = n_actions();

  const Eigen::MatrixXd H1 =
      ((X * W1_.transpose()).rowwise() + b1_.transpose()).array().tanh();
  const Eigen::MatrixXd H2 =
      ((H1 * W2_.transpose()).rowwise() + b2_.transpose()).array().tanh();
  const Eigen::MatrixXd logits =
      (H2 * Wp_.transpose()).rowwise() + bp_.transpose();
  Eigen::VectorXd values = H2 * Wv_.transpose();
  values.array() += bv_;

  const Eigen::MatrixXd logp_all = log_softmax_rows(logits);
  const Eigen::MatrixXd P = logp_all.array().exp();

  LossStats stats;
  Eigen::MatrixXd dLogits = Eigen::MatrixXd::Zero(B, A);
  Eigen::VectorXd dValues(B);

  double policy_sum = 0, entropy_sum = 0, value_sum = 0;
  long clipped = 0;
  for (int i = 0; i < B; ++i) {
    const int a = actions(i);
    const double lp = logp_all(i, a);
    const double ratio = std::exp(lp - old_logp(i));
    const double adv = advantages(i);
    const double s1 = ratio * adv;
    const double rc = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double s2 = rc * adv;
    policy_sum += std::min(s1, s2);
    if (std::abs(ratio - 1.0) > clip) ++clipped;

    // d(-min(s1, s2))/d lp; the clipped branch is flat outside the band.
    double dlp = 0;
    if (s1 <= s2) {
      dlp = -ratio * adv / B;
    } else if (ratio > 1.0 - clip && ratio < 1.0 + clip) {
      dlp = -ratio * adv / B;
    }

    // entropy of row i and the entropy-term gradient
    double H = 0;
    for (int j = 0; j < A; ++j) H -= P(i, j) * logp_all(i, j);
    entropy_sum += H;

    for (int j = 0; j < A; ++j) {
      const double onehot = (j == a) ? 1.0 : 0.0;
      dLogits(i, j) += dlp * (onehot - P(i, j));
      dLogits(i, j) +=
          ent_coef / B * P(i, j) * (logp_all(i, j) + H);
    }

    const double verr = values(i) - returns(i);
    value_sum += verr * verr;
    dValues(i) = vf_coef * 2.0 * verr / B;
  }

  stats.policy = -policy_sum / B;
  stats.entropy = entropy_sum / B;
  stats.value = value_sum / B;
  stats.total = stats.policy + vf_coef * stats.value - ent_coef * stats.entropy;
  stats.clip_fraction = static_cast<double>(clipped) / B;

  const Eigen::MatrixXd dH2 = dLogits * Wp_ + dValues * Wv_;
  const Eigen::MatrixXd dZ2 =
      dH2.array() * (1.0 - H2.array().square());
  const Eigen::MatrixXd dH1 = dZ2 * W2_;
  const Eigen::MatrixXd dZ1 =
      dH1.array() * (1.0 - H1.array().square());

  const Eigen::MatrixXd gW1 = dZ1.transpose() * X;
  const Eigen::VectorXd gb1 = dZ1.colwise().sum();
  const Eigen::MatrixXd gW2 = dZ2.transpose() * H1;
  const Eigen::VectorXd gb2 = dZ2.colwise().sum();
  const Eigen::MatrixXd gWp = dLogits.transpose() * H2;
  const Eigen::VectorXd gbp = dLogits.colwise().sum();
  const Eigen::RowVectorXd gWv = dValues.transpose() * H2;
  const double gbv = dValues.sum();

  grad.resize(param_count());
  int off = 0;
  pack(grad, off, gW1.data(), static_cast<int>(gW1.size()));
  pack(grad, off, gb1.data(), static_cast<int>(gb1.size()));
  pack(grad, off, gW2.data(), static_cast<int>(gW2.size()));
  pack(grad, off, gb2.data(), static_cast<int>(gb2.size()));
  pack(grad, off, gWp.data(), static_cast<int>(gWp.size()));
  pack(grad, off, gbp.data(), static_cast<int>(gbp.size()));
  pack(grad, off, gWv.data(), static_cast<int>(gWv.size()));
  pack(grad, off, &gbv, 1);
  return stats;
}

int MlpPolicy::param_count() const {
  return static_cast<int>(W1_.size() + b1_.size() + W2_.size() + b2_.size() +
                          Wp_.size() + bp_.size() + Wv_.size() + 1);
}

Eigen::VectorXd MlpPolicy::to_vector() const {
  Eigen::VectorXd out(param_count());
  int off = 0;
  pack(out, off, W1_.data(), static_cast<int>(W1_.size()));
  pack(out, off, b1_.data(), static_cast<int>(b1_.size()));
  pack(out, off, W2_.data(), static_cast<int>(W2_.size()));
  pack(out, off, b2_.data(), static_cast<int>(b2_.size()));
  pack(out, off, Wp_.data(), static_cast<int>(Wp_.size()));
  pack(out, off, bp_.data(), static_cast<int>(bp_.size()));
  pack(out, off, Wv_.data(), static_cast<int>(Wv_.size()));
  pack(out, off, &bv_, 1);
  return out;
}

void MlpPolicy::from_vector(const Eigen::VectorXd& theta) {
  if (theta.size() != param_count())
    throw std::invalid_argument("parameter vector size mismatch");
  int off = 0;
  unpack(theta, off, W1_.data(), static_cast<int>(W1_.size()));
  unpack(theta, off, b1_.data(), static_cast<int>(b1_.size()));
  unpack(theta, off, W2_.data(), static_cast<int>(W2_.size()));
  unpack(theta, off, b2_.data(), static_cast<int>(b2_.size()));
  unpack(theta, off, Wp_.data(), static_cast<int>(Wp_.size()));
  unpack(theta, off, bp_.data(), static_cast<int>(bp_.size()));
  unpack(theta, off, Wv_.data(), static_cast<int>(Wv_.size()));
  unpack(theta, off, &bv_, 1);
}

ObsNormalizer::ObsNormalizer(int dim)
    : mean(Eigen::VectorXd::Zero(dim)),
      var(Eigen::VectorXd::Ones(dim)),
      count(1e-4) {}

void ObsNormalizer::update(const Eigen::VectorXd& x) {
  const Eigen::VectorXd delta = x - mean;
  const double tot = count + 1.0;
  mean += delta / tot;
  // merge a single sample into the population variance
  var = (var * count + delta.cwiseProduct(x - mean)).eval() / tot;
  count = tot;
}

Eigen::VectorXd ObsNormalizer::normalize(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z =
      (x - mean).cwiseQuotient((var.array() + 1e-8).sqrt().matrix());
  return z.cwiseMax(-clip).cwiseMin(clip);
}

AdamOptimizer::AdamOptimizer(int n, double eps_)
    : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), eps(eps_) {}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                         double lr) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params -= (lr / bc1) *
            m.cwiseQuotient(((v / bc2).array().sqrt() + eps).matrix());
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0) grad *= max_norm / norm;
  return norm;
}

namespace {

constexpr char kMagic[8] = {'P', 'S', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void put_doubles(std::ostream& os, const double* d, std::uint64_t n) {
  put(os, n);
  os.write(reinterpret_cast<const char*>(d), sizeof(double) * n);
}

std::uint64_t get_count(std::istream& is, std::uint64_t expect) {
  std::uint64_t n = 0;
  get(is, n);
  if (expect != 0 && n != expect)
    throw std::runtime_error("checkpoint: unexpected array length");
  return n;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, obs_layout_hash);
  put(os, static_cast<std::uint8_t>(variant));

  put(os, env.dt);
  put(os, env.timeout_s);
  put(os, env.process_noise);
  put(os, env.belief_speed_variance);
  put(os, env.body.leg_length);
  put(os, env.body.standing_redecision_interval);
  put_doubles(os, env.actions.speeds.data(), env.actions.speeds.size());

  put(os, static_cast<std::uint32_t>(norm.mean.size()));
  put_doubles(os, norm.mean.data(), norm.mean.size());
  put_doubles(os, norm.var.data(), norm.var.size());
  put(os, norm.count);
  put(os, norm.clip);

  put(os, static_cast<std::uint32_t>(net.obs_dim()));
  put(os, static_cast<std::uint32_t>(net.n_actions()));
  put(os, static_cast<std::uint32_t>(net.hidden1()));
  put(os, static_cast<std::uint32_t>(net.hidden2()));
  const Eigen::VectorXd theta = net.to_vector();
  put_doubles(os, theta.data(), theta.size());
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint32_t version = 0;
  get(is, version);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version");

  Checkpoint c;
  get(is, c.obs_layout_hash);
  if (c.obs_layout_hash != CrossingEnv::observation_layout_hash())
    throw std::runtime_error("checkpoint observation layout mismatch");
  std::uint8_t var8 = 0;
  get(is, var8);
  if (var8 > 2) throw std::runtime_error("checkpoint: bad variant");
  c.variant = static_cast<Variant>(var8);

  get(is, c.env.dt);
  get(is, c.env.timeout_s);
  get(is, c.env.process_noise);
  get(is, c.env.belief_speed_variance);
  get(is, c.env.body.leg_length);
  get(is, c.env.body.standing_redecision_interval);
  const std::uint64_t n_actions = get_count(is, 0);
  if (n_actions == 0 || n_actions > 1024)
    throw std::runtime_error("checkpoint: bad action count");
  c.env.actions.speeds.resize(n_actions);
  is.read(reinterpret_cast<char*>(c.env.actions.speeds.data()),
          sizeof(double) * n_actions);

  std::uint32_t dim = 0;
  get(is, dim);
  c.norm = ObsNormalizer(static_cast<int>(dim));
  get_count(is, dim);
  is.read(reinterpret_cast<char*>(c.norm.mean.data()), sizeof(double) * dim);
  get_count(is, dim);
  is.read(reinterpret_cast<char*>(c.norm.var.data()), sizeof(double) * dim);
  get(is, c.norm.count);
  get(is, c.norm.clip);

  std::uint32_t obs = 0, act = 0, h1 = 0, h2 = 0;
  get(is, obs);
  get(is, act);
  get(is, h1);
  get(is, h2);
  if (act != n_actions)
    throw std::runtime_error("checkpoint: net/action-set size mismatch");
  c.net.W1_.resize(h1, obs);
  c.net.b1_.resize(h1);
  c.net.W2_.resize(h2, h1);
  c.net.b2_.resize(h2);
  c.net.Wp_.resize(act, h2);
  c.net.bp_.resize(act);
  c.net.Wv_.resize(h2);
  Eigen::VectorXd theta(c.net.param_count());
  get_count(is, theta.size());
  is.read(reinterpret_cast<char*>(theta.data()), sizeof(double) * theta.size());
  if (!is) throw std::runtime_error("checkpoint truncated: " + path);
  c.net.from_vector(theta);
  return c;
}

}  // namespace pedsim
