#pragma once

#include "articulab/expert.hpp"

namespace articulab {

inline constexpr int kTimeEmbedDim = 32;

struct PolicyConfig {
  int obs_horizon = 4;        // conditioning frames
  int pred_horizon = 4;       // predicted action frames
  int act_horizon = 2;        // frames executed before replanning
  int diffusion_steps = 100;  // K
  std::vector<int> hidden{256, 256};
  double lr = 1e-4;
  double lr_final = 0.0;  // cosine decay target; lr_final == lr holds lr flat
  double weight_decay = 1e-6;
  double ema_decay = 0.995;
  // Stddev of Gaussian noise added to each conditioning vector during
  // training (normalized units). Closed-loop rollouts drift off the expert
  // states; training on jittered conditions keeps the denoiser stable there.
  double cond_noise = 0.0;
  int batch = 64;
  int epochs = 500;
  uint64_t seed = 0;
  int obs_dim = kObsDim;
  int pc_points = 0;    // 0 disables the point-cloud encoder
  int pc_features = 32;
  // Reverse steps clamp the implied clean window to this many normalized
  // units (0 disables). The last schedule step has alpha ~ 32, so unclamped
  // prediction error compounds into divergent samples on small nets.
  double clip_x0 = 6.0;

  int window_dim() const { return pred_horizon * kActionDim; }
  int cond_dim() const {
    return obs_horizon * (obs_dim + kActionDim) + (pc_points > 0 ? pc_features : 0);
  }
  int input_dim() const { return window_dim() + kTimeEmbedDim + cond_dim(); }

  void validate() const;
  Json to_json() const;
  static PolicyConfig from_json(const Json& j);
};

// Sinusoidal position features of the raw step index.
void time_embedding(int k, std::span<double> out);

// Squared-cosine beta schedule. Arrays are 1-indexed by step (index 0 is the
// clean-data end: alpha_bar[0] = 1, which also forces sigma[1] = 0).
struct NoiseSchedule {
  int K = 0;
  std::vector<double> beta;       // K+1
  std::vector<double> alpha_bar;  // K+1, strictly decreasing, alpha_bar[0] = 1
  std::vector<double> alpha;      // 1/sqrt(1-beta_k)
  std::vector<double> gamma;      // beta_k/sqrt(1-alpha_bar_k)
  std::vector<double> sigma;      // sqrt(beta_k*(1-alpha_bar_{k-1})/(1-alpha_bar_k))
};

NoiseSchedule make_schedule(int K);

// noisy = sqrt(alpha_bar_k)*a0 + sqrt(1-alpha_bar_k)*eps
void q_sample(std::span<const double> a0, std::span<const double> eps, double alpha_bar_k,
              std::span<double> out);

// One training example: a normalized action window plus its conditioning.
struct TrainSample {
  std::vector<double> window;  // pred_horizon * kActionDim, normalized
  std::vector<double> cond;    // obs_horizon * (obs_dim + kActionDim), normalized
  std::vector<Vec3> points;    // raw cloud, only when the encoder is enabled
};

// Fully-connected denoiser. Parameters live in one flat vector
// ([W0,b0,W1,b1,...,Wpc,bpc]); `ema` is the shadow copy used for sampling.
struct DenoiserNet {
  PolicyConfig cfg;
  NormStats stats;
  std::vector<int> sizes;  // input_dim, hidden..., window_dim
  std::vector<size_t> w_off, b_off;
  size_t pc_w_off = 0, pc_b_off = 0;
  size_t n_params = 0;
  std::vector<double> params;
  std::vector<double> ema;
};

DenoiserNet make_net(const PolicyConfig& cfg);

// Identity normalization for synthetic datasets and toys.
NormStats identity_stats(int obs_dim);

// Per-sample noise assignment, drawn serially so batch gradients can be
// parallel yet bit-identical.
struct NoisePlan {
  std::vector<int> k;          // one step index per sample, in [1, K]
  std::vector<double> eps;     // batch * window_dim
};

NoisePlan draw_noise_plan(int count, int window_dim, int K, Rng& rng);

// eps_hat = net(q_sample(window), k, cond). Weights are passed explicitly so
// the same code serves raw and EMA parameters.
void net_forward(const DenoiserNet& net, std::span<const double> w,
                 std::span<const double> noisy, int k, const TrainSample& s,
                 std::span<double> eps_hat);

// Mean over the batch of |eps - eps_hat|^2 (summed over window dims).
// Gradients accumulate in fixed 8-sample blocks merged in index order, so
// the result is bitwise identical for any thread count.
double loss_and_grad(const DenoiserNet& net, std::span<const double> w,
                     std::span<const TrainSample> batch, const NoiseSchedule& sched,
                     const NoisePlan& plan, std::span<double> grad);

// Straight-line single-pass reference, kept for tests and benchmarks.
double loss_and_grad_simple(const DenoiserNet& net, std::span<const double> w,
                            std::span<const TrainSample> batch, const NoiseSchedule& sched,
                            const NoisePlan& plan, std::span<double> grad);

double loss_only(const DenoiserNet& net, std::span<const double> w,
                 std::span<const TrainSample> batch, const NoiseSchedule& sched,
                 const NoisePlan& plan);

// One reverse step: alpha_k*(window - gamma_k*eps_hat) + sigma_k*z.
// `z` must hold window_dim normals; it is ignored where sigma is zero (k=1).
void denoise_step(const DenoiserNet& net, std::span<const double> w, std::span<double> window,
                  int k, const TrainSample& cond, const NoiseSchedule& sched,
                  std::span<const double> z);

// Full reverse chain from pure noise using the EMA weights; returns the
// normalized window.
std::vector<double> sample_window(const DenoiserNet& net, const TrainSample& cond,
                                  const NoiseSchedule& sched, Rng& rng);

// Normalized conditioning vector from raw episode histories (oldest first;
// obs has one more row than act). Short histories are front-padded with the
// first observation and a rest action derived from it.
std::vector<double> build_condition(std::span<const std::vector<double>> obs_hist,
                                    std::span<const std::array<double, kActionDim>> act_hist,
                                    const NormStats& stats, const PolicyConfig& cfg);

std::array<double, kActionDim> rest_action(std::span<const double> first_obs);

// One training window per keyframe; actions past the end repeat the last row.
std::vector<TrainSample> windows_from_dataset(const DemoDataset& ds, const PolicyConfig& cfg);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// Adam + EMA over shuffled minibatches. Aborts (throws) on non-finite loss.
// epochs = 0 returns the freshly initialized net untouched.
TrainLog train(DenoiserNet& net, const DemoDataset& ds);

// Central finite differences (h = 1e-5) on `probes` randomly chosen
// parameters; returns the max of |fd - analytic| / max(|analytic|, 1e-8).
// corrupt >= 0 perturbs that probe's analytic entry first, as a negative
// control proving the comparison can fail.
double grad_check(DenoiserNet& net, std::span<const TrainSample> batch,
                  const NoiseSchedule& sched, uint64_t seed, int probes, int corrupt = -1);

void save_model(const std::string& path, const DenoiserNet& net);
DenoiserNet load_model(const std::string& path);

}  // namespace articulab
