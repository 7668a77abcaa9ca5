#include "articulab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace articulab {

void PolicyConfig::validate() const {
  if (obs_horizon < 1) throw std::invalid_argument("obs_horizon < 1");
  if (pred_horizon < 1) throw std::invalid_argument("pred_horizon < 1");
  if (act_horizon < 1 || act_horizon > pred_horizon)
    throw std::invalid_argument("act_horizon outside [1, pred_horizon]");
  if (diffusion_steps < 1) throw std::invalid_argument("diffusion_steps < 1");
  for (int hdim : hidden)
    if (hdim < 1) throw std::invalid_argument("hidden layer size < 1");
  if (lr <= 0) throw std::invalid_argument("lr <= 0");
  if (lr_final < 0 || lr_final > lr) throw std::invalid_argument("lr_final outside [0, lr]");
  if (cond_noise < 0) throw std::invalid_argument("cond_noise < 0");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay < 0");
  if (ema_decay < 0 || ema_decay >= 1) throw std::invalid_argument("ema_decay outside [0,1)");
  if (batch < 1) throw std::invalid_argument("batch < 1");
  if (epochs < 0) throw std::invalid_argument("epochs < 0");
  if (obs_dim < 1) throw std::invalid_argument("obs_dim < 1");
  if (pc_points < 0) throw std::invalid_argument("pc_points < 0");
  if (pc_points > 0 && pc_features < 1) throw std::invalid_argument("pc_features < 1");
  if (clip_x0 < 0) throw std::invalid_argument("clip_x0 < 0");
}

Json PolicyConfig::to_json() const {
  return Json{{"obs_horizon", obs_horizon},
              {"pred_horizon", pred_horizon},
              {"act_horizon", act_horizon},
              {"diffusion_steps", diffusion_steps},
              {"hidden", hidden},
              {"lr", lr},
              {"lr_final", lr_final},
              {"cond_noise", cond_noise},
              {"weight_decay", weight_decay},
              {"ema_decay", ema_decay},
              {"batch", batch},
              {"epochs", epochs},
              {"seed", seed},
              {"obs_dim", obs_dim},
              {"pc_points", pc_points},
              {"pc_features", pc_features},
              {"clip_x0", clip_x0}};
}

PolicyConfig PolicyConfig::from_json(const Json& j) {
  PolicyConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("obs_horizon", c.obs_horizon);
  get("pred_horizon", c.pred_horizon);
  get("act_horizon", c.act_horizon);
  get("diffusion_steps", c.diffusion_steps);
  get("hidden", c.hidden);
  get("lr", c.lr);
  get("lr_final", c.lr_final);
  get("cond_noise", c.cond_noise);
  get("weight_decay", c.weight_decay);
  get("ema_decay", c.ema_decay);
  get("batch", c.batch);
  get("epochs", c.epochs);
  get("seed", c.seed);
  get("obs_dim", c.obs_dim);
  get("pc_points", c.pc_points);
  get("pc_features", c.pc_features);
  get("clip_x0", c.clip_x0);
  c.validate();
  return c;
}

void time_embedding(int k, std::span<double> out) {
  if (out.size() != kTimeEmbedDim) throw std::invalid_argument("time embedding size");
  for (int i = 0; i < kTimeEmbedDim / 2; ++i) {
    double freq = std::pow(10000.0, -double(i) / (kTimeEmbedDim / 2 - 1));
    out[2 * i] = std::sin(k * freq);
    out[2 * i + 1] = std::cos(k * freq);
  }
}

NoiseSchedule make_schedule(int K) {
  if (K < 1) throw std::invalid_argument("schedule needs K >= 1");
  NoiseSchedule s;
  s.K = K;
  s.beta.assign(K + 1, 0.0);
  s.alpha_bar.assign(K + 1, 1.0);
  s.alpha.assign(K + 1, 0.0);
  s.gamma.assign(K + 1, 0.0);
  s.sigma.assign(K + 1, 0.0);

  const double shift = 0.008;
  auto f = [&](int k) {
    double x = (double(k) / K + shift) / (1.0 + shift) * M_PI / 2.0;
    double c = std::cos(x);
    return c * c;
  };
  const double f0 = f(0);
  double prev_raw = 1.0;
  for (int k = 1; k <= K; ++k) {
    double raw = f(k) / f0;
    s.beta[k] = std::min(1.0 - raw / prev_raw, 0.999);
    prev_raw = raw;
    s.alpha_bar[k] = s.alpha_bar[k - 1] * (1.0 - s.beta[k]);
    s.alpha[k] = 1.0 / std::sqrt(1.0 - s.beta[k]);
    s.gamma[k] = s.beta[k] / std::sqrt(1.0 - s.alpha_bar[k]);
    s.sigma[k] = std::sqrt(s.beta[k] * (1.0 - s.alpha_bar[k - 1]) / (1.0 - s.alpha_bar[k]));
  }
  return s;
}

void q_sample(std::span<const double> a0, std::span<const double> eps, double alpha_bar_k,
              std::span<double> out) {
  double sa = std::sqrt(alpha_bar_k), sn = std::sqrt(1.0 - alpha_bar_k);
  for (size_t i = 0; i < a0.size(); ++i) out[i] = sa * a0[i] + sn * eps[i];
}

NormStats identity_stats(int obs_dim) {
  NormStats s;
  s.obs_mean.assign(obs_dim, 0.0);
  s.obs_std.assign(obs_dim, 1.0);
  s.act_mean.assign(kActionDim, 0.0);
  s.act_std.assign(kActionDim, 1.0);
  return s;
}

DenoiserNet make_net(const PolicyConfig& cfg) {
  cfg.validate();
  DenoiserNet net;
  net.cfg = cfg;
  net.stats = identity_stats(cfg.obs_dim);
  net.sizes.push_back(cfg.input_dim());
  for (int hdim : cfg.hidden) net.sizes.push_back(hdim);
  net.sizes.push_back(cfg.window_dim());

  size_t off = 0;
  for (size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    net.w_off.push_back(off);
    off += static_cast<size_t>(net.sizes[l + 1]) * net.sizes[l];
    net.b_off.push_back(off);
    off += net.sizes[l + 1];
  }
  if (cfg.pc_points > 0) {
    net.pc_w_off = off;
    off += static_cast<size_t>(cfg.pc_features) * 3;
    net.pc_b_off = off;
    off += cfg.pc_features;
  }
  net.n_params = off;
  net.params.assign(off, 0.0);

  Rng r(seed_stream("net-init", cfg.seed));
  for (size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    double a = std::sqrt(6.0 / (net.sizes[l] + net.sizes[l + 1]));
    size_t n = static_cast<size_t>(net.sizes[l + 1]) * net.sizes[l];
    for (size_t i = 0; i < n; ++i) net.params[net.w_off[l] + i] = r.uniform(-a, a);
  }
  if (cfg.pc_points > 0) {
    double a = std::sqrt(6.0 / (3 + cfg.pc_features));
    for (size_t i = 0; i < static_cast<size_t>(cfg.pc_features) * 3; ++i)
      net.params[net.pc_w_off + i] = r.uniform(-a, a);
  }
  net.ema = net.params;
  return net;
}

namespace {

struct Workspace {
  std::vector<std::vector<double>> x;  // activations per layer, x[0] = input
  std::vector<double> delta, dprev;
  std::vector<double> pc_feat;
  std::vector<int> pc_arg;
};

Workspace make_workspace(const DenoiserNet& net) {
  Workspace ws;
  ws.x.resize(net.sizes.size());
  for (size_t l = 0; l < net.sizes.size(); ++l) ws.x[l].assign(net.sizes[l], 0.0);
  size_t widest = 0;
  for (int s : net.sizes) widest = std::max(widest, static_cast<size_t>(s));
  ws.delta.assign(widest, 0.0);
  ws.dprev.assign(widest, 0.0);
  if (net.cfg.pc_points > 0) {
    ws.pc_feat.assign(net.cfg.pc_features, 0.0);
    ws.pc_arg.assign(net.cfg.pc_features, 0);
  }
  return ws;
}

void assemble_input(const DenoiserNet& net, std::span<const double> w,
                    std::span<const double> noisy, int k, const TrainSample& s, Workspace& ws) {
  const PolicyConfig& cfg = net.cfg;
  if (static_cast<int>(noisy.size()) != cfg.window_dim())
    throw std::invalid_argument("bad window size");
  const int fixed_cond = cfg.obs_horizon * (cfg.obs_dim + kActionDim);
  if (static_cast<int>(s.cond.size()) != fixed_cond)
    throw std::invalid_argument("bad conditioning size");

  std::vector<double>& in = ws.x[0];
  size_t p = 0;
  for (double v : noisy) in[p++] = v;
  time_embedding(k, std::span<double>(in.data() + p, kTimeEmbedDim));
  p += kTimeEmbedDim;
  for (double v : s.cond) in[p++] = v;

  if (cfg.pc_points > 0) {
    if (static_cast<int>(s.points.size()) != cfg.pc_points)
      throw std::invalid_argument("bad point cloud size");
    for (int i = 0; i < cfg.pc_features; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      const double* wr = w.data() + net.pc_w_off + 3 * i;
      for (int j = 0; j < cfg.pc_points; ++j) {
        const Vec3& pt = s.points[j];
        double h = wr[0] * pt.x + wr[1] * pt.y + wr[2] * pt.z + w[net.pc_b_off + i];
        if (h > best) {
          best = h;
          arg = j;
        }
      }
      ws.pc_feat[i] = best;
      ws.pc_arg[i] = arg;
      in[p++] = best;
    }
  }
  if (p != in.size()) throw std::logic_error("input assembly mismatch");
}

void forward_ws(const DenoiserNet& net, std::span<const double> w, Workspace& ws) {
  const size_t L = net.sizes.size() - 1;
  for (size_t l = 0; l < L; ++l) {
    const int rows = net.sizes[l + 1], cols = net.sizes[l];
    const double* W = w.data() + net.w_off[l];
    const double* b = w.data() + net.b_off[l];
    const double* xin = ws.x[l].data();
    double* xout = ws.x[l + 1].data();
    for (int r = 0; r < rows; ++r) {
      double z = b[r];
      const double* wr = W + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += wr[c] * xin[c];
      xout[r] = (l + 1 < L) ? std::tanh(z) : z;
    }
  }
}

// dL/d eps_hat in ws.delta[0..out); accumulates parameter grads.
void backward_ws(const DenoiserNet& net, std::span<const double> w, const TrainSample& s,
                 Workspace& ws, std::span<double> grad) {
  const size_t L = net.sizes.size() - 1;
  for (size_t li = L; li-- > 0;) {
    const int rows = net.sizes[li + 1], cols = net.sizes[li];
    const double* W = w.data() + net.w_off[li];
    const double* xin = ws.x[li].data();
    double* gW = grad.data() + net.w_off[li];
    double* gb = grad.data() + net.b_off[li];
    std::fill(ws.dprev.begin(), ws.dprev.begin() + cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      double d = ws.delta[r];
      if (d == 0.0) continue;
      const double* wr = W + static_cast<size_t>(r) * cols;
      double* gwr = gW + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        gwr[c] += d * xin[c];
        ws.dprev[c] += d * wr[c];
      }
      gb[r] += d;
    }
    if (li > 0) {
      // tanh'(z) = 1 - a^2 with a = activation of layer li
      for (int c = 0; c < cols; ++c) {
        double a = ws.x[li][c];
        ws.delta[c] = ws.dprev[c] * (1.0 - a * a);
      }
    } else if (net.cfg.pc_points > 0) {
      const int base = net.cfg.window_dim() + kTimeEmbedDim +
                       net.cfg.obs_horizon * (net.cfg.obs_dim + kActionDim);
      for (int i = 0; i < net.cfg.pc_features; ++i) {
        double g = ws.dprev[base + i];
        if (g == 0.0) continue;
        const Vec3& pt = s.points[ws.pc_arg[i]];
        grad[net.pc_w_off + 3 * i + 0] += g * pt.x;
        grad[net.pc_w_off + 3 * i + 1] += g * pt.y;
        grad[net.pc_w_off + 3 * i + 2] += g * pt.z;
        grad[net.pc_b_off + i] += g;
      }
    }
  }
}

// Per-sample loss; optionally accumulates grads.
double sample_loss(const DenoiserNet& net, std::span<const double> w, const TrainSample& s,
                   const NoiseSchedule& sched, int k, std::span<const double> eps, Workspace& ws,
                   double* grad_scale, std::span<double> grad) {
  const int wd = net.cfg.window_dim();
  std::vector<double> noisy(wd);
  q_sample(s.window, eps, sched.alpha_bar[k], noisy);
  assemble_input(net, w, noisy, k, s, ws);
  forward_ws(net, w, ws);
  const std::vector<double>& eps_hat = ws.x.back();
  double loss = 0;
  for (int i = 0; i < wd; ++i) {
    double d = eps[i] - eps_hat[i];
    loss += d * d;
  }
  if (grad_scale) {
    for (int i = 0; i < wd; ++i) ws.delta[i] = *grad_scale * 2.0 * (eps_hat[i] - eps[i]);
    backward_ws(net, w, s, ws, grad);
  }
  return loss;
}

void check_plan(const NoisePlan& plan, size_t batch, int wd, int K) {
  if (plan.k.size() != batch || plan.eps.size() != batch * static_cast<size_t>(wd))
    throw std::invalid_argument("noise plan does not match batch");
  for (int k : plan.k)
    if (k < 1 || k > K) throw std::invalid_argument("noise plan step out of range");
}

}  // namespace

void net_forward(const DenoiserNet& net, std::span<const double> w,
                 std::span<const double> noisy, int k, const TrainSample& s,
                 std::span<double> eps_hat) {
  Workspace ws = make_workspace(net);
  assemble_input(net, w, noisy, k, s, ws);
  forward_ws(net, w, ws);
  const auto& out = ws.x.back();
  std::copy(out.begin(), out.end(), eps_hat.begin());
}

NoisePlan draw_noise_plan(int count, int window_dim, int K, Rng& rng) {
  NoisePlan plan;
  plan.k.reserve(count);
  plan.eps.reserve(static_cast<size_t>(count) * window_dim);
  for (int i = 0; i < count; ++i) {
    plan.k.push_back(static_cast<int>(rng.uniform_int(1, K)));
    for (int j = 0; j < window_dim; ++j) plan.eps.push_back(rng.normal());
  }
  return plan;
}

double loss_and_grad(const DenoiserNet& net, std::span<const double> w,
                     std::span<const TrainSample> batch, const NoiseSchedule& sched,
                     const NoisePlan& plan, std::span<double> grad) {
  const int wd = net.cfg.window_dim();
  check_plan(plan, batch.size(), wd, sched.K);
  if (grad.size() != net.n_params) throw std::invalid_argument("grad buffer size");

  constexpr int kBlock = 8;
  const int nb = static_cast<int>((batch.size() + kBlock - 1) / kBlock);
  std::vector<double> bl(static_cast<size_t>(nb) * net.n_params, 0.0);
  std::vector<double> bloss(nb, 0.0);
  double one = 1.0;

#pragma omp parallel for schedule(static)
  for (int b = 0; b < nb; ++b) {
    Workspace ws = make_workspace(net);
    std::span<double> slice(bl.data() + static_cast<size_t>(b) * net.n_params, net.n_params);
    const size_t lo = static_cast<size_t>(b) * kBlock;
    const size_t hi = std::min(batch.size(), lo + kBlock);
    for (size_t s = lo; s < hi; ++s) {
      std::span<const double> eps(plan.eps.data() + s * wd, wd);
      bloss[b] += sample_loss(net, w, batch[s], sched, plan.k[s], eps, ws, &one, slice);
    }
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0;
  for (int b = 0; b < nb; ++b) {
    total += bloss[b];
    const double* src = bl.data() + static_cast<size_t>(b) * net.n_params;
    for (size_t i = 0; i < net.n_params; ++i) grad[i] += src[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (size_t i = 0; i < net.n_params; ++i) grad[i] *= inv;
  return total * inv;
}

double loss_and_grad_simple(const DenoiserNet& net, std::span<const double> w,
                            std::span<const TrainSample> batch, const NoiseSchedule& sched,
                            const NoisePlan& plan, std::span<double> grad) {
  const int wd = net.cfg.window_dim();
  check_plan(plan, batch.size(), wd, sched.K);
  if (grad.size() != net.n_params) throw std::invalid_argument("grad buffer size");
  std::fill(grad.begin(), grad.end(), 0.0);
  Workspace ws = make_workspace(net);
  double total = 0, one = 1.0;
  for (size_t s = 0; s < batch.size(); ++s) {
    std::span<const double> eps(plan.eps.data() + s * wd, wd);
    total += sample_loss(net, w, batch[s], sched, plan.k[s], eps, ws, &one, grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (size_t i = 0; i < net.n_params; ++i) grad[i] *= inv;
  return total * inv;
}

double loss_only(const DenoiserNet& net, std::span<const double> w,
                 std::span<const TrainSample> batch, const NoiseSchedule& sched,
                 const NoisePlan& plan) {
  const int wd = net.cfg.window_dim();
  check_plan(plan, batch.size(), wd, sched.K);
  Workspace ws = make_workspace(net);
  double total = 0;
  for (size_t s = 0; s < batch.size(); ++s) {
    std::span<const double> eps(plan.eps.data() + s * wd, wd);
    total += sample_loss(net, w, batch[s], sched, plan.k[s], eps, ws, nullptr, {});
  }
  return total / static_cast<double>(batch.size());
}

void denoise_step(const DenoiserNet& net, std::span<const double> w, std::span<double> window,
                  int k, const TrainSample& cond, const NoiseSchedule& sched,
                  std::span<const double> z) {
  if (k < 1 || k > sched.K) throw std::invalid_argument("denoise step out of range");
  const int wd = net.cfg.window_dim();
  std::vector<double> eps_hat(wd);
  net_forward(net, w, window, k, cond, eps_hat);
  if (net.cfg.clip_x0 > 0) {
    // Clamp the x0 implied by eps_hat, then fold the clamp back into eps_hat
    // so the update keeps its single closed form.
    const double sa = std::sqrt(sched.alpha_bar[k]);
    const double sb = std::sqrt(1.0 - sched.alpha_bar[k]);
    for (int i = 0; i < wd; ++i) {
      double x0 = (window[i] - sb * eps_hat[i]) / sa;
      x0 = std::clamp(x0, -net.cfg.clip_x0, net.cfg.clip_x0);
      eps_hat[i] = (window[i] - sa * x0) / sb;
    }
  }
  for (int i = 0; i < wd; ++i) window[i] = sched.alpha[k] * (window[i] - sched.gamma[k] * eps_hat[i]);
  if (sched.sigma[k] != 0.0) {
    if (z.size() != static_cast<size_t>(wd)) throw std::invalid_argument("noise size");
    for (int i = 0; i < wd; ++i) window[i] += sched.sigma[k] * z[i];
  }
}

std::vector<double> sample_window(const DenoiserNet& net, const TrainSample& cond,
                                  const NoiseSchedule& sched, Rng& rng) {
  const int wd = net.cfg.window_dim();
  std::vector<double> window(wd), z(wd);
  for (double& v : window) v = rng.normal();
  for (int k = sched.K; k >= 1; --k) {
    if (sched.sigma[k] != 0.0)
      for (double& v : z) v = rng.normal();
    denoise_step(net, net.ema, window, k, cond, sched, z);
  }
  return window;
}

std::array<double, kActionDim> rest_action(std::span<const double> first_obs) {
  std::array<double, kActionDim> a{};
  for (int i = 0; i < 9; ++i) a[i] = first_obs[i];
  a[9] = 0.0;
  return a;
}

std::vector<double> build_condition(std::span<const std::vector<double>> obs_hist,
                                    std::span<const std::array<double, kActionDim>> act_hist,
                                    const NormStats& stats, const PolicyConfig& cfg) {
  if (obs_hist.empty() || obs_hist.size() != act_hist.size() + 1)
    throw std::invalid_argument("history sizes: need one more obs than acts");
  const int t = static_cast<int>(obs_hist.size()) - 1;
  std::vector<double> cond;
  cond.reserve(cfg.obs_horizon * (cfg.obs_dim + kActionDim));
  auto rest = rest_action(obs_hist[0]);
  for (int i = 0; i < cfg.obs_horizon; ++i) {
    int tau = t - (cfg.obs_horizon - 1) + i;
    const std::vector<double>& o = obs_hist[std::max(tau, 0)];
    if (static_cast<int>(o.size()) != cfg.obs_dim) throw std::invalid_argument("obs dim mismatch");
    size_t at = cond.size();
    cond.insert(cond.end(), o.begin(), o.end());
    normalize(std::span<double>(cond.data() + at, cfg.obs_dim), stats.obs_mean, stats.obs_std);
  }
  for (int i = 0; i < cfg.obs_horizon; ++i) {
    int tau = t - (cfg.obs_horizon - 1) + i;
    const std::array<double, kActionDim>& a = tau - 1 >= 0 ? act_hist[tau - 1] : rest;
    size_t at = cond.size();
    cond.insert(cond.end(), a.begin(), a.end());
    normalize(std::span<double>(cond.data() + at, kActionDim), stats.act_mean, stats.act_std);
  }
  return cond;
}

std::vector<TrainSample> windows_from_dataset(const DemoDataset& ds, const PolicyConfig& cfg) {
  std::vector<TrainSample> out;
  for (const auto& demo : ds.demos) {
    const int M = static_cast<int>(demo.kf.size());
    if (M == 0) continue;
    std::vector<std::vector<double>> obs;
    std::vector<std::array<double, kActionDim>> act;
    for (const auto& kf : demo.kf) {
      obs.push_back(kf.obs);
      act.push_back(kf.act);
    }
    for (int t = 0; t < M; ++t) {
      TrainSample s;
      s.cond = build_condition(std::span(obs.data(), t + 1), std::span(act.data(), t),
                               ds.stats, cfg);
      s.window.reserve(cfg.window_dim());
      for (int i = 0; i < cfg.pred_horizon; ++i) {
        const auto& a = act[std::min(t + i, M - 1)];
        size_t at = s.window.size();
        s.window.insert(s.window.end(), a.begin(), a.end());
        normalize(std::span<double>(s.window.data() + at, kActionDim), ds.stats.act_mean,
                  ds.stats.act_std);
      }
      if (cfg.pc_points > 0) {
        if (static_cast<int>(demo.kf[t].pc.size()) != cfg.pc_points)
          throw std::invalid_argument("demo keyframe cloud size mismatch");
        s.points = demo.kf[t].pc;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrainLog train(DenoiserNet& net, const DemoDataset& ds) {
  const PolicyConfig& cfg = net.cfg;
  cfg.validate();
  net.stats = ds.stats;
  std::vector<TrainSample> samples = windows_from_dataset(ds, cfg);
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  NoiseSchedule sched = make_schedule(cfg.diffusion_steps);

  TrainLog log;
  const size_t N = samples.size();
  std::vector<size_t> perm(N);
  for (size_t i = 0; i < N; ++i) perm[i] = i;

  std::vector<double> grad(net.n_params), m(net.n_params, 0.0), v(net.n_params, 0.0);
  Rng shuffle_rng(seed_stream("train-shuffle", cfg.seed));
  Rng noise_rng(seed_stream("train-noise", cfg.seed));
  Rng aug_rng(seed_stream("train-aug", cfg.seed));
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  long long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double t = cfg.epochs > 1 ? double(epoch) / double(cfg.epochs - 1) : 0.0;
    const double lr = cfg.lr_final + 0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(M_PI * t));
    for (size_t i = N - 1; i > 0; --i)
      std::swap(perm[i], perm[shuffle_rng.uniform_int(0, static_cast<int64_t>(i))]);
    double ep_loss = 0;
    for (size_t start = 0; start < N; start += cfg.batch) {
      const size_t bs = std::min(static_cast<size_t>(cfg.batch), N - start);
      std::vector<TrainSample> batch;
      batch.reserve(bs);
      for (size_t i = 0; i < bs; ++i) batch.push_back(samples[perm[start + i]]);
      if (cfg.cond_noise > 0)
        for (auto& s : batch)
          for (double& c : s.cond) c += cfg.cond_noise * aug_rng.normal();
      NoisePlan plan = draw_noise_plan(static_cast<int>(bs), cfg.window_dim(),
                                       cfg.diffusion_steps, noise_rng);
      double loss = loss_and_grad(net, net.params, batch, sched, plan, grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " offset " << start;
        throw std::runtime_error(msg.str());
      }
      ++step;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
#pragma omp parallel for schedule(static)
      for (long long i = 0; i < static_cast<long long>(net.n_params); ++i) {
        double g = grad[i] + cfg.weight_decay * net.params[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        net.params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
        net.ema[i] = cfg.ema_decay * net.ema[i] + (1.0 - cfg.ema_decay) * net.params[i];
      }
      ep_loss += loss * static_cast<double>(bs);
    }
    log.epoch_loss.push_back(ep_loss / static_cast<double>(N));
  }
  return log;
}

double grad_check(DenoiserNet& net, std::span<const TrainSample> batch,
                  const NoiseSchedule& sched, uint64_t seed, int probes, int corrupt) {
  Rng noise(seed_stream("gc-noise", seed));
  NoisePlan plan = draw_noise_plan(static_cast<int>(batch.size()), net.cfg.window_dim(),
                                   sched.K, noise);
  std::vector<double> grad(net.n_params);
  loss_and_grad_simple(net, net.params, batch, sched, plan, grad);

  Rng pick(seed_stream("gc-idx", seed));
  std::vector<size_t> idx(probes);
  for (auto& i : idx) i = static_cast<size_t>(pick.uniform_int(0, static_cast<int64_t>(net.n_params) - 1));
  if (corrupt >= 0 && corrupt < probes)
    grad[idx[corrupt]] = grad[idx[corrupt]] * 1.5 + 1.0;

  const double h = 1e-5;
  double worst = 0;
  for (size_t i : idx) {
    const double saved = net.params[i];
    net.params[i] = saved + h;
    double f1 = loss_only(net, net.params, batch, sched, plan);
    net.params[i] = saved - h;
    double f2 = loss_only(net, net.params, batch, sched, plan);
    net.params[i] = saved;
    double fd = (f1 - f2) / (2.0 * h);
    double rel = std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

void save_model(const std::string& path, const DenoiserNet& net) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  Json h;
  h["v"] = 1;
  h["cfg"] = net.cfg.to_json();
  h["stats"] = net.stats.to_json();
  h["sizes"] = net.sizes;
  h["param_count"] = net.n_params;
  f << h.dump() << "\n";
  f.write(reinterpret_cast<const char*>(net.params.data()),
          static_cast<std::streamsize>(net.params.size() * sizeof(double)));
  f.write(reinterpret_cast<const char*>(net.ema.data()),
          static_cast<std::streamsize>(net.ema.size() * sizeof(double)));
}

DenoiserNet load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("model header missing");
  Json h = Json::parse(header);
  if (!h.contains("v") || h.at("v").get<int>() != 1)
    throw std::invalid_argument("unsupported model version");
  DenoiserNet net = make_net(PolicyConfig::from_json(h.at("cfg")));
  net.stats = NormStats::from_json(h.at("stats"));
  if (h.at("param_count").get<size_t>() != net.n_params)
    throw std::runtime_error("model parameter count mismatch");
  f.read(reinterpret_cast<char*>(net.params.data()),
         static_cast<std::streamsize>(net.n_params * sizeof(double)));
  f.read(reinterpret_cast<char*>(net.ema.data()),
         static_cast<std::streamsize>(net.n_params * sizeof(double)));
  if (!f) throw std::runtime_error("model file truncated");
  f.peek();
  if (!f.eof()) throw std::runtime_error("model file has trailing bytes");
  return net;
}

}  // namespace articulab
