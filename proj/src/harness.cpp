#include "articulab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace articulab {

Json HarnessConfig::to_json() const {
  Json j;
  j["max_windows"] = max_windows;
  j["snap_radius"] = snap_radius;
  return j;
}

HarnessConfig HarnessConfig::from_json(const Json& j) {
  HarnessConfig c;
  c.max_windows = j.value("max_windows", c.max_windows);
  c.snap_radius = j.value("snap_radius", c.snap_radius);
  return c;
}

Json AblationConfig::to_json() const {
  Json j;
  j["instances"] = instances;
  j["per_object"] = per_object;
  j["episodes"] = episodes;
  j["seed_groups"] = seed_groups;
  j["seed"] = seed;
  j["gen"] = gen.to_json();
  j["policy"] = policy.to_json();
  j["harness"] = harness.to_json();
  j["expert"] = expert.to_json();
  return j;
}

AblationConfig AblationConfig::from_json(const Json& j) {
  AblationConfig c;
  c.instances = j.value("instances", c.instances);
  c.per_object = j.value("per_object", c.per_object);
  c.episodes = j.value("episodes", c.episodes);
  c.seed_groups = j.value("seed_groups", c.seed_groups);
  c.seed = j.value("seed", c.seed);
  if (j.contains("gen")) c.gen = GenConfig::from_json(j.at("gen"));
  if (j.contains("policy")) c.policy = PolicyConfig::from_json(j.at("policy"));
  if (j.contains("harness")) c.harness = HarnessConfig::from_json(j.at("harness"));
  if (j.contains("expert")) c.expert = ExpertConfig::from_json(j.at("expert"));
  return c;
}

NetPlanner::NetPlanner(const DenoiserNet& net)
    : net_(&net), sched_(make_schedule(net.cfg.diffusion_steps)) {}

std::vector<std::array<double, kActionDim>> NetPlanner::plan(
    std::span<const std::vector<double>> obs_hist,
    std::span<const std::array<double, kActionDim>> act_hist, const ObjectInstance& obj,
    Rng& rng) const {
  const PolicyConfig& cfg = net_->cfg;
  TrainSample cond;
  cond.cond = build_condition(obs_hist, act_hist, net_->stats, cfg);
  if (cfg.pc_points > 0) cond.points = sample_points(obj, cfg.pc_points, rng.next_u64()).points;

  std::vector<double> window = sample_window(*net_, cond, sched_, rng);

  std::vector<std::array<double, kActionDim>> out;
  for (int i = 0; i < cfg.act_horizon; ++i) {
    std::span<double> row(window.data() + i * kActionDim, kActionDim);
    denormalize(row, net_->stats.act_mean, net_->stats.act_std);
    std::array<double, kActionDim> a{};
    std::copy(row.begin(), row.end(), a.begin());
    bool finite = true;
    for (double v : a) finite = finite && std::isfinite(v);
    if (finite) {
      // Project the rotation block back onto SO(3).
      Mat3 R = rot6d_decode(std::span<const double, 6>(row.subspan(3, 6)));
      auto r6 = rot6d_encode(R);
      for (int j = 0; j < 6; ++j) a[3 + j] = r6[j];
    }
    out.push_back(a);
  }
  return out;
}

std::vector<std::array<double, kActionDim>> RandomPlanner::plan(
    std::span<const std::vector<double>>, std::span<const std::array<double, kActionDim>>,
    const ObjectInstance& obj, Rng& rng) const {
  std::vector<std::array<double, kActionDim>> out;
  for (int i = 0; i < horizon(); ++i) {
    Pose t;
    t.p = obj.base_pose.p +
          Vec3{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.3, 0.9)};
    out.push_back(encode_action(t, rng.bernoulli(0.5)));
  }
  return out;
}

bool execute_action(ObjectInstance& obj, GraspState& gs, const std::array<double, kActionDim>& a,
                    double snap_radius) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  const bool grip_closed = a[9] >= 0.5;
  Pose target = decode_action_pose(a);

  if (grip_closed) {
    int best = -1;
    double bestd = snap_radius;
    for (size_t p = 0; p < obj.parts.size(); ++p) {
      double d = norm(target.p - handle_pose(obj, static_cast<int>(p)).p);
      if (d <= bestd) {
        bestd = d;
        best = static_cast<int>(p);
      }
    }
    if (best >= 0 && (!gs.attached || gs.part != best)) {
      if (gs.attached) release(gs);
      gs = grasp(obj, best);
      return true;
    }
    if (gs.attached) {
      step_to(obj, gs, target);
      return true;
    }
    gs.pose = target;
    gs.gripper_open = false;
    return true;
  }
  if (gs.attached) release(gs);
  gs.pose = target;
  gs.gripper_open = true;
  return true;
}

EpisodeResult rollout_policy(const Planner& planner, const ObjectInstance& proto,
                             const HarnessConfig& hcfg, uint64_t episode_seed) {
  EpisodeResult res;
  res.cat = proto.category;
  res.instance_seed = proto.seed;
  res.unfavorable = mechanism_unfavorable(proto.mechanism);

  ObjectInstance obj = proto;
  GraspState gs;
  gs.pose = home_pose(obj);
  Rng rng(seed_stream("episode", episode_seed));

  std::vector<std::vector<double>> obs_hist{observe(obj, gs)};
  std::vector<std::array<double, kActionDim>> act_hist;

  for (int w = 0; w < hcfg.max_windows && !is_success(obj); ++w) {
    auto acts = planner.plan(obs_hist, act_hist, obj, rng);
    for (const auto& a : acts) {
      if (!execute_action(obj, gs, a, hcfg.snap_radius)) {
        res.aborted = true;
        res.actions = static_cast<int>(act_hist.size());
        return res;
      }
      act_hist.push_back(a);
      obs_hist.push_back(observe(obj, gs));
      if (is_success(obj)) break;
    }
  }
  res.success = is_success(obj);
  res.actions = static_cast<int>(act_hist.size());
  return res;
}

namespace {

// Episode runner abstraction so the expert oracle and planners share the
// evaluation grid and seed streams exactly.
struct EpisodeFn {
  virtual ~EpisodeFn() = default;
  virtual EpisodeResult run(const ObjectInstance& proto, uint64_t episode_seed) const = 0;
};

SuccessReport run_grid(const EpisodeFn& fn, std::span<const Category> cats, int episodes,
                       int seed_groups, uint64_t seed, const GenConfig& gen) {
  if (episodes < 1 || seed_groups < 1 || seed_groups > episodes)
    throw std::invalid_argument("evaluate: bad episode/seed-group counts");
  SuccessReport report;
  for (Category cat : cats) {
    std::vector<EpisodeResult> results(episodes);
#pragma omp parallel for schedule(static)
    for (int e = 0; e < episodes; ++e) {
      uint64_t inst_seed = seed_stream("eval-inst", seed, static_cast<uint64_t>(cat), e);
      uint64_t ep_seed = seed_stream("eval-ep", seed, static_cast<uint64_t>(cat), e);
      ObjectInstance obj = build_instance(cat, inst_seed, gen);
      results[e] = fn.run(obj, ep_seed);
    }
    EvalRow row;
    row.cat = cat;
    row.episodes = episodes;
    std::vector<double> gsucc(seed_groups, 0.0), gn(seed_groups, 0.0);
    for (int e = 0; e < episodes; ++e) {
      const EpisodeResult& r = results[e];
      row.successes += r.success ? 1 : 0;
      row.unfav_episodes += r.unfavorable ? 1 : 0;
      row.unfav_successes += (r.unfavorable && r.success) ? 1 : 0;
      gsucc[e % seed_groups] += r.success ? 1.0 : 0.0;
      gn[e % seed_groups] += 1.0;
    }
    row.success_rate = static_cast<double>(row.successes) / episodes;
    double acc = 0;
    for (int g = 0; g < seed_groups; ++g) {
      double diff = gsucc[g] / gn[g] - row.success_rate;
      acc += diff * diff;
    }
    row.stddev = std::sqrt(acc / seed_groups);
    report.rows.push_back(row);
  }
  return report;
}

struct PlannerEpisode : EpisodeFn {
  const Planner* planner;
  const HarnessConfig* hcfg;
  EpisodeResult run(const ObjectInstance& proto, uint64_t episode_seed) const override {
    return rollout_policy(*planner, proto, *hcfg, episode_seed);
  }
};

struct ExpertEpisode : EpisodeFn {
  const ExpertConfig* ecfg;
  EpisodeResult run(const ObjectInstance& proto, uint64_t episode_seed) const override {
    RolloutDetail d = rollout_expert(proto, *ecfg, episode_seed);
    EpisodeResult r;
    r.cat = proto.category;
    r.instance_seed = proto.seed;
    r.unfavorable = mechanism_unfavorable(proto.mechanism);
    r.success = d.demo.ok;
    r.actions = static_cast<int>(d.demo.kf.size());
    return r;
  }
};

}  // namespace

SuccessReport evaluate(const DenoiserNet& net, std::span<const Category> cats, int episodes,
                       int seed_groups, uint64_t seed, const GenConfig& gen,
                       const HarnessConfig& hcfg) {
  NetPlanner planner(net);
  PlannerEpisode fn;
  fn.planner = &planner;
  fn.hcfg = &hcfg;
  return run_grid(fn, cats, episodes, seed_groups, seed, gen);
}

SuccessReport evaluate_expert(const ExpertConfig& ecfg, std::span<const Category> cats,
                              int episodes, int seed_groups, uint64_t seed, const GenConfig& gen) {
  ExpertEpisode fn;
  fn.ecfg = &ecfg;
  return run_grid(fn, cats, episodes, seed_groups, seed, gen);
}

SuccessReport evaluate_random(std::span<const Category> cats, int episodes, int seed_groups,
                              uint64_t seed, const GenConfig& gen, const HarnessConfig& hcfg) {
  RandomPlanner planner;
  PlannerEpisode fn;
  fn.planner = &planner;
  fn.hcfg = &hcfg;
  return run_grid(fn, cats, episodes, seed_groups, seed, gen);
}

std::vector<AblationRow> ablate_trials(Category cat, std::span<const int> trials,
                                       const AblationConfig& acfg) {
  std::vector<AblationRow> rows;
  std::vector<ObjectInstance> train_objs;
  for (int i = 0; i < acfg.instances; ++i)
    train_objs.push_back(
        build_instance(cat, seed_stream("ablate-train-inst", acfg.seed, i), acfg.gen));

  for (int t : trials) {
    ExpertConfig ecfg = acfg.expert;
    ecfg.trials = t;
    ecfg.pc_points = acfg.policy.pc_points;
    DemoDataset ds =
        collect_dataset(train_objs, acfg.per_object, ecfg, seed_stream("ablate-demo", acfg.seed));

    DenoiserNet net = make_net(acfg.policy);
    TrainLog log = train(net, ds);

    Category cats[1] = {cat};
    SuccessReport rep = evaluate(net, cats, acfg.episodes, acfg.seed_groups, acfg.seed, acfg.gen,
                                 acfg.harness);
    const EvalRow& er = rep.rows.at(0);
    AblationRow row;
    row.trials = t;
    row.episodes = er.episodes;
    row.successes = er.successes;
    row.success_rate = er.success_rate;
    row.unfav_episodes = er.unfav_episodes;
    row.unfav_successes = er.unfav_successes;
    row.unfav_rate = er.unfav_episodes > 0
                         ? static_cast<double>(er.unfav_successes) / er.unfav_episodes
                         : 0.0;
    row.final_loss = log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back();
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::string& path, const SuccessReport& report,
                      const std::string& config_echo) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  if (!config_echo.empty()) f << "# " << config_echo << "\n";
  f << "category,episodes,successes,success_rate,stddev,unfav_episodes,unfav_successes\n";
  for (const auto& r : report.rows)
    f << to_string(r.cat) << "," << r.episodes << "," << r.successes << ","
      << fmt_rate(r.success_rate) << "," << fmt_rate(r.stddev) << "," << r.unfav_episodes << ","
      << r.unfav_successes << "\n";
}

void write_ablation_csv(const std::string& path, std::span<const AblationRow> rows,
                        const std::string& config_echo) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  if (!config_echo.empty()) f << "# " << config_echo << "\n";
  f << "trials,episodes,successes,success_rate,unfav_episodes,unfav_successes,unfav_rate,"
       "final_loss\n";
  for (const auto& r : rows)
    f << r.trials << "," << r.episodes << "," << r.successes << "," << fmt_rate(r.success_rate)
      << "," << r.unfav_episodes << "," << r.unfav_successes << "," << fmt_rate(r.unfav_rate)
      << "," << fmt_rate(r.final_loss) << "\n";
}

void write_loss_csv(const std::string& path, const TrainLog& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << "epoch,loss\n";
  for (size_t i = 0; i < log.epoch_loss.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", log.epoch_loss[i]);
    f << i << "," << buf << "\n";
  }
}

}  // namespace articulab
