#pragma once

#include "articulab/diffusion.hpp"

namespace articulab {

struct HarnessConfig {
  int max_windows = 40;       // replanning budget per episode
  double snap_radius = 0.02;  // closed-gripper actions this close to a handle grasp it

  Json to_json() const;
  static HarnessConfig from_json(const Json& j);
};

struct EpisodeResult {
  Category cat = Category::Bottle;
  uint64_t instance_seed = 0;
  bool success = false;
  bool unfavorable = false;  // hidden state punishes the optimistic first try
  int actions = 0;
  bool aborted = false;  // planner produced a non-finite action
};

class Planner {
 public:
  virtual ~Planner() = default;
  // Next act_horizon raw actions from raw histories. Must be safe to call
  // from several episodes at once.
  virtual std::vector<std::array<double, kActionDim>> plan(
      std::span<const std::vector<double>> obs_hist,
      std::span<const std::array<double, kActionDim>> act_hist, const ObjectInstance& obj,
      Rng& rng) const = 0;
  virtual int horizon() const = 0;
};

// Receding-horizon diffusion policy on the EMA weights.
class NetPlanner : public Planner {
 public:
  explicit NetPlanner(const DenoiserNet& net);
  std::vector<std::array<double, kActionDim>> plan(
      std::span<const std::vector<double>> obs_hist,
      std::span<const std::array<double, kActionDim>> act_hist, const ObjectInstance& obj,
      Rng& rng) const override;
  int horizon() const override { return net_->cfg.act_horizon; }

 private:
  const DenoiserNet* net_;
  NoiseSchedule sched_;
};

// Uniform EE targets in a crate around the object; success-rate floor.
class RandomPlanner : public Planner {
 public:
  std::vector<std::array<double, kActionDim>> plan(
      std::span<const std::vector<double>> obs_hist,
      std::span<const std::array<double, kActionDim>> act_hist, const ObjectInstance& obj,
      Rng& rng) const override;
  int horizon() const override { return 2; }
};

// Executes one raw action: closed gripper near a handle snaps the grasp,
// attached motion goes through the simulator step, anything else moves the
// free EE. Returns false when the action is non-finite.
bool execute_action(ObjectInstance& obj, GraspState& gs, const std::array<double, kActionDim>& a,
                    double snap_radius);

EpisodeResult rollout_policy(const Planner& planner, const ObjectInstance& proto,
                             const HarnessConfig& hcfg, uint64_t episode_seed);

struct EvalRow {
  Category cat = Category::Bottle;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0;
  double stddev = 0;  // over seed groups
  int unfav_episodes = 0;
  int unfav_successes = 0;
};

struct SuccessReport {
  std::vector<EvalRow> rows;
};

// `episodes` per category, instance and episode seeds derived from `seed`,
// grouped into `seed_groups` round-robin for the spread estimate.
SuccessReport evaluate(const DenoiserNet& net, std::span<const Category> cats, int episodes,
                       int seed_groups, uint64_t seed, const GenConfig& gen,
                       const HarnessConfig& hcfg);

// Same episode grid, driven by the scripted expert / random planner. The
// expert row is the oracle upper bound for the policy rows.
SuccessReport evaluate_expert(const ExpertConfig& ecfg, std::span<const Category> cats,
                              int episodes, int seed_groups, uint64_t seed, const GenConfig& gen);
SuccessReport evaluate_random(std::span<const Category> cats, int episodes, int seed_groups,
                              uint64_t seed, const GenConfig& gen, const HarnessConfig& hcfg);

struct AblationConfig {
  int instances = 10;
  int per_object = 10;
  int episodes = 50;
  int seed_groups = 5;
  uint64_t seed = 0;
  GenConfig gen;
  PolicyConfig policy;
  HarnessConfig harness;
  ExpertConfig expert;  // trials is overridden per ablation cell

  Json to_json() const;
  static AblationConfig from_json(const Json& j);
};

struct AblationRow {
  int trials = 0;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0;
  int unfav_episodes = 0;
  int unfav_successes = 0;
  double unfav_rate = 0;
  double final_loss = 0;
};

// Full pipeline per trials value: collect demos, train, evaluate. Evaluation
// seeds are shared across cells so the comparison is paired.
std::vector<AblationRow> ablate_trials(Category cat, std::span<const int> trials,
                                       const AblationConfig& acfg);

void write_report_csv(const std::string& path, const SuccessReport& report,
                      const std::string& config_echo);
void write_ablation_csv(const std::string& path, std::span<const AblationRow> rows,
                        const std::string& config_echo);
void write_loss_csv(const std::string& path, const TrainLog& log);

}  // namespace articulab
