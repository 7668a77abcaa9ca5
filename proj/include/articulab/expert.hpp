#pragma once

#include <optional>
#include <span>

#include "articulab/perception.hpp"

namespace articulab {

enum class MacroLabel { Grasp, Regrasp, Rotate, Lift, Pull, Push, Release };
enum class ProbeKind { None, LockProbe, DirectionProbe, ModeProbe, ReleaseProbe };

std::string to_string(MacroLabel l);

// One manipulation decision: drive the EE to `target` (grasp/regrasp switch
// contact to `part` first). `param` is the signed joint displacement the
// motion corresponds to, used to compare retried probes.
struct MacroGoal {
  MacroLabel label = MacroLabel::Grasp;
  ProbeKind probe = ProbeKind::None;
  int part = -1;
  Pose target;
  bool gripper_closed = true;
  double param = 0;
};

// What actually happened when a macro ran.
struct MacroFeedback {
  MacroGoal goal;
  std::vector<double> applied;  // per-joint displacement summed over the macro
  std::vector<bool> blocked;    // limit refused motion on that joint
  bool jammed = false;          // blocked with negligible total progress
};

// Everything an agent may condition on: kinematics, nominal limits, joint
// values and the grasp. No mechanism payload, no effective limits.
struct VisibleJoint {
  JointKind kind;
  Vec3 axis;
  Vec3 anchor;
  Interval nominal;
  double value;
};

struct VisibleState {
  Category category = Category::Bottle;
  Pose base_pose;
  std::vector<Part> parts;
  std::vector<VisibleJoint> joints;
  int goal_joint = 0;
  GraspState grasp;
};

VisibleState make_visible(const ObjectInstance& obj, const GraspState& gs);

struct ExpertConfig {
  int trials = 1;        // attempts per failed probe before elimination; 0 = full observation
  int max_macros = 60;
  double rotate_step = 0.25;  // rad
  double probe_angle = 0.2;   // rad, optimistic goal-joint pull
  double open_frac = 0.9;     // final goal motion, fraction of nominal hi
  int pc_points = 0;          // per-keyframe point cloud size, 0 = off

  Json to_json() const;
  static ExpertConfig from_json(const Json& j);
};

// Next macro given the feedback so far. Pure function: randomness is derived
// from (demo_seed, history.size()). Passing `hidden` switches to the
// full-observation script used for trials = 0.
// Throws on inconsistent feedback (a block reported on a joint the macro
// never commanded).
MacroGoal expert_next_goal(const VisibleState& vis, std::span<const MacroFeedback> history,
                           const ExpertConfig& cfg, uint64_t demo_seed,
                           const MechanismState* hidden);

struct Keyframe {
  std::vector<double> obs;
  std::array<double, kActionDim> act;
  std::vector<Vec3> pc;  // empty unless point-cloud conditioning is enabled
};

struct Demonstration {
  Category cat = Category::Bottle;
  uint64_t seed = 0;
  std::vector<Keyframe> kf;
  bool ok = false;
  int trials = 1;
};

// Dense rollout row; `macro_start` marks decision points.
struct DenseRow {
  std::vector<double> obs;
  std::array<double, kActionDim> act;
  int macro_id = 0;
  bool macro_start = false;
  std::vector<Vec3> pc;
};

struct RolloutDetail {
  Demonstration demo;
  std::vector<MacroFeedback> macros;
  std::vector<DenseRow> dense;
};

// Runs the expert on a copy of `proto` from the rest state. Macros execute
// as micro-steps (~1 cm / 0.05 rad) and abort on a jam; the jam lands in the
// feedback the next decision sees.
RolloutDetail rollout_expert(const ObjectInstance& proto, const ExpertConfig& cfg,
                             uint64_t demo_seed);

// Keeps macro decision rows. Idempotent: applying it to its own output (all
// rows are decision rows) is the identity.
std::vector<Keyframe> sparsify(std::span<const DenseRow> dense);

struct DemoDataset {
  std::vector<Demonstration> demos;
  NormStats stats;
  int trials = 1;
};

// per-instance fan-out is index-sharded, so thread count never changes the
// dataset. Throws if any rollout fails, listing the offending episodes.
DemoDataset collect_dataset(std::span<const ObjectInstance> objects, int per_object,
                            const ExpertConfig& cfg, uint64_t seed);

void write_demos_file(const std::string& path, const DemoDataset& ds);
DemoDataset read_demos_file(const std::string& path);
std::string stats_path_for(const std::string& demos_path);

}  // namespace articulab
