#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "articulab/mechanisms.hpp"
#include "articulab/types.hpp"

namespace articulab {

using Json = nlohmann::ordered_json;

// A rigid link. `joints` lists indices into ObjectInstance::joints, applied
// in order between the base frame and `rest_pose` (at most two, e.g. a
// coaxial revolute+prismatic pair). `handle_point` is the graspable spot in
// the part frame, off the joint axes so rotations displace it.
struct Part {
  std::string name;
  std::vector<int> joints;
  Vec3 box_extents{0.1, 0.1, 0.1};
  Pose rest_pose;
  Vec3 handle_point{};
};

struct ObjectInstance {
  Category category = Category::Bottle;
  uint64_t seed = 0;
  Pose base_pose;
  std::vector<Part> parts;
  std::vector<JointSpec> joints;
  std::vector<Interval> effective;  // current limits; starts at mechanism output
  int goal_joint = 0;               // ignored when success is latch-driven
  MechanismState mechanism;
};

// End-effector state. `pose` is always the current EE pose; while attached it
// coincides with the grasped part's handle pose.
struct GraspState {
  bool attached = false;
  int part = -1;
  bool gripper_open = true;
  Pose pose;
};

struct StepResult {
  Pose achieved;                 // EE pose after the step
  std::vector<double> desired;   // per-joint displacement asked for
  std::vector<double> applied;   // per-joint displacement after clamping
  std::vector<bool> blocked;     // asked for motion, limits refused it
  bool any_blocked = false;
};

struct GenConfig {
  MechanismPriors priors;
  Interval key_angle_hi{1.3, 1.6};    // handle/knob swing limit
  Interval goal_angle_hi{1.2, 1.9};   // door/window/sash swing limit
  Interval lift_hi{0.04, 0.10};       // cap/lid travel
  Interval press_hi{0.022, 0.035};    // button/knob press travel
  void validate() const;
  Json to_json() const;
  static GenConfig from_json(const Json& j);
};

// Deterministic in (category, seed, cfg): dimensions, limits and the hidden
// mechanism all come from one seeded stream.
ObjectInstance build_instance(Category category, uint64_t seed, const GenConfig& cfg = {});

Pose part_pose(const ObjectInstance& obj, int part);
Pose handle_pose(const ObjectInstance& obj, int part);
Pose home_pose(const ObjectInstance& obj);

// World axis/anchor of a joint given current values of any preceding joint
// on the same part.
Vec3 joint_world_axis(const ObjectInstance& obj, int joint);

GraspState grasp(const ObjectInstance& obj, int part);

inline void release(GraspState& g) {
  g.attached = false;
  g.part = -1;
  g.gripper_open = true;
}

// Quasi-static step: the EE target is projected onto the grasped part's
// joints (off-axis displacement is discarded), clamped to effective limits,
// then the mechanism observes the new values and may lift limits for the
// *next* step. Joints not on the grasped part never move.
StepResult step_to(ObjectInstance& obj, GraspState& grasp, const Pose& target);

bool is_success(const ObjectInstance& obj);

// Manipulation thresholds shared by the simulator and the experts.
inline constexpr double kSuccessFrac = 0.85;   // goal joint fraction of nominal hi
inline constexpr double kMinCommand = 1e-3;    // below this a desire is "no motion asked"
inline constexpr double kBlockedTol = 1e-6;    // applied-vs-desired slack

Json instance_to_json(const ObjectInstance& obj);
ObjectInstance instance_from_json(const Json& j);

Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);

void write_objects_file(const std::string& path, const std::vector<ObjectInstance>& objs,
                        const GenConfig& cfg);
std::vector<ObjectInstance> read_objects_file(const std::string& path);

}  // namespace articulab
