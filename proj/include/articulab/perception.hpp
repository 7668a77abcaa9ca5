#pragma once

#include <span>
#include <vector>

#include "articulab/articulation.hpp"

namespace articulab {

// Observation layout (see docs/formats.md):
//   [0:3)   EE position
//   [3:9)   EE rotation, 6d
//   [9]     gripper open flag
//   [10:14) grasped-part one-hot (P_max slots)
//   [14:20) joint values (J_max slots, zero padded)
//   [20:32) per-part handle world positions (P_max * 3, zero padded)
//   [32:41) category one-hot
inline constexpr int kPartSlots = 4;
inline constexpr int kJointSlots = 6;
inline constexpr int kObsDim = 3 + 6 + 1 + kPartSlots + kJointSlots + 3 * kPartSlots + kNumCategories;
inline constexpr int kActionDim = 10;  // position 3, rotation 6d, gripper 1

inline constexpr int kObsEePos = 0;
inline constexpr int kObsEeRot = 3;
inline constexpr int kObsGripper = 9;
inline constexpr int kObsGrasped = 10;
inline constexpr int kObsJoints = 14;
inline constexpr int kObsHandles = 20;
inline constexpr int kObsCategory = 32;

// Never reads the mechanism payload; hidden state reaches the observation
// only through joint values and part poses.
std::vector<double> observe(const ObjectInstance& obj, const GraspState& gs);

// Action encoding of an EE target: gripper 1 = closed.
std::array<double, kActionDim> encode_action(const Pose& target, bool gripper_closed);
Pose decode_action_pose(std::span<const double> a);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int> part;  // owning part per point
};

// Area-weighted surface sampling of the part boxes at the current joint
// configuration. Point i depends only on (seed, i); thread count never
// changes the cloud.
PointCloud sample_points(const ObjectInstance& obj, int count, uint64_t seed);
PointCloud sample_points_serial(const ObjectInstance& obj, int count, uint64_t seed);

// Greedy farthest point sampling, Euclidean metric, distance ties broken by
// lowest index. Returns `count` indices starting at `start`.
std::vector<int> fps(std::span<const Vec3> pts, int count, int start);
std::vector<int> fps_serial(std::span<const Vec3> pts, int count, int start);

struct NormStats {
  std::vector<double> obs_mean, obs_std, act_mean, act_std;
  Json to_json() const;
  static NormStats from_json(const Json& j);
};

// Per-dimension mean/std; std is floored at 1e-6 so normalization stays a
// bijection and sampled values on constant dimensions stay at the mean.
NormStats compute_stats(const std::vector<std::vector<double>>& obs,
                        const std::vector<std::array<double, kActionDim>>& act);

void normalize(std::span<double> x, std::span<const double> mean, std::span<const double> std);
void denormalize(std::span<double> x, std::span<const double> mean, std::span<const double> std);

void write_stats_file(const std::string& path, const NormStats& s);
NormStats read_stats_file(const std::string& path);

}  // namespace articulab
