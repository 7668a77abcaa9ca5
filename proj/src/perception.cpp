#include "articulab/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace articulab {

std::vector<double> observe(const ObjectInstance& obj, const GraspState& gs) {
  if (obj.parts.size() > kPartSlots) throw std::length_error("too many parts for observation");
  if (obj.joints.size() > kJointSlots) throw std::length_error("too many joints for observation");
  std::vector<double> o(kObsDim, 0.0);
  o[kObsEePos + 0] = gs.pose.p.x;
  o[kObsEePos + 1] = gs.pose.p.y;
  o[kObsEePos + 2] = gs.pose.p.z;
  auto r6 = rot6d_encode(gs.pose.R);
  for (int i = 0; i < 6; ++i) o[kObsEeRot + i] = r6[i];
  o[kObsGripper] = gs.gripper_open ? 1.0 : 0.0;
  if (gs.attached) o[kObsGrasped + gs.part] = 1.0;
  for (size_t j = 0; j < obj.joints.size(); ++j) o[kObsJoints + j] = obj.joints[j].value;
  for (size_t p = 0; p < obj.parts.size(); ++p) {
    Pose hp = handle_pose(obj, static_cast<int>(p));
    o[kObsHandles + 3 * p + 0] = hp.p.x;
    o[kObsHandles + 3 * p + 1] = hp.p.y;
    o[kObsHandles + 3 * p + 2] = hp.p.z;
  }
  o[kObsCategory + static_cast<int>(obj.category)] = 1.0;
  return o;
}

std::array<double, kActionDim> encode_action(const Pose& target, bool gripper_closed) {
  std::array<double, kActionDim> a{};
  a[0] = target.p.x;
  a[1] = target.p.y;
  a[2] = target.p.z;
  auto r6 = rot6d_encode(target.R);
  for (int i = 0; i < 6; ++i) a[3 + i] = r6[i];
  a[9] = gripper_closed ? 1.0 : 0.0;
  return a;
}

Pose decode_action_pose(std::span<const double> a) {
  Pose p;
  p.p = {a[0], a[1], a[2]};
  p.R = rot6d_decode(std::span<const double, 6>(a.subspan(3, 6)));
  return p;
}

namespace {

struct FaceTable {
  // (part, face) rows with cumulative area; face order: +x,-x,+y,-y,+z,-z.
  std::vector<std::pair<int, int>> rows;
  std::vector<double> cum;
  double total = 0;
};

FaceTable face_table(const ObjectInstance& obj) {
  FaceTable t;
  for (size_t p = 0; p < obj.parts.size(); ++p) {
    const Vec3& e = obj.parts[p].box_extents;
    const double areas[6] = {e.y * e.z, e.y * e.z, e.x * e.z, e.x * e.z, e.x * e.y, e.x * e.y};
    for (int f = 0; f < 6; ++f) {
      t.total += areas[f];
      t.rows.emplace_back(static_cast<int>(p), f);
      t.cum.push_back(t.total);
    }
  }
  return t;
}

Vec3 face_point(const Vec3& e, int face, double u1, double u2) {
  double hx = e.x / 2, hy = e.y / 2, hz = e.z / 2;
  switch (face) {
    case 0: return {hx, (u1 - 0.5) * e.y, (u2 - 0.5) * e.z};
    case 1: return {-hx, (u1 - 0.5) * e.y, (u2 - 0.5) * e.z};
    case 2: return {(u1 - 0.5) * e.x, hy, (u2 - 0.5) * e.z};
    case 3: return {(u1 - 0.5) * e.x, -hy, (u2 - 0.5) * e.z};
    case 4: return {(u1 - 0.5) * e.x, (u2 - 0.5) * e.y, hz};
    default: return {(u1 - 0.5) * e.x, (u2 - 0.5) * e.y, -hz};
  }
}

PointCloud sample_points_impl(const ObjectInstance& obj, int count, uint64_t seed, bool parallel) {
  FaceTable t = face_table(obj);
  std::vector<Pose> poses;
  for (size_t p = 0; p < obj.parts.size(); ++p) poses.push_back(part_pose(obj, static_cast<int>(p)));
  PointCloud pc;
  pc.points.resize(count);
  pc.part.resize(count);
  auto one = [&](int i) {
    Rng r(seed_stream("points", seed, static_cast<uint64_t>(i)));
    double pick = r.uniform() * t.total;
    size_t row = std::lower_bound(t.cum.begin(), t.cum.end(), pick) - t.cum.begin();
    if (row >= t.rows.size()) row = t.rows.size() - 1;
    auto [part, face] = t.rows[row];
    Vec3 local = face_point(obj.parts[part].box_extents, face, r.uniform(), r.uniform());
    pc.points[i] = poses[part].apply(local);
    pc.part[i] = part;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) one(i);
  } else {
    for (int i = 0; i < count; ++i) one(i);
  }
  return pc;
}

}  // namespace

PointCloud sample_points(const ObjectInstance& obj, int count, uint64_t seed) {
  return sample_points_impl(obj, count, seed, true);
}

PointCloud sample_points_serial(const ObjectInstance& obj, int count, uint64_t seed) {
  return sample_points_impl(obj, count, seed, false);
}

std::vector<int> fps_serial(std::span<const Vec3> pts, int count, int start) {
  const int n = static_cast<int>(pts.size());
  if (count < 1 || count > n) throw std::invalid_argument("fps: bad count");
  if (start < 0 || start >= n) throw std::invalid_argument("fps: bad start");
  std::vector<int> out;
  out.reserve(count);
  out.push_back(start);
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    Vec3 diff = pts[i] - pts[start];
    d[i] = dot(diff, diff);
  }
  for (int k = 1; k < count; ++k) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (d[i] > d[best]) best = i;
    out.push_back(best);
    for (int i = 0; i < n; ++i) {
      Vec3 diff = pts[i] - pts[best];
      double di = dot(diff, diff);
      if (di < d[i]) d[i] = di;
    }
  }
  return out;
}

std::vector<int> fps(std::span<const Vec3> pts, int count, int start) {
  const int n = static_cast<int>(pts.size());
  if (count < 1 || count > n) throw std::invalid_argument("fps: bad count");
  if (start < 0 || start >= n) throw std::invalid_argument("fps: bad start");
  std::vector<int> out;
  out.reserve(count);
  out.push_back(start);
  std::vector<double> d(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Vec3 diff = pts[i] - pts[start];
    d[i] = dot(diff, diff);
  }
  for (int k = 1; k < count; ++k) {
    int best = 0;
    // (distance desc, index asc) is a total order, so the merge result does
    // not depend on thread scheduling.
#pragma omp parallel
    {
      int local = 0;
#pragma omp for nowait schedule(static)
      for (int i = 1; i < n; ++i)
        if (d[i] > d[local] || (d[i] == d[local] && i < local)) local = i;
#pragma omp critical
      {
        if (d[local] > d[best] || (d[local] == d[best] && local < best)) best = local;
      }
    }
    out.push_back(best);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      Vec3 diff = pts[i] - pts[best];
      double di = dot(diff, diff);
      if (di < d[i]) d[i] = di;
    }
  }
  return out;
}

NormStats compute_stats(const std::vector<std::vector<double>>& obs,
                        const std::vector<std::array<double, kActionDim>>& act) {
  if (obs.empty() || act.empty()) throw std::invalid_argument("compute_stats: empty input");
  const size_t od = obs[0].size();
  NormStats s;
  s.obs_mean.assign(od, 0.0);
  s.obs_std.assign(od, 0.0);
  s.act_mean.assign(kActionDim, 0.0);
  s.act_std.assign(kActionDim, 0.0);
  for (const auto& row : obs)
    for (size_t i = 0; i < od; ++i) s.obs_mean[i] += row[i];
  for (double& m : s.obs_mean) m /= static_cast<double>(obs.size());
  for (const auto& row : obs)
    for (size_t i = 0; i < od; ++i) {
      double d = row[i] - s.obs_mean[i];
      s.obs_std[i] += d * d;
    }
  for (double& v : s.obs_std) {
    v = std::max(std::sqrt(v / static_cast<double>(obs.size())), 1e-6);
  }
  for (const auto& row : act)
    for (int i = 0; i < kActionDim; ++i) s.act_mean[i] += row[i];
  for (double& m : s.act_mean) m /= static_cast<double>(act.size());
  for (const auto& row : act)
    for (int i = 0; i < kActionDim; ++i) {
      double d = row[i] - s.act_mean[i];
      s.act_std[i] += d * d;
    }
  for (double& v : s.act_std) {
    v = std::max(std::sqrt(v / static_cast<double>(act.size())), 1e-6);
  }
  return s;
}

void normalize(std::span<double> x, std::span<const double> mean, std::span<const double> std) {
  for (size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mean[i]) / std[i];
}

void denormalize(std::span<double> x, std::span<const double> mean, std::span<const double> std) {
  for (size_t i = 0; i < x.size(); ++i) x[i] = x[i] * std[i] + mean[i];
}

Json NormStats::to_json() const {
  return Json{{"obs_mean", obs_mean}, {"obs_std", obs_std},
              {"act_mean", act_mean}, {"act_std", act_std}, {"v", 1}};
}

NormStats NormStats::from_json(const Json& j) {
  if (!j.contains("v") || j.at("v").get<int>() != 1)
    throw std::invalid_argument("unsupported stats version");
  NormStats s;
  s.obs_mean = j.at("obs_mean").get<std::vector<double>>();
  s.obs_std = j.at("obs_std").get<std::vector<double>>();
  s.act_mean = j.at("act_mean").get<std::vector<double>>();
  s.act_std = j.at("act_std").get<std::vector<double>>();
  return s;
}

void write_stats_file(const std::string& path, const NormStats& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << s.to_json().dump() << "\n";
}

NormStats read_stats_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return NormStats::from_json(Json::parse(f));
}

}  // namespace articulab
