#include <cmath>
#include <filesystem>
#include <set>

#include "articulab/perception.hpp"
#include "doctest.h"

using namespace articulab;

namespace {

// Reference FPS: straight greedy scan, ties to the lowest index.
std::vector<int> fps_bruteforce(std::span<const Vec3> pts, int count, int start) {
  std::vector<int> picked{start};
  std::vector<double> dist(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) dist[i] = norm(pts[i] - pts[start]);
  while ((int)picked.size() < count) {
    int best = -1;
    double bd = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
      if (dist[i] > bd) {
        bd = dist[i];
        best = (int)i;
      }
    }
    picked.push_back(best);
    for (size_t i = 0; i < pts.size(); ++i) dist[i] = std::min(dist[i], norm(pts[i] - pts[best]));
  }
  return picked;
}

}  // namespace

TEST_CASE("observation layout carries the pieces it promises") {
  ObjectInstance obj = build_instance(Category::Safe, 4);
  GraspState gs;
  gs.pose = home_pose(obj);
  auto obs = observe(obj, gs);
  REQUIRE((int)obs.size() == kObsDim);
  CHECK(obs[kObsEePos + 0] == gs.pose.p.x);
  CHECK(obs[kObsEePos + 2] == gs.pose.p.z);
  CHECK(obs[kObsGripper] == 1.0);  // open
  for (int p = 0; p < kPartSlots; ++p) CHECK(obs[kObsGrasped + p] == 0.0);
  // Handles of real parts are world positions, padding stays zero.
  for (size_t p = 0; p < obj.parts.size(); ++p) {
    Vec3 hp = handle_pose(obj, (int)p).p;
    CHECK(obs[kObsHandles + 3 * p + 0] == hp.x);
    CHECK(obs[kObsHandles + 3 * p + 1] == hp.y);
    CHECK(obs[kObsHandles + 3 * p + 2] == hp.z);
  }
  int cat_hits = 0;
  for (int c = 0; c < kNumCategories; ++c) cat_hits += obs[kObsCategory + c] == 1.0;
  CHECK(cat_hits == 1);
  CHECK(obs[kObsCategory + (int)Category::Safe] == 1.0);

  GraspState attached = grasp(obj, 1);
  auto obs2 = observe(obj, attached);
  CHECK(obs2[kObsGripper] == 0.0);
  CHECK(obs2[kObsGrasped + 1] == 1.0);
}

TEST_CASE("observation never encodes the hidden mechanism") {
  // Two instances forced to identical kinematics but opposite hidden draws
  // must observe identically at the rest state.
  ObjectInstance a = build_instance(Category::Door, 21);
  ObjectInstance b = a;
  auto& ma = std::get<LockMech>(b.mechanism);
  ma.locked = !ma.locked;
  ma.direction = -ma.direction;
  GraspState gs;
  gs.pose = home_pose(a);
  auto oa = observe(a, gs);
  auto ob = observe(b, gs);
  REQUIRE(oa.size() == ob.size());
  for (size_t i = 0; i < oa.size(); ++i) CHECK(oa[i] == ob[i]);
}

TEST_CASE("action encode/decode roundtrip") {
  ObjectInstance obj = build_instance(Category::Pen, 2);
  Pose h = handle_pose(obj, 0);
  auto act = encode_action(h, true);
  CHECK(act[9] == 1.0);
  Pose back = decode_action_pose(act);
  CHECK(norm(back.p - h.p) < 1e-12);
  double dr = 0;
  for (int i = 0; i < 9; ++i) dr = std::max(dr, std::abs(back.R.m[i] - h.R.m[i]));
  CHECK(dr < 1e-9);
}

TEST_CASE("sampled points lie on part box surfaces, tagged with their part") {
  ObjectInstance obj = build_instance(Category::Bottle, 6);
  PointCloud pc = sample_points(obj, 500, 99);
  REQUIRE(pc.points.size() == 500);
  REQUIRE(pc.part.size() == 500);
  for (size_t i = 0; i < pc.points.size(); ++i) {
    REQUIRE(pc.part[i] >= 0);
    REQUIRE(pc.part[i] < (int)obj.parts.size());
    // Back-project into the part frame: must sit on the box surface.
    const Part& part = obj.parts[pc.part[i]];
    Vec3 local = part_pose(obj, pc.part[i]).inverse().apply(pc.points[i]);
    Vec3 half = part.box_extents * 0.5;
    double sx = std::abs(std::abs(local.x) - half.x);
    double sy = std::abs(std::abs(local.y) - half.y);
    double sz = std::abs(std::abs(local.z) - half.z);
    CHECK(std::min({sx, sy, sz}) < 1e-9);
    CHECK(std::abs(local.x) <= half.x + 1e-9);
    CHECK(std::abs(local.y) <= half.y + 1e-9);
    CHECK(std::abs(local.z) <= half.z + 1e-9);
  }
}

TEST_CASE("sample_points parallel and serial agree bitwise") {
  ObjectInstance obj = build_instance(Category::Window, 8);
  PointCloud a = sample_points(obj, 2048, 5);
  PointCloud b = sample_points_serial(obj, 2048, 5);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].y == b.points[i].y);
    CHECK(a.points[i].z == b.points[i].z);
    CHECK(a.part[i] == b.part[i]);
  }
}

TEST_CASE("fps matches the brute-force oracle on every small input") {
  Rng rng(seed_stream("fps-oracle", 0));
  for (int cloud = 0; cloud < 100; ++cloud) {
    int n = 1 + (int)rng.uniform_int(0, 63);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
      p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      // Quantized coordinates manufacture exact distance ties.
      if (cloud % 3 == 0) p = {std::round(p.x * 2) / 2, std::round(p.y * 2) / 2, 0.0};
    }
    int m = 1 + (int)rng.uniform_int(0, n - 1);
    int start = (int)rng.uniform_int(0, n - 1);
    auto expect = fps_bruteforce(pts, m, start);
    CHECK(fps(pts, m, start) == expect);
    CHECK(fps_serial(pts, m, start) == expect);
  }
}

TEST_CASE("fps spreads duplicate-free indices") {
  Rng rng(seed_stream("fps-spread", 1));
  std::vector<Vec3> pts(300);
  for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto idx = fps(pts, 50, 7);
  std::set<int> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == idx.size());
  CHECK(idx[0] == 7);
}

TEST_CASE("normalization is a bijection within 1e-12, constants included") {
  std::vector<std::vector<double>> obs;
  std::vector<std::array<double, kActionDim>> act;
  Rng rng(seed_stream("norm-test", 0));
  for (int i = 0; i < 40; ++i) {
    std::vector<double> o(kObsDim);
    for (auto& v : o) v = rng.uniform(-2, 2);
    o[5] = 3.25;  // constant dimension
    obs.push_back(o);
    std::array<double, kActionDim> a;
    for (auto& v : a) v = rng.uniform(-1, 1);
    act.push_back(a);
  }
  NormStats s = compute_stats(obs, act);
  CHECK(s.obs_std[5] == 1e-6);
  CHECK(s.obs_mean[5] == doctest::Approx(3.25));
  for (int i = 0; i < 10; ++i) {
    std::vector<double> x = obs[i];
    normalize(x, s.obs_mean, s.obs_std);
    denormalize(x, s.obs_mean, s.obs_std);
    for (int d = 0; d < kObsDim; ++d) CHECK(std::abs(x[d] - obs[i][d]) < 1e-12);
  }
}

TEST_CASE("stats file roundtrip") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "articulab_stats_test.json";
  std::vector<std::vector<double>> obs(3, std::vector<double>(kObsDim, 0.5));
  obs[1][0] = 1.5;
  std::vector<std::array<double, kActionDim>> act(3);
  for (auto& a : act) a.fill(0.25);
  act[2][9] = 1.0;
  NormStats s = compute_stats(obs, act);
  write_stats_file(path.string(), s);
  NormStats back = read_stats_file(path.string());
  for (int i = 0; i < kObsDim; ++i) {
    CHECK(back.obs_mean[i] == s.obs_mean[i]);
    CHECK(back.obs_std[i] == s.obs_std[i]);
  }
  for (int i = 0; i < kActionDim; ++i) {
    CHECK(back.act_mean[i] == s.act_mean[i]);
    CHECK(back.act_std[i] == s.act_std[i]);
  }
  fs::remove(path);
}
