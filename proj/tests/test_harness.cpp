#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "articulab/harness.hpp"
#include "doctest.h"

using namespace articulab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Replays a fixed action list; repeats the last action when exhausted.
class ReplayPlanner : public Planner {
 public:
  explicit ReplayPlanner(std::vector<std::array<double, kActionDim>> acts)
      : acts_(std::move(acts)) {}
  std::vector<std::array<double, kActionDim>> plan(
      std::span<const std::vector<double>>, std::span<const std::array<double, kActionDim>> hist,
      const ObjectInstance&, Rng&) const override {
    std::vector<std::array<double, kActionDim>> out;
    for (int i = 0; i < horizon(); ++i) {
      size_t t = std::min(hist.size() + i, acts_.size() - 1);
      out.push_back(acts_[t]);
    }
    return out;
  }
  int horizon() const override { return 2; }

 private:
  std::vector<std::array<double, kActionDim>> acts_;
};

class NanPlanner : public Planner {
 public:
  std::vector<std::array<double, kActionDim>> plan(
      std::span<const std::vector<double>>, std::span<const std::array<double, kActionDim>>,
      const ObjectInstance&, Rng&) const override {
    std::array<double, kActionDim> a{};
    a[0] = std::numeric_limits<double>::quiet_NaN();
    return {a, a};
  }
  int horizon() const override { return 2; }
};

DenoiserNet tiny_trained_net(Category cat) {
  GenConfig gc;
  std::vector<ObjectInstance> objs{build_instance(cat, 0, gc)};
  ExpertConfig ecfg;
  ecfg.trials = 1;
  DemoDataset ds = collect_dataset(objs, 2, ecfg, 3);
  PolicyConfig cfg;
  cfg.obs_horizon = 2;
  cfg.pred_horizon = 2;
  cfg.act_horizon = 2;
  cfg.diffusion_steps = 8;
  cfg.hidden = {24};
  cfg.batch = 8;
  cfg.epochs = 10;
  cfg.seed = 4;
  DenoiserNet net = make_net(cfg);
  train(net, ds);
  return net;
}

}  // namespace

TEST_CASE("closed gripper near a handle snaps the grasp") {
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Safe, 3, gc);
  GraspState gs;
  gs.pose = home_pose(obj);

  Pose near = handle_pose(obj, 0);
  near.p.x += 0.005;  // inside the 2 cm snap radius
  REQUIRE(execute_action(obj, gs, encode_action(near, true), 0.02));
  CHECK(gs.attached);
  CHECK(gs.part == 0);

  // Same-part snap is a no-op grasp: the EE just steps toward the target.
  REQUIRE(execute_action(obj, gs, encode_action(handle_pose(obj, 0), true), 0.02));
  CHECK(gs.attached);
  CHECK(gs.part == 0);

  // A closed action near the other handle switches contact.
  REQUIRE(execute_action(obj, gs, encode_action(handle_pose(obj, 1), true), 0.02));
  CHECK(gs.attached);
  CHECK(gs.part == 1);

  // An open action releases and teleports the free gripper.
  Pose away;
  away.p = obj.base_pose.p + Vec3{0.5, 0.5, 0.5};
  REQUIRE(execute_action(obj, gs, encode_action(away, false), 0.02));
  CHECK_FALSE(gs.attached);
  CHECK(gs.gripper_open);
  CHECK(norm(gs.pose.p - away.p) < 1e-12);
}

TEST_CASE("closed gripper outside the snap radius does not grasp") {
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Safe, 3, gc);
  GraspState gs;
  gs.pose = home_pose(obj);

  Pose off = handle_pose(obj, 0);
  off.p.z += 0.06;
  REQUIRE(execute_action(obj, gs, encode_action(off, true), 0.02));
  CHECK_FALSE(gs.attached);
  CHECK_FALSE(gs.gripper_open);
  CHECK(norm(gs.pose.p - off.p) < 1e-12);
}

TEST_CASE("non-finite actions are refused before touching the scene") {
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Door, 0, gc);
  GraspState gs;
  gs.pose = home_pose(obj);
  std::array<double, kActionDim> a{};
  a[2] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(execute_action(obj, gs, a, 0.02));
  CHECK_FALSE(gs.attached);
}

TEST_CASE("attached motion drives the joint through the simulator") {
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Microwave, 1, gc);
  // Pick an unlocked instance so the pull moves the door.
  for (uint64_t s = 1; std::get<LockSwitchContactMech>(obj.mechanism).locked; ++s)
    obj = build_instance(Category::Microwave, s, gc);
  GraspState gs;
  gs.pose = home_pose(obj);

  REQUIRE(execute_action(obj, gs, encode_action(handle_pose(obj, 0), true), 0.02));
  REQUIRE(gs.attached);
  double before = obj.joints[obj.goal_joint].value;

  VisibleState vis = make_visible(obj, gs);
  ExpertConfig ecfg;
  MacroGoal pull = expert_next_goal(vis, {}, ecfg, 0, nullptr);
  REQUIRE(pull.label == MacroLabel::Pull);
  REQUIRE(execute_action(obj, gs, encode_action(pull.target, true), 0.02));
  CHECK(obj.joints[obj.goal_joint].value > before + 0.05);
}

TEST_CASE("replaying scripted keyframe actions solves the episode") {
  GenConfig gc;
  ExpertConfig ecfg;
  ecfg.trials = 0;
  HarnessConfig hcfg;
  for (Category cat : {Category::Bottle, Category::Safe, Category::Lamp}) {
    for (uint64_t s : {0, 1, 2}) {
      ObjectInstance obj = build_instance(cat, s, gc);
      RolloutDetail d = rollout_expert(obj, ecfg, 5);
      REQUIRE(d.demo.ok);
      std::vector<std::array<double, kActionDim>> acts;
      for (const auto& kf : d.demo.kf) acts.push_back(kf.act);
      ReplayPlanner planner(acts);
      EpisodeResult r = rollout_policy(planner, obj, hcfg, 9);
      CHECK_MESSAGE(r.success, to_string(cat) << " seed " << s);
      CHECK_FALSE(r.aborted);
      CHECK(r.actions <= hcfg.max_windows * planner.horizon());
    }
  }
}

TEST_CASE("a planner emitting non-finite actions aborts the episode") {
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Door, 2, gc);
  HarnessConfig hcfg;
  EpisodeResult r = rollout_policy(NanPlanner(), obj, hcfg, 1);
  CHECK(r.aborted);
  CHECK_FALSE(r.success);
  CHECK(r.actions == 0);
}

TEST_CASE("episode results label unfavorable hidden states") {
  GenConfig gc;
  HarnessConfig hcfg;
  // Twist-lift categories always hide the release angle.
  EpisodeResult bottle = rollout_policy(NanPlanner(), build_instance(Category::Bottle, 0, gc),
                                        hcfg, 0);
  CHECK(bottle.unfavorable);
  // Push-rotate surfaces nothing to probe beyond the mode, which the
  // optimistic first press either hits or reveals; not counted unfavorable.
  EpisodeResult lamp = rollout_policy(NanPlanner(), build_instance(Category::Lamp, 0, gc),
                                      hcfg, 0);
  CHECK_FALSE(lamp.unfavorable);
}

TEST_CASE("net planner emits finite actions with orthonormal rotations") {
  DenoiserNet net = tiny_trained_net(Category::Door);
  GenConfig gc;
  ObjectInstance obj = build_instance(Category::Door, 7, gc);
  GraspState gs;
  gs.pose = home_pose(obj);
  NetPlanner planner(net);

  std::vector<std::vector<double>> obs{observe(obj, gs)};
  Rng rng(3);
  auto acts = planner.plan(obs, {}, obj, rng);
  REQUIRE(static_cast<int>(acts.size()) == net.cfg.act_horizon);
  for (const auto& a : acts) {
    for (double v : a) CHECK(std::isfinite(v));
    Mat3 R = rot6d_decode(std::span<const double, 6>(a.data() + 3, 6));
    auto r6 = rot6d_encode(R);
    for (int j = 0; j < 6; ++j) CHECK(a[3 + j] == doctest::Approx(r6[j]).epsilon(1e-9));
  }

  HarnessConfig hcfg;
  EpisodeResult r = rollout_policy(planner, obj, hcfg, 11);
  CHECK_FALSE(r.aborted);
  CHECK(r.actions <= hcfg.max_windows * net.cfg.act_horizon);
}

TEST_CASE("expert and random evaluations share the same episode grid") {
  GenConfig gc;
  std::array<Category, 2> cats{Category::Safe, Category::Bottle};
  ExpertConfig ecfg;
  ecfg.trials = 1;
  HarnessConfig hcfg;

  SuccessReport expert = evaluate_expert(ecfg, cats, 10, 2, 5, gc);
  SuccessReport random = evaluate_random(cats, 10, 2, 5, gc, hcfg);
  REQUIRE(expert.rows.size() == 2);
  REQUIRE(random.rows.size() == 2);

  for (size_t i = 0; i < 2; ++i) {
    CHECK(expert.rows[i].episodes == 10);
    // Same seed stream, same instances, same unfavorable split.
    CHECK(expert.rows[i].unfav_episodes == random.rows[i].unfav_episodes);
  }
  // The expert solves everything; every bottle hides its release angle.
  CHECK(expert.rows[0].successes == 10);
  CHECK(expert.rows[1].successes == 10);
  CHECK(expert.rows[1].unfav_episodes == 10);
  CHECK(expert.rows[0].stddev == 0.0);
}

TEST_CASE("random reaching is a near-zero floor") {
  GenConfig gc;
  std::array<Category, 1> cats{Category::Safe};
  HarnessConfig hcfg;
  SuccessReport r = evaluate_random(cats, 50, 5, 0, gc, hcfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].successes <= 1);
}

TEST_CASE("evaluation is deterministic") {
  DenoiserNet net = tiny_trained_net(Category::Door);
  GenConfig gc;
  std::array<Category, 1> cats{Category::Door};
  HarnessConfig hcfg;
  SuccessReport a = evaluate(net, cats, 8, 2, 9, gc, hcfg);
  SuccessReport b = evaluate(net, cats, 8, 2, 9, gc, hcfg);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows[0].successes == b.rows[0].successes);
  CHECK(a.rows[0].success_rate == b.rows[0].success_rate);
  CHECK(a.rows[0].stddev == b.rows[0].stddev);
  CHECK(a.rows[0].unfav_successes == b.rows[0].unfav_successes);
}

TEST_CASE("csv writers pin their headers and echo the config") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path();

  SuccessReport rep;
  EvalRow row;
  row.cat = Category::Safe;
  row.episodes = 4;
  row.successes = 3;
  row.success_rate = 0.75;
  row.stddev = 0.25;
  row.unfav_episodes = 2;
  row.unfav_successes = 1;
  rep.rows.push_back(row);
  fs::path rp = dir / "articulab_report_test.csv";
  write_report_csv(rp.string(), rep, "{\"seed\":1}");
  std::string text = slurp(rp);
  CHECK(text.find("# {\"seed\":1}\n") == 0);
  CHECK(text.find("category,episodes,successes,success_rate,stddev,unfav_episodes,"
                  "unfav_successes\n") != std::string::npos);
  CHECK(text.find("safe,4,3,0.750000,0.250000,2,1\n") != std::string::npos);
  fs::remove(rp);

  AblationRow ab;
  ab.trials = 1;
  ab.episodes = 10;
  ab.successes = 5;
  ab.success_rate = 0.5;
  ab.unfav_episodes = 4;
  ab.unfav_successes = 1;
  ab.unfav_rate = 0.25;
  ab.final_loss = 1.5;
  fs::path ap = dir / "articulab_ablation_test.csv";
  write_ablation_csv(ap.string(), {&ab, 1}, "");
  text = slurp(ap);
  CHECK(text.find("trials,episodes,successes,success_rate,unfav_episodes,unfav_successes,"
                  "unfav_rate,final_loss\n") == 0);
  CHECK(text.find("1,10,5,0.500000,4,1,0.250000,1.500000\n") != std::string::npos);
  fs::remove(ap);

  TrainLog log;
  log.epoch_loss = {2.0, 1.0};
  fs::path lp = dir / "articulab_loss_test.csv";
  write_loss_csv(lp.string(), log);
  text = slurp(lp);
  CHECK(text.find("epoch,loss\n") == 0);
  CHECK(text.find("0,") != std::string::npos);
  CHECK(text.find("1,") != std::string::npos);
  fs::remove(lp);
}

TEST_CASE("harness and ablation configs round-trip through json") {
  HarnessConfig h;
  h.max_windows = 17;
  h.snap_radius = 0.05;
  HarnessConfig hb = HarnessConfig::from_json(h.to_json());
  CHECK(hb.max_windows == 17);
  CHECK(hb.snap_radius == 0.05);

  AblationConfig a;
  a.instances = 3;
  a.per_object = 4;
  a.episodes = 5;
  a.seed_groups = 1;
  a.seed = 99;
  a.policy.hidden = {8};
  a.expert.rotate_step = 0.4;
  AblationConfig ab = AblationConfig::from_json(a.to_json());
  CHECK(ab.instances == 3);
  CHECK(ab.per_object == 4);
  CHECK(ab.episodes == 5);
  CHECK(ab.seed_groups == 1);
  CHECK(ab.seed == 99);
  CHECK(ab.policy.hidden == std::vector<int>{8});
  CHECK(ab.expert.rotate_step == 0.4);
  CHECK(ab.to_json() == a.to_json());
}

TEST_CASE("trials ablation runs the full pipeline per cell on a tiny budget") {
  AblationConfig acfg;
  acfg.instances = 2;
  acfg.per_object = 2;
  acfg.episodes = 4;
  acfg.seed_groups = 2;
  acfg.seed = 1;
  acfg.policy.obs_horizon = 2;
  acfg.policy.pred_horizon = 2;
  acfg.policy.act_horizon = 2;
  acfg.policy.diffusion_steps = 8;
  acfg.policy.hidden = {16};
  acfg.policy.batch = 8;
  acfg.policy.epochs = 5;

  std::array<int, 2> trials{0, 1};
  auto rows = ablate_trials(Category::Microwave, trials, acfg);
  REQUIRE(rows.size() == 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].trials == static_cast<int>(trials[i]));
    CHECK(rows[i].episodes == 4);
    CHECK(rows[i].successes >= 0);
    CHECK(rows[i].successes <= 4);
    CHECK(std::isfinite(rows[i].final_loss));
    CHECK(rows[i].unfav_episodes == rows[0].unfav_episodes);  // paired grids
  }
}
