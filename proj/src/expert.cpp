#include "articulab/expert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace articulab {

std::string to_string(MacroLabel l) {
  switch (l) {
    case MacroLabel::Grasp: return "grasp";
    case MacroLabel::Regrasp: return "regrasp";
    case MacroLabel::Rotate: return "rotate";
    case MacroLabel::Lift: return "lift";
    case MacroLabel::Pull: return "pull";
    case MacroLabel::Push: return "push";
    case MacroLabel::Release: return "release";
  }
  throw std::logic_error("unknown label");
}

Json ExpertConfig::to_json() const {
  Json j;
  j["trials"] = trials;
  j["max_macros"] = max_macros;
  j["rotate_step"] = rotate_step;
  j["probe_angle"] = probe_angle;
  j["open_frac"] = open_frac;
  j["pc_points"] = pc_points;
  return j;
}

ExpertConfig ExpertConfig::from_json(const Json& j) {
  ExpertConfig c;
  c.trials = j.value("trials", c.trials);
  c.max_macros = j.value("max_macros", c.max_macros);
  c.rotate_step = j.value("rotate_step", c.rotate_step);
  c.probe_angle = j.value("probe_angle", c.probe_angle);
  c.open_frac = j.value("open_frac", c.open_frac);
  c.pc_points = j.value("pc_points", c.pc_points);
  return c;
}

VisibleState make_visible(const ObjectInstance& obj, const GraspState& gs) {
  VisibleState v;
  v.category = obj.category;
  v.base_pose = obj.base_pose;
  v.parts = obj.parts;
  for (const auto& j : obj.joints) v.joints.push_back({j.kind, j.axis, j.anchor, j.nominal, j.value});
  v.goal_joint = obj.goal_joint;
  v.grasp = gs;
  return v;
}

namespace {

// FK over the visible model, with optional value overrides. Mirrors the
// simulator's chain (base * joints... * rest).
Pose vis_part_pose(const VisibleState& v, int part, std::span<const std::pair<int, double>> over) {
  const Part& p = v.parts[part];
  Pose x = v.base_pose;
  for (int ji : p.joints) {
    const VisibleJoint& j = v.joints[ji];
    double val = j.value;
    for (const auto& [oj, ov] : over)
      if (oj == ji) val = ov;
    Pose t;
    if (j.kind == JointKind::Revolute) {
      t.R = axis_angle(j.axis, val);
      t.p = j.anchor - t.R * j.anchor;
    } else {
      t.p = j.axis * val;
    }
    x = x * t;
  }
  return x * p.rest_pose;
}

Pose vis_handle_pose(const VisibleState& v, int part,
                     std::span<const std::pair<int, double>> over = {}) {
  Pose x = vis_part_pose(v, part, over);
  return {x.R, x.apply(v.parts[part].handle_point)};
}

MacroGoal make_grasp(const VisibleState& v, int part, bool first) {
  MacroGoal g;
  g.label = first ? MacroLabel::Grasp : MacroLabel::Regrasp;
  g.part = part;
  g.target = vis_handle_pose(v, part);
  g.gripper_closed = true;
  return g;
}

// Joint-space macro: drive the grasped part's joint to `newval`.
MacroGoal make_joint_move(const VisibleState& v, MacroLabel label, ProbeKind probe, int part,
                          int joint, double newval) {
  MacroGoal g;
  g.label = label;
  g.probe = probe;
  g.part = part;
  std::pair<int, double> over{joint, newval};
  g.target = vis_handle_pose(v, part, {&over, 1});
  g.gripper_closed = true;
  g.param = newval - v.joints[joint].value;
  return g;
}

bool same_probe(const MacroFeedback& f, const MacroGoal& g) {
  return f.goal.label == g.label && f.goal.probe == g.probe && f.goal.part == g.part &&
         ((f.goal.param >= 0) == (g.param >= 0));
}

// Consecutive trailing jammed attempts matching (label, probe, part, sign).
int trailing_failures(std::span<const MacroFeedback> h, const MacroGoal& g) {
  int n = 0;
  for (auto it = h.rbegin(); it != h.rend(); ++it) {
    if (it->jammed && same_probe(*it, g)) ++n;
    else break;
  }
  return n;
}

int count_failures(std::span<const MacroFeedback> h, const MacroGoal& g) {
  int n = 0;
  for (const auto& f : h)
    if (f.jammed && same_probe(f, g)) ++n;
  return n;
}

Rng decision_rng(uint64_t demo_seed, size_t decision) {
  return Rng(seed_stream("expert", demo_seed, decision));
}

// Whether any feedback row reports a non-jammed motion of `joint`.
bool moved_joint(std::span<const MacroFeedback> h, int joint) {
  for (const auto& f : h)
    if (!f.jammed && std::abs(f.applied[joint]) > kMinCommand) return true;
  return false;
}

struct TemplateInfo {
  int goal_part = 0;   // part owning the goal joint
  int key_part = -1;   // part owning the key joint (-1: same part as goal)
  int rev = -1, pris = -1;  // coaxial pair when present
  int key = -1;        // key joint for two-part categories
};

TemplateInfo template_info(const VisibleState& v) {
  TemplateInfo t;
  for (size_t p = 0; p < v.parts.size(); ++p)
    for (int ji : v.parts[p].joints)
      if (ji == v.goal_joint) t.goal_part = static_cast<int>(p);
  if (v.parts.size() == 2) {
    t.key_part = t.goal_part == 0 ? 1 : 0;
    t.key = v.parts[t.key_part].joints.at(0);
  } else {
    const auto& js = v.parts[0].joints;
    for (int ji : js) {
      if (v.joints[ji].kind == JointKind::Revolute) t.rev = ji;
      else t.pris = ji;
    }
  }
  return t;
}

// --- category scripts, partial observation ---------------------------------

MacroGoal twist_lift_adaptive(const VisibleState& v, std::span<const MacroFeedback> h,
                              const ExpertConfig& cfg, uint64_t seed) {
  TemplateInfo t = template_info(v);
  if (!v.grasp.attached) return make_grasp(v, 0, h.empty());
  const VisibleJoint& rev = v.joints[t.rev];
  MacroGoal lift = make_joint_move(v, MacroLabel::Lift, ProbeKind::LockProbe, 0, t.pris,
                                   v.joints[t.pris].nominal.hi);
  bool lift_tried = false;
  for (const auto& f : h) lift_tried |= f.goal.label == MacroLabel::Lift;
  if (!lift_tried) return lift;  // optimistic first attempt
  if (!h.empty() && h.back().jammed && h.back().goal.label == MacroLabel::Lift &&
      trailing_failures(h, h.back().goal) < std::max(cfg.trials, 1))
    return h.back().goal;
  // Alternate: rotate, sometimes re-test the slide.
  double remaining = rev.nominal.hi - rev.value;
  lift.probe = ProbeKind::ReleaseProbe;
  if (remaining <= kBlockedTol) return lift;  // rotation exhausted, slide must be free
  if (!h.empty() && h.back().goal.label == MacroLabel::Rotate) {
    Rng r = decision_rng(seed, h.size());
    if (r.bernoulli(0.5)) return lift;
  }
  return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, 0, t.rev,
                         rev.value + std::min(cfg.rotate_step, remaining));
}

MacroGoal push_rotate_adaptive(const VisibleState& v, std::span<const MacroFeedback> h,
                               const ExpertConfig& cfg, uint64_t seed) {
  TemplateInfo t = template_info(v);
  if (!v.grasp.attached) return make_grasp(v, 0, h.empty());
  // Candidate actions in a seeded order; never re-choose an eliminated one.
  std::array<int, 3> order{0, 1, 2};  // 0 push, 1 rotate-, 2 rotate+
  Rng perm(seed_stream("expert-perm", seed));
  for (int i = 2; i > 0; --i) std::swap(order[i], order[static_cast<int>(perm.uniform_int(0, i))]);
  const int reps = std::max(cfg.trials, 1);
  for (int cand : order) {
    MacroGoal g;
    const VisibleJoint& rev = v.joints[t.rev];
    if (cand == 0) {
      g = make_joint_move(v, MacroLabel::Push, ProbeKind::ModeProbe, 0, t.pris,
                          v.joints[t.pris].nominal.hi);
    } else {
      double dir = cand == 1 ? -1.0 : 1.0;
      double lim = dir < 0 ? rev.nominal.lo : rev.nominal.hi;
      double remaining = std::abs(lim - rev.value);
      if (remaining <= kBlockedTol) continue;  // swept this direction, no latch
      g = make_joint_move(v, MacroLabel::Rotate, ProbeKind::ModeProbe, 0, t.rev,
                          rev.value + dir * std::min(cfg.rotate_step, remaining));
      if (moved_joint(h, t.rev) && ((rev.value >= 0) == (dir >= 0)) && std::abs(rev.value) > 0)
        g.probe = ProbeKind::None;  // direction already confirmed live
    }
    if (count_failures(h, g) >= reps) continue;  // eliminated
    return g;
  }
  throw std::logic_error("push-rotate expert: all modes eliminated");
}

MacroGoal lock_adaptive(const VisibleState& v, std::span<const MacroFeedback> h,
                        const ExpertConfig& cfg, uint64_t seed) {
  TemplateInfo t = template_info(v);
  const VisibleJoint& goal = v.joints[v.goal_joint];
  const VisibleJoint& key = v.joints[t.key];
  const int reps = std::max(cfg.trials, 1);

  MacroGoal probe = make_joint_move(v, MacroLabel::Pull, ProbeKind::LockProbe, t.goal_part,
                                    v.goal_joint, cfg.probe_angle);
  MacroGoal full = make_joint_move(v, MacroLabel::Pull, ProbeKind::None, t.goal_part,
                                   v.goal_joint, cfg.open_frac * goal.nominal.hi);

  bool goal_moved = moved_joint(h, v.goal_joint);
  bool lock_seen = count_failures(h, probe) > 0;

  if (!v.grasp.attached) return make_grasp(v, t.goal_part, h.empty());

  if (v.grasp.part == t.goal_part) {
    if (goal_moved) return full;                  // open is free now
    if (moved_joint(h, t.key)) return full;       // key work done, lock is lifted
    if (!lock_seen) return probe;                 // optimistic first attempt
    if (trailing_failures(h, probe) < reps) return probe;
    return make_grasp(v, t.key_part, false);      // lock confirmed, switch contact
  }

  // Attached to the key part.
  if (key.kind == JointKind::Prismatic) {
    // A button has one admissible motion: press to the stop.
    if (std::abs(key.nominal.hi - key.value) > kBlockedTol)
      return make_joint_move(v, MacroLabel::Push, ProbeKind::None, t.key_part, t.key,
                             key.nominal.hi);
    return make_grasp(v, t.goal_part, false);
  }
  // Revolute key: direction is hidden. Probe one way, eliminate on jam; any
  // applied motion fixes the sign, then sweep to the limit (the threshold is
  // hidden but always inside the sweep).
  if (std::abs(key.value) <= kBlockedTol) {
    double d0 = Rng(seed_stream("expert-dir", seed)).bernoulli(0.5) ? 1.0 : -1.0;
    for (double dir : {d0, -d0}) {
      MacroGoal dprobe = make_joint_move(v, MacroLabel::Rotate, ProbeKind::DirectionProbe,
                                         t.key_part, t.key, key.value + dir * cfg.rotate_step);
      if (count_failures(h, dprobe) >= reps) continue;
      return dprobe;
    }
    throw std::logic_error("lock expert: both directions eliminated");
  }
  double dir = key.value > 0 ? 1.0 : -1.0;
  double lim = dir > 0 ? key.nominal.hi : key.nominal.lo;
  double remaining = std::abs(lim - key.value);
  if (remaining > kBlockedTol)
    return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, t.key_part, t.key,
                           key.value + dir * std::min(cfg.rotate_step, remaining));
  return make_grasp(v, t.goal_part, false);  // key swept, go open
}

// --- full-observation scripts (trials = 0) ---------------------------------

// Aim slightly past a hidden threshold: projection roundoff can leave exact
// targeting an epsilon short forever. The generator keeps at least this much
// room between every threshold range and the matching limit range.
constexpr double kOverAngle = 0.02;
constexpr double kOverDepth = 0.001;

MacroGoal twist_lift_static(const VisibleState& v, const RotateSlideMech& m,
                            const ExpertConfig& cfg) {
  TemplateInfo t = template_info(v);
  if (!v.grasp.attached) return make_grasp(v, 0, true);
  const VisibleJoint& rev = v.joints[t.rev];
  if (!m.released && rev.value < m.release_angle) {
    double want = std::min(m.release_angle + kOverAngle, rev.nominal.hi);
    double step = std::min(cfg.rotate_step, want - rev.value);
    return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, 0, t.rev, rev.value + step);
  }
  return make_joint_move(v, MacroLabel::Lift, ProbeKind::None, 0, t.pris,
                         v.joints[t.pris].nominal.hi);
}

MacroGoal push_rotate_static(const VisibleState& v, const PushRotateMech& m,
                             const ExpertConfig& cfg) {
  TemplateInfo t = template_info(v);
  if (!v.grasp.attached) return make_grasp(v, 0, true);
  const VisibleJoint& rev = v.joints[t.rev];
  switch (m.mode) {
    case ActuationMode::Push:
      return make_joint_move(v, MacroLabel::Push, ProbeKind::None, 0, t.pris,
                             std::min(m.press_depth + kOverDepth, v.joints[t.pris].nominal.hi));
    case ActuationMode::RotateCw: {
      double want = std::min(m.turn_angle + kOverAngle, -rev.nominal.lo);
      double step = std::min(cfg.rotate_step, want + rev.value);
      return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, 0, t.rev, rev.value - step);
    }
    case ActuationMode::RotateCcw: {
      double want = std::min(m.turn_angle + kOverAngle, rev.nominal.hi);
      double step = std::min(cfg.rotate_step, want - rev.value);
      return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, 0, t.rev, rev.value + step);
    }
  }
  throw std::logic_error("bad mode");
}

MacroGoal lock_static(const VisibleState& v, bool locked, double threshold, int direction,
                      const ExpertConfig& cfg, std::span<const MacroFeedback> h) {
  TemplateInfo t = template_info(v);
  const VisibleJoint& goal = v.joints[v.goal_joint];
  const VisibleJoint& key = v.joints[t.key];
  MacroGoal full = make_joint_move(v, MacroLabel::Pull, ProbeKind::None, t.goal_part,
                                   v.goal_joint, cfg.open_frac * goal.nominal.hi);
  if (!locked) {
    // Mirror the adaptive favorable path move for move: grasp, short pull,
    // full pull. Keeps favorable demos identical across experts.
    if (!v.grasp.attached) return make_grasp(v, t.goal_part, h.empty());
    if (v.grasp.part != t.goal_part) return make_grasp(v, t.goal_part, false);
    if (goal.value < cfg.probe_angle - kBlockedTol && !moved_joint(h, v.goal_joint))
      return make_joint_move(v, MacroLabel::Pull, ProbeKind::None, t.goal_part, v.goal_joint,
                             cfg.probe_angle);
    return full;
  }
  // Locked: do the key work first, just past the threshold.
  bool unlocked_now = direction * key.value >= threshold;
  if (!unlocked_now) {
    if (!v.grasp.attached) return make_grasp(v, t.key_part, h.empty());
    if (v.grasp.part != t.key_part) return make_grasp(v, t.key_part, false);
    if (key.kind == JointKind::Prismatic)
      return make_joint_move(v, MacroLabel::Push, ProbeKind::None, t.key_part, t.key,
                             std::min(threshold + kOverDepth, key.nominal.hi));
    double mag = std::min(threshold + kOverAngle, direction > 0 ? key.nominal.hi : -key.nominal.lo);
    double step = std::min(cfg.rotate_step, mag - direction * key.value);
    return make_joint_move(v, MacroLabel::Rotate, ProbeKind::None, t.key_part, t.key,
                           key.value + direction * step);
  }
  if (!v.grasp.attached || v.grasp.part != t.goal_part) return make_grasp(v, t.goal_part, false);
  return full;
}

}  // namespace

MacroGoal expert_next_goal(const VisibleState& vis, std::span<const MacroFeedback> history,
                           const ExpertConfig& cfg, uint64_t demo_seed,
                           const MechanismState* hidden) {
  // Feedback consistency: a jam may only involve joints of the commanded part.
  for (const auto& f : history) {
    for (size_t j = 0; j < f.blocked.size(); ++j) {
      if (!f.blocked[j]) continue;
      const auto& pj = vis.parts.at(f.goal.part).joints;
      if (std::find(pj.begin(), pj.end(), static_cast<int>(j)) == pj.end())
        throw std::invalid_argument("feedback reports a block on an uncommanded joint");
    }
  }

  if (hidden) {
    if (const auto* m = std::get_if<RotateSlideMech>(hidden))
      return twist_lift_static(vis, *m, cfg);
    if (const auto* m = std::get_if<PushRotateMech>(hidden))
      return push_rotate_static(vis, *m, cfg);
    if (const auto* m = std::get_if<LockMech>(hidden))
      return lock_static(vis, m->locked, m->threshold, m->direction, cfg, history);
    const auto& m = std::get<LockSwitchContactMech>(*hidden);
    return lock_static(vis, m.locked, m.threshold, m.direction, cfg, history);
  }

  switch (vis.category) {
    case Category::Bottle:
    case Category::Pen:
    case Category::CoffeeMaker:
    case Category::PressureCooker:
      return twist_lift_adaptive(vis, history, cfg, demo_seed);
    case Category::Lamp:
      return push_rotate_adaptive(vis, history, cfg, demo_seed);
    case Category::Window:
    case Category::Door:
    case Category::Safe:
    case Category::Microwave:
      return lock_adaptive(vis, history, cfg, demo_seed);
  }
  throw std::logic_error("unknown category");
}

namespace {

int micro_steps(const Pose& a, const Pose& b) {
  double dist = norm(b.p - a.p);
  double ang = rotation_angle(b.R * a.R.transposed());
  int n = static_cast<int>(std::ceil(std::max(dist / 0.01, ang / 0.05)));
  return std::max(n, 1);
}

}  // namespace

RolloutDetail rollout_expert(const ObjectInstance& proto, const ExpertConfig& cfg,
                             uint64_t demo_seed) {
  RolloutDetail out;
  ObjectInstance obj = proto;
  GraspState gs;
  gs.pose = home_pose(obj);

  out.demo.cat = obj.category;
  out.demo.seed = demo_seed;
  out.demo.trials = cfg.trials;

  for (int macro = 0; macro < cfg.max_macros && !is_success(obj); ++macro) {
    VisibleState vis = make_visible(obj, gs);
    MacroGoal goal = expert_next_goal(vis, out.macros, cfg, demo_seed,
                                      cfg.trials == 0 ? &obj.mechanism : nullptr);
    auto act = encode_action(goal.target, goal.gripper_closed);
    std::vector<Vec3> pc;
    if (cfg.pc_points > 0)
      pc = sample_points(obj, cfg.pc_points, seed_stream("kf-pc", demo_seed, macro)).points;

    MacroFeedback fb;
    fb.goal = goal;
    fb.applied.assign(obj.joints.size(), 0.0);
    fb.blocked.assign(obj.joints.size(), false);

    if (goal.label == MacroLabel::Grasp || goal.label == MacroLabel::Regrasp) {
      // Two decision rows: travel with the gripper open, then close on the
      // handle. An open travel action never drags a previously held joint.
      auto approach = encode_action(goal.target, false);
      out.dense.push_back({observe(obj, gs), approach, macro, true, std::move(pc)});
      if (gs.attached) release(gs);
      Pose start = gs.pose;
      int n = micro_steps(start, goal.target);
      for (int s = 1; s <= n; ++s) {
        step_to(obj, gs, pose_interp(start, goal.target, double(s) / n));
        out.dense.push_back({observe(obj, gs), approach, macro, false, {}});
      }
      std::vector<Vec3> pc2;
      if (cfg.pc_points > 0)
        pc2 = sample_points(obj, cfg.pc_points, seed_stream("kf-pc-close", demo_seed, macro))
                  .points;
      out.dense.push_back({observe(obj, gs), act, macro, true, std::move(pc2)});
      gs = grasp(obj, goal.part);
    } else {
      out.dense.push_back({observe(obj, gs), act, macro, true, std::move(pc)});
      Pose start = gs.pose;
      int n = micro_steps(start, goal.target);
      double progress = 0;
      for (int s = 1; s <= n; ++s) {
        StepResult r = step_to(obj, gs, pose_interp(start, goal.target, double(s) / n));
        for (size_t j = 0; j < r.applied.size(); ++j) {
          fb.applied[j] += r.applied[j];
          progress += std::abs(r.applied[j]);
          if (r.blocked[j]) fb.blocked[j] = true;
        }
        out.dense.push_back({observe(obj, gs), act, macro, false, {}});
        if (r.any_blocked) break;     // jammed or limit reached, stop pushing
        if (is_success(obj)) break;
      }
      fb.jammed = std::any_of(fb.blocked.begin(), fb.blocked.end(), [](bool b) { return b; }) &&
                  progress < kMinCommand;
    }
    out.macros.push_back(fb);
  }

  out.demo.ok = is_success(obj);
  out.demo.kf = sparsify(out.dense);
  return out;
}

std::vector<Keyframe> sparsify(std::span<const DenseRow> dense) {
  std::vector<Keyframe> kf;
  for (const auto& row : dense)
    if (row.macro_start) kf.push_back({row.obs, row.act, row.pc});
  return kf;
}

DemoDataset collect_dataset(std::span<const ObjectInstance> objects, int per_object,
                            const ExpertConfig& cfg, uint64_t seed) {
  if (objects.empty() || per_object < 1) throw std::invalid_argument("collect_dataset: empty job");
  const size_t total = objects.size() * static_cast<size_t>(per_object);
  std::vector<Demonstration> slots(total);
  std::vector<std::string> failures(total);

#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(total); ++i) {
    size_t oi = static_cast<size_t>(i) / per_object;
    size_t k = static_cast<size_t>(i) % per_object;
    uint64_t demo_seed = seed_stream("demo", seed, oi, k);
    try {
      RolloutDetail d = rollout_expert(objects[oi], cfg, demo_seed);
      if (!d.demo.ok) {
        std::ostringstream msg;
        msg << to_string(objects[oi].category) << " instance_seed=" << objects[oi].seed
            << " demo_seed=" << demo_seed << " ran out of macros";
        failures[i] = msg.str();
      }
      slots[i] = std::move(d.demo);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << to_string(objects[oi].category) << " instance_seed=" << objects[oi].seed
          << " demo_seed=" << demo_seed << ": " << e.what();
      failures[i] = msg.str();
    }
  }

  std::string all;
  for (const auto& f : failures)
    if (!f.empty()) all += "\n  " + f;
  if (!all.empty()) throw std::runtime_error("expert rollout failed:" + all);

  DemoDataset ds;
  ds.trials = cfg.trials;
  ds.demos = std::move(slots);

  std::vector<std::vector<double>> obs;
  std::vector<std::array<double, kActionDim>> act;
  for (const auto& d : ds.demos)
    for (const auto& kf : d.kf) {
      obs.push_back(kf.obs);
      act.push_back(kf.act);
    }
  ds.stats = compute_stats(obs, act);
  return ds;
}

std::string stats_path_for(const std::string& demos_path) {
  const std::string suffix = ".jsonl";
  if (demos_path.size() > suffix.size() &&
      demos_path.compare(demos_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return demos_path.substr(0, demos_path.size() - suffix.size()) + ".stats.json";
  return demos_path + ".stats.json";
}

void write_demos_file(const std::string& path, const DemoDataset& ds) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& d : ds.demos) {
    Json j;
    j["cat"] = to_string(d.cat);
    j["seed"] = d.seed;
    j["kf"] = Json::array();
    for (const auto& k : d.kf) {
      Json kj;
      kj["obs"] = k.obs;
      kj["act"] = k.act;
      if (!k.pc.empty()) {
        Json pj = Json::array();
        for (const auto& p : k.pc) pj.push_back(Json{p.x, p.y, p.z});
        kj["pc"] = pj;
      }
      j["kf"].push_back(kj);
    }
    j["ok"] = d.ok;
    j["trials"] = d.trials;
    f << j.dump() << "\n";
  }
  write_stats_file(stats_path_for(path), ds.stats);
}

DemoDataset read_demos_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  DemoDataset ds;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    Demonstration d;
    d.cat = category_from_string(j.at("cat").get<std::string>());
    d.seed = j.at("seed").get<uint64_t>();
    d.ok = j.at("ok").get<bool>();
    d.trials = j.at("trials").get<int>();
    for (const auto& kj : j.at("kf")) {
      Keyframe k;
      k.obs = kj.at("obs").get<std::vector<double>>();
      auto av = kj.at("act").get<std::vector<double>>();
      if (av.size() != kActionDim) throw std::invalid_argument("bad action dim in demos file");
      std::copy(av.begin(), av.end(), k.act.begin());
      if (kj.contains("pc"))
        for (const auto& pj : kj.at("pc"))
          k.pc.push_back({pj.at(0).get<double>(), pj.at(1).get<double>(), pj.at(2).get<double>()});
      d.kf.push_back(std::move(k));
    }
    ds.demos.push_back(std::move(d));
  }
  if (ds.demos.empty()) throw std::runtime_error("no demonstrations in " + path);
  ds.trials = ds.demos.front().trials;

  std::ifstream sf(stats_path_for(path));
  if (sf) {
    ds.stats = NormStats::from_json(Json::parse(sf));
  } else {
    std::vector<std::vector<double>> obs;
    std::vector<std::array<double, kActionDim>> act;
    for (const auto& d : ds.demos)
      for (const auto& kf : d.kf) {
        obs.push_back(kf.obs);
        act.push_back(kf.act);
      }
    ds.stats = compute_stats(obs, act);
  }
  return ds;
}

}  // namespace articulab
