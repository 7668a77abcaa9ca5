#include "articulab/articulation.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace articulab {

std::string to_string(Category c) {
  switch (c) {
    case Category::Bottle: return "bottle";
    case Category::Pen: return "pen";
    case Category::CoffeeMaker: return "coffeemaker";
    case Category::Window: return "window";
    case Category::Door: return "door";
    case Category::Lamp: return "lamp";
    case Category::Microwave: return "microwave";
    case Category::Safe: return "safe";
    case Category::PressureCooker: return "pressurecooker";
  }
  throw std::logic_error("unknown category");
}

Category category_from_string(const std::string& s) {
  for (Category c : kAllCategories)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown category: " + s);
}

int default_instance_count(Category c) {
  switch (c) {
    case Category::Bottle: return 32;
    case Category::Pen: return 36;
    case Category::CoffeeMaker: return 18;
    case Category::Window: return 30;
    case Category::Door: return 57;
    case Category::Lamp: return 25;
    case Category::Microwave: return 37;
    case Category::Safe: return 36;
    case Category::PressureCooker: return 6;
  }
  throw std::logic_error("unknown category");
}

void GenConfig::validate() const {
  priors.validate();
  auto pos_range = [](const Interval& iv, const char* what) {
    if (iv.lo <= 0 || iv.lo > iv.hi) throw std::invalid_argument(std::string("bad range: ") + what);
  };
  pos_range(key_angle_hi, "key_angle_hi");
  pos_range(goal_angle_hi, "goal_angle_hi");
  pos_range(lift_hi, "lift_hi");
  pos_range(press_hi, "press_hi");
  // Keys must be able to cross any sampled threshold.
  if (key_angle_hi.lo <= priors.threshold_angle.hi)
    throw std::invalid_argument("key_angle_hi must exceed threshold_angle prior");
  if (press_hi.lo <= priors.threshold_press.hi)
    throw std::invalid_argument("press_hi must exceed threshold_press prior");
}

namespace {

Json interval_to_json(const Interval& iv) { return Json{iv.lo, iv.hi}; }
Interval interval_from_json(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

Json GenConfig::to_json() const {
  return Json{{"p_lock", priors.p_lock},
              {"threshold_angle", interval_to_json(priors.threshold_angle)},
              {"threshold_press", interval_to_json(priors.threshold_press)},
              {"key_angle_hi", interval_to_json(key_angle_hi)},
              {"goal_angle_hi", interval_to_json(goal_angle_hi)},
              {"lift_hi", interval_to_json(lift_hi)},
              {"press_hi", interval_to_json(press_hi)}};
}

GenConfig GenConfig::from_json(const Json& j) {
  GenConfig cfg;
  if (j.contains("p_lock")) cfg.priors.p_lock = j.at("p_lock").get<double>();
  if (j.contains("threshold_angle")) cfg.priors.threshold_angle = interval_from_json(j.at("threshold_angle"));
  if (j.contains("threshold_press")) cfg.priors.threshold_press = interval_from_json(j.at("threshold_press"));
  if (j.contains("key_angle_hi")) cfg.key_angle_hi = interval_from_json(j.at("key_angle_hi"));
  if (j.contains("goal_angle_hi")) cfg.goal_angle_hi = interval_from_json(j.at("goal_angle_hi"));
  if (j.contains("lift_hi")) cfg.lift_hi = interval_from_json(j.at("lift_hi"));
  if (j.contains("press_hi")) cfg.press_hi = interval_from_json(j.at("press_hi"));
  cfg.validate();
  return cfg;
}

namespace {

JointSpec make_joint(JointKind kind, Vec3 axis, Vec3 anchor, Interval nominal) {
  JointSpec j;
  j.kind = kind;
  j.axis = normalized(axis);
  j.anchor = anchor;
  j.nominal = nominal;
  j.value = 0;
  return j;
}

// Coaxial revolute+prismatic part (cap, lid, portafilter): joint 0 turns
// about `axis`, joint 1 slides along `slide_axis`, goal is the slide.
void build_twist_lift(ObjectInstance& obj, Rng& r, const GenConfig& cfg, double height,
                      double width, double cap_h, Vec3 slide_axis) {
  double rev_hi = r.uniform(cfg.key_angle_hi.lo, cfg.key_angle_hi.hi);
  double lift = r.uniform(cfg.lift_hi.lo, cfg.lift_hi.hi);
  Vec3 top{0, 0, height};
  obj.joints.push_back(make_joint(JointKind::Revolute, {0, 0, 1}, top, {0, rev_hi}));
  obj.joints.push_back(make_joint(JointKind::Prismatic, slide_axis, top, {0, lift}));
  Part cap;
  cap.name = "cap";
  cap.joints = {0, 1};
  cap.box_extents = {width, width, cap_h};
  cap.rest_pose = Pose::translation(top);
  cap.handle_point = {0.45 * width, 0, 0};
  obj.parts.push_back(cap);
  obj.goal_joint = 1;
}

// Hinged panel (goal) plus a small lever or button part carrying the key
// joint. `key` describes the key joint in the base frame.
void build_panel_and_key(ObjectInstance& obj, double panel_w, double panel_t, double panel_h,
                         double goal_hi, const Part& key_part, const JointSpec& key) {
  obj.joints.push_back(
      make_joint(JointKind::Revolute, {0, 0, 1}, {-panel_w / 2, 0, 0}, {0, goal_hi}));
  obj.joints.push_back(key);
  Part panel;
  panel.name = "panel";
  panel.joints = {0};
  panel.box_extents = {panel_w, panel_t, panel_h};
  panel.rest_pose = Pose::identity();
  panel.handle_point = {0.45 * panel_w, -panel_t / 2 - 0.01, 0.25 * panel_h};
  obj.parts.push_back(panel);
  obj.parts.push_back(key_part);
  obj.goal_joint = 0;
}

}  // namespace

ObjectInstance build_instance(Category category, uint64_t seed, const GenConfig& cfg) {
  cfg.validate();
  ObjectInstance obj;
  obj.category = category;
  obj.seed = seed;
  obj.base_pose = Pose::identity();
  Rng r(seed_stream("instance", static_cast<uint64_t>(category), seed));

  switch (category) {
    case Category::Bottle: {
      double H = r.uniform(0.12, 0.22), D = r.uniform(0.04, 0.07), h = r.uniform(0.02, 0.04);
      build_twist_lift(obj, r, cfg, H, D, h, {0, 0, 1});
      break;
    }
    case Category::Pen: {
      double H = r.uniform(0.10, 0.14), D = r.uniform(0.012, 0.02), h = r.uniform(0.02, 0.035);
      build_twist_lift(obj, r, cfg, H, D, h, {0, 0, 1});
      break;
    }
    case Category::PressureCooker: {
      double H = r.uniform(0.18, 0.30), L = r.uniform(0.10, 0.16);
      build_twist_lift(obj, r, cfg, H, L, 0.03, {0, 0, 1});
      break;
    }
    case Category::CoffeeMaker: {
      // Portafilter: twist, then pull down and out.
      double H = r.uniform(0.25, 0.35), L = r.uniform(0.12, 0.18);
      build_twist_lift(obj, r, cfg, H, L, 0.03, {0, 0, -1});
      break;
    }
    case Category::Window:
    case Category::Door: {
      bool is_door = category == Category::Door;
      double W = is_door ? r.uniform(0.7, 1.0) : r.uniform(0.4, 0.8);
      double Hh = is_door ? r.uniform(1.8, 2.1) : r.uniform(0.5, 1.0);
      double t = is_door ? 0.05 : 0.04;
      double goal_hi = r.uniform(cfg.goal_angle_hi.lo, cfg.goal_angle_hi.hi);
      double key_hi = r.uniform(cfg.key_angle_hi.lo, cfg.key_angle_hi.hi);
      double lever = r.uniform(0.08, 0.14);
      Vec3 hpos{W / 2 - 0.08, -t / 2 - 0.03, 0};
      Part handle;
      handle.name = "handle";
      handle.joints = {1};
      handle.box_extents = {0.03, 0.03, lever};
      handle.rest_pose = Pose::translation(hpos);
      handle.handle_point = {0, 0, 0.4 * lever};
      JointSpec key = make_joint(JointKind::Revolute, {0, 1, 0}, hpos, {-key_hi, key_hi});
      build_panel_and_key(obj, W, t, Hh, goal_hi, handle, key);
      break;
    }
    case Category::Safe: {
      double W = r.uniform(0.3, 0.5), Hh = r.uniform(0.3, 0.5), t = 0.04;
      double goal_hi = r.uniform(cfg.goal_angle_hi.lo, cfg.goal_angle_hi.hi);
      double key_hi = r.uniform(cfg.key_angle_hi.lo, cfg.key_angle_hi.hi);
      Vec3 kpos{0, -t / 2 - 0.025, -0.12 * Hh};
      Part knob;
      knob.name = "knob";
      knob.joints = {1};
      knob.box_extents = {0.06, 0.03, 0.02};
      knob.rest_pose = Pose::translation(kpos);
      knob.handle_point = {0.025, -0.01, 0};
      JointSpec key = make_joint(JointKind::Revolute, {0, 1, 0}, kpos, {-key_hi, key_hi});
      build_panel_and_key(obj, W, t, Hh, goal_hi, knob, key);
      break;
    }
    case Category::Microwave: {
      double W = r.uniform(0.3, 0.5), Hh = r.uniform(0.2, 0.35), t = 0.03;
      double goal_hi = r.uniform(cfg.goal_angle_hi.lo, cfg.goal_angle_hi.hi);
      double travel = r.uniform(cfg.press_hi.lo, cfg.press_hi.hi);
      Vec3 bpos{W / 2 + 0.04, -t / 2, -0.05};
      Part button;
      button.name = "button";
      button.joints = {1};
      button.box_extents = {0.02, 0.015, 0.04};
      button.rest_pose = Pose::translation(bpos);
      button.handle_point = {0, -0.0075, 0};
      // Press direction is into the face (+y).
      JointSpec key = make_joint(JointKind::Prismatic, {0, 1, 0}, bpos, {0, travel});
      build_panel_and_key(obj, W, t, Hh, goal_hi, button, key);
      break;
    }
    case Category::Lamp: {
      double knob_w = r.uniform(0.025, 0.04);
      double rot_hi = r.uniform(cfg.key_angle_hi.lo, cfg.key_angle_hi.hi);
      double travel = r.uniform(cfg.press_hi.lo, cfg.press_hi.hi);
      Vec3 kpos{0, 0, 0.05};
      obj.joints.push_back(make_joint(JointKind::Revolute, {0, 0, 1}, kpos, {-rot_hi, rot_hi}));
      obj.joints.push_back(make_joint(JointKind::Prismatic, {0, 0, -1}, kpos, {0, travel}));
      Part knob;
      knob.name = "knob";
      knob.joints = {0, 1};
      knob.box_extents = {knob_w, knob_w, 0.025};
      knob.rest_pose = Pose::translation(kpos);
      knob.handle_point = {0.45 * knob_w, 0, 0.01};
      obj.parts.push_back(knob);
      obj.goal_joint = 0;  // success is latch-driven
      break;
    }
  }

  obj.mechanism = sample_hidden(category, r, cfg.priors);

  // Seed the effective limits from the rest configuration.
  std::vector<double> values(obj.joints.size(), 0.0);
  auto upd = apply_mechanism(obj.mechanism, values, obj.joints);
  obj.mechanism = upd.state;
  obj.effective.clear();
  for (const auto& j : obj.joints) obj.effective.push_back(j.nominal);
  for (const auto& ov : upd.overrides) obj.effective[ov.joint] = ov.limits;
  return obj;
}

Pose part_pose(const ObjectInstance& obj, int part) {
  if (part < 0 || static_cast<size_t>(part) >= obj.parts.size())
    throw std::out_of_range("part index");
  const Part& p = obj.parts[part];
  Pose x = obj.base_pose;
  for (int ji : p.joints) {
    const JointSpec& j = obj.joints[ji];
    Pose t;
    if (j.kind == JointKind::Revolute) {
      t.R = axis_angle(j.axis, j.value);
      t.p = j.anchor - t.R * j.anchor;
    } else {
      t.p = j.axis * j.value;
    }
    x = x * t;
  }
  return x * p.rest_pose;
}

Pose handle_pose(const ObjectInstance& obj, int part) {
  Pose x = part_pose(obj, part);
  return {x.R, x.apply(obj.parts[part].handle_point)};
}

Pose home_pose(const ObjectInstance& obj) {
  return {Mat3::identity(), obj.base_pose.p + Vec3{0, -0.5, 0.4}};
}

Vec3 joint_world_axis(const ObjectInstance& obj, int joint) {
  // Every template joint's axis is expressed in the base frame; preceding
  // joints on the same part are coaxial, so they leave the axis fixed.
  return obj.base_pose.R * obj.joints[joint].axis;
}

GraspState grasp(const ObjectInstance& obj, int part) {
  if (part < 0 || static_cast<size_t>(part) >= obj.parts.size())
    throw std::out_of_range("grasp: part index");
  GraspState g;
  g.attached = true;
  g.part = part;
  g.gripper_open = false;
  g.pose = handle_pose(obj, part);
  return g;
}

StepResult step_to(ObjectInstance& obj, GraspState& gs, const Pose& target) {
  StepResult res;
  res.desired.assign(obj.joints.size(), 0.0);
  res.applied.assign(obj.joints.size(), 0.0);
  res.blocked.assign(obj.joints.size(), false);

  if (!gs.attached) {
    gs.pose = target;
    res.achieved = target;
    return res;
  }

  const Part& part = obj.parts[gs.part];
  for (int ji : part.joints) {
    JointSpec& j = obj.joints[ji];
    Pose cur = handle_pose(obj, gs.part);
    Vec3 w = joint_world_axis(obj, ji);
    Vec3 anchor_w = obj.base_pose.apply(j.anchor);
    double des = 0;
    if (j.kind == JointKind::Revolute) {
      Vec3 rc = cur.p - anchor_w, rt = target.p - anchor_w;
      Vec3 u = rc - w * dot(w, rc), v = rt - w * dot(w, rt);
      if (norm(u) > 1e-6 && norm(v) > 1e-6) {
        des = std::atan2(dot(w, cross(u, v)), dot(u, v));
      } else {
        des = twist_about(target.R * cur.R.transposed(), w);
      }
    } else {
      des = dot(w, target.p - cur.p);
    }
    double clamped = obj.effective[ji].clamp(j.value + des);
    double app = clamped - j.value;
    res.desired[ji] = des;
    res.applied[ji] = app;
    if (std::abs(des) > kMinCommand && std::abs(des - app) > kBlockedTol) {
      res.blocked[ji] = true;
      res.any_blocked = true;
    }
    j.value = clamped;
  }

  std::vector<double> values;
  values.reserve(obj.joints.size());
  for (const auto& j : obj.joints) values.push_back(j.value);
  auto upd = apply_mechanism(obj.mechanism, values, obj.joints);
  obj.mechanism = upd.state;
  for (size_t i = 0; i < obj.joints.size(); ++i) obj.effective[i] = obj.joints[i].nominal;
  for (const auto& ov : upd.overrides) obj.effective[ov.joint] = ov.limits;

  gs.pose = handle_pose(obj, gs.part);
  res.achieved = gs.pose;
  return res;
}

bool is_success(const ObjectInstance& obj) {
  if (const auto* m = std::get_if<PushRotateMech>(&obj.mechanism)) return m->latched;
  const JointSpec& g = obj.joints[obj.goal_joint];
  return g.value >= kSuccessFrac * g.nominal.hi;
}

Json pose_to_json(const Pose& p) {
  Json r = Json::array();
  for (double v : p.R.m) r.push_back(v);
  return Json{{"p", {p.p.x, p.p.y, p.p.z}}, {"R", r}};
}

Pose pose_from_json(const Json& j) {
  Pose p;
  p.p = {j.at("p").at(0).get<double>(), j.at("p").at(1).get<double>(), j.at("p").at(2).get<double>()};
  for (int i = 0; i < 9; ++i) p.R.m[i] = j.at("R").at(i).get<double>();
  return p;
}

namespace {

Json vec_to_json(const Vec3& v) { return Json{v.x, v.y, v.z}; }
Vec3 vec_from_json(const Json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Json mechanism_to_json(const MechanismState& m) {
  Json j;
  j["hidden"] = true;
  if (const auto* a = std::get_if<LockMech>(&m)) {
    j["variant"] = "lock";
    j["locked"] = a->locked;
    j["key_joint"] = a->key_joint;
    j["goal_joint"] = a->goal_joint;
    j["threshold"] = a->threshold;
    j["direction"] = a->direction;
  } else if (const auto* b = std::get_if<LockSwitchContactMech>(&m)) {
    j["variant"] = "lock_switch_contact";
    j["locked"] = b->locked;
    j["key_joint"] = b->key_joint;
    j["goal_joint"] = b->goal_joint;
    j["threshold"] = b->threshold;
    j["direction"] = b->direction;
  } else if (const auto* c = std::get_if<RotateSlideMech>(&m)) {
    j["variant"] = "rotate_slide";
    j["rev_joint"] = c->rev_joint;
    j["pris_joint"] = c->pris_joint;
    j["release_angle"] = c->release_angle;
    j["released"] = c->released;
  } else {
    const auto& d = std::get<PushRotateMech>(m);
    j["variant"] = "push_rotate";
    j["mode"] = d.mode == ActuationMode::Push ? "push"
                : d.mode == ActuationMode::RotateCw ? "rotate_cw" : "rotate_ccw";
    j["rev_joint"] = d.rev_joint;
    j["pris_joint"] = d.pris_joint;
    j["press_depth"] = d.press_depth;
    j["turn_angle"] = d.turn_angle;
    j["latched"] = d.latched;
  }
  return j;
}

MechanismState mechanism_from_json(const Json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "lock") {
    LockMech m;
    m.locked = j.at("locked").get<bool>();
    m.key_joint = j.at("key_joint").get<int>();
    m.goal_joint = j.at("goal_joint").get<int>();
    m.threshold = j.at("threshold").get<double>();
    m.direction = j.at("direction").get<int>();
    return m;
  }
  if (variant == "lock_switch_contact") {
    LockSwitchContactMech m;
    m.locked = j.at("locked").get<bool>();
    m.key_joint = j.at("key_joint").get<int>();
    m.goal_joint = j.at("goal_joint").get<int>();
    m.threshold = j.at("threshold").get<double>();
    m.direction = j.at("direction").get<int>();
    return m;
  }
  if (variant == "rotate_slide") {
    RotateSlideMech m;
    m.rev_joint = j.at("rev_joint").get<int>();
    m.pris_joint = j.at("pris_joint").get<int>();
    m.release_angle = j.at("release_angle").get<double>();
    m.released = j.at("released").get<bool>();
    return m;
  }
  if (variant == "push_rotate") {
    PushRotateMech m;
    const std::string mode = j.at("mode").get<std::string>();
    m.mode = mode == "push" ? ActuationMode::Push
             : mode == "rotate_cw" ? ActuationMode::RotateCw : ActuationMode::RotateCcw;
    m.rev_joint = j.at("rev_joint").get<int>();
    m.pris_joint = j.at("pris_joint").get<int>();
    m.press_depth = j.at("press_depth").get<double>();
    m.turn_angle = j.at("turn_angle").get<double>();
    m.latched = j.at("latched").get<bool>();
    return m;
  }
  throw std::invalid_argument("unknown mechanism variant: " + variant);
}

}  // namespace

Json instance_to_json(const ObjectInstance& obj) {
  Json j;
  j["v"] = 1;
  j["category"] = to_string(obj.category);
  j["seed"] = obj.seed;
  j["base_pose"] = pose_to_json(obj.base_pose);
  j["goal_joint"] = obj.goal_joint;
  j["parts"] = Json::array();
  for (const auto& p : obj.parts) {
    Json pj;
    pj["name"] = p.name;
    pj["joints"] = p.joints;
    pj["box_extents"] = vec_to_json(p.box_extents);
    pj["rest_pose"] = pose_to_json(p.rest_pose);
    pj["handle_point"] = vec_to_json(p.handle_point);
    j["parts"].push_back(pj);
  }
  j["joints"] = Json::array();
  for (const auto& jt : obj.joints) {
    Json jj;
    jj["kind"] = jt.kind == JointKind::Revolute ? "revolute" : "prismatic";
    jj["axis"] = vec_to_json(jt.axis);
    jj["anchor"] = vec_to_json(jt.anchor);
    jj["lo"] = jt.nominal.lo;
    jj["hi"] = jt.nominal.hi;
    jj["value"] = jt.value;
    j["joints"].push_back(jj);
  }
  j["mechanism"] = mechanism_to_json(obj.mechanism);
  return j;
}

ObjectInstance instance_from_json(const Json& j) {
  if (!j.contains("v") || j.at("v").get<int>() != 1)
    throw std::invalid_argument("unsupported instance version");
  ObjectInstance obj;
  obj.category = category_from_string(j.at("category").get<std::string>());
  obj.seed = j.at("seed").get<uint64_t>();
  obj.base_pose = pose_from_json(j.at("base_pose"));
  obj.goal_joint = j.at("goal_joint").get<int>();
  for (const auto& pj : j.at("parts")) {
    Part p;
    p.name = pj.at("name").get<std::string>();
    p.joints = pj.at("joints").get<std::vector<int>>();
    p.box_extents = vec_from_json(pj.at("box_extents"));
    p.rest_pose = pose_from_json(pj.at("rest_pose"));
    p.handle_point = vec_from_json(pj.at("handle_point"));
    obj.parts.push_back(p);
  }
  for (const auto& jj : j.at("joints")) {
    JointSpec jt;
    jt.kind = jj.at("kind").get<std::string>() == "revolute" ? JointKind::Revolute
                                                             : JointKind::Prismatic;
    jt.axis = vec_from_json(jj.at("axis"));
    jt.anchor = vec_from_json(jj.at("anchor"));
    jt.nominal = {jj.at("lo").get<double>(), jj.at("hi").get<double>()};
    jt.value = jj.at("value").get<double>();
    obj.joints.push_back(jt);
  }
  obj.mechanism = mechanism_from_json(j.at("mechanism"));

  std::vector<double> values;
  for (const auto& jt : obj.joints) values.push_back(jt.value);
  auto upd = apply_mechanism(obj.mechanism, values, obj.joints);
  obj.mechanism = upd.state;
  for (const auto& jt : obj.joints) obj.effective.push_back(jt.nominal);
  for (const auto& ov : upd.overrides) obj.effective[ov.joint] = ov.limits;
  return obj;
}

void write_objects_file(const std::string& path, const std::vector<ObjectInstance>& objs,
                        const GenConfig& cfg) {
  Json j;
  j["v"] = 1;
  j["gen_config"] = cfg.to_json();
  j["objects"] = Json::array();
  for (const auto& o : objs) j["objects"].push_back(instance_to_json(o));
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

std::vector<ObjectInstance> read_objects_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  Json j = Json::parse(f);
  if (!j.contains("v") || j.at("v").get<int>() != 1)
    throw std::invalid_argument("unsupported objects file version");
  std::vector<ObjectInstance> out;
  for (const auto& oj : j.at("objects")) out.push_back(instance_from_json(oj));
  return out;
}

}  // namespace articulab
