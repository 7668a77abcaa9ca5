#include "articulab/mechanisms.hpp"

#include <cmath>
#include <stdexcept>

namespace articulab {

void MechanismPriors::validate() const {
  if (p_lock < 0 || p_lock > 1) throw std::invalid_argument("p_lock outside [0,1]");
  if (threshold_angle.lo > threshold_angle.hi || threshold_angle.lo <= 0)
    throw std::invalid_argument("bad threshold_angle prior");
  if (threshold_press.lo > threshold_press.hi || threshold_press.lo <= 0)
    throw std::invalid_argument("bad threshold_press prior");
}

namespace {

void check_joint(int j, size_t n, const char* what) {
  if (j < 0 || static_cast<size_t>(j) >= n) throw std::out_of_range(std::string("mechanism ") + what + " joint out of range");
}

// Key joints are clamped to the commanded direction regardless of latch
// state; a wrong-direction push applies nothing.
Interval direction_clamp(const Interval& nominal, int direction) {
  if (direction >= 0) return {std::max(0.0, nominal.lo), nominal.hi};
  return {nominal.lo, std::min(0.0, nominal.hi)};
}

}  // namespace

MechanismUpdate apply_mechanism(const MechanismState& state,
                                std::span<const double> values,
                                std::span<const JointSpec> joints) {
  if (values.size() != joints.size()) throw std::invalid_argument("values/joints size mismatch");
  MechanismUpdate out{state, {}};

  if (const auto* m = std::get_if<LockMech>(&state)) {
    check_joint(m->key_joint, values.size(), "key");
    check_joint(m->goal_joint, values.size(), "goal");
    LockMech next = *m;
    if (next.locked && m->direction * values[m->key_joint] >= m->threshold) next.locked = false;
    out.state = next;
    out.overrides.push_back({m->key_joint, direction_clamp(joints[m->key_joint].nominal, m->direction)});
    out.overrides.push_back({m->goal_joint, next.locked ? Interval{0, 0} : joints[m->goal_joint].nominal});
  } else if (const auto* m2 = std::get_if<LockSwitchContactMech>(&state)) {
    check_joint(m2->key_joint, values.size(), "key");
    check_joint(m2->goal_joint, values.size(), "goal");
    LockSwitchContactMech next = *m2;
    if (next.locked && m2->direction * values[m2->key_joint] >= m2->threshold) next.locked = false;
    out.state = next;
    out.overrides.push_back({m2->key_joint, direction_clamp(joints[m2->key_joint].nominal, m2->direction)});
    out.overrides.push_back({m2->goal_joint, next.locked ? Interval{0, 0} : joints[m2->goal_joint].nominal});
  } else if (const auto* m3 = std::get_if<RotateSlideMech>(&state)) {
    check_joint(m3->rev_joint, values.size(), "revolute");
    check_joint(m3->pris_joint, values.size(), "prismatic");
    RotateSlideMech next = *m3;
    if (!next.released && values[m3->rev_joint] >= m3->release_angle) next.released = true;
    out.state = next;
    out.overrides.push_back({m3->pris_joint, next.released ? joints[m3->pris_joint].nominal : Interval{0, 0}});
  } else if (const auto* m4 = std::get_if<PushRotateMech>(&state)) {
    check_joint(m4->rev_joint, values.size(), "revolute");
    check_joint(m4->pris_joint, values.size(), "prismatic");
    PushRotateMech next = *m4;
    double rev = values[m4->rev_joint];
    double pris = values[m4->pris_joint];
    if (!next.latched) {
      switch (m4->mode) {
        case ActuationMode::Push: next.latched = pris >= m4->press_depth; break;
        case ActuationMode::RotateCw: next.latched = -rev >= m4->turn_angle; break;
        case ActuationMode::RotateCcw: next.latched = rev >= m4->turn_angle; break;
      }
    }
    out.state = next;
    const Interval rev_nom = joints[m4->rev_joint].nominal;
    const Interval pris_nom = joints[m4->pris_joint].nominal;
    switch (m4->mode) {
      case ActuationMode::Push:
        out.overrides.push_back({m4->rev_joint, Interval{0, 0}});
        out.overrides.push_back({m4->pris_joint, pris_nom});
        break;
      case ActuationMode::RotateCw:
        out.overrides.push_back({m4->rev_joint, Interval{rev_nom.lo, 0}});
        out.overrides.push_back({m4->pris_joint, Interval{0, 0}});
        break;
      case ActuationMode::RotateCcw:
        out.overrides.push_back({m4->rev_joint, Interval{0, rev_nom.hi}});
        out.overrides.push_back({m4->pris_joint, Interval{0, 0}});
        break;
    }
  }
  return out;
}

MechanismState sample_hidden(Category category, Rng& rng, const MechanismPriors& priors) {
  priors.validate();
  switch (category) {
    case Category::Bottle:
    case Category::Pen:
    case Category::CoffeeMaker:
    case Category::PressureCooker: {
      RotateSlideMech m;
      m.release_angle = rng.uniform(priors.threshold_angle.lo, priors.threshold_angle.hi);
      return m;
    }
    case Category::Window:
    case Category::Door: {
      LockMech m;
      m.locked = rng.bernoulli(priors.p_lock);
      m.direction = rng.bernoulli(0.5) ? 1 : -1;
      m.threshold = rng.uniform(priors.threshold_angle.lo, priors.threshold_angle.hi);
      return m;
    }
    case Category::Lamp: {
      PushRotateMech m;
      int mode = static_cast<int>(rng.uniform_int(0, 2));
      m.mode = mode == 0 ? ActuationMode::Push
                         : (mode == 1 ? ActuationMode::RotateCw : ActuationMode::RotateCcw);
      m.press_depth = rng.uniform(priors.threshold_press.lo, priors.threshold_press.hi);
      m.turn_angle = rng.uniform(priors.threshold_angle.lo, priors.threshold_angle.hi);
      return m;
    }
    case Category::Safe: {
      LockSwitchContactMech m;
      m.locked = rng.bernoulli(priors.p_lock);
      m.direction = rng.bernoulli(0.5) ? 1 : -1;
      m.threshold = rng.uniform(priors.threshold_angle.lo, priors.threshold_angle.hi);
      return m;
    }
    case Category::Microwave: {
      LockSwitchContactMech m;
      m.locked = rng.bernoulli(priors.p_lock);
      m.direction = 1;
      m.threshold = rng.uniform(priors.threshold_press.lo, priors.threshold_press.hi);
      return m;
    }
  }
  throw std::logic_error("unknown category");
}

bool mechanism_open(const MechanismState& state) {
  if (const auto* m = std::get_if<LockMech>(&state)) return !m->locked;
  if (const auto* m = std::get_if<LockSwitchContactMech>(&state)) return !m->locked;
  if (const auto* m = std::get_if<RotateSlideMech>(&state)) return m->released;
  return std::get<PushRotateMech>(state).latched;
}

bool mechanism_unfavorable(const MechanismState& state) {
  if (const auto* m = std::get_if<LockMech>(&state)) return m->locked;
  if (const auto* m = std::get_if<LockSwitchContactMech>(&state)) return m->locked;
  if (std::holds_alternative<RotateSlideMech>(state)) return true;
  return false;
}

}  // namespace articulab
