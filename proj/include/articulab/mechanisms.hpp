#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "articulab/rng.hpp"
#include "articulab/types.hpp"

namespace articulab {

// Hidden joint coupling: a key joint must cross a threshold before the goal
// joint's limit is lifted. `locked == false` means the latch starts open.
// Unlocking is permanent for the life of the episode.
struct LockMech {
  bool locked = true;
  int key_joint = 1;
  int goal_joint = 0;
  double threshold = 0;   // on direction * key value
  int direction = 1;      // +1 or -1; the key joint only moves this way
};

// Same latch, but the key joint lives on a different part than the goal
// joint, so acting on it requires releasing the current grasp.
struct LockSwitchContactMech {
  bool locked = true;
  int key_joint = 1;
  int goal_joint = 0;
  double threshold = 0;
  int direction = 1;
};

// Coaxial revolute + prismatic pair: the prismatic joint is pinned at zero
// until the revolute joint reaches the release angle, then stays free.
struct RotateSlideMech {
  int rev_joint = 0;
  int pris_joint = 1;
  double release_angle = 0;
  bool released = false;
};

enum class ActuationMode { Push, RotateCw, RotateCcw };

// One of push / rotate-cw / rotate-ccw actuates the latch; the other motions
// are pinned. Crossing the threshold latches the device on, permanently.
struct PushRotateMech {
  ActuationMode mode = ActuationMode::Push;
  int rev_joint = 0;
  int pris_joint = 1;
  double press_depth = 0;
  double turn_angle = 0;
  bool latched = false;
};

using MechanismState =
    std::variant<LockMech, LockSwitchContactMech, RotateSlideMech, PushRotateMech>;

struct LimitOverride {
  int joint = 0;
  Interval limits;
};

struct MechanismUpdate {
  MechanismState state;
  std::vector<LimitOverride> overrides;
};

struct MechanismPriors {
  double p_lock = 0.5;
  Interval threshold_angle{0.3, 1.2};   // rad; lock/rotate thresholds
  Interval threshold_press{0.005, 0.02};  // m; push thresholds
  void validate() const;
};

// Pure transition: consumes current joint values and nominal limits, returns
// the successor state plus effective-limit overrides for the touched joints.
// Transitions are monotone (locks only open, latches only set) and the
// function is idempotent at fixed joint values.
MechanismUpdate apply_mechanism(const MechanismState& state,
                                std::span<const double> values,
                                std::span<const JointSpec> joints);

// Draws the hidden state for a category. Draw order per variant is fixed and
// covered by the distribution tests.
MechanismState sample_hidden(Category category, Rng& rng, const MechanismPriors& priors);

// True if the episode-relevant latch is open (lock lifted / slide released /
// device latched on). Used by success checks and diagnostics.
bool mechanism_open(const MechanismState& state);

// True if the optimistic "act on the goal joint directly" first attempt
// would fail on this hidden draw.
bool mechanism_unfavorable(const MechanismState& state);

}  // namespace articulab
