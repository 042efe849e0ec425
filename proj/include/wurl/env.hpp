#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "wurl/batch.hpp"
#include "wurl/common.hpp"

namespace wurl {

// Wall segment; the solid region is the capsule of radius EnvConfig::
// wall_thickness around it.
struct Wall {
  double x1, y1, x2, y2;
};

struct EnvConfig {
  double half_extent = 10.0;
  double dt = 1.0;
  double a_max = 0.1;  // per-component acceleration clip
  double v_max = 0.5;  // speed clip
  int horizon = 100;
  double wall_thickness = 0.1;
  std::vector<Wall> walls;
  std::vector<std::array<double, 2>> goals;  // visited in order
  double goal_radius = 1.0;
  double goal_reward = 50.0;
  double step_penalty = 0.1;  // charged per step when goals are present

  static EnvConfig free_run() { return {}; }

  // Tree-shaped corridor system: trunk up from the origin, a cross branch,
  // and two long vertical legs. The 16 segments form one closed boundary, so
  // an agent starting inside stays inside.
  static EnvConfig tree_maze() {
    EnvConfig cfg;
    cfg.walls = {
        {-1, -1, 1, -1},   // trunk bottom
        {-1, -1, -1, 3},   // trunk left
        {1, -1, 1, 3},     // trunk right
        {-3, 3, -1, 3},    // branch underside, left of trunk
        {1, 3, 3, 3},      // branch underside, right of trunk
        {-3, 3, -3, -3},   // left leg, inner wall below branch
        {3, 3, 3, -3},     // right leg, inner wall below branch
        {-5, -3, -3, -3},  // left leg bottom
        {3, -3, 5, -3},    // right leg bottom
        {-5, -3, -5, 9},   // left outer wall
        {5, -3, 5, 9},     // right outer wall
        {-5, 9, -3, 9},    // left leg top
        {3, 9, 5, 9},      // right leg top
        {-3, 9, -3, 5},    // left leg, inner wall above branch
        {3, 9, 3, 5},      // right leg, inner wall above branch
        {-3, 5, 3, 5},     // branch top
    };
    return cfg;
  }

  // FreeRun with the canonical ordered three-goal course used by the
  // hierarchy experiments: spread across distinct directions so switching
  // between diverse sub-policies is what pays off.
  static EnvConfig free_run_nav() {
    EnvConfig cfg;
    cfg.goals = {{{6, 6}}, {{-6, 6}}, {{0, -7}}};
    return cfg;
  }

  void validate() const {
    require(half_extent > 0 && dt > 0 && a_max > 0 && v_max > 0, "EnvConfig: bad dynamics");
    require(horizon >= 1, "EnvConfig: horizon must be >= 1");
    require(wall_thickness > 0, "EnvConfig: wall thickness must be positive");
    require(goal_radius > 0, "EnvConfig: goal radius must be positive");
    for (const auto& w : walls)
      require(std::isfinite(w.x1) && std::isfinite(w.y1) && std::isfinite(w.x2) &&
                  std::isfinite(w.y2),
              "EnvConfig: non-finite wall");
    for (const auto& g : goals)
      require(std::fabs(g[0]) <= half_extent && std::fabs(g[1]) <= half_extent,
              "EnvConfig: goal outside arena");
  }
};

struct StepResult {
  Vec obs;
  double reward = 0.0;
  bool done = false;
  bool terminal = false;  // true MDP termination (all goals), not the time limit
};

namespace detail {
inline double closest_on_segment(double px, double py, const Wall& w, double* cx, double* cy) {
  double dx = w.x2 - w.x1, dy = w.y2 - w.y1;
  double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((px - w.x1) * dx + (py - w.y1) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  *cx = w.x1 + t * dx;
  *cy = w.y1 + t * dy;
  return std::hypot(px - *cx, py - *cy);
}
}  // namespace detail

// Point particle with velocity, acceleration control, capsule walls and an
// ordered goal course. Observation: (x, y, vx, vy). No internal randomness.
class ParticleEnv {
 public:
  explicit ParticleEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    reset();
  }

  static constexpr int kObsDim = 4;
  static constexpr int kActionDim = 2;

  const EnvConfig& config() const { return cfg_; }
  int step_count() const { return steps_; }
  int goal_index() const { return goal_idx_; }
  bool done() const { return done_; }

  Vec reset() {
    x_ = y_ = vx_ = vy_ = 0.0;
    steps_ = 0;
    goal_idx_ = 0;
    done_ = false;
    return obs();
  }

  Vec obs() const { return {x_, y_, vx_, vy_}; }

  StepResult step(std::span<const double> action) {
    require_state(!done_, "ParticleEnv::step: episode is over");
    require(action.size() == kActionDim, "ParticleEnv::step: bad action size");
    require(all_finite(action), "ParticleEnv::step: non-finite action");

    double ax = std::clamp(action[0], -cfg_.a_max, cfg_.a_max);
    double ay = std::clamp(action[1], -cfg_.a_max, cfg_.a_max);
    vx_ += ax * cfg_.dt;
    vy_ += ay * cfg_.dt;
    double speed = std::hypot(vx_, vy_);
    if (speed > cfg_.v_max) {
      vx_ *= cfg_.v_max / speed;
      vy_ *= cfg_.v_max / speed;
    }

    integrate();

    double reward = 0.0;
    if (!cfg_.goals.empty()) {
      reward -= cfg_.step_penalty;
      while (goal_idx_ < int(cfg_.goals.size()) &&
             std::hypot(x_ - cfg_.goals[std::size_t(goal_idx_)][0],
                        y_ - cfg_.goals[std::size_t(goal_idx_)][1]) <= cfg_.goal_radius) {
        reward += cfg_.goal_reward;
        ++goal_idx_;
      }
    }

    ++steps_;
    bool terminal = !cfg_.goals.empty() && goal_idx_ == int(cfg_.goals.size());
    done_ = terminal || steps_ >= cfg_.horizon;
    return {obs(), reward, done_, terminal};
  }

 private:
  // Move by v*dt in substeps short enough that a capsule of radius
  // wall_thickness cannot be tunnelled through, projecting out of any wall
  // and killing the inbound normal velocity on contact.
  void integrate() {
    double step_len = std::hypot(vx_, vy_) * cfg_.dt;
    int subs = std::max(1, int(std::ceil(step_len / (0.5 * cfg_.wall_thickness))));
    double h = cfg_.dt / subs;
    for (int s = 0; s < subs; ++s) {
      double px = x_, py = y_;
      x_ += vx_ * h;
      y_ += vy_ * h;
      for (int pass = 0; pass < 3; ++pass) {
        for (const Wall& w : cfg_.walls) {
          double cx, cy;
          double d = detail::closest_on_segment(x_, y_, w, &cx, &cy);
          if (d >= cfg_.wall_thickness) continue;
          double nx, ny;
          if (d > 1e-12) {
            nx = (x_ - cx) / d;
            ny = (y_ - cy) / d;
          } else {
            // On the segment line: take its left normal, oriented toward
            // where the particle came from.
            double wx = w.x2 - w.x1, wy = w.y2 - w.y1;
            double len = std::hypot(wx, wy);
            nx = len > 0 ? -wy / len : 1.0;
            ny = len > 0 ? wx / len : 0.0;
            if ((px - cx) * nx + (py - cy) * ny < 0) {
              nx = -nx;
              ny = -ny;
            }
          }
          x_ = cx + nx * (cfg_.wall_thickness + 1e-9);
          y_ = cy + ny * (cfg_.wall_thickness + 1e-9);
          double vn = vx_ * nx + vy_ * ny;
          if (vn < 0) {
            vx_ -= vn * nx;
            vy_ -= vn * ny;
          }
        }
      }
      if (x_ > cfg_.half_extent) { x_ = cfg_.half_extent; vx_ = std::min(vx_, 0.0); }
      if (x_ < -cfg_.half_extent) { x_ = -cfg_.half_extent; vx_ = std::max(vx_, 0.0); }
      if (y_ > cfg_.half_extent) { y_ = cfg_.half_extent; vy_ = std::min(vy_, 0.0); }
      if (y_ < -cfg_.half_extent) { y_ = -cfg_.half_extent; vy_ = std::max(vy_, 0.0); }
    }
  }

  EnvConfig cfg_;
  double x_ = 0, y_ = 0, vx_ = 0, vy_ = 0;
  int steps_ = 0;
  int goal_idx_ = 0;
  bool done_ = false;
};

struct Trajectory {
  std::vector<Vec> obs;      // s_0 .. s_T
  std::vector<Vec> actions;  // a_0 .. a_{T-1}
  Vec rewards;               // env task rewards
  std::vector<bool> terminals;
  StateBatch visited;        // s_1 .. s_T, the batch fed to distance estimators
  double total_reward = 0.0;
};

template <class Policy>
Trajectory rollout(ParticleEnv& env, Policy&& pi) {
  Trajectory tr;
  Vec s = env.reset();
  tr.obs.push_back(s);
  tr.visited = StateBatch(ParticleEnv::kObsDim);
  while (!env.done()) {
    Vec a = pi(s);
    StepResult res = env.step(a);
    tr.actions.push_back(std::move(a));
    tr.rewards.push_back(res.reward);
    tr.terminals.push_back(res.terminal);
    tr.visited.push_back(res.obs);
    tr.obs.push_back(res.obs);
    tr.total_reward += res.reward;
    s = res.obs;
  }
  return tr;
}

}  // namespace wurl
