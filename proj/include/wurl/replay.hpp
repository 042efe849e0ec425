#pragma once

#include <vector>

#include "wurl/common.hpp"
#include "wurl/rng.hpp"

namespace wurl {

struct Transition {
  Vec s, a, s2;
  double r = 0.0;
  bool done = false;      // episode ended after this step (any reason)
  bool terminal = false;  // true MDP termination; time limits stay false so
                          // the critic still bootstraps through them
};

// Flat ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "ReplayBuffer: capacity must be >= 1");
  }

  void add(Transition t) {
    require(all_finite(t.s) && all_finite(t.a) && all_finite(t.s2) && std::isfinite(t.r),
            "ReplayBuffer::add: non-finite transition");
    if (buf_.size() < capacity_) {
      buf_.push_back(std::move(t));
    } else {
      buf_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return buf_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return buf_[i]; }

  void sample_indices(int batch, Rng& rng, std::vector<std::size_t>& out) const {
    require_state(!buf_.empty(), "ReplayBuffer: cannot sample from empty buffer");
    out.resize(std::size_t(batch));
    for (auto& i : out) i = std::size_t(rng() % buf_.size());
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> buf_;
};

// Overwrite the task rewards of one episode's transitions with intrinsic
// ones, optionally scaled (e.g. by episode length for amortized credits).
inline void relabel_rewards(std::span<Transition> episode, std::span<const double> rewards,
                            double scale = 1.0) {
  require(episode.size() == rewards.size(), "relabel_rewards: size mismatch");
  require(all_finite(rewards) && std::isfinite(scale), "relabel_rewards: non-finite reward");
  for (std::size_t i = 0; i < episode.size(); ++i) episode[i].r = rewards[i] * scale;
}

}  // namespace wurl
