#pragma once

// Event-driven annihilation kernel shared by the public resolve() and the
// Monte-Carlo estimators. Works on plain arrays of positions so the hot loop
// never touches Number or Configuration.

#include "balab/model.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace balab {

using Int128 = __int128;

/// Collision in kernel units. Times and positions are stored doubled so that
/// integer lattices stay integral: time2 = 2t, pos2 = 2x. Participants are
/// local (0-based) indices in increasing position order; c < 0 for pairs.
template <class T>
struct KernelCollision {
  T time2;
  T pos2;
  int a;
  int b;
  int c;
  [[nodiscard]] bool is_triple() const { return c >= 0; }
};

template <class T>
class Kernel {
 public:
  /// Resolves the window. x must be strictly increasing; this is not checked
  /// here (resolve() validates public inputs).
  void run(std::span<const T> x, std::span<const Velocity> v) {
    const int n = static_cast<int>(x.size());
    x_ = x;
    v_ = v;
    prev_.resize(n);
    next_.resize(n);
    fate_.assign(n, -1);
    collisions_.clear();
    heap_.clear();
    survivors_.clear();
    triples_ = 0;
    for (int i = 0; i < n; ++i) {
      prev_[i] = i - 1;
      next_[i] = i + 1 < n ? i + 1 : -1;
    }
    for (int i = 0; i + 1 < n; ++i) consider(i, i + 1);

    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), later);
      const Event e = heap_.back();
      heap_.pop_back();
      if (fate_[e.a] >= 0 || fate_[e.b] >= 0) continue;

      int lo = e.a;
      int hi = e.b;
      int mid = -1;
      if (v[e.a] == Velocity::Right && v[e.b] == Velocity::Blockade) {
        const int c = next_[e.b];
        if (c >= 0 && v[c] == Velocity::Left && same_key(e, e.b, c)) {
          mid = e.b;
          hi = c;
        }
      } else if (v[e.a] == Velocity::Blockade && v[e.b] == Velocity::Left) {
        const int r = prev_[e.a];
        if (r >= 0 && v[r] == Velocity::Right && same_key(e, r, e.a)) {
          mid = e.a;
          lo = r;
        }
      }

      const int id = static_cast<int>(collisions_.size());
      if (mid >= 0) {
        collisions_.push_back({e.time2, e.pos2, lo, mid, hi});
        fate_[mid] = id;
        ++triples_;
      } else {
        collisions_.push_back({e.time2, e.pos2, lo, hi, -1});
      }
      fate_[lo] = id;
      fate_[hi] = id;

      const int left = prev_[lo];
      const int right = next_[hi];
      if (left >= 0) next_[left] = right;
      if (right >= 0) prev_[right] = left;
      if (left >= 0 && right >= 0) consider(left, right);
    }

    for (int i = 0; i < n; ++i)
      if (fate_[i] < 0) survivors_.push_back(i);
  }

  /// Collision id per local index, or -1 for survivors.
  [[nodiscard]] const std::vector<int>& fate() const { return fate_; }
  [[nodiscard]] const std::vector<KernelCollision<T>>& collisions() const { return collisions_; }
  /// Local indices of survivors in position order.
  [[nodiscard]] const std::vector<int>& survivors() const { return survivors_; }
  [[nodiscard]] int triples() const { return triples_; }

 private:
  struct Event {
    T time2;
    T pos2;
    int a;
    int b;
  };

  // Heap comparator: the top is the smallest (time, position, left index).
  static bool later(const Event& l, const Event& r) {
    if (l.time2 != r.time2) return r.time2 < l.time2;
    if (l.pos2 != r.pos2) return r.pos2 < l.pos2;
    return r.a < l.a;
  }

  // Candidate collision of adjacent alive particles a < b.
  bool key(int a, int b, T& time2, T& pos2) const {
    const Velocity va = v_[a];
    const Velocity vb = v_[b];
    if (va == Velocity::Right && vb == Velocity::Left) {
      time2 = x_[b] - x_[a];
      pos2 = x_[a] + x_[b];
      return true;
    }
    if (va == Velocity::Right && vb == Velocity::Blockade) {
      time2 = (x_[b] - x_[a]) * 2;
      pos2 = x_[b] * 2;
      return true;
    }
    if (va == Velocity::Blockade && vb == Velocity::Left) {
      time2 = (x_[b] - x_[a]) * 2;
      pos2 = x_[a] * 2;
      return true;
    }
    return false;
  }

  void consider(int a, int b) {
    Event e{T{}, T{}, a, b};
    if (!key(a, b, e.time2, e.pos2)) return;
    heap_.push_back(e);
    std::push_heap(heap_.begin(), heap_.end(), later);
  }

  bool same_key(const Event& e, int a, int b) const {
    T t{}, p{};
    return key(a, b, t, p) && t == e.time2 && p == e.pos2;
  }

  std::span<const T> x_;
  std::span<const Velocity> v_;
  std::vector<int> prev_;
  std::vector<int> next_;
  std::vector<int> fate_;
  std::vector<Event> heap_;
  std::vector<KernelCollision<T>> collisions_;
  std::vector<int> survivors_;
  int triples_ = 0;
};

/// Survivor tallies over local indices [first, last] of a kernel run.
struct Tally {
  long dot = 0;
  long left = 0;
  long right = 0;
};

template <class T>
Tally tally(const Kernel<T>& k, std::span<const Velocity> v) {
  Tally t;
  for (int i : k.survivors()) {
    switch (v[i]) {
      case Velocity::Blockade: ++t.dot; break;
      case Velocity::Left: ++t.left; break;
      case Velocity::Right: ++t.right; break;
    }
  }
  return t;
}

}  // namespace balab
