#include "parlor/clock.hpp"

#include <algorithm>

namespace parlor {

SessionClock SessionClock::virtual_clock(Millis tick, std::optional<Millis> limit,
                                         std::int64_t start_unix_ms) {
  SessionClock clock;
  clock.mode_ = ClockMode::virtual_time;
  clock.tick_ = tick;
  clock.limit_ = limit;
  clock.start_unix_ms_ = start_unix_ms;
  return clock;
}

SessionClock SessionClock::wall_clock(std::optional<Millis> limit, MonotonicSource source,
                                      std::int64_t start_unix_ms) {
  SessionClock clock;
  clock.mode_ = ClockMode::wall;
  clock.limit_ = limit;
  clock.start_unix_ms_ = start_unix_ms;
  if (!source) {
    source = [] {
      return std::chrono::duration_cast<Millis>(
          std::chrono::steady_clock::now().time_since_epoch());
    };
  }
  clock.source_ = std::move(source);
  clock.origin_ = clock.source_();
  return clock;
}

void SessionClock::on_turn_granted() { ++granted_; }

Millis SessionClock::elapsed() const {
  if (mode_ == ClockMode::virtual_time) return tick_ * granted_;
  last_ = std::max(last_, source_() - origin_);
  return last_;
}

std::optional<Millis> SessionClock::remaining() const {
  if (!limit_) return std::nullopt;
  return std::max(*limit_ - elapsed(), Millis{0});
}

ClockSnapshot SessionClock::snapshot() const {
  ClockSnapshot snap;
  snap.mode = mode_;
  snap.start_unix_ms = start_unix_ms_;
  snap.elapsed = elapsed();
  snap.limit = limit_;
  if (limit_) snap.remaining = std::max(*limit_ - snap.elapsed, Millis{0});
  return snap;
}

}  // namespace parlor
