#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>

#include "parlor/model.hpp"

namespace parlor {

enum class ClockMode { virtual_time, wall };

struct ClockSnapshot {
  ClockMode mode = ClockMode::virtual_time;
  std::int64_t start_unix_ms = 0;
  Millis elapsed{0};
  std::optional<Millis> limit;
  std::optional<Millis> remaining;  // present iff limit is

  bool operator==(const ClockSnapshot&) const = default;
};

// Session time source. Virtual mode: elapsed == tick * granted turns, exactly.
// Wall mode: elapsed is measured with a monotonic source from construction.
class SessionClock {
 public:
  using MonotonicSource = std::function<Millis()>;

  static SessionClock virtual_clock(Millis tick, std::optional<Millis> limit = std::nullopt,
                                    std::int64_t start_unix_ms = 0);
  static SessionClock wall_clock(std::optional<Millis> limit = std::nullopt,
                                 MonotonicSource source = {}, std::int64_t start_unix_ms = 0);

  // Called once per granted turn. No-op for wall clocks.
  void on_turn_granted();

  ClockMode mode() const { return mode_; }
  Millis tick() const { return tick_; }
  Millis elapsed() const;
  std::optional<Millis> limit() const { return limit_; }
  std::optional<Millis> remaining() const;
  std::int64_t granted_turns() const { return granted_; }
  std::int64_t start_unix_ms() const { return start_unix_ms_; }

  ClockSnapshot snapshot() const;

 private:
  SessionClock() = default;

  ClockMode mode_ = ClockMode::virtual_time;
  Millis tick_{0};
  std::optional<Millis> limit_;
  std::int64_t granted_ = 0;
  std::int64_t start_unix_ms_ = 0;
  MonotonicSource source_;
  Millis origin_{0};
  mutable Millis last_{0};
};

}  // namespace parlor
