#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "parlor/config.hpp"
#include "parlor/model.hpp"
#include "parlor/rng.hpp"

namespace parlor {

// Turn-granting policy. Each call consumes one granted turn, whether or not
// the selected person ends up speaking.
class Host {
 public:
  virtual ~Host() = default;

  // Returns the roster index of the next speaker.
  virtual std::size_t next_speaker() = 0;
  virtual std::unique_ptr<Host> clone() const = 0;

  const std::vector<PersonId>& roster() const { return roster_; }
  bool is_round_robin() const { return round_robin_; }

 protected:
  Host(std::vector<PersonId> roster, bool round_robin);

 private:
  std::vector<PersonId> roster_;
  bool round_robin_;
};

class RoundRobinHost final : public Host {
 public:
  RoundRobinHost(std::vector<PersonId> roster, std::size_t start_index);

  std::size_t next_speaker() override;
  std::unique_ptr<Host> clone() const override;
  std::size_t cursor() const { return cursor_; }

 private:
  std::size_t cursor_;
};

class RandomHost final : public Host {
 public:
  static constexpr std::uint64_t kSalt = 0x52414E44484F5354ULL;  // "RANDHOST"

  // The generator is seeded with seed ^ kSalt.
  RandomHost(std::vector<PersonId> roster, std::uint64_t seed);

  std::size_t next_speaker() override;
  std::unique_ptr<Host> clone() const override;

 private:
  SplitMix64 rng_;
};

// Throws ConfigError for an unknown class or an out-of-range start index.
std::unique_ptr<Host> make_host(const ClassSpec& spec, std::vector<PersonId> roster,
                                std::uint64_t seed);

}  // namespace parlor
