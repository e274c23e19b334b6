#include "parlor/hosts.hpp"

namespace parlor {

Host::Host(std::vector<PersonId> roster, bool round_robin)
    : roster_(std::move(roster)), round_robin_(round_robin) {
  if (roster_.empty()) throw std::invalid_argument("host roster is empty");
}

RoundRobinHost::RoundRobinHost(std::vector<PersonId> roster, std::size_t start_index)
    : Host(std::move(roster), true), cursor_(start_index) {
  if (cursor_ >= this->roster().size()) {
    throw ConfigError(ConfigErrorKind::out_of_range, "host.start_person_index",
                      "start_person_index " + std::to_string(start_index) +
                          " is out of range for " + std::to_string(this->roster().size()) +
                          " persons");
  }
}

std::size_t RoundRobinHost::next_speaker() {
  const std::size_t chosen = cursor_;
  cursor_ = (cursor_ + 1) % roster().size();
  return chosen;
}

std::unique_ptr<Host> RoundRobinHost::clone() const {
  return std::make_unique<RoundRobinHost>(*this);
}

RandomHost::RandomHost(std::vector<PersonId> roster, std::uint64_t seed)
    : Host(std::move(roster), false), rng_(seed ^ kSalt) {}

std::size_t RandomHost::next_speaker() {
  return static_cast<std::size_t>(rng_.next() % roster().size());
}

std::unique_ptr<Host> RandomHost::clone() const { return std::make_unique<RandomHost>(*this); }

std::unique_ptr<Host> make_host(const ClassSpec& spec, std::vector<PersonId> roster,
                                std::uint64_t seed) {
  if (spec.class_name == "host_round_robin") {
    const auto start = spec.params.value("start_person_index", std::int64_t{0});
    if (start < 0) {
      throw ConfigError(ConfigErrorKind::out_of_range, "host.start_person_index",
                        "start_person_index must be >= 0");
    }
    return std::make_unique<RoundRobinHost>(std::move(roster), static_cast<std::size_t>(start));
  }
  if (spec.class_name == "host_random") {
    return std::make_unique<RandomHost>(std::move(roster), seed);
  }
  throw ConfigError(ConfigErrorKind::unknown_class, "host.class",
                    "unknown host class '" + spec.class_name + "'");
}

}  // namespace parlor
