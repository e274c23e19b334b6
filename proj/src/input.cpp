#include "parlor/input.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <thread>

namespace parlor {

std::string_view to_string(InputKind kind) {
  switch (kind) {
    case InputKind::speak_or_skip: return "speak_or_skip";
    case InputKind::compose: return "compose";
    case InputKind::survey: return "survey";
  }
  return "compose";
}

InputReply interpret_speak_or_skip(std::string_view line) {
  std::string word = trim(line);
  std::string lower = word;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.empty() || lower == "pass" || lower == "skip" || lower == "no" || lower == "n") {
    return {InputReply::Action::skip, std::nullopt};
  }
  if (lower == "speak" || lower == "yes" || lower == "y") {
    return {InputReply::Action::speak, std::nullopt};
  }
  // Anything else is taken as the message itself.
  return {InputReply::Action::speak, word};
}

StreamInputChannel::StreamInputChannel(std::istream& in, std::ostream& out)
    : shared_(std::make_shared<Shared>()), out_(out) {
  // Detached: a blocking read on a terminal cannot be interrupted portably.
  std::thread([shared = shared_, &in] {
    std::string line;
    while (std::getline(in, line)) {
      std::lock_guard lock(shared->mutex);
      shared->lines.push_back(line);
      shared->ready.notify_all();
    }
    std::lock_guard lock(shared->mutex);
    shared->eof = true;
    shared->ready.notify_all();
  }).detach();
}

InputResult StreamInputChannel::request(const InputRequest& request) {
  out_ << "[" << request.person.name << "] " << request.prompt;
  if (request.scale) out_ << " (" << request.scale->min << "-" << request.scale->max << ")";
  out_ << "\n> " << std::flush;

  std::unique_lock lock(shared_->mutex);
  const bool ready = shared_->ready.wait_for(lock, request.timeout, [&] {
    return !shared_->lines.empty() || shared_->eof;
  });
  if (!ready) return InputResult::timed_out();
  if (shared_->lines.empty()) return InputResult::closed();
  std::string line = std::move(shared_->lines.front());
  shared_->lines.pop_front();
  lock.unlock();

  switch (request.kind) {
    case InputKind::speak_or_skip: return InputResult::replied(interpret_speak_or_skip(line));
    case InputKind::compose: return InputResult::replied({InputReply::Action::speak, line});
    case InputKind::survey: return InputResult::replied({InputReply::Action::answer, line});
  }
  return InputResult::closed();
}

}  // namespace parlor
