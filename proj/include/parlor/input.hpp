#pragma once

#include <condition_variable>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "parlor/model.hpp"

namespace parlor {

enum class InputKind { speak_or_skip, compose, survey };

std::string_view to_string(InputKind kind);

struct InputRequest {
  PersonId person;
  InputKind kind = InputKind::compose;
  std::string prompt;
  Millis timeout{120000};
  // Survey scale bounds, when the question has them.
  std::optional<IntegerScale> scale;
};

struct InputReply {
  enum class Action { speak, skip, answer };

  Action action = Action::speak;
  // For speak at a speak_or_skip prompt: absent means "ask me to compose".
  std::optional<std::string> text;
};

struct InputResult {
  enum class Status { replied, timed_out, closed };

  Status status = Status::timed_out;
  InputReply reply;

  static InputResult replied(InputReply reply) { return {Status::replied, std::move(reply)}; }
  static InputResult timed_out() { return {Status::timed_out, {}}; }
  static InputResult closed() { return {Status::closed, {}}; }
};

// A human's input device. request() blocks until a reply, the timeout, or closure.
class InputChannel {
 public:
  virtual ~InputChannel() = default;
  virtual InputResult request(const InputRequest& request) = 0;
};

// Line-oriented console channel over any istream. A detached reader thread
// feeds lines into a queue so requests can time out; EOF closes the channel.
class StreamInputChannel final : public InputChannel {
 public:
  StreamInputChannel(std::istream& in, std::ostream& out);

  InputResult request(const InputRequest& request) override;

 private:
  struct Shared {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<std::string> lines;
    bool eof = false;
  };

  std::shared_ptr<Shared> shared_;
  std::ostream& out_;
};

// Interprets one console line typed at a speak/skip prompt.
InputReply interpret_speak_or_skip(std::string_view line);

}  // namespace parlor
