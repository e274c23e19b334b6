#include "parlor/model.hpp"

#include <cctype>
#include <string>

namespace parlor {

std::string trim(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

void ChatHistory::append(Message msg) {
  const auto expected = static_cast<std::int64_t>(messages_.size());
  if (msg.seq != expected) {
    throw InvariantViolation("history append: seq " + std::to_string(msg.seq) + ", expected " +
                             std::to_string(expected));
  }
  if (!messages_.empty()) {
    const Message& last = messages_.back();
    if (msg.at < last.at) {
      throw InvariantViolation("history append: time regression at seq " +
                               std::to_string(msg.seq));
    }
    if (msg.turn < last.turn) {
      throw InvariantViolation("history append: turn regression at seq " +
                               std::to_string(msg.seq));
    }
  } else if (msg.at < Millis{0}) {
    throw InvariantViolation("history append: negative timestamp");
  }
  if (trim(msg.content).empty()) {
    throw InvariantViolation("history append: blank content at seq " + std::to_string(msg.seq));
  }
  messages_.push_back(std::move(msg));
}

std::vector<LabeledLine> ChatHistory::visible_to(const PersonId& /*viewer*/) const {
  std::vector<LabeledLine> lines;
  lines.reserve(messages_.size());
  for (const Message& m : messages_) lines.push_back({m.sender.name, m.content});
  return lines;
}

std::vector<LabeledLine> visible_history(const ChatHistory& history, const PersonId& viewer) {
  return history.visible_to(viewer);
}

}  // namespace parlor
