#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "parlor/persons.hpp"
#include "parlor/session.hpp"

namespace parlor {

struct GatewayOptions {
  std::filesystem::path output_dir = ".";
  SessionOptions session;
  PersonEnvironment env;  // `input` is ignored; each session gets its own gateway channel
};

class LiveSession;

// Local HTTP service hosting live sessions.
//
//   POST /sessions                       config body -> {id, human_slots}
//   POST /sessions/{id}/start
//   GET  /sessions/{id}/events           line-delimited stream: replay, then live
//   POST /sessions/{id}/claims/{person}  -> {token}
//   POST /sessions/{id}/input            {person, request_id, action, content?} + bearer token
//   GET  /sessions/{id}/transcript       completed transcript file
//
// Stream lines are either transcript records (identical bytes to the file) or
// input-request notices, which carry a "notice" key instead of "seq".
class Gateway {
 public:
  explicit Gateway(GatewayOptions options);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; returns the port.
  int start(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  bool serve(const std::string& host, int port);
  void stop();

  std::shared_ptr<LiveSession> find(const std::string& id) const;
  // Blocks until the session ends or the timeout passes. For tests and shutdown.
  bool wait_for_end(const std::string& id, Millis timeout) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace parlor
