#include "parlor/gateway.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "parlor/events.hpp"

namespace parlor {

namespace {

std::string random_hex(std::size_t bytes) {
  static std::mutex mutex;
  static std::random_device device;
  std::lock_guard lock(mutex);
  std::string out;
  char buffer[3];
  for (std::size_t i = 0; i < bytes; ++i) {
    std::snprintf(buffer, sizeof buffer, "%02x", static_cast<unsigned>(device() & 0xff));
    out += buffer;
  }
  return out;
}

std::int64_t unix_now_ms() {
  return std::chrono::duration_cast<Millis>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_json(body), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& reason) {
  reply_json(res, status, {{"error", reason}});
}

}  // namespace

enum class LiveState { created, running, ended };

struct SubmitOutcome {
  bool accepted = false;
  int status = 200;
  std::string reason;
};

// Holds one session's engine thread, its event log, and the pending human input request.
class LiveSession : public InputChannel {
 public:
  struct Pending {
    std::string id;
    InputRequest request;
    std::int64_t deadline_unix_ms = 0;
    std::chrono::steady_clock::time_point deadline;
    std::optional<InputReply> reply;
  };

  LiveSession(std::string id, ExperimentConfig config, std::filesystem::path transcript,
              SessionOptions options)
      : id_(std::move(id)),
        config_(std::move(config)),
        transcript_(std::move(transcript)),
        options_(std::move(options)) {
    for (const PersonSpec& p : config_.persons) {
      if (is_human_class(p.class_name)) human_slots_.push_back(p.name);
    }
  }

  ~LiveSession() override {
    close();
    if (thread_.joinable()) thread_.join();
  }

  const std::string& id() const { return id_; }
  const std::vector<std::string>& human_slots() const { return human_slots_; }
  const std::filesystem::path& transcript() const { return transcript_; }

  LiveState state() const {
    std::lock_guard lock(mutex_);
    return state_;
  }

  bool start(const PersonEnvironment& base_env) {
    {
      std::lock_guard lock(mutex_);
      if (state_ != LiveState::created) return false;
      state_ = LiveState::running;
    }
    PersonEnvironment env = base_env;
    // Non-owning: the gateway owns sessions and joins the thread on teardown.
    env.input = std::shared_ptr<InputChannel>(std::shared_ptr<void>{}, this);
    thread_ = std::thread([this, env = std::move(env)] { run(env); });
    return true;
  }

  InputResult request(const InputRequest& request) override {
    std::unique_lock lock(mutex_);
    if (closed_) return InputResult::closed();
    Pending pending;
    pending.id = "r" + std::to_string(++request_counter_);
    pending.request = request;
    pending.deadline_unix_ms = unix_now_ms() + request.timeout.count();
    pending.deadline = std::chrono::steady_clock::now() + request.timeout;
    pending_ = std::move(pending);
    changed_.notify_all();

    const auto deadline = pending_->deadline;
    changed_.wait_until(lock, deadline, [&] { return closed_ || pending_->reply.has_value(); });
    const std::string request_id = pending_->id;
    std::optional<InputReply> reply = std::move(pending_->reply);
    pending_.reset();
    changed_.notify_all();
    if (reply) return InputResult::replied(std::move(*reply));
    if (closed_) return InputResult::closed();
    expired_.insert(request_id);
    return InputResult::timed_out();
  }

  std::optional<std::string> claim(const std::string& person) {
    std::lock_guard lock(mutex_);
    if (claims_.count(person) != 0) return std::nullopt;
    std::string token = random_hex(16);
    claims_[person] = token;
    return token;
  }

  SubmitOutcome submit(const std::string& person, const std::string& token,
                       const std::string& request_id, const std::string& action,
                       const std::optional<std::string>& content) {
    std::lock_guard lock(mutex_);
    const auto claim = claims_.find(person);
    if (claim == claims_.end()) return {false, 403, "unclaimed"};
    if (claim->second != token) return {false, 403, "bad token"};
    if (expired_.count(request_id) != 0) return {false, 409, "expired"};
    if (consumed_.count(request_id) != 0) return {false, 409, "duplicate"};
    if (!pending_ || pending_->id != request_id || pending_->request.person.name != person) {
      return {false, 404, "unknown request_id"};
    }
    if (pending_->reply) return {false, 409, "duplicate"};
    if (std::chrono::steady_clock::now() >= pending_->deadline) return {false, 409, "expired"};

    InputReply reply;
    const InputKind kind = pending_->request.kind;
    if (action == "skip") {
      reply.action = InputReply::Action::skip;
    } else if (action == "speak" && kind != InputKind::survey) {
      reply.action = InputReply::Action::speak;
      if (content) {
        if (trim(*content).empty()) return {false, 422, "empty"};
        reply.text = *content;
      } else if (kind == InputKind::compose) {
        return {false, 422, "empty"};
      }
    } else if (action == "survey_answer" && kind == InputKind::survey) {
      reply.action = InputReply::Action::answer;
      reply.text = content.value_or("");
    } else {
      return {false, 400, "action '" + action + "' does not fit a " +
                              std::string(to_string(kind)) + " request"};
    }
    pending_->reply = std::move(reply);
    consumed_.insert(request_id);
    changed_.notify_all();
    return {true, 200, ""};
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    changed_.notify_all();
  }

  bool wait_for_end(Millis timeout) const {
    std::unique_lock lock(mutex_);
    return changed_.wait_for(lock, timeout, [&] { return state_ == LiveState::ended; });
  }

  // Stream cursor: events already sent, and the id of the last notice sent.
  struct Cursor {
    std::size_t events = 0;
    std::string notice;
  };

  // Next stream line for `cursor`, waiting up to `wait`. Empty optional: nothing
  // yet. `finished` is set once session_end has been delivered.
  std::optional<std::string> next_line(Cursor& cursor, Millis wait, bool& finished) const {
    std::unique_lock lock(mutex_);
    auto ready = [&] {
      return cursor.events < events_.size() || (pending_ && pending_->id != cursor.notice) ||
             (state_ == LiveState::ended);
    };
    changed_.wait_for(lock, wait, ready);
    if (cursor.events < events_.size()) return events_[cursor.events++];
    if (state_ == LiveState::ended) {
      finished = true;
      return std::nullopt;
    }
    if (pending_ && pending_->id != cursor.notice && !pending_->reply) {
      cursor.notice = pending_->id;
      return notice_line(*pending_);
    }
    return std::nullopt;
  }

 private:
  static std::string notice_line(const Pending& p) {
    json notice = {{"notice", "input_request"},
                   {"request_id", p.id},
                   {"person", p.request.person.name},
                   {"kind", std::string(to_string(p.request.kind))},
                   {"prompt", p.request.prompt},
                   {"deadline_unix_ms", p.deadline_unix_ms},
                   {"timeout_ms", p.request.timeout.count()}};
    if (p.request.scale) {
      notice["scale"] = {{"min", p.request.scale->min}, {"max", p.request.scale->max}};
    }
    return canonical_json(notice);
  }

  void run(const PersonEnvironment& env) {
    try {
      JsonlFileSink file(transcript_);
      CallbackSink live([this](const EventRecord& record) {
        std::lock_guard lock(mutex_);
        events_.push_back(serialize_event(record));
        changed_.notify_all();
      });
      SessionResult result =
          run_session(config_, build_persons(config_, env), {&file, &live}, options_);
      if (result.aborted) std::clog << "session " << id_ << " aborted: " << result.error << "\n";
    } catch (const std::exception& e) {
      std::clog << "session " << id_ << " failed: " << e.what() << "\n";
    }
    std::lock_guard lock(mutex_);
    state_ = LiveState::ended;
    changed_.notify_all();
  }

  std::string id_;
  ExperimentConfig config_;
  std::filesystem::path transcript_;
  SessionOptions options_;
  std::vector<std::string> human_slots_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  LiveState state_ = LiveState::created;
  std::vector<std::string> events_;
  std::optional<Pending> pending_;
  std::uint64_t request_counter_ = 0;
  std::set<std::string> expired_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> claims_;
  bool closed_ = false;
  std::thread thread_;
};

struct Gateway::Impl {
  GatewayOptions options;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  mutable std::mutex mutex;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions;

  std::shared_ptr<LiveSession> find(const std::string& id) const {
    std::lock_guard lock(mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    ExperimentConfig config;
    try {
      config = parse_config(std::string_view(req.body));
    } catch (const ConfigError& e) {
      json error = {{"path", e.path()}, {"message", e.what()}};
      if (e.position()) {
        error["line"] = e.position()->line;
        error["column"] = e.position()->column;
      }
      reply_json(res, 400, {{"errors", json::array({error})}});
      return;
    }
    const auto violations = validate_cross_refs(config, {.gateway_input = true});
    if (!violations.empty()) {
      json errors = json::array();
      for (const Violation& v : violations) {
        errors.push_back({{"path", v.path}, {"message", v.message}});
      }
      reply_json(res, 422, {{"errors", errors}});
      return;
    }
    std::string id = random_hex(8);
    auto session = std::make_shared<LiveSession>(
        id, std::move(config), options.output_dir / ("session-" + id + ".events.jsonl"),
        options.session);
    {
      std::lock_guard lock(mutex);
      sessions[id] = session;
    }
    reply_json(res, 201, {{"id", id}, {"human_slots", session->human_slots()}});
  }

  void start_session(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return reply_error(res, 404, "unknown session");
    std::error_code ec;
    std::filesystem::create_directories(options.output_dir, ec);
    if (!session->start(options.env)) return reply_error(res, 409, "already started");
    reply_json(res, 200, {{"id", session->id()}, {"state", "running"}});
  }

  void stream(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return reply_error(res, 404, "unknown session");
    auto cursor = std::make_shared<LiveSession::Cursor>();
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, session, cursor](std::size_t, httplib::DataSink& sink) {
          while (!stopping) {
            if (!sink.is_writable()) return false;
            bool finished = false;
            auto line = session->next_line(*cursor, Millis{100}, finished);
            if (line) {
              line->push_back('\n');
              return sink.write(line->data(), line->size());
            }
            if (finished) {
              sink.done();
              return true;
            }
          }
          return false;
        });
  }

  void claim(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return reply_error(res, 404, "unknown session");
    const std::string& person = req.path_params.at("person");
    const auto& slots = session->human_slots();
    if (std::find(slots.begin(), slots.end(), person) == slots.end()) {
      return reply_error(res, 404, "no human slot named '" + person + "'");
    }
    auto token = session->claim(person);
    if (!token) return reply_error(res, 409, "slot already claimed");
    reply_json(res, 200, {{"person", person}, {"token", *token}});
  }

  void input(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return reply_error(res, 404, "unknown session");
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("person") ||
        !body["person"].is_string() || !body.contains("request_id") ||
        !body["request_id"].is_string() || !body.contains("action") ||
        !body["action"].is_string()) {
      return reply_error(res, 400, "body needs string fields person, request_id, action");
    }
    std::optional<std::string> content;
    if (body.contains("content")) {
      if (!body["content"].is_string()) return reply_error(res, 400, "'content' must be a string");
      content = body["content"].get<std::string>();
    }
    std::string token;
    const std::string auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
    const SubmitOutcome outcome =
        session->submit(body["person"], token, body["request_id"], body["action"], content);
    if (!outcome.accepted) return reply_json(res, outcome.status, {{"error", outcome.reason}});
    reply_json(res, 200, {{"accepted", true}});
  }

  void transcript(const httplib::Request& req, httplib::Response& res) {
    auto session = find(req.path_params.at("id"));
    if (!session) return reply_error(res, 404, "unknown session");
    if (session->state() != LiveState::ended) return reply_error(res, 409, "session not ended");
    std::ifstream in(session->transcript(), std::ios::binary);
    if (!in) return reply_error(res, 500, "transcript unavailable");
    std::ostringstream text;
    text << in.rdbuf();
    res.set_content(text.str(), "application/x-ndjson");
  }

  void routes() {
    server.Post("/sessions", [this](const auto& req, auto& res) { create(req, res); });
    server.Post("/sessions/:id/start", [this](const auto& req, auto& res) { start_session(req, res); });
    server.Get("/sessions/:id/events", [this](const auto& req, auto& res) { stream(req, res); });
    server.Post("/sessions/:id/claims/:person", [this](const auto& req, auto& res) { claim(req, res); });
    server.Post("/sessions/:id/input", [this](const auto& req, auto& res) { input(req, res); });
    server.Get("/sessions/:id/transcript", [this](const auto& req, auto& res) { transcript(req, res); });
  }
};

Gateway::Gateway(GatewayOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->routes();
}

Gateway::~Gateway() {
  stop();
  std::lock_guard lock(impl_->mutex);
  for (auto& [id, session] : impl_->sessions) session->close();
  impl_->sessions.clear();
}

int Gateway::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) return -1;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool Gateway::serve(const std::string& host, int port) { return impl_->server.listen(host, port); }

void Gateway::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::shared_ptr<LiveSession> Gateway::find(const std::string& id) const { return impl_->find(id); }

bool Gateway::wait_for_end(const std::string& id, Millis timeout) const {
  auto session = impl_->find(id);
  return session && session->wait_for_end(timeout);
}

}  // namespace parlor
