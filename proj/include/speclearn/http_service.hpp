#pragma once

#include "speclearn/session.hpp"

#include <memory>
#include <string>

namespace speclearn {

/// HTTP+JSON front end over a SessionManager.
///
///   POST /sessions                      {"domain": "dinner5" | {...}, "config": {...}}
///   GET  /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/demonstrations  {"steps": [[0,1,...], ...]}
///   POST /sessions/{id}/queries
///   POST /sessions/{id}/labels          {"label": 0|1, "query_id": n}
///   GET  /sessions/{id}/belief
///   POST /sessions/{id}/rollouts
///   GET  /sessions/{id}/log             JSON lines
///   GET  /sessions/{id}/events          text/event-stream, resumable via Last-Event-ID or ?since=
///   GET  /events                        all sessions
class HttpService
{
public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  bool serve();
  void stop();
  bool running() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace speclearn
