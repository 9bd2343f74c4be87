#include "speclearn/http_service.hpp"

#include <httplib.h>

namespace speclearn {

struct HttpService::Impl
{
  SessionManager& sessions;
  httplib::Server server;

  explicit Impl(SessionManager& s) : sessions(s) {}
  void routes();
};

namespace {

void reply(httplib::Response& res, int status, const json& body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

/// Runs `fn`, translating exceptions into JSON error responses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn)
{
  try {
    fn();
  } catch (const SessionError& e) {
    int status = 400;
    if (e.kind() == SessionError::Kind::NotFound)
      status = 404;
    else if (e.kind() == SessionError::Kind::Conflict)
      status = 409;
    reply(res, status, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("bad JSON: ") + e.what()}});
  } catch (const ParseError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::invalid_argument& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::out_of_range& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

json body_of(const httplib::Request& req)
{
  if (req.body.empty())
    return json::object();
  return json::parse(req.body);
}

json session_json(const Session& s)
{
  json j = summary_to_json(s.summary());
  j["id"] = s.id();
  j["props"] = s.props().names();
  j["domain"] = json::parse(s.domain().to_json());
  j["queries"] = s.query_count();
  if (auto q = s.pending_query())
    j["pending"] = trace_to_json(*q);
  return j;
}

std::string sse_frame(const EventBus::Event& e)
{
  json data = e.data;
  data["session"] = e.session;
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + data.dump() + "\n\n";
}

}  // namespace

void HttpService::Impl::routes()
{
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
    res.status = 204;
  });

  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = body_of(req);
      DomainSpec domain;
      SessionConfig config;
      try {
        domain = DomainSpec::from_json(body.contains("domain") ? body["domain"].dump() : "\"dinner5\"");
        config = SessionConfig::from_json(body.value("config", json::object()));
      } catch (const std::exception& e) {
        throw SessionError(SessionError::Kind::Invalid, e.what());
      }
      const auto id = sessions.create(domain, config);
      reply(res, 201, session_json(*sessions.get(id)));
    });
  });

  server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, {{"sessions", sessions.ids()}}); });
  });

  server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, session_json(*sessions.get(req.matches[1]))); });
  });

  server.Post(R"(/sessions/([^/]+)/demonstrations)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions.get(req.matches[1]);
      json body = body_of(req);
      const json& steps = body.is_array() ? body : body.at("steps");
      reply(res, 200, summary_to_json(s->submit_demonstration(trace_from_json(steps, s->props()))));
    });
  });

  server.Post(R"(/sessions/([^/]+)/queries)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions.get(req.matches[1]);
      Trace q = s->request_query();
      reply(res, 200, {{"query_id", s->query_count()}, {"steps", trace_to_json(q)}, {"props", s->props().names()}});
    });
  });

  server.Post(R"(/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions.get(req.matches[1]);
      json body = body_of(req);
      const json& l = body.at("label");
      bool label;
      if (l.is_boolean())
        label = l.get<bool>();
      else if (l.is_number_integer() && (l == 0 || l == 1))
        label = l.get<int>() == 1;
      else
        throw SessionError(SessionError::Kind::Invalid, "label must be 0 or 1");
      std::optional<std::size_t> qid;
      if (body.contains("query_id"))
        qid = body["query_id"].get<std::size_t>();
      reply(res, 200, summary_to_json(s->submit_label(label, qid)));
    });
  });

  server.Get(R"(/sessions/([^/]+)/belief)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, summary_to_json(sessions.get(req.matches[1])->summary())); });
  });

  server.Post(R"(/sessions/([^/]+)/rollouts)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions.get(req.matches[1]);
      Trace tr = s->request_policy_rollout();
      reply(res, 200, {{"steps", trace_to_json(tr)}, {"props", s->props().names()}});
    });
  });

  server.Get(R"(/sessions/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::string text;
      for (const auto& line : sessions.get(req.matches[1])->log())
        text += line + '\n';
      res.set_content(text, "application/x-ndjson");
    });
  });

  auto stream = [this](const std::string& session, const httplib::Request& req, httplib::Response& res) {
    std::uint64_t since = 0;
    if (req.has_header("Last-Event-ID"))
      since = std::stoull(req.get_header_value("Last-Event-ID"));
    if (req.has_param("since"))
      since = std::stoull(req.get_param_value("since"));
    // A bounded stream (?once=1) returns what is buffered and closes; used by polling clients.
    const bool once = req.has_param("once");
    auto cursor = std::make_shared<std::uint64_t>(since);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, session, cursor, once](std::size_t,
                                                                                       httplib::DataSink& sink) {
      auto& bus = sessions.events();
      for (const auto& e : bus.since(*cursor, session)) {
        const auto frame = sse_frame(e);
        if (!sink.write(frame.data(), frame.size()))
          return false;
      }
      *cursor = bus.last();
      if (once || bus.closed()) {
        sink.done();
        return true;
      }
      if (!bus.wait(*cursor, std::chrono::milliseconds(1000))) {
        if (bus.closed()) {
          sink.done();
          return true;
        }
        static const char keepalive[] = ": keepalive\n\n";
        return sink.write(keepalive, sizeof keepalive - 1);
      }
      return true;
    });
  };

  server.Get(R"(/sessions/([^/]+)/events)", [this, stream](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      (void)sessions.get(id);
      stream(id, req, res);
    });
  });
  server.Get("/events", [stream](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { stream("", req, res); });
  });
}

HttpService::HttpService(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) { impl_->routes(); }

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port)
{
  if (port == 0)
    return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::serve() { return impl_->server.listen_after_bind(); }

void HttpService::stop()
{
  impl_->sessions.events().close();
  impl_->server.stop();
}

bool HttpService::running() const { return impl_->server.is_running(); }

}  // namespace speclearn
