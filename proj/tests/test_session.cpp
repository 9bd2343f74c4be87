#include "speclearn/http_service.hpp"
#include "speclearn/io.hpp"
#include "speclearn/session.hpp"
#include "speclearn/teacher.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace speclearn;

namespace {

const DomainSpec table = dinner3();
const PropositionSet props = table.props();

TemplateFormula phi1() { return parse_template("(and (G (not Fork)) (F Bowl) (U (not Bowl) Plate))", props); }
TemplateFormula phi2() { return parse_template("(and (G (not Fork)) (F Bowl))", props); }

SessionConfig prior_config()
{
  SessionConfig c;
  c.seed = 3;
  c.prior = Belief(props, {phi1(), phi2()}, {0.3, 0.7});
  return c;
}

Trace placed(std::initializer_list<std::string_view> order)
{
  std::vector<TruthAssignment> steps;
  TruthAssignment cur(props.size(), 0);
  for (auto n : order) {
    cur = cur.with(props.index(n), true);
    steps.push_back(cur);
  }
  return Trace(props, steps);
}

SessionError::Kind kind_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const SessionError& e) {
    return e.kind();
  }
  FAIL("expected a SessionError");
  return SessionError::Kind::Invalid;
}

std::filesystem::path fresh_dir(const std::string& name)
{
  auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("phase rules")
{
  Session s("s", table, prior_config());
  CHECK(s.phase() == Phase::CollectingDemos);
  CHECK(s.belief() == *prior_config().prior);
  CHECK(kind_of([&] { s.request_query(); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.request_policy_rollout(); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.submit_label(true); }) == SessionError::Kind::Conflict);

  s.submit_demonstration(placed({"Plate", "Bowl"}));
  auto q = s.request_query();
  CHECK(s.phase() == Phase::Querying);
  CHECK(s.pending_query() == q);
  CHECK(kind_of([&] { s.request_query(); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.submit_demonstration(placed({"Bowl"})); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.request_policy_rollout(); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.submit_label(true, 7); }) == SessionError::Kind::Conflict);
  s.submit_label(true, 0);
  CHECK_FALSE(s.pending_query());
  CHECK(s.dataset().size() == 2);

  // Demonstrations are still welcome between queries.
  s.submit_demonstration(placed({"Plate", "Bowl"}));
  s.request_policy_rollout();
  CHECK(s.phase() == Phase::Reviewing);
  CHECK(kind_of([&] { s.submit_demonstration(placed({"Bowl"})); }) == SessionError::Kind::Conflict);
  CHECK(kind_of([&] { s.request_query(); }) == SessionError::Kind::Conflict);
  CHECK_NOTHROW(s.request_policy_rollout());
  CHECK(s.belief_history().size() == 4);
}

TEST_CASE("demonstrations must be executable")
{
  Session s("s", table, prior_config());
  CHECK(kind_of([&] { s.submit_demonstration(Trace(props, {TruthAssignment::of(props, {"Bowl", "Plate"})})); }) ==
        SessionError::Kind::Invalid);
  CHECK(kind_of([&] { s.submit_demonstration(Trace(PropositionSet{"x"}, {TruthAssignment(1, 1)})); }) ==
        SessionError::Kind::Invalid);
  CHECK(s.dataset().empty());
  SessionConfig broken;
  broken.inference.epsilon = 2.0;
  CHECK_THROWS_AS(Session("bad", table, broken), SessionError);
}

TEST_CASE("query labels move the belief the right way")
{
  Session yes("a", table, prior_config()), no("b", table, prior_config());
  for (auto* s : {&yes, &no})
    s->submit_demonstration(placed({"Plate", "Bowl"}));
  const double before = yes.belief().probability(phi2());
  CHECK(before == doctest::Approx(2.8 / 5.2));
  auto q = yes.request_query();
  CHECK(q == placed({"Bowl"}));
  CHECK(no.request_query() == q);
  yes.submit_label(true);
  no.submit_label(false);
  CHECK(yes.belief().probability(phi2()) > 0.99);
  // 0.3 * 8 * 8/7 against 0.7 * 4 * 0.01
  CHECK(no.belief().probability(phi1()) == doctest::Approx(2.4 * 8 / 7 / (2.4 * 8 / 7 + 0.028)));
  CHECK(yes.summary().entropy < 0.1);
}

TEST_CASE("MH-backed sessions start empty and learn from demonstrations")
{
  SessionConfig c;
  c.seed = 5;
  Session s("m", table, c);
  CHECK(s.belief().size() == 0);
  CHECK(s.summary().entropy == 0.0);
  auto sum = s.submit_demonstration(placed({"Plate", "Bowl"}));
  CHECK(sum.belief.size() > 0);
  CHECK(sum.dataset_size == 1);
  CHECK(s.belief() == s.infer(s.dataset()));
}

TEST_CASE("rollouts are deterministic for a session seed")
{
  Session a("a", table, prior_config()), b("b", table, prior_config());
  for (auto* s : {&a, &b})
    s->submit_demonstration(placed({"Plate", "Bowl"}));
  auto ra = a.request_policy_rollout();
  CHECK(ra == b.request_policy_rollout());
  CHECK(ra == placed({"Plate", "Bowl"}));
}

TEST_CASE("logs replay to the same session")
{
  Session s("r", table, prior_config());
  s.submit_demonstration(placed({"Plate", "Bowl"}));
  s.request_query();
  s.submit_label(false);
  s.request_policy_rollout();
  auto log = s.log();
  CHECK(json::parse(log.front())["type"] == "created");
  CHECK(json::parse(log.back())["type"] == "rollout");

  auto back = Session::replay(log);
  CHECK(back->belief() == s.belief());
  CHECK(back->dataset() == s.dataset());
  CHECK(back->phase() == s.phase());
  CHECK(back->pending_query() == s.pending_query());
  CHECK(back->log() == log);

  // A tampered belief snapshot is detected.
  auto bad = log;
  auto ev = json::parse(bad[1]);
  ev["belief"]["support"][0]["prob"] = 0.123;
  bad[1] = ev.dump();
  CHECK_THROWS_AS(Session::replay(bad), SessionError);
  CHECK_THROWS_AS(Session::replay({"not json"}), SessionError);
  CHECK_THROWS_AS(Session::replay({}), SessionError);
}

TEST_CASE("the manager reloads sessions from disk")
{
  auto dir = fresh_dir("speclearn_sessions");
  std::string id;
  Belief belief;
  {
    SessionManager m(dir.string());
    id = m.create(table, prior_config());
    auto s = m.get(id);
    s->submit_demonstration(placed({"Bowl"}));
    s->request_query();
    belief = s->belief();
    CHECK(std::filesystem::exists(dir / (id + ".jsonl")));
  }
  SessionManager again(dir.string());
  REQUIRE(again.ids() == std::vector<std::string>{id});
  CHECK(again.get(id)->belief() == belief);
  CHECK(again.get(id)->pending_query().has_value());
  CHECK(again.create(table, prior_config()) != id);
  CHECK(kind_of([&] { again.get("nope"); }) == SessionError::Kind::NotFound);
  std::filesystem::remove_all(dir);
}

TEST_CASE("event bus")
{
  EventBus bus;
  CHECK(bus.last() == 0);
  bus.publish("a", "x", {{"k", 1}});
  bus.publish("b", "y", {});
  bus.publish("a", "z", {});
  CHECK(bus.since(0).size() == 3);
  CHECK(bus.since(1, "a").size() == 1);
  CHECK(bus.since(1, "a").front().seq == 3);
  CHECK(bus.wait(2, std::chrono::milliseconds(1)));
  CHECK_FALSE(bus.wait(3, std::chrono::milliseconds(1)));
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    bus.publish("a", "late", {});
  });
  CHECK(bus.wait(3, std::chrono::milliseconds(2000)));
  t.join();
  bus.close();
  CHECK(bus.closed());
  CHECK_FALSE(bus.wait(4, std::chrono::milliseconds(2000)));
}

TEST_CASE("scripted sessions with a simulated teacher")
{
  SessionManager m;
  SessionConfig c = prior_config();
  auto r = run_scripted_session(m, table, phi2(), c, 1, 1, 1, 2);
  CHECK(r.labels == std::vector<bool>{true});
  CHECK(r.final_similarity > 0.99);
  CHECK(r.rollouts.size() == 2);
  for (bool ok : r.rollouts_accepted)
    CHECK(ok);
  CHECK(m.get(r.session_id)->log() == r.log);
}

TEST_CASE("HTTP API")
{
  SessionManager manager;
  HttpService service(manager);
  const int port = service.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread server([&] { service.serve(); });
  while (!service.running())
    std::this_thread::sleep_for(std::chrono::milliseconds(5));

  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);
  auto post = [&](const std::string& path, const json& body) {
    return cli.Post(path, body.dump(), "application/json");
  };

  auto created = post("/sessions", {{"domain", "dinner3"}, {"config", prior_config().to_json()}});
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  auto sj = json::parse(created->body);
  const std::string id = sj["id"];
  const std::string base = "/sessions/" + id;
  CHECK(sj["phase"] == "collecting-demos");
  CHECK(sj["props"] == json({"Fork", "Bowl", "Plate"}));

  CHECK(post("/sessions", {{"domain", "kitchen"}})->status == 400);
  CHECK(cli.Post("/sessions", "{oops", "application/json")->status == 400);
  CHECK(cli.Get("/sessions/none")->status == 404);
  CHECK(post("/sessions/none/queries", json::object())->status == 404);
  CHECK(post(base + "/queries", json::object())->status == 409);
  CHECK(post(base + "/demonstrations", {{"steps", {{0, 1, 1}}}})->status == 400);
  CHECK(post(base + "/demonstrations", {{"steps", {{0, 1}}}})->status == 400);

  auto demo = post(base + "/demonstrations", {{"steps", {{0, 0, 1}, {0, 1, 1}}}});
  REQUIRE(demo);
  CHECK(demo->status == 200);
  CHECK(json::parse(demo->body)["dataset_size"] == 1);

  auto query = post(base + "/queries", json::object());
  REQUIRE(query->status == 200);
  auto qj = json::parse(query->body);
  CHECK(qj["steps"] == json::parse("[[0,1,0]]"));
  CHECK(qj["query_id"] == 0);
  CHECK(json::parse(cli.Get(base)->body)["pending"] == qj["steps"]);
  CHECK(post(base + "/labels", {{"label", 2}})->status == 400);
  CHECK(post(base + "/labels", {{"label", 1}, {"query_id", 5}})->status == 409);
  auto label = post(base + "/labels", {{"label", 1}, {"query_id", 0}});
  CHECK(label->status == 200);
  CHECK(json::parse(label->body)["pending_query"] == false);

  auto belief = json::parse(cli.Get(base + "/belief")->body);
  CHECK(belief_from_json(belief["belief"]).probability(phi2()) > 0.99);

  auto roll = post(base + "/rollouts", json::object());
  CHECK(roll->status == 200);
  CHECK(json::parse(roll->body)["steps"] == json::parse("[[0,1,0]]"));
  CHECK(post(base + "/demonstrations", {{"steps", {{0, 1, 0}}}})->status == 409);

  auto listing = json::parse(cli.Get("/sessions")->body);
  CHECK(listing["sessions"] == json({id}));

  auto log = cli.Get(base + "/log");
  CHECK(log->get_header_value("Content-Type") == "application/x-ndjson");
  CHECK(std::count(log->body.begin(), log->body.end(), '\n') == 5);
  std::vector<std::string> lines;
  std::istringstream in(log->body);
  for (std::string line; std::getline(in, line);)
    lines.push_back(line);
  CHECK(Session::replay(lines)->belief() == manager.get(id)->belief());

  // Buffered event stream, then resumption after the first event.
  auto events = cli.Get(base + "/events?once=1");
  CHECK(events->get_header_value("Content-Type") == "text/event-stream");
  CHECK(events->body.find("event: created") != std::string::npos);
  CHECK(events->body.find("event: label") != std::string::npos);
  auto tail = cli.Get(base + "/events?once=1", httplib::Headers{{"Last-Event-ID", "1"}});
  CHECK(tail->body.find("event: created") == std::string::npos);
  CHECK(tail->body.find("id: 1\n") == std::string::npos);
  CHECK(cli.Get("/events?once=1&since=abc")->status == 400);

  // Live stream: a second session's creation reaches a waiting subscriber.
  const auto last = manager.events().last();
  std::atomic<bool> seen{false};
  std::thread listener([&] {
    httplib::Client sub("127.0.0.1", port);
    sub.set_read_timeout(10, 0);
    std::string buffer;
    sub.Get("/events?since=" + std::to_string(last), [&](const char* data, std::size_t n) {
      buffer.append(data, n);
      if (buffer.find("event: created") != std::string::npos) {
        seen = true;
        return false;
      }
      return true;
    });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(post("/sessions", {{"domain", "dinner3"}})->status == 201);
  listener.join();
  CHECK(seen);

  auto options = cli.Options("/sessions");
  CHECK(options->status == 204);

  service.stop();
  server.join();
}
