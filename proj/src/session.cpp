#include "speclearn/session.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace speclearn {

std::string to_string(Phase p)
{
  switch (p) {
  case Phase::CollectingDemos:
    return "collecting-demos";
  case Phase::Querying:
    return "querying";
  case Phase::Reviewing:
    return "reviewing";
  }
  return "?";
}

Phase phase_from_string(const std::string& s)
{
  if (s == "collecting-demos")
    return Phase::CollectingDemos;
  if (s == "querying")
    return Phase::Querying;
  if (s == "reviewing")
    return Phase::Reviewing;
  throw std::invalid_argument("unknown phase '" + s + "'");
}

// ---------------------------------------------------------------------------
// SessionConfig
// ---------------------------------------------------------------------------

json SessionConfig::to_json() const
{
  json j{{"seed", seed},
         {"inference", inference_config_to_json(inference)},
         {"planner", qlearning_config_to_json(planner)},
         {"planner_kind", planner_kind == PlannerKind::Exact ? "exact" : "qlearning"},
         {"max_states", compile.max_states}};
  if (prior)
    j["prior"] = belief_to_json(*prior);
  return j;
}

SessionConfig SessionConfig::from_json(const json& j)
{
  SessionConfig c;
  if (j.is_null())
    return c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("inference"))
    c.inference = inference_config_from_json(j["inference"]);
  if (j.contains("planner"))
    c.planner = qlearning_config_from_json(j["planner"]);
  const auto kind = j.value("planner_kind", std::string("qlearning"));
  if (kind == "exact")
    c.planner_kind = PlannerKind::Exact;
  else if (kind != "qlearning")
    throw std::invalid_argument("planner_kind must be 'qlearning' or 'exact'");
  c.compile.max_states = j.value("max_states", c.compile.max_states);
  if (j.contains("prior") && !j["prior"].is_null())
    c.prior = belief_from_json(j["prior"]);
  return c;
}

// ---------------------------------------------------------------------------
// EventBus
// ---------------------------------------------------------------------------

std::uint64_t EventBus::publish(const std::string& session, const std::string& type, json data)
{
  std::uint64_t seq;
  {
    std::lock_guard lock(mu_);
    seq = events_.size() + 1;
    events_.push_back({seq, session, type, std::move(data)});
  }
  cv_.notify_all();
  return seq;
}

std::vector<EventBus::Event> EventBus::since(std::uint64_t after, const std::string& session) const
{
  std::lock_guard lock(mu_);
  std::vector<Event> out;
  for (std::size_t i = after; i < events_.size(); ++i)
    if (session.empty() || events_[i].session == session)
      out.push_back(events_[i]);
  return out;
}

bool EventBus::wait(std::uint64_t after, std::chrono::milliseconds timeout) const
{
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > after; }) && !closed_;
}

std::uint64_t EventBus::last() const
{
  std::lock_guard lock(mu_);
  return events_.size();
}

void EventBus::close()
{
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventBus::closed() const
{
  std::lock_guard lock(mu_);
  return closed_;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

namespace {

SessionError invalid(const std::string& what) { return SessionError(SessionError::Kind::Invalid, what); }
SessionError conflict(const std::string& what) { return SessionError(SessionError::Kind::Conflict, what); }

json belief_or_null(const Belief& b) { return b.size() ? belief_to_json(b) : json(nullptr); }

}  // namespace

Session::Session(Restoring, std::string id, DomainSpec domain, SessionConfig config, std::string log_path,
                 EventBus* bus)
  : id_(std::move(id))
  , domain_(std::move(domain))
  , config_(std::move(config))
  , log_path_(std::move(log_path))
  , bus_(bus)
{
  try {
    props_ = domain_.props();
    env_ = build_env(domain_);
    universe_ = domain_.universe();
    config_.inference.validate();
    config_.planner.validate();
  } catch (const std::exception& e) {
    throw invalid(e.what());
  }
  if (config_.prior && !(config_.prior->props() == props_))
    throw invalid("prior belief uses propositions other than the domain's");
  dataset_ = Dataset(props_);
  if (config_.prior)
    belief_ = *config_.prior;
  history_.push_back(belief_);
}

Session::Session(std::string id, DomainSpec domain, SessionConfig config, std::string log_path, EventBus* bus)
  : Session(Restoring{}, std::move(id), std::move(domain), std::move(config), std::move(log_path), bus)
{
  append_log({{"type", "created"},
              {"id", id_},
              {"domain", json::parse(domain_.to_json())},
              {"config", config_.to_json()},
              {"belief", belief_or_null(belief_)}});
}

Session::~Session() = default;

void Session::append_log(json event)
{
  event["seq"] = log_.size();
  std::string line = event.dump();
  if (!replaying_ && !log_path_.empty()) {
    std::ofstream f(log_path_, std::ios::app);
    if (!f)
      throw std::runtime_error("cannot append to session log " + log_path_);
    f << line << '\n';
    f.flush();
  }
  log_.push_back(std::move(line));
  if (bus_ && !replaying_) {
    const std::string type = event["type"].get<std::string>();
    bus_->publish(id_, type, std::move(event));
  }
}

void Session::broadcast_trace(const std::string& kind, std::size_t index, const Trace& tr)
{
  if (!bus_ || replaying_)
    return;
  TruthAssignment before = env_.label(env_.initial());
  for (std::size_t t = 0; t < tr.size(); ++t) {
    json changed = json::array();
    for (std::size_t i = 0; i < props_.size(); ++i)
      if (tr[t][i] != before[i])
        changed.push_back(props_.name(i));
    json row = json::array();
    for (std::size_t i = 0; i < props_.size(); ++i)
      row.push_back(tr[t][i] ? 1 : 0);
    bus_->publish(id_, "step",
                  {{"kind", kind}, {"index", index}, {"t", t}, {"steps", tr.size()}, {"state", row}, {"changed", changed}});
    before = tr[t];
  }
  bus_->publish(id_, "execution-complete", {{"kind", kind}, {"index", index}, {"steps", trace_to_json(tr)}});
}

Belief Session::infer(const Dataset& d) const
{
  InferenceConfig ic = config_.inference;
  ic.rng_seed = config_.seed;
  if (config_.prior)
    return update_belief(*config_.prior, d, ic);
  return infer_posterior(universe_, d, ic);
}

void Session::refresh_belief()
{
  belief_ = infer(dataset_);
  history_.push_back(belief_);
}

Session::Summary Session::summary_locked() const
{
  Summary s;
  s.phase = phase_;
  s.dataset_size = dataset_.size();
  s.pending = pending_.has_value();
  s.belief = belief_;
  s.entropy = belief_.size() ? entropy(belief_) : 0.0;
  return s;
}

Session::Summary Session::submit_demonstration(const Trace& tr)
{
  std::unique_lock lock(mu_);
  if (phase_ == Phase::Reviewing)
    throw conflict("session is in review; demonstrations are closed");
  if (pending_)
    throw conflict("a query is awaiting its label");
  if (!(tr.props() == props_))
    throw invalid("demonstration uses propositions other than the session's");
  if (!is_realizable(env_, tr))
    throw invalid("demonstration cannot be produced in this domain");
  dataset_.add(tr, true);
  refresh_belief();
  append_log({{"type", "demonstration"}, {"steps", trace_to_json(tr)}, {"belief", belief_to_json(belief_)}});
  return summary_locked();
}

Trace Session::request_query()
{
  std::unique_lock lock(mu_);
  if (phase_ == Phase::Reviewing)
    throw conflict("session is in review; queries are closed");
  if (pending_)
    throw conflict("a query is already pending");
  if (dataset_.empty())
    throw conflict("no demonstrations yet");

  ProtocolConfig pc;
  pc.domain = domain_;
  pc.planner = config_.planner;
  pc.planner_kind = config_.planner_kind;
  pc.compile = config_.compile;
  const std::uint64_t seed = derive_seed(config_.seed, 200 + queries_);
  std::optional<Trace> q;
  try {
    q = plan_query(env_, belief_, pc, seed);
    if (!q)
      q = plan_min_regret(env_, belief_, pc, seed);
  } catch (const StateSpaceExceeded& e) {
    throw conflict(e.what());
  }
  pending_ = *q;
  phase_ = Phase::Querying;
  append_log({{"type", "query"}, {"query_id", queries_}, {"steps", trace_to_json(*q)}});
  broadcast_trace("query", queries_, *q);
  return *q;
}

Session::Summary Session::submit_label(bool label, std::optional<std::size_t> query_id)
{
  std::unique_lock lock(mu_);
  if (!pending_)
    throw conflict("no query is pending");
  if (query_id && *query_id != queries_)
    throw conflict("label refers to query " + std::to_string(*query_id) + " but query " + std::to_string(queries_) +
                   " is pending");
  dataset_.add(*pending_, label);
  pending_.reset();
  const std::size_t answered = queries_++;
  refresh_belief();
  append_log({{"type", "label"}, {"query_id", answered}, {"label", label ? 1 : 0}, {"belief", belief_to_json(belief_)}});
  return summary_locked();
}

Trace Session::request_policy_rollout()
{
  std::unique_lock lock(mu_);
  if (pending_)
    throw conflict("a query is awaiting its label");
  if (dataset_.empty())
    throw conflict("no demonstrations yet");
  ProtocolConfig pc;
  pc.domain = domain_;
  pc.planner = config_.planner;
  pc.planner_kind = config_.planner_kind;
  pc.compile = config_.compile;
  Trace tr;
  try {
    tr = plan_min_regret(env_, belief_, pc, derive_seed(config_.seed, 300 + dataset_.size()));
  } catch (const StateSpaceExceeded& e) {
    throw conflict(e.what());
  }
  phase_ = Phase::Reviewing;
  append_log({{"type", "rollout"}, {"index", rollouts_}, {"steps", trace_to_json(tr)}});
  broadcast_trace("rollout", rollouts_, tr);
  ++rollouts_;
  return tr;
}

Session::Summary Session::summary() const
{
  std::shared_lock lock(mu_);
  return summary_locked();
}

Phase Session::phase() const
{
  std::shared_lock lock(mu_);
  return phase_;
}

Dataset Session::dataset() const
{
  std::shared_lock lock(mu_);
  return dataset_;
}

Belief Session::belief() const
{
  std::shared_lock lock(mu_);
  return belief_;
}

std::optional<Trace> Session::pending_query() const
{
  std::shared_lock lock(mu_);
  return pending_;
}

std::size_t Session::query_count() const
{
  std::shared_lock lock(mu_);
  return queries_;
}

std::vector<std::string> Session::log() const
{
  std::shared_lock lock(mu_);
  return log_;
}

std::vector<Belief> Session::belief_history() const
{
  std::shared_lock lock(mu_);
  return history_;
}

std::unique_ptr<Session> Session::replay(const std::vector<std::string>& lines, std::string log_path, EventBus* bus)
{
  std::vector<json> events;
  try {
    for (const auto& line : lines)
      if (!line.empty())
        events.push_back(json::parse(line));
  } catch (const std::exception& e) {
    throw invalid(std::string("malformed session log: ") + e.what());
  }
  if (events.empty() || events.front().value("type", "") != "created")
    throw invalid("session log must start with a creation event");

  std::unique_ptr<Session> s;
  try {
    const auto& c = events.front();
    s.reset(new Session(Restoring{}, c.at("id").get<std::string>(), DomainSpec::from_json(c.at("domain").dump()),
                        SessionConfig::from_json(c.at("config")), std::move(log_path), bus));
  } catch (const SessionError&) {
    throw;
  } catch (const std::exception& e) {
    throw invalid(std::string("bad creation event: ") + e.what());
  }
  s->replaying_ = true;
  s->log_.push_back(lines.front());

  auto check_belief = [&](const json& e, std::size_t i) {
    if (e.contains("belief") && belief_or_null(s->belief_) != e["belief"])
      throw invalid("replayed belief diverges from the log at event " + std::to_string(i));
  };
  auto check_steps = [&](const json& e, const Trace& tr, std::size_t i) {
    if (trace_to_json(tr) != e.at("steps"))
      throw invalid("replayed execution diverges from the log at event " + std::to_string(i));
  };

  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& e = events[i];
    const auto type = e.value("type", "");
    try {
      if (type == "demonstration") {
        s->submit_demonstration(trace_from_json(e.at("steps"), s->props_));
      } else if (type == "query") {
        check_steps(e, s->request_query(), i);
      } else if (type == "label") {
        s->submit_label(e.at("label").get<int>() == 1, e.at("query_id").get<std::size_t>());
      } else if (type == "rollout") {
        check_steps(e, s->request_policy_rollout(), i);
      } else {
        throw invalid("unknown event type '" + type + "'");
      }
    } catch (const SessionError&) {
      throw;
    } catch (const std::exception& ex) {
      throw invalid("event " + std::to_string(i) + ": " + ex.what());
    }
    check_belief(e, i);
  }
  // Keep the original lines verbatim.
  s->log_.assign(lines.begin(), lines.end());
  while (!s->log_.empty() && s->log_.back().empty())
    s->log_.pop_back();
  s->replaying_ = false;
  return s;
}

json summary_to_json(const Session::Summary& s)
{
  json j{{"phase", to_string(s.phase)},
         {"dataset_size", s.dataset_size},
         {"pending_query", s.pending},
         {"entropy", s.entropy}};
  if (s.belief.size()) {
    j["belief"] = belief_to_json(s.belief);
  } else {
    j["belief"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// SessionManager
// ---------------------------------------------------------------------------

SessionManager::SessionManager(std::string log_dir) : log_dir_(std::move(log_dir))
{
  namespace fs = std::filesystem;
  if (log_dir_.empty())
    return;
  fs::create_directories(log_dir_);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(log_dir_))
    if (entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream f(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(f, line);)
      lines.push_back(line);
    std::shared_ptr<Session> s = Session::replay(lines, path.string(), &bus_);
    const std::string stem = path.stem().string();
    if (stem.rfind("session-", 0) == 0)
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(stem.substr(8)) + 1);
    sessions_.emplace(s->id(), std::move(s));
  }
}

std::string SessionManager::create(const DomainSpec& domain, const SessionConfig& config)
{
  std::lock_guard lock(mu_);
  const std::string id = "session-" + std::to_string(next_id_++);
  std::string path;
  if (!log_dir_.empty())
    path = (std::filesystem::path(log_dir_) / (id + ".jsonl")).string();
  auto s = std::make_shared<Session>(id, domain, config, path, &bus_);
  sessions_.emplace(id, std::move(s));
  return id;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const
{
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end())
    throw SessionError(SessionError::Kind::NotFound, "no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::ids() const
{
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_)
    out.push_back(id);
  return out;
}

}  // namespace speclearn

#include "speclearn/teacher.hpp"

namespace speclearn {

ScriptedSessionResult run_scripted_session(SessionManager& sessions, const DomainSpec& domain,
                                           const TemplateFormula& ground_truth, const SessionConfig& config,
                                           std::uint64_t teacher_seed, std::size_t demos, std::size_t queries,
                                           std::size_t rollouts)
{
  ScriptedSessionResult out;
  out.session_id = sessions.create(domain, config);
  auto s = sessions.get(out.session_id);
  SimTeacher teacher(ground_truth, s->env(), teacher_seed, config.planner.gamma);

  for (auto& d : teacher.demonstrate(demos))
    s->submit_demonstration(d.trace);
  out.similarity.push_back(belief_similarity(s->belief(), ground_truth));
  for (std::size_t q = 0; q < queries; ++q) {
    const bool label = teacher.assess(s->request_query());
    out.labels.push_back(label);
    s->submit_label(label, q);
    out.similarity.push_back(belief_similarity(s->belief(), ground_truth));
  }
  for (std::size_t r = 0; r < rollouts; ++r) {
    out.rollouts.push_back(s->request_policy_rollout());
    out.rollouts_accepted.push_back(teacher.assess(out.rollouts.back()));
  }
  out.final_similarity = out.similarity.back();
  out.log = s->log();
  return out;
}

}  // namespace speclearn
