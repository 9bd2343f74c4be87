#pragma once

#include "speclearn/belief.hpp"
#include "speclearn/domains.hpp"
#include "speclearn/experiments.hpp"
#include "speclearn/inference.hpp"
#include "speclearn/io.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace speclearn {

enum class Phase { CollectingDemos, Querying, Reviewing };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

/// Rejected session call. `kind` maps onto HTTP status codes.
class SessionError : public std::runtime_error
{
public:
  enum class Kind { Invalid, NotFound, Conflict };

  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

struct SessionConfig
{
  std::uint64_t seed = 0;
  InferenceConfig inference;
  QLearningConfig planner;
  PlannerKind planner_kind = PlannerKind::QLearning;
  CompileOptions compile;
  /// When set, beliefs are exact reweightings of this prior instead of MH over the
  /// domain's clause universe.
  std::optional<Belief> prior;

  json to_json() const;
  static SessionConfig from_json(const json& j);
};

/// Append-only, in-memory event stream shared by all sessions. Subscribers poll by
/// sequence number and may block until something newer arrives.
class EventBus
{
public:
  struct Event
  {
    std::uint64_t seq = 0;
    std::string session;
    std::string type;
    json data;
  };

  std::uint64_t publish(const std::string& session, const std::string& type, json data);
  /// Events after `after` (exclusive), optionally only those of `session`.
  std::vector<Event> since(std::uint64_t after, const std::string& session = "") const;
  /// Waits until an event newer than `after` exists, the timeout expires or close() is called.
  /// Returns false on timeout or close.
  bool wait(std::uint64_t after, std::chrono::milliseconds timeout) const;
  std::uint64_t last() const;
  void close();
  bool closed() const;

private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<Event> events_;
  bool closed_ = false;
};

/// One interactive training session. Mutations are serialized; reads take a shared lock.
///
/// Phases: demonstrations are accepted while collecting or querying (never with a query
/// pending); request_query moves to querying; request_policy_rollout moves to reviewing,
/// after which only rollouts and reads are allowed.
class Session
{
public:
  struct Summary
  {
    Phase phase = Phase::CollectingDemos;
    std::size_t dataset_size = 0;
    bool pending = false;
    Belief belief;
    double entropy = 0.0;
  };

  /// Throws SessionError(Invalid) for bad specs or configs. `log_path` may be empty.
  Session(std::string id, DomainSpec domain, SessionConfig config, std::string log_path = {},
          EventBus* bus = nullptr);
  ~Session();

  /// Rebuilds a session by re-applying every logged operation and checking each recorded
  /// belief snapshot. Throws SessionError(Invalid) on a malformed or diverging log.
  static std::unique_ptr<Session> replay(const std::vector<std::string>& log_lines, std::string log_path = {},
                                         EventBus* bus = nullptr);

  const std::string& id() const noexcept { return id_; }
  const DomainSpec& domain() const noexcept { return domain_; }
  const PropositionSet& props() const noexcept { return props_; }
  const SessionConfig& config() const noexcept { return config_; }
  const EnvironmentMDP& env() const noexcept { return env_; }

  Summary submit_demonstration(const Trace& tr);
  /// Returns the pending query. Throws Conflict when one is already pending or no
  /// demonstration exists yet.
  Trace request_query();
  /// `query_id`, when given, must name the pending query.
  Summary submit_label(bool label, std::optional<std::size_t> query_id = std::nullopt);
  Trace request_policy_rollout();

  Summary summary() const;
  Phase phase() const;
  Dataset dataset() const;
  Belief belief() const;
  std::optional<Trace> pending_query() const;
  std::size_t query_count() const;
  /// The event log as JSON lines.
  std::vector<std::string> log() const;
  /// Belief after each mutation, starting with the belief at creation.
  std::vector<Belief> belief_history() const;

  /// Offline re-inference on `d` with this session's settings.
  Belief infer(const Dataset& d) const;

private:
  struct Restoring
  {
  };
  Session(Restoring, std::string id, DomainSpec domain, SessionConfig config, std::string log_path, EventBus* bus);

  Summary summary_locked() const;
  void append_log(json event);
  void broadcast_trace(const std::string& kind, std::size_t index, const Trace& tr);
  void refresh_belief();

  std::string id_;
  DomainSpec domain_;
  PropositionSet props_;
  SessionConfig config_;
  EnvironmentMDP env_;
  ClauseUniverse universe_;
  std::string log_path_;
  EventBus* bus_;

  mutable std::shared_mutex mu_;
  Phase phase_ = Phase::CollectingDemos;
  Dataset dataset_;
  Belief belief_;
  std::vector<Belief> history_;
  std::optional<Trace> pending_;
  std::size_t queries_ = 0;
  std::size_t rollouts_ = 0;
  std::vector<std::string> log_;
  bool replaying_ = false;
};

json summary_to_json(const Session::Summary& s);

/// Owns sessions and their event logs. Logs live in `<dir>/<id>.jsonl` when a
/// directory is given; existing logs are replayed on construction.
class SessionManager
{
public:
  explicit SessionManager(std::string log_dir = {});

  /// Returns the new session's id.
  std::string create(const DomainSpec& domain, const SessionConfig& config);
  std::shared_ptr<Session> get(const std::string& id) const;
  std::vector<std::string> ids() const;

  EventBus& events() noexcept { return bus_; }

private:
  std::string log_dir_;
  EventBus bus_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace speclearn

namespace speclearn {

struct ScriptedSessionResult
{
  std::string session_id;
  std::vector<double> similarity;  // after each demonstration batch and label
  std::vector<bool> labels;
  std::vector<Trace> rollouts;
  std::vector<bool> rollouts_accepted;
  double final_similarity = 0.0;
  std::vector<std::string> log;
};

/// Drives a session with a simulated teacher: demonstrations, labeled queries, then
/// policy rollouts judged by the teacher.
ScriptedSessionResult run_scripted_session(SessionManager& sessions, const DomainSpec& domain,
                                           const TemplateFormula& ground_truth, const SessionConfig& config,
                                           std::uint64_t teacher_seed, std::size_t demos = 2,
                                           std::size_t queries = 3, std::size_t rollouts = 3);

}  // namespace speclearn
