#pragma once

#include "speclearn/ltl.hpp"
#include "speclearn/reward_machine.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace speclearn {

using Rng = std::mt19937_64;

/// Tabular environment without rewards: transition distributions, a labeling function
/// into proposition assignments, a completion predicate and a step horizon.
class EnvironmentMDP
{
public:
  struct Outcome
  {
    std::size_t next = 0;
    double prob = 1.0;
  };

  EnvironmentMDP() = default;
  EnvironmentMDP(PropositionSet props, std::size_t n_states, std::vector<std::string> action_names,
                 std::size_t initial, std::size_t horizon);

  void set_transition(std::size_t x, std::size_t a, std::vector<Outcome> outcomes);
  void set_label(std::size_t x, TruthAssignment label);
  void set_complete(std::size_t x, bool complete);
  /// Checks that every distribution sums to one and every label has the right arity.
  void validate() const;

  const PropositionSet& props() const noexcept { return props_; }
  std::size_t state_count() const noexcept { return labels_.size(); }
  std::size_t action_count() const noexcept { return actions_.size(); }
  const std::string& action_name(std::size_t a) const { return actions_.at(a); }
  std::size_t initial() const noexcept { return initial_; }
  std::size_t horizon() const noexcept { return horizon_; }
  const TruthAssignment& label(std::size_t x) const { return labels_.at(x); }
  bool complete(std::size_t x) const { return complete_.at(x); }
  const std::vector<Outcome>& outcomes(std::size_t x, std::size_t a) const;
  bool deterministic() const;

  std::size_t sample(std::size_t x, std::size_t a, Rng& rng) const;

private:
  PropositionSet props_;
  std::vector<std::string> actions_;
  std::size_t initial_ = 0;
  std::size_t horizon_ = 1;
  std::vector<TruthAssignment> labels_;
  std::vector<bool> complete_;
  std::vector<std::vector<Outcome>> transitions_;
};

enum class RewardMode { MinRegret, Shaped };

/// Environment state, machine state and elapsed steps.
struct ProductState
{
  std::uint32_t env = 0;
  StateId machine = 0;
  std::uint32_t t = 0;

  std::uint64_t key() const noexcept
  {
    return (std::uint64_t{env} << 44) | (std::uint64_t{t} << 32) | std::uint64_t{machine};
  }
  friend bool operator==(const ProductState&, const ProductState&) = default;
};

struct ProductStep
{
  ProductState next;
  double reward = 0.0;
  bool done = false;
};

/// Composition of an environment with a reward machine. Holds references: both must
/// outlive the product.
class ProductMDP
{
public:
  ProductMDP(const EnvironmentMDP& env, const RewardMachine& machine);
  ProductMDP(const EnvironmentMDP& env, const RewardMachine& machine, QueryTarget target);

  const EnvironmentMDP& env() const noexcept { return *env_; }
  const RewardMachine& machine() const noexcept { return *machine_; }
  RewardMode mode() const noexcept { return mode_; }
  const std::optional<QueryTarget>& target() const noexcept { return target_; }
  std::size_t action_count() const noexcept { return env_->action_count(); }

  ProductState initial() const noexcept;
  /// Transition given the environment's successor; the machine reads the successor's label.
  ProductStep step_to(const ProductState& s, std::size_t env_next) const;
  /// Reward for stopping in machine state `m` under the product's reward mode.
  double stop_reward(StateId m) const;

  /// Machine states that occur in some product state reachable within the horizon.
  std::vector<bool> reachable_machine_states() const;

private:
  const EnvironmentMDP* env_;
  const RewardMachine* machine_;
  RewardMode mode_;
  std::optional<QueryTarget> target_;
};

/// Samples the environment and advances the product. Throws on invalid actions.
ProductStep product_step(const ProductMDP& p, const ProductState& s, std::size_t action, Rng& rng);

struct QLearningConfig
{
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 0.15;
  double epsilon_end = 0.01;
  std::size_t episodes = 20000;
  /// Value of unseen state-action pairs. Rewards never exceed 1, so the default is
  /// optimistic and drives systematic exploration of untried actions.
  double initial_q = 1.0;

  void validate() const;
};

class QTable
{
public:
  QTable() = default;
  explicit QTable(std::size_t actions) : actions_(actions) {}

  std::size_t action_count() const noexcept { return actions_; }
  std::size_t size() const noexcept { return states_.size(); }
  const std::vector<ProductState>& states() const noexcept { return states_; }

  std::optional<std::size_t> find(const ProductState& s) const;
  std::size_t ensure(const ProductState& s, double initial = 0.0);

  double value(std::size_t index, std::size_t a) const { return q_[index * actions_ + a]; }
  double& value(std::size_t index, std::size_t a) { return q_[index * actions_ + a]; }
  double max_value(std::size_t index) const;
  /// Highest-valued action, lowest index on ties.
  std::size_t greedy(std::size_t index) const;
  /// Greedy action for `s`; action 0 for unseen states.
  std::size_t greedy(const ProductState& s) const;

  /// {"actions": n, "entries": [{"state": i, "env": x, "machine": m, "t": t, "q": [...]}, ...]}
  std::string to_json() const;
  static QTable from_json(const std::string& text);

private:
  std::size_t actions_ = 0;
  std::vector<ProductState> states_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::vector<double> q_;
};

QTable q_learn(const ProductMDP& p, const QLearningConfig& cfg, std::uint64_t seed);

struct Episode
{
  std::vector<ProductState> states;  // includes the initial state
  std::vector<std::size_t> actions;
  std::vector<TruthAssignment> labels;  // label of each successor state
  double reward = 0.0;

  Trace trace(const PropositionSet& props) const { return Trace(props, labels); }
  StateId final_machine_state() const { return states.back().machine; }
};

/// Greedy episode under `q`. The seed only drives stochastic environment outcomes.
Episode rollout_episode(const ProductMDP& p, const QTable& q, std::uint64_t seed);
Trace rollout(const ProductMDP& p, const QTable& q, std::uint64_t seed);

/// Exact optimal values of the finite-horizon product, by backward induction over the
/// reachable states.
class ValueFunction
{
public:
  explicit ValueFunction(const ProductMDP& p, double gamma);

  double value(const ProductState& s) const;
  double q_value(const ProductState& s, std::size_t a) const;
  /// Actions whose value is within `tol` of the best.
  std::vector<std::size_t> optimal_actions(const ProductState& s, double tol = 1e-9) const;

private:
  double solve(const ProductState& s) const;

  const ProductMDP* p_;
  double gamma_;
  mutable std::unordered_map<std::uint64_t, double> memo_;
};

ValueFunction value_iteration(const ProductMDP& p, double gamma);

/// Expected discounted return of the greedy policy of `q`, computed exactly.
double policy_value(const ProductMDP& p, const QTable& q, double gamma);

/// Episode following optimal actions; ties are broken uniformly at random with `rng`
/// when `random_ties`, else by lowest index.
Episode optimal_episode(const ProductMDP& p, const ValueFunction& v, Rng& rng, bool random_ties);

}  // namespace speclearn

namespace speclearn {

/// Whether some sequence of actions from the initial state produces exactly the labels
/// of `tr` within the horizon.
bool is_realizable(const EnvironmentMDP& env, const Trace& tr);

}  // namespace speclearn
