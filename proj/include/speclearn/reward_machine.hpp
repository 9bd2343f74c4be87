#pragma once

#include "speclearn/belief.hpp"
#include "speclearn/ltl.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace speclearn {

using StateId = std::uint32_t;

/// Tuple of progressed formulas, one per belief support entry, in support order.
struct MachineState
{
  std::vector<Formula> progressions;

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

struct CompileOptions
{
  std::size_t max_states = 100000;
};

/// Thrown when compilation exceeds CompileOptions::max_states.
class StateSpaceExceeded : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Deterministic machine over progression tuples of a belief, with the minimum-regret
/// reward on terminal states. State 0 is the tuple of un-progressed formulas.
class RewardMachine
{
public:
  const Belief& belief() const noexcept { return belief_; }
  const PropositionSet& props() const noexcept { return belief_.props(); }
  std::size_t size() const noexcept { return states_.size(); }
  StateId initial() const noexcept { return 0; }
  const MachineState& state(StateId s) const;
  std::optional<StateId> find(const MachineState& s) const;

  /// Component-wise progression. Throws std::out_of_range for unknown states.
  StateId step(StateId s, const TruthAssignment& a) const;
  StateId step_bits(StateId s, std::uint64_t bits) const noexcept;

  /// Distinct successors over all assignments, ascending.
  std::vector<StateId> successors(StateId s) const;

  /// Every component is decided or reduced to a safety residue.
  bool is_terminal(StateId s) const { return terminal_.at(s); }
  /// Every component is true or false.
  bool is_absorbing(StateId s) const { return absorbing_.at(s); }
  /// Minimum-regret reward: probability-weighted +1/-1 on terminal states, 0 elsewhere.
  double reward(StateId s) const { return reward_.at(s); }
  /// Reward when an episode stops in `s`: open obligations are judged on the empty remainder.
  double end_reward(StateId s) const { return end_reward_.at(s); }

  std::string to_dot() const;
  std::string to_json() const;

  friend RewardMachine compile(const Belief& b, const CompileOptions& options);

private:
  struct Table
  {
    std::uint64_t mask = 0;
    std::size_t offset = 0;
  };

  std::size_t project(StateId s, std::uint64_t bits) const noexcept;

  Belief belief_;
  std::vector<MachineState> states_;
  std::unordered_map<std::size_t, std::vector<StateId>> by_hash_;
  std::vector<Table> tables_;
  std::vector<StateId> edges_;
  std::vector<bool> terminal_;
  std::vector<bool> absorbing_;
  std::vector<double> reward_;
  std::vector<double> end_reward_;
};

RewardMachine compile(const Belief& b, const CompileOptions& options = {});

/// Machine state reached by running `tr` from the initial state.
StateId run(const RewardMachine& m, const Trace& tr);

/// end_reward of the state reached by `tr`: 2 * acceptability - 1.
double trace_reward(const RewardMachine& m, const Trace& tr);

/// Uncertainty-sampling query target and the shaped reward that steers towards it.
struct QueryTarget
{
  StateId selected = 0;
  /// States on some initial -> selected path, excluding `selected`. Sorted.
  std::vector<StateId> path_states;
  /// Per machine state: 1 at `selected`, 0 on the path, -1 elsewhere.
  std::vector<double> reward_shaped;
  /// Breadth-first distance of `selected` from the initial state.
  std::size_t distance = 0;

  double shaped(StateId s) const { return reward_shaped.at(s); }
};

/// Terminal state with the smallest |reward| among those reachable from the initial
/// state without passing through another terminal. Ties go to the shorter distance,
/// then the smaller state id. `allowed`, if non-empty, restricts the search to the
/// flagged states (e.g. those realizable in an environment).
QueryTarget select_query(const RewardMachine& m, const std::vector<bool>& allowed = {});

}  // namespace speclearn
