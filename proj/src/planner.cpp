#include "speclearn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace speclearn {

// ---------------------------------------------------------------------------
// EnvironmentMDP
// ---------------------------------------------------------------------------

EnvironmentMDP::EnvironmentMDP(PropositionSet props, std::size_t n_states, std::vector<std::string> action_names,
                               std::size_t initial, std::size_t horizon)
  : props_(std::move(props)),
    actions_(std::move(action_names)),
    initial_(initial),
    horizon_(horizon),
    labels_(n_states, TruthAssignment(props_.size(), 0)),
    complete_(n_states, false),
    transitions_(n_states * actions_.size())
{
  if (n_states == 0 || actions_.empty())
    throw std::invalid_argument("environment needs at least one state and one action");
  if (initial >= n_states)
    throw std::invalid_argument("initial state out of range");
  if (horizon == 0)
    throw std::invalid_argument("horizon must be positive");
  if (n_states >= (std::size_t{1} << 20) || horizon >= 4096)
    throw std::invalid_argument("environment too large for product indexing");
}

void EnvironmentMDP::set_transition(std::size_t x, std::size_t a, std::vector<Outcome> outcomes)
{
  if (x >= state_count() || a >= action_count())
    throw std::out_of_range("transition index out of range");
  for (const auto& o : outcomes)
    if (o.next >= state_count() || o.prob < 0.0)
      throw std::invalid_argument("invalid transition outcome");
  transitions_[x * action_count() + a] = std::move(outcomes);
}

void EnvironmentMDP::set_label(std::size_t x, TruthAssignment label)
{
  if (label.size() != props_.size())
    throw std::invalid_argument("label arity does not match the proposition set");
  labels_.at(x) = label;
}

void EnvironmentMDP::set_complete(std::size_t x, bool complete) { complete_.at(x) = complete; }

void EnvironmentMDP::validate() const
{
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    double total = 0.0;
    for (const auto& o : transitions_[i])
      total += o.prob;
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("transition distribution of state " + std::to_string(i / action_count()) +
                                  ", action " + std::to_string(i % action_count()) + " does not sum to 1");
  }
}

const std::vector<EnvironmentMDP::Outcome>& EnvironmentMDP::outcomes(std::size_t x, std::size_t a) const
{
  if (x >= state_count() || a >= action_count())
    throw std::out_of_range("transition index out of range");
  return transitions_[x * action_count() + a];
}

bool EnvironmentMDP::deterministic() const
{
  return std::all_of(transitions_.begin(), transitions_.end(), [](const auto& t) { return t.size() == 1; });
}

std::size_t EnvironmentMDP::sample(std::size_t x, std::size_t a, Rng& rng) const
{
  const auto& out = outcomes(x, a);
  if (out.size() == 1)
    return out.front().next;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  for (const auto& o : out) {
    if (u < o.prob)
      return o.next;
    u -= o.prob;
  }
  return out.back().next;
}

// ---------------------------------------------------------------------------
// ProductMDP
// ---------------------------------------------------------------------------

ProductMDP::ProductMDP(const EnvironmentMDP& env, const RewardMachine& machine)
  : env_(&env), machine_(&machine), mode_(RewardMode::MinRegret)
{
  if (env.props() != machine.props())
    throw std::invalid_argument("environment and machine use different propositions");
}

ProductMDP::ProductMDP(const EnvironmentMDP& env, const RewardMachine& machine, QueryTarget target)
  : ProductMDP(env, machine)
{
  if (target.reward_shaped.size() != machine.size())
    throw std::invalid_argument("query target does not belong to this machine");
  mode_ = RewardMode::Shaped;
  target_ = std::move(target);
}

ProductState ProductMDP::initial() const noexcept
{
  return {static_cast<std::uint32_t>(env_->initial()), machine_->initial(), 0};
}

double ProductMDP::stop_reward(StateId m) const
{
  if (mode_ == RewardMode::Shaped)
    return target_->shaped(m);
  return machine_->is_terminal(m) ? machine_->reward(m) : machine_->end_reward(m);
}

ProductStep ProductMDP::step_to(const ProductState& s, std::size_t env_next) const
{
  ProductStep out;
  out.next.env = static_cast<std::uint32_t>(env_next);
  out.next.machine = machine_->step_bits(s.machine, env_->label(env_next).bits());
  out.next.t = s.t + 1;
  out.done = machine_->is_terminal(out.next.machine) || env_->complete(env_next) || out.next.t >= env_->horizon();
  out.reward = out.done ? stop_reward(out.next.machine) : 0.0;
  return out;
}

std::vector<bool> ProductMDP::reachable_machine_states() const
{
  std::vector<bool> seen_machine(machine_->size(), false);
  std::unordered_map<std::uint64_t, std::uint32_t> depth;
  auto key = [](std::uint32_t x, StateId m) { return (std::uint64_t{x} << 32) | m; };
  std::deque<std::pair<std::uint32_t, StateId>> queue;
  const auto start = initial();
  queue.emplace_back(start.env, start.machine);
  depth[key(start.env, start.machine)] = 0;
  while (!queue.empty()) {
    auto [x, m] = queue.front();
    queue.pop_front();
    const std::uint32_t d = depth[key(x, m)];
    for (std::size_t a = 0; a < env_->action_count(); ++a) {
      for (const auto& o : env_->outcomes(x, a)) {
        if (o.prob <= 0.0)
          continue;
        ProductStep st = step_to({x, m, d}, o.next);
        seen_machine[st.next.machine] = true;
        auto [it, inserted] = depth.emplace(key(st.next.env, st.next.machine), st.next.t);
        if (inserted && !st.done)
          queue.emplace_back(st.next.env, st.next.machine);
      }
    }
  }
  return seen_machine;
}

ProductStep product_step(const ProductMDP& p, const ProductState& s, std::size_t action, Rng& rng)
{
  if (action >= p.action_count())
    throw std::out_of_range("invalid action " + std::to_string(action));
  if (s.env >= p.env().state_count() || s.machine >= p.machine().size())
    throw std::out_of_range("invalid product state");
  return p.step_to(s, p.env().sample(s.env, action, rng));
}

// ---------------------------------------------------------------------------
// Q-learning
// ---------------------------------------------------------------------------

void QLearningConfig::validate() const
{
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw std::invalid_argument("exploration rates must lie in [0, 1]");
  if (episodes == 0)
    throw std::invalid_argument("episode budget must be positive");
  if (!std::isfinite(initial_q))
    throw std::invalid_argument("initial_q must be finite");
}

std::optional<std::size_t> QTable::find(const ProductState& s) const
{
  auto it = index_.find(s.key());
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

std::size_t QTable::ensure(const ProductState& s, double initial)
{
  auto [it, inserted] = index_.emplace(s.key(), states_.size());
  if (inserted) {
    states_.push_back(s);
    q_.resize(q_.size() + actions_, initial);
  }
  return it->second;
}

double QTable::max_value(std::size_t index) const
{
  double best = q_[index * actions_];
  for (std::size_t a = 1; a < actions_; ++a)
    best = std::max(best, q_[index * actions_ + a]);
  return best;
}

std::size_t QTable::greedy(std::size_t index) const
{
  std::size_t best = 0;
  for (std::size_t a = 1; a < actions_; ++a)
    if (q_[index * actions_ + a] > q_[index * actions_ + best])
      best = a;
  return best;
}

std::size_t QTable::greedy(const ProductState& s) const
{
  auto i = find(s);
  return i ? greedy(*i) : 0;
}

std::string QTable::to_json() const
{
  using nlohmann::json;
  json entries = json::array();
  for (std::size_t i = 0; i < states_.size(); ++i) {
    json q = json::array();
    for (std::size_t a = 0; a < actions_; ++a)
      q.push_back(value(i, a));
    entries.push_back({{"state", i}, {"env", states_[i].env}, {"machine", states_[i].machine}, {"t", states_[i].t},
                       {"q", q}});
  }
  return json{{"actions", actions_}, {"entries", entries}}.dump();
}

QTable QTable::from_json(const std::string& text)
{
  auto j = nlohmann::json::parse(text);
  QTable table(j.at("actions").get<std::size_t>());
  for (const auto& e : j.at("entries")) {
    ProductState s{e.at("env").get<std::uint32_t>(), e.at("machine").get<StateId>(), e.at("t").get<std::uint32_t>()};
    std::size_t i = table.ensure(s);
    if (i != e.at("state").get<std::size_t>())
      throw std::invalid_argument("checkpoint entries are not in index order");
    const auto& q = e.at("q");
    if (q.size() != table.actions_)
      throw std::invalid_argument("checkpoint row has the wrong number of actions");
    for (std::size_t a = 0; a < table.actions_; ++a)
      table.value(i, a) = q[a].get<double>();
  }
  return table;
}

QTable q_learn(const ProductMDP& p, const QLearningConfig& cfg, std::uint64_t seed)
{
  cfg.validate();
  const std::size_t n_actions = p.action_count();
  QTable table(n_actions);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_action(0, n_actions - 1);

  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const double frac = cfg.episodes > 1 ? static_cast<double>(e) / static_cast<double>(cfg.episodes - 1) : 1.0;
    const double explore = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
    ProductState s = p.initial();
    std::size_t i = table.ensure(s, cfg.initial_q);
    for (;;) {
      const std::size_t a = unit(rng) < explore ? any_action(rng) : table.greedy(i);
      ProductStep st = p.step_to(s, p.env().sample(s.env, a, rng));
      double target = st.reward;
      std::size_t next = 0;
      if (!st.done) {
        next = table.ensure(st.next, cfg.initial_q);
        target += cfg.gamma * table.max_value(next);
      }
      double& q = table.value(i, a);
      q += cfg.alpha * (target - q);
      if (st.done)
        break;
      s = st.next;
      i = next;
    }
  }
  return table;
}

Episode rollout_episode(const ProductMDP& p, const QTable& q, std::uint64_t seed)
{
  Rng rng(seed);
  Episode ep;
  ProductState s = p.initial();
  ep.states.push_back(s);
  for (;;) {
    const std::size_t a = q.greedy(s);
    ProductStep st = product_step(p, s, a, rng);
    ep.actions.push_back(a);
    ep.states.push_back(st.next);
    ep.labels.push_back(p.env().label(st.next.env));
    if (st.done) {
      ep.reward = st.reward;
      break;
    }
    s = st.next;
  }
  return ep;
}

Trace rollout(const ProductMDP& p, const QTable& q, std::uint64_t seed)
{
  return rollout_episode(p, q, seed).trace(p.env().props());
}

// ---------------------------------------------------------------------------
// Exact values
// ---------------------------------------------------------------------------

ValueFunction::ValueFunction(const ProductMDP& p, double gamma) : p_(&p), gamma_(gamma) {}

double ValueFunction::q_value(const ProductState& s, std::size_t a) const
{
  double total = 0.0;
  for (const auto& o : p_->env().outcomes(s.env, a)) {
    if (o.prob <= 0.0)
      continue;
    ProductStep st = p_->step_to(s, o.next);
    total += o.prob * (st.reward + (st.done ? 0.0 : gamma_ * value(st.next)));
  }
  return total;
}

double ValueFunction::solve(const ProductState& s) const
{
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < p_->action_count(); ++a)
    best = std::max(best, q_value(s, a));
  return best;
}

double ValueFunction::value(const ProductState& s) const
{
  auto it = memo_.find(s.key());
  if (it != memo_.end())
    return it->second;
  double v = solve(s);
  memo_.emplace(s.key(), v);
  return v;
}

std::vector<std::size_t> ValueFunction::optimal_actions(const ProductState& s, double tol) const
{
  std::vector<double> qs;
  for (std::size_t a = 0; a < p_->action_count(); ++a)
    qs.push_back(q_value(s, a));
  const double best = *std::max_element(qs.begin(), qs.end());
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < qs.size(); ++a)
    if (qs[a] >= best - tol)
      out.push_back(a);
  return out;
}

ValueFunction value_iteration(const ProductMDP& p, double gamma)
{
  ValueFunction v(p, gamma);
  v.value(p.initial());
  return v;
}

namespace {

double greedy_value(const ProductMDP& p, const QTable& q, double gamma, const ProductState& s,
                    std::unordered_map<std::uint64_t, double>& memo)
{
  auto it = memo.find(s.key());
  if (it != memo.end())
    return it->second;
  const std::size_t a = q.greedy(s);
  double total = 0.0;
  for (const auto& o : p.env().outcomes(s.env, a)) {
    if (o.prob <= 0.0)
      continue;
    ProductStep st = p.step_to(s, o.next);
    total += o.prob * (st.reward + (st.done ? 0.0 : gamma * greedy_value(p, q, gamma, st.next, memo)));
  }
  memo.emplace(s.key(), total);
  return total;
}

}  // namespace

double policy_value(const ProductMDP& p, const QTable& q, double gamma)
{
  std::unordered_map<std::uint64_t, double> memo;
  return greedy_value(p, q, gamma, p.initial(), memo);
}

Episode optimal_episode(const ProductMDP& p, const ValueFunction& v, Rng& rng, bool random_ties)
{
  Episode ep;
  ProductState s = p.initial();
  ep.states.push_back(s);
  for (;;) {
    auto best = v.optimal_actions(s);
    std::size_t a = best.front();
    if (random_ties && best.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, best.size() - 1);
      a = best[pick(rng)];
    }
    ProductStep st = product_step(p, s, a, rng);
    ep.actions.push_back(a);
    ep.states.push_back(st.next);
    ep.labels.push_back(p.env().label(st.next.env));
    if (st.done) {
      ep.reward = st.reward;
      break;
    }
    s = st.next;
  }
  return ep;
}

}  // namespace speclearn

namespace speclearn {

bool is_realizable(const EnvironmentMDP& env, const Trace& tr)
{
  if (!(tr.props() == env.props()) || tr.size() > env.horizon())
    return false;
  std::vector<std::size_t> current{env.initial()};
  std::vector<std::size_t> next;
  std::vector<bool> seen(env.state_count());
  for (const auto& step : tr.steps()) {
    next.clear();
    std::fill(seen.begin(), seen.end(), false);
    for (auto x : current)
      for (std::size_t a = 0; a < env.action_count(); ++a)
        for (const auto& o : env.outcomes(x, a))
          if (o.prob > 0.0 && !seen[o.next] && env.label(o.next) == step) {
            seen[o.next] = true;
            next.push_back(o.next);
          }
    if (next.empty())
      return false;
    current.swap(next);
  }
  return true;
}

}  // namespace speclearn
