#include "speclearn/reward_machine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace speclearn {

namespace {

constexpr StateId unset = std::numeric_limits<StateId>::max();

std::size_t tuple_hash(const std::vector<Formula>& comps)
{
  std::size_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : comps)
    h = (h ^ f.hash()) * 0x100000001b3ULL;
  return h;
}

/// Spreads the low bits of `packed` onto the set bits of `mask`.
std::uint64_t deposit(std::uint64_t packed, std::uint64_t mask)
{
  std::uint64_t out = 0;
  for (std::uint64_t bit = 1; mask; bit <<= 1) {
    std::uint64_t low = mask & (~mask + 1);
    if (packed & bit)
      out |= low;
    mask &= mask - 1;
  }
  return out;
}

/// Gathers the bits of `bits` selected by `mask` into the low bits.
std::size_t extract(std::uint64_t bits, std::uint64_t mask)
{
  std::size_t out = 0;
  std::size_t k = 0;
  while (mask) {
    std::uint64_t low = mask & (~mask + 1);
    if (bits & low)
      out |= std::size_t{1} << k;
    ++k;
    mask &= mask - 1;
  }
  return out;
}

/// Hash-consed canonical formulas with memoized progression.
class FormulaPool
{
public:
  explicit FormulaPool(std::size_t arity) : arity_(arity) {}

  std::uint32_t intern(const Formula& f)
  {
    auto [it, inserted] = ids_.emplace(f, static_cast<std::uint32_t>(formulas_.size()));
    if (inserted) {
      formulas_.push_back(f);
      successors_.emplace_back(std::size_t{1} << std::popcount(f.atoms()), unset);
      safe_.push_back(is_safe(f));
    }
    return it->second;
  }

  const Formula& formula(std::uint32_t id) const { return formulas_[id]; }
  bool safe(std::uint32_t id) const { return safe_[id]; }

  std::uint32_t successor(std::uint32_t id, std::uint64_t bits)
  {
    const std::uint64_t mask = formulas_[id].atoms();
    const std::size_t key = extract(bits, mask);
    std::uint32_t next = successors_[id][key];
    if (next == unset) {
      Formula f = formulas_[id];
      next = intern(progress(f, TruthAssignment(arity_, bits & mask)));
      successors_[id][key] = next;
    }
    return next;
  }

private:
  std::size_t arity_;
  std::vector<Formula> formulas_;
  std::unordered_map<Formula, std::uint32_t, FormulaHash> ids_;
  std::vector<std::vector<std::uint32_t>> successors_;
  std::vector<bool> safe_;
};

struct IdVectorHash
{
  std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept
  {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto x : v)
      h = (h ^ x) * 0x100000001b3ULL;
    return h;
  }
};

}  // namespace

const MachineState& RewardMachine::state(StateId s) const
{
  if (s >= states_.size())
    throw std::out_of_range("unknown machine state " + std::to_string(s));
  return states_[s];
}

std::optional<StateId> RewardMachine::find(const MachineState& s) const
{
  MachineState c;
  for (const auto& f : s.progressions)
    c.progressions.push_back(canonical(f));
  auto it = by_hash_.find(tuple_hash(c.progressions));
  if (it == by_hash_.end())
    return std::nullopt;
  for (StateId id : it->second)
    if (states_[id] == c)
      return id;
  return std::nullopt;
}

std::size_t RewardMachine::project(StateId s, std::uint64_t bits) const noexcept
{
  return tables_[s].offset + extract(bits, tables_[s].mask);
}

StateId RewardMachine::step(StateId s, const TruthAssignment& a) const
{
  if (s >= states_.size())
    throw std::out_of_range("unknown machine state " + std::to_string(s));
  if (a.size() != props().size())
    throw std::invalid_argument("assignment arity does not match the machine");
  return step_bits(s, a.bits());
}

StateId RewardMachine::step_bits(StateId s, std::uint64_t bits) const noexcept
{
  return edges_[project(s, bits)];
}

std::vector<StateId> RewardMachine::successors(StateId s) const
{
  const auto& t = tables_.at(s);
  const std::size_t n = std::size_t{1} << std::popcount(t.mask);
  std::vector<StateId> out(edges_.begin() + static_cast<std::ptrdiff_t>(t.offset),
                           edges_.begin() + static_cast<std::ptrdiff_t>(t.offset + n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RewardMachine compile(const Belief& b, const CompileOptions& options)
{
  if (b.size() == 0)
    throw std::invalid_argument("cannot compile an empty belief");

  RewardMachine m;
  m.belief_ = b;
  const std::size_t arity = b.props().size();
  FormulaPool pool(arity);

  std::unordered_map<std::vector<std::uint32_t>, StateId, IdVectorHash> index;
  std::vector<std::vector<std::uint32_t>> tuples;

  auto intern_state = [&](std::vector<std::uint32_t> ids) -> StateId {
    auto it = index.find(ids);
    if (it != index.end())
      return it->second;
    if (tuples.size() >= options.max_states)
      throw StateSpaceExceeded("reward machine exceeds " + std::to_string(options.max_states) + " states");
    auto id = static_cast<StateId>(tuples.size());
    index.emplace(ids, id);
    tuples.push_back(std::move(ids));
    return id;
  };

  std::vector<std::uint32_t> init;
  for (const auto& f : b.support())
    init.push_back(pool.intern(f.to_formula()));
  intern_state(init);

  std::vector<std::uint32_t> next(init.size());
  for (StateId s = 0; s < tuples.size(); ++s) {
    std::uint64_t mask = 0;
    for (auto id : tuples[s])
      mask |= pool.formula(id).atoms();
    RewardMachine::Table table{mask, m.edges_.size()};
    const std::size_t n = std::size_t{1} << std::popcount(mask);
    m.edges_.resize(table.offset + n);
    m.tables_.push_back(table);
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t bits = deposit(j, mask);
      for (std::size_t c = 0; c < next.size(); ++c)
        next[c] = pool.successor(tuples[s][c], bits);
      m.edges_[table.offset + j] = intern_state(next);
    }
  }

  const auto& probs = b.probs();
  for (const auto& ids : tuples) {
    MachineState st;
    bool terminal = true;
    bool absorbing = true;
    double reward = 0.0;
    double end = 0.0;
    for (std::size_t c = 0; c < ids.size(); ++c) {
      const Formula& f = pool.formula(ids[c]);
      st.progressions.push_back(f);
      const bool decided = f.is_true() || f.is_false();
      absorbing = absorbing && decided;
      terminal = terminal && (decided || pool.safe(ids[c]));
      const double r = f.is_false() ? -1.0 : 1.0;
      reward += probs[c] * r;
      const bool holds = f.is_true() || (!f.is_false() && (pool.safe(ids[c]) || holds_at_end(f)));
      end += probs[c] * (holds ? 1.0 : -1.0);
    }
    m.terminal_.push_back(terminal);
    m.absorbing_.push_back(absorbing);
    m.reward_.push_back(terminal ? reward : 0.0);
    m.end_reward_.push_back(end);
    auto id = static_cast<StateId>(m.states_.size());
    m.by_hash_[tuple_hash(st.progressions)].push_back(id);
    m.states_.push_back(std::move(st));
  }
  return m;
}

StateId run(const RewardMachine& m, const Trace& tr)
{
  if (tr.props() != m.props())
    throw std::invalid_argument("trace and machine use different propositions");
  StateId s = m.initial();
  for (const auto& a : tr.steps())
    s = m.step_bits(s, a.bits());
  return s;
}

double trace_reward(const RewardMachine& m, const Trace& tr) { return m.end_reward(run(m, tr)); }

QueryTarget select_query(const RewardMachine& m, const std::vector<bool>& allowed)
{
  const std::size_t n = m.size();
  auto permitted = [&](StateId s) { return allowed.empty() || allowed.at(s); };
  constexpr std::size_t unseen = std::numeric_limits<std::size_t>::max();

  // Forward search; terminal states end an episode and are not expanded (the initial
  // state always is, since an episode takes at least one step).
  std::vector<std::size_t> dist(n, unseen);
  std::vector<bool> expanded(n, false);
  std::vector<std::vector<StateId>> preds(n);
  std::deque<StateId> queue{m.initial()};
  std::vector<std::size_t> depth(n, unseen);
  depth[m.initial()] = 0;
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    if (expanded[s])
      continue;
    expanded[s] = true;
    for (StateId t : m.successors(s)) {
      if (!permitted(t))
        continue;
      preds[t].push_back(s);
      if (dist[t] == unseen)
        dist[t] = depth[s] + 1;
      if (depth[t] == unseen)
        depth[t] = depth[s] + 1;
      if (!m.is_terminal(t) && !expanded[t])
        queue.push_back(t);
    }
  }

  std::optional<StateId> best;
  for (StateId s = 0; s < n; ++s) {
    if (dist[s] == unseen || !m.is_terminal(s))
      continue;
    if (!best) {
      best = s;
      continue;
    }
    const double a = std::abs(m.reward(s));
    const double cur = std::abs(m.reward(*best));
    if (a < cur - 1e-12 || (std::abs(a - cur) <= 1e-12 && dist[s] < dist[*best]))
      best = s;
  }
  if (!best)
    throw std::runtime_error("no terminal state is reachable from the initial state");

  QueryTarget q;
  q.selected = *best;
  q.distance = dist[*best];

  std::vector<bool> reaches(n, false);
  std::deque<StateId> back{*best};
  reaches[*best] = true;
  while (!back.empty()) {
    StateId s = back.front();
    back.pop_front();
    for (StateId p : preds[s])
      if (!reaches[p]) {
        reaches[p] = true;
        back.push_back(p);
      }
  }

  q.reward_shaped.assign(n, -1.0);
  for (StateId s = 0; s < n; ++s) {
    const bool on_forward = s == m.initial() || dist[s] != unseen;
    if (s != *best && reaches[s] && on_forward) {
      q.path_states.push_back(s);
      q.reward_shaped[s] = 0.0;
    }
  }
  q.reward_shaped[*best] = 1.0;
  return q;
}

std::string RewardMachine::to_dot() const
{
  const auto& props_ = props();
  std::ostringstream out;
  out << "digraph reward_machine {\n  rankdir=LR;\n";
  for (StateId s = 0; s < size(); ++s) {
    out << "  s" << s << " [label=\"" << s << "\\n";
    for (std::size_t c = 0; c < states_[s].progressions.size(); ++c)
      out << (c ? ", " : "") << speclearn::to_string(states_[s].progressions[c], props_);
    out << "\\nR=" << reward_[s] << "\"" << (terminal_[s] ? ", shape=doublecircle" : ", shape=circle") << "];\n";
  }
  const std::size_t arity = props_.size();
  for (StateId s = 0; s < size(); ++s) {
    const auto& t = tables_[s];
    const std::size_t n = std::size_t{1} << std::popcount(t.mask);
    // Group assignments by successor to keep the graph readable.
    std::unordered_map<StateId, std::vector<std::string>> labels;
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t bits = deposit(j, t.mask);
      std::string label;
      for (std::size_t i = 0; i < arity; ++i)
        label += ((t.mask >> i) & 1U) ? (((bits >> i) & 1U) ? '1' : '0') : '-';
      labels[edges_[t.offset + j]].push_back(label);
    }
    std::vector<StateId> targets;
    for (const auto& kv : labels)
      targets.push_back(kv.first);
    std::sort(targets.begin(), targets.end());
    for (StateId dst : targets) {
      out << "  s" << s << " -> s" << dst << " [label=\"";
      const auto& ls = labels[dst];
      for (std::size_t k = 0; k < ls.size(); ++k)
        out << (k ? "\\n" : "") << ls[k];
      out << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string RewardMachine::to_json() const
{
  using nlohmann::json;
  const auto& props_ = props();
  json j;
  j["props"] = props_.names();
  json probs = json::array();
  for (double p : belief_.probs())
    probs.push_back(p);
  j["component_probs"] = probs;
  json nodes = json::array();
  for (StateId s = 0; s < size(); ++s) {
    json comps = json::array();
    for (const auto& f : states_[s].progressions)
      comps.push_back(speclearn::to_string(f, props_));
    nodes.push_back({{"id", s},
                     {"progressions", comps},
                     {"terminal", static_cast<bool>(terminal_[s])},
                     {"absorbing", static_cast<bool>(absorbing_[s])},
                     {"reward", reward_[s]},
                     {"end_reward", end_reward_[s]}});
  }
  j["nodes"] = nodes;
  json edges = json::array();
  const std::size_t arity = props_.size();
  for (StateId s = 0; s < size(); ++s) {
    const auto& t = tables_[s];
    const std::size_t n = std::size_t{1} << std::popcount(t.mask);
    for (std::size_t j2 = 0; j2 < n; ++j2) {
      std::uint64_t bits = deposit(j2, t.mask);
      std::string label;
      for (std::size_t i = 0; i < arity; ++i)
        label += ((t.mask >> i) & 1U) ? (((bits >> i) & 1U) ? '1' : '0') : '-';
      edges.push_back({{"from", s}, {"to", edges_[t.offset + j2]}, {"assignment", label}});
    }
  }
  j["edges"] = edges;
  j["initial"] = 0;
  return j.dump(2);
}

}  // namespace speclearn
