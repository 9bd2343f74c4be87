#include "oracles.hpp"

#include "speclearn/domains.hpp"
#include "speclearn/planner.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace speclearn;

namespace {

const PropositionSet abc{"a", "b", "c"};

/// Random deterministic environment whose states carry random labels.
EnvironmentMDP random_env(std::mt19937_64& rng, std::size_t states, std::size_t actions, std::size_t horizon)
{
  std::vector<std::string> names;
  for (std::size_t a = 0; a < actions; ++a)
    names.push_back("act" + std::to_string(a));
  EnvironmentMDP env(abc, states, names, 0, horizon);
  std::uniform_int_distribution<std::size_t> pick(0, states - 1);
  std::uniform_int_distribution<std::uint64_t> letter(0, 7);
  for (std::size_t x = 0; x < states; ++x) {
    env.set_label(x, x == 0 ? TruthAssignment(3, 0) : TruthAssignment(3, letter(rng)));
    for (std::size_t a = 0; a < actions; ++a)
      env.set_transition(x, a, {{pick(rng), 1.0}});
  }
  env.validate();
  return env;
}

Belief random_belief(std::mt19937_64& rng)
{
  std::uniform_int_distribution<std::size_t> k(1, 3);
  std::vector<TemplateFormula> support;
  std::vector<double> w;
  double z = 0;
  for (std::size_t i = k(rng); i > 0; --i) {
    support.push_back(TemplateFormula::from_formula(canonical(oracle::random_template(rng, 3, 3))));
    w.push_back(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
    z += w.back();
  }
  for (auto& p : w)
    p /= z;
  return Belief(abc, support, w);
}

}  // namespace

TEST_CASE("environment validation")
{
  EnvironmentMDP env(abc, 2, {"go"}, 0, 3);
  env.set_label(0, TruthAssignment(3, 0));
  env.set_label(1, TruthAssignment(3, 1));
  env.set_transition(0, 0, {{1, 0.5}, {0, 0.4}});
  env.set_transition(1, 0, {{1, 1.0}});
  CHECK_THROWS(env.validate());
  env.set_transition(0, 0, {{1, 0.5}, {0, 0.5}});
  CHECK_NOTHROW(env.validate());
  CHECK_FALSE(env.deterministic());
  CHECK_THROWS(env.set_transition(0, 0, {{7, 1.0}}));
  CHECK_THROWS(env.set_label(0, TruthAssignment(2, 0)));
}

TEST_CASE("backward induction matches exhaustive search")
{
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    auto env = random_env(rng, 2 + i % 5, 2 + i % 2, 2 + i % 3);
    auto m = compile(random_belief(rng));
    ProductMDP p(env, m);
    ValueFunction v(p, 0.9);
    CHECK(v.value(p.initial()) == doctest::Approx(oracle::best_return(p, p.initial(), 0.9)).epsilon(1e-12));
    auto allowed = p.reachable_machine_states();
    bool any = false;
    for (StateId s = 0; s < m.size(); ++s)
      any = any || (allowed[s] && m.is_terminal(s));
    if (!any)
      continue;
    ProductMDP shaped(env, m, select_query(m, allowed));
    ValueFunction vs(shaped, 0.9);
    CHECK(vs.value(shaped.initial()) ==
          doctest::Approx(oracle::best_return(shaped, shaped.initial(), 0.9)).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("Q-learning reaches the optimal value on small deterministic products")
{
  std::mt19937_64 rng(4);
  QLearningConfig cfg;
  for (int i = 0; i < 25; ++i) {
    auto env = random_env(rng, 3 + i % 4, 2 + i % 2, 3);
    auto m = compile(random_belief(rng));
    ProductMDP p(env, m);
    ValueFunction v(p, cfg.gamma);
    auto q = q_learn(p, cfg, i);
    CHECK(q.size() <= 200);
    CHECK(policy_value(p, q, cfg.gamma) >= v.value(p.initial()) - 1e-6);
  }
}

TEST_CASE("stochastic outcomes: sampling frequencies and expected values")
{
  // From 0, "try" lands in 1 (label b) with probability 0.3, else stays in 0.
  EnvironmentMDP env(abc, 2, {"try", "wait"}, 0, 2);
  env.set_label(0, TruthAssignment(3, 0));
  env.set_label(1, TruthAssignment::of(abc, {"b"}));
  env.set_transition(0, 0, {{1, 0.3}, {0, 0.7}});
  env.set_transition(0, 1, {{0, 1.0}});
  env.set_transition(1, 0, {{1, 1.0}});
  env.set_transition(1, 1, {{1, 1.0}});
  env.validate();

  Rng rng(12);
  int hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    hits += env.sample(0, 0, rng) == 1;
  CHECK(hits / double(n) == doctest::Approx(0.3).epsilon(0.05));

  auto m = compile(Belief::point_mass(abc, parse_template("(F b)", abc)));
  ProductMDP p(env, m);
  const double g = 0.9;
  ValueFunction v(p, g);
  // Two tries: success after the first step ends the episode with +1, and the horizon
  // judges the rest. Hand computation:
  const double expected = 0.3 * 1.0 + 0.7 * g * (0.3 * 1.0 + 0.7 * -1.0);
  CHECK(v.value(p.initial()) == doctest::Approx(expected));
  CHECK(v.optimal_actions(p.initial()) == std::vector<std::size_t>{0});

  // Empirical return of the greedy policy agrees with the exact policy value.
  auto q = q_learn(p, {}, 1);
  const double exact = policy_value(p, q, g);
  CHECK(exact == doctest::Approx(expected));
  double total = 0.0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    auto ep = rollout_episode(p, q, s);
    total += std::pow(g, double(ep.actions.size() - 1)) * ep.reward;
  }
  CHECK(total / 4000.0 == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("rewards arrive only when an episode ends")
{
  auto spec = dinner3();
  auto env = build_env(spec);
  auto props = spec.props();
  Belief b(props,
           {parse_template("(and (G (not Fork)) (F Bowl) (U (not Bowl) Plate))", props),
            parse_template("(and (G (not Fork)) (F Bowl))", props)},
           {0.3, 0.7});
  auto m = compile(b);
  ProductMDP p(env, m);
  Rng rng(3);
  for (int run = 0; run < 200; ++run) {
    ProductState s = p.initial();
    for (;;) {
      auto st = product_step(p, s, std::uniform_int_distribution<std::size_t>(0, 2)(rng), rng);
      if (!st.done) {
        CHECK(st.reward == 0.0);
        s = st.next;
        continue;
      }
      CHECK(st.reward == p.stop_reward(st.next.machine));
      CHECK(st.next.t <= env.horizon());
      break;
    }
  }
  CHECK_THROWS(product_step(p, p.initial(), 3, rng));
}

TEST_CASE("worked example rollouts")
{
  auto spec = dinner3();
  auto env = build_env(spec);
  auto props = spec.props();
  Belief b(props,
           {parse_template("(and (G (not Fork)) (F Bowl) (U (not Bowl) Plate))", props),
            parse_template("(and (G (not Fork)) (F Bowl))", props)},
           {0.3, 0.7});
  auto m = compile(b);
  ProductMDP p(env, m);
  auto q = select_query(m, p.reachable_machine_states());
  ProductMDP shaped(env, m, q);

  auto best = q_learn(p, {}, 1);
  auto tr = rollout(p, best, 0);
  CHECK(tr == Trace(props, {TruthAssignment::of(props, {"Plate"}), TruthAssignment::of(props, {"Plate", "Bowl"})}));
  auto probe = q_learn(shaped, {}, 1);
  CHECK(rollout(shaped, probe, 0) == Trace(props, {TruthAssignment::of(props, {"Bowl"})}));
  CHECK(rollout(shaped, probe, 0) == rollout(shaped, probe, 99));
}

TEST_CASE("Q-learning and rollouts are deterministic in the seed")
{
  auto spec = DomainSpec::synthetic(3, 2);
  auto env = build_env(spec);
  auto props = spec.props();
  auto m = compile(Belief(props, {parse_template("(and (F w1) (F w2) (G (not t1)))", props),
                                  parse_template("(and (F w3) (U (not w1) w2))", props)},
                          {0.5, 0.5}));
  ProductMDP p(env, m);
  QLearningConfig cfg;
  cfg.episodes = 3000;
  auto a = q_learn(p, cfg, 17), b = q_learn(p, cfg, 17);
  CHECK(a.to_json() == b.to_json());
  CHECK(rollout(p, a, 5) == rollout(p, b, 5));
}

TEST_CASE("Q-table JSON round trip")
{
  QTable t(3);
  auto i = t.ensure({2, 1, 0}, 0.5);
  auto j = t.ensure({4, 0, 1});
  t.value(i, 2) = 0.75;
  t.value(j, 1) = 0.25;
  CHECK(t.ensure({2, 1, 0}) == i);
  CHECK(t.greedy(i) == 2);
  CHECK(t.greedy(j) == 1);
  CHECK(t.greedy(ProductState{9, 9, 9}) == 0);
  QTable back = QTable::from_json(t.to_json());
  CHECK(back.to_json() == t.to_json());
  CHECK(back.value(*back.find({2, 1, 0}), 0) == 0.5);
  CHECK_THROWS(QTable::from_json("{\"actions\": 2}"));
  CHECK_THROWS(QTable::from_json("not json"));
}

TEST_CASE("config validation")
{
  QLearningConfig c;
  c.alpha = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.gamma = 1.5;
  CHECK_THROWS(c.validate());
  c = {};
  c.initial_q = std::numeric_limits<double>::infinity();
  CHECK_THROWS(c.validate());
  c = {};
  c.episodes = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("realizability in the placement domain")
{
  auto spec = dinner3();
  auto env = build_env(spec);
  auto props = spec.props();
  auto s = [&](std::initializer_list<std::string_view> names) { return TruthAssignment::of(props, names); };
  CHECK(is_realizable(env, Trace(props, {s({"Bowl"}), s({"Bowl", "Plate"})})));
  CHECK(is_realizable(env, Trace(props, {s({"Fork"}), s({"Fork", "Bowl"}), s({"Fork", "Bowl", "Plate"})})));
  CHECK_FALSE(is_realizable(env, Trace(props, {s({"Bowl", "Plate"})})));
  CHECK_FALSE(is_realizable(env, Trace(props, {s({"Bowl"}), s({"Plate"})})));
  CHECK_FALSE(is_realizable(env, Trace(props, {s({}), s({}), s({}), s({}), s({}), s({})})));
}
