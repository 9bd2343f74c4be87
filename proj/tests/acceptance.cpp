// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes, or fails only where named with
// --expect-fail. Expected failures still print FAIL; the flag only keeps a known,
// documented shortfall from masking regressions elsewhere.

#include "oracles.hpp"

#include "speclearn/domains.hpp"
#include "speclearn/experiments.hpp"
#include "speclearn/session.hpp"
#include "speclearn/teacher.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <deque>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_set>

using namespace speclearn;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

struct Criterion
{
  std::string id;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome progression_soundness()
{
  const PropositionSet props{"a", "b", "c"};
  std::mt19937_64 rng(20240601);
  std::set<Formula> corpus;
  while (corpus.size() < 200)
    corpus.insert(canonical(oracle::random_template(rng, 3, 5)));

  std::size_t checked = 0, mismatches = 0;
  std::vector<std::uint64_t> w;
  for (const auto& f : corpus) {
    // Depth-first over the prefix tree, progressing once per edge.
    std::function<void(const Formula&)> dfs = [&](const Formula& residue) {
      if (!w.empty()) {
        ++checked;
        if (holds_at_end(residue) != oracle::holds(f, w, 0))
          ++mismatches;
      }
      if (w.size() == 5)
        return;
      for (std::uint64_t a = 0; a < 8; ++a) {
        w.push_back(a);
        dfs(progress(residue, TruthAssignment(3, a)));
        w.pop_back();
      }
    };
    dfs(f);
  }
  const std::size_t per_formula = 8 + 64 + 512 + 4096 + 32768;
  return {mismatches == 0 && checked == per_formula * corpus.size(),
          fmt("%zu formulas x %zu traces, %zu mismatches", corpus.size(), per_formula, mismatches)};
}

Outcome worked_example()
{
  auto spec = dinner3();
  auto props = spec.props();
  auto env = build_env(spec);
  Belief b(props,
           {parse_template("(and (G (not Fork)) (F Bowl) (U (not Bowl) Plate))", props),
            parse_template("(and (G (not Fork)) (F Bowl))", props)},
           {0.3, 0.7});
  auto m = compile(b);
  std::multiset<double> terminal;
  for (StateId s = 0; s < m.size(); ++s)
    if (m.is_terminal(s))
      terminal.insert(std::round(m.reward(s) * 1e9) / 1e9);
  const bool rewards_ok = terminal == std::multiset<double>{-1.0, 0.4, 1.0};

  ProductMDP p(env, m);
  auto q = select_query(m, p.reachable_machine_states());
  const MachineState want{{Formula::bottom(), canonical(parse("(G (not Fork))", props))}};
  const bool query_ok = m.state(q.selected) == want;

  ProtocolConfig cfg;
  cfg.domain = spec;
  auto probe = plan_query(env, b, cfg, 1);
  const Trace bowl(props, {TruthAssignment::of(props, {"Bowl"})});
  const bool shaped_ok = probe && *probe == bowl;
  auto best = plan_min_regret(env, b, cfg, 1);
  const Trace plate_bowl(props, {TruthAssignment::of(props, {"Plate"}), TruthAssignment::of(props, {"Plate", "Bowl"})});
  bool fork = false;
  for (const auto& st : best.steps())
    fork = fork || st[props.index("Fork")];
  const bool regret_ok = best == plate_bowl && !fork;

  return {rewards_ok && query_ok && shaped_ok && regret_ok,
          fmt("terminal rewards %s, query %s, shaped rollout %s, min-regret rollout %s", rewards_ok ? "ok" : "WRONG",
              query_ok ? "ok" : "WRONG", shaped_ok ? "ok" : "WRONG", regret_ok ? "ok" : "WRONG")};
}

Outcome acceptability_identity()
{
  const PropositionSet props{"a", "b", "c"};
  std::mt19937_64 rng(99);
  double worst = 0.0;
  std::size_t traces = 0;
  for (int i = 0; i < 20; ++i) {
    Belief b = oracle::random_belief(rng, props, 4, 4);
    auto m = compile(b);
    oracle::for_each_trace(3, 4, [&](const std::vector<std::uint64_t>& w) {
      double expected = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k)
        if (oracle::holds(b.support()[k].to_formula(), w, 0))
          expected += b.probs()[k];
      const double got = 0.5 * (1.0 + trace_reward(m, oracle::make_trace(props, w)));
      worst = std::max(worst, std::abs(got - expected));
      ++traces;
    });
  }
  return {worst <= 1e-12, fmt("20 beliefs x %zu traces, max deviation %.2e", traces / 20, worst)};
}

Outcome inference_oracle()
{
  const PropositionSet props{"Fork", "Bowl", "Plate"};
  auto T = [&](std::initializer_list<std::uint64_t> w) { return oracle::make_trace(props, w); };
  struct Case
  {
    ClauseUniverse u;
    Dataset d;
  };
  std::vector<Case> cases;
  auto add = [&](ClauseUniverse u, std::vector<std::pair<Trace, bool>> items) {
    Dataset d(props);
    for (auto& [tr, l] : items)
      d.add(tr, l);
    cases.push_back({std::move(u), std::move(d)});
  };
  add(ClauseUniverse::standard(props, {}, {1}, {}), {{T({0b010}), true}});
  add(ClauseUniverse::standard(props, {0}, {1}, {1, 2}), {{T({0b100, 0b110}), true}, {T({0b010}), false}});
  add(ClauseUniverse::standard(props, {0, 1, 2}, {1}, {}), {{T({0b010}), true}});
  add(ClauseUniverse::standard(props, {}, {0, 1}, {0, 1}),
      {{T({0b001, 0b011}), true}, {T({0b010, 0b011}), false}, {T({0b001}), false}});
  add(ClauseUniverse::standard(props, {0, 2}, {1, 2}, {}), {{T({0b100, 0b110}), true}, {T({0b011}), false}});
  add(ClauseUniverse::standard(props, {0}, {0, 1, 2}, {}), {{T({0b001}), false}});

  double worst = 0.0;
  for (const auto& c : cases) {
    InferenceConfig cfg;
    auto exact = oracle::exact_posterior(c.u, c.d, cfg.epsilon, cfg.inclusion_prior);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.rng_seed = seed;
      worst = std::max(worst, oracle::total_variation(infer_posterior(c.u, c.d, cfg), exact));
    }
  }
  return {worst <= 0.05, fmt("%zu universes x 5 seeds, max total variation %.4f", cases.size(), worst)};
}

std::size_t product_states(const ProductMDP& p)
{
  std::unordered_set<std::uint64_t> seen{p.initial().key()};
  std::deque<ProductState> todo{p.initial()};
  while (!todo.empty()) {
    auto s = todo.front();
    todo.pop_front();
    for (std::size_t a = 0; a < p.action_count(); ++a)
      for (const auto& o : p.env().outcomes(s.env, a)) {
        auto st = p.step_to(s, o.next);
        if (!st.done && seen.insert(st.next.key()).second)
          todo.push_back(st.next);
      }
  }
  return seen.size();
}

Outcome planner_oracle()
{
  std::vector<std::pair<EnvironmentMDP, Belief>> cases;
  {
    auto spec = dinner3();
    auto props = spec.props();
    cases.emplace_back(build_env(spec),
                       Belief(props,
                              {parse_template("(and (G (not Fork)) (F Bowl) (U (not Bowl) Plate))", props),
                               parse_template("(and (G (not Fork)) (F Bowl))", props)},
                              {0.3, 0.7}));
  }
  std::mt19937_64 rng(555);
  const PropositionSet abc{"a", "b", "c"};
  for (int i = 0; i < 40; ++i) {
    const std::size_t states = 2 + i % 6, actions = 2 + i % 3;
    EnvironmentMDP env(abc, states, std::vector<std::string>(actions, "act"), 0, 2 + i % 3);
    std::uniform_int_distribution<std::size_t> pick(0, states - 1);
    for (std::size_t x = 0; x < states; ++x) {
      env.set_label(x, TruthAssignment(3, x == 0 ? 0 : std::uniform_int_distribution<std::uint64_t>(0, 7)(rng)));
      for (std::size_t a = 0; a < actions; ++a)
        env.set_transition(x, a, {{pick(rng), 1.0}});
    }
    cases.emplace_back(env, oracle::random_belief(rng, abc, 3, 3));
  }
  for (int i = 0; i < 20; ++i) {
    auto spec = DomainSpec::synthetic(2 + i % 2, 1);
    Rng r(i);
    auto u = spec.universe();
    std::vector<TemplateFormula> support{sample_ground_truth(u, r), sample_ground_truth(u, r)};
    cases.emplace_back(build_env(spec), Belief(spec.props(), support, {0.5, 0.5}));
  }

  QLearningConfig cfg;
  std::size_t checked = 0, skipped = 0, failed = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [env, belief] = cases[i];
    auto m = compile(belief);
    std::vector<ProductMDP> products{ProductMDP(env, m)};
    auto allowed = products.front().reachable_machine_states();
    try {
      products.emplace_back(env, m, select_query(m, allowed));
    } catch (const std::runtime_error&) {
      // no reachable terminal: only the min-regret product exists
    }
    for (const auto& p : products) {
      if (product_states(p) > 200) {
        ++skipped;
        continue;
      }
      ValueFunction v(p, cfg.gamma);
      auto q = q_learn(p, cfg, derive_seed(i, checked));
      const double gap = v.value(p.initial()) - policy_value(p, q, cfg.gamma);
      worst = std::max(worst, gap);
      failed += gap > 1e-6;
      ++checked;
    }
  }
  return {failed == 0 && checked > 0,
          fmt("%zu products (%zu over 200 states skipped), %zu below optimum, max gap %.2e", checked, skipped, failed,
              worst)};
}

Outcome protocol_comparison()
{
  SweepConfig cfg;  // 30 runs, n_query 1/3/6, synthetic 5+5, seed 7
  auto r = sweep(cfg);
  auto ent = [&](Protocol p, std::size_t k) { return r.cell(p, k).mean_entropy.estimate; };
  auto sim = [&](Protocol p, std::size_t k) { return r.cell(p, k).median_similarity.estimate; };
  const auto A = Protocol::Active, R = Protocol::Random, B = Protocol::Batch;
  const bool entropy_ok = ent(R, 6) > ent(A, 6) && ent(R, 6) > ent(B, 6);
  const bool similarity_ok = sim(A, 6) >= sim(R, 6) && sim(A, 6) >= sim(B, 6);
  const bool monotone = sim(A, 3) >= sim(A, 1) - 0.02 && sim(A, 6) >= sim(A, 3) - 0.02;
  return {entropy_ok && similarity_ok && monotone && r.failures.empty(),
          fmt("entropy@6 R=%.3f A=%.3f B=%.3f; similarity@6 A=%.3f R=%.3f B=%.3f; Active by n_query %.3f/%.3f/%.3f; "
              "%zu failed runs",
              ent(R, 6), ent(A, 6), ent(B, 6), sim(A, 6), sim(R, 6), sim(B, 6), sim(A, 1), sim(A, 3), sim(A, 6),
              r.failures.size())};
}

Outcome task1_sessions()
{
  auto spec = dinner5();
  auto gt = task1_ground_truth(spec);
  SessionManager sessions;
  std::size_t good = 0;
  std::vector<double> sims;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SessionConfig cfg;
    cfg.seed = derive_seed(11, s);
    auto r = run_scripted_session(sessions, spec, gt, cfg, derive_seed(11, 100 + s), 2, 3, 3);
    sims.push_back(r.final_similarity);
    good += r.final_similarity >= 0.8;
  }
  return {good >= 16, fmt("%zu/20 sessions reach similarity 0.8 (median %.3f, best %.3f)", good, median(sims),
                          *std::max_element(sims.begin(), sims.end()))};
}

Outcome determinism()
{
  std::vector<std::string> broken;
  ProtocolConfig base;
  base.n_query = 3;
  for (auto p : {Protocol::Active, Protocol::Random, Protocol::Batch}) {
    base.protocol = p;
    if (run_protocol(base, derive_seed(7, 0)).to_json(false).dump() !=
        run_protocol(base, derive_seed(7, 0)).to_json(false).dump())
      broken.push_back("run " + to_string(p));
  }

  SweepConfig sc;
  sc.runs = 4;
  sc.n_query = {1, 3};
  sc.bootstrap_resamples = 200;
  sc.threads = 1;
  auto one = sweep(sc);
  sc.threads = 3;
  auto three = sweep(sc);
  std::string raw1, raw3;
  for (const auto& r : one.records)
    raw1 += r.to_json(false).dump() + '\n';
  for (const auto& r : three.records)
    raw3 += r.to_json(false).dump() + '\n';
  if (raw1 != raw3 || one.summary_csv() != three.summary_csv())
    broken.push_back("sweep");

  auto spec = dinner5();
  auto gt = task1_ground_truth(spec);
  SessionConfig cfg;
  cfg.seed = 5;
  SessionManager m1, m2;
  auto s1 = run_scripted_session(m1, spec, gt, cfg, 6);
  auto s2 = run_scripted_session(m2, spec, gt, cfg, 6);
  if (s1.log != s2.log || s1.rollouts != s2.rollouts)
    broken.push_back("session");
  auto replayed = Session::replay(s1.log);
  if (replayed->belief_history() != m1.get(s1.session_id)->belief_history())
    broken.push_back("replay");

  std::string what;
  for (const auto& b : broken)
    what += (what.empty() ? "" : ", ") + b;
  return {broken.empty(), broken.empty() ? "protocol runs, threaded sweeps, scripted sessions and log replay identical"
                                         : "differs: " + what};
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> expect_fail, only;
  app.add_option("--expect-fail", expect_fail, "Criterion ids whose failure does not fail the run");
  app.add_option("--only", only, "Run just these criterion ids");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"progression-soundness", progression_soundness},
      {"worked-example", worked_example},
      {"acceptability-identity", acceptability_identity},
      {"inference-oracle", inference_oracle},
      {"planner-oracle", planner_oracle},
      {"protocol-comparison", protocol_comparison},
      {"task1-sessions", task1_sessions},
      {"determinism", determinism},
  };
  auto listed = [](const std::vector<std::string>& xs, const std::string& id) {
    return std::find(xs.begin(), xs.end(), id) != xs.end();
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !listed(only, c.id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = listed(expect_fail, c.id);
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << ": " << o.detail << fmt(" [%.1fs]", secs)
              << (!o.pass && known ? " (known shortfall)" : "") << std::endl;
    if (!o.pass && !known)
      ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
