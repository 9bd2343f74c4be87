#include "speclearn/experiments.hpp"

#include "speclearn/teacher.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace speclearn {

std::string to_string(Protocol p)
{
  switch (p) {
  case Protocol::Active:
    return "active";
  case Protocol::Random:
    return "random";
  case Protocol::Batch:
    return "batch";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& s)
{
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "active")
    return Protocol::Active;
  if (lower == "random")
    return Protocol::Random;
  if (lower == "batch")
    return Protocol::Batch;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

void ProtocolConfig::validate() const
{
  if (n_demos_initial == 0)
    throw std::invalid_argument("at least one initial demonstration is required");
  inference.validate();
  planner.validate();
  if (ground_truth && ground_truth->clause_count() > 0) {
    const auto props = domain.props();
    for (const auto& c : clauses(*ground_truth))
      if (c.atoms() >> props.size())
        throw std::invalid_argument("ground truth mentions propositions outside the domain");
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

json RunRecord::to_json(bool with_timing) const
{
  json j{{"run_id", run_id},
         {"seed", seed},
         {"protocol", speclearn::to_string(protocol)},
         {"n_query", n_query},
         {"total_executions", dataset.size()},
         {"ground_truth", ground_truth},
         {"entropy", entropy},
         {"similarity", similarity},
         {"query_labels", query_labels},
         {"dataset", dataset_to_json(dataset)},
         {"final_belief", belief_to_json(final_belief)}};
  if (with_timing)
    j["wall_seconds"] = wall_seconds;
  return j;
}

Trace random_execution(const EnvironmentMDP& env, Rng& rng)
{
  std::vector<TruthAssignment> steps;
  std::size_t x = env.initial();
  std::vector<std::size_t> available;
  for (std::size_t t = 0; t < env.horizon(); ++t) {
    available.clear();
    for (std::size_t a = 0; a < env.action_count(); ++a) {
      const auto& out = env.outcomes(x, a);
      if (!(out.size() == 1 && out.front().next == x))
        available.push_back(a);
    }
    if (available.empty()) {
      available.resize(env.action_count());
      std::iota(available.begin(), available.end(), std::size_t{0});
    }
    std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
    x = env.sample(x, available[pick(rng)], rng);
    steps.push_back(env.label(x));
    if (env.complete(x))
      break;
  }
  return Trace(env.props(), std::move(steps));
}

static Trace solve_and_roll(const ProductMDP& p, const ProtocolConfig& cfg, std::uint64_t seed)
{
  if (cfg.planner_kind == PlannerKind::Exact) {
    ValueFunction v(p, cfg.planner.gamma);
    Rng rng(seed);
    return optimal_episode(p, v, rng, false).trace(p.env().props());
  }
  QTable q = q_learn(p, cfg.planner, seed);
  return rollout(p, q, seed);
}

std::optional<Trace> plan_query(const EnvironmentMDP& env, const Belief& b, const ProtocolConfig& cfg,
                                std::uint64_t seed)
{
  RewardMachine m = compile(b, cfg.compile);
  ProductMDP plain(env, m);
  QueryTarget target;
  try {
    target = select_query(m, plain.reachable_machine_states());
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
  ProductMDP shaped(env, m, std::move(target));
  return solve_and_roll(shaped, cfg, seed);
}

Trace plan_min_regret(const EnvironmentMDP& env, const Belief& b, const ProtocolConfig& cfg, std::uint64_t seed)
{
  RewardMachine m = compile(b, cfg.compile);
  ProductMDP p(env, m);
  return solve_and_roll(p, cfg, seed);
}

RunRecord run_protocol(const ProtocolConfig& cfg, std::uint64_t seed, std::size_t run_id)
{
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  const PropositionSet props = cfg.domain.props();
  const EnvironmentMDP env = build_env(cfg.domain);
  const ClauseUniverse universe = cfg.domain.universe();

  TemplateFormula truth;
  if (cfg.ground_truth) {
    truth = *cfg.ground_truth;
  } else {
    Rng g(derive_seed(seed, 1));
    truth = sample_ground_truth(universe, g, cfg.sampler);
  }
  SimTeacher teacher(truth, env, derive_seed(seed, 2), cfg.planner.gamma);

  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = seed;
  rec.protocol = cfg.protocol;
  rec.n_query = cfg.n_query;
  rec.ground_truth = to_string(truth, props);
  rec.dataset = Dataset(props);
  for (auto& demo : teacher.demonstrate(cfg.n_demos_initial))
    rec.dataset.items.push_back(std::move(demo));

  Belief belief;
  auto update = [&](std::size_t round) {
    InferenceConfig ic = cfg.inference;
    ic.rng_seed = derive_seed(seed, 100 + round);
    belief = infer_posterior(universe, rec.dataset, ic);
    rec.entropy.push_back(entropy(belief));
    rec.similarity.push_back(belief_similarity(belief, truth));
  };
  update(0);

  if (cfg.protocol == Protocol::Batch) {
    auto extra = teacher.demonstrate(cfg.n_query);
    for (std::size_t r = 1; r <= cfg.n_query; ++r) {
      rec.dataset.items.push_back(std::move(extra[r - 1]));
      update(r);
    }
  } else {
    Rng explorer(derive_seed(seed, 3));
    for (std::size_t r = 1; r <= cfg.n_query; ++r) {
      std::optional<Trace> query;
      if (cfg.protocol == Protocol::Random) {
        query = random_execution(env, explorer);
      } else {
        const std::uint64_t plan_seed = derive_seed(seed, 200 + r);
        query = plan_query(env, belief, cfg, plan_seed);
        if (!query)
          query = plan_min_regret(env, belief, cfg, plan_seed);
      }
      const bool label = teacher.assess(*query);
      rec.query_labels.push_back(label);
      rec.dataset.add(std::move(*query), label);
      update(r);
    }
  }

  rec.final_belief = std::move(belief);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

RunRecord run_active(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id)
{
  cfg.protocol = Protocol::Active;
  return run_protocol(cfg, seed, run_id);
}

RunRecord run_random(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id)
{
  cfg.protocol = Protocol::Random;
  return run_protocol(cfg, seed, run_id);
}

RunRecord run_batch(ProtocolConfig cfg, std::uint64_t seed, std::size_t run_id)
{
  cfg.protocol = Protocol::Batch;
  return run_protocol(cfg, seed, run_id);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& xs)
{
  if (xs.empty())
    throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(const std::vector<double>& in)
{
  if (in.empty())
    throw std::invalid_argument("median of an empty sample");
  std::vector<double> xs(in);
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Interval bootstrap_ci(const std::vector<double>& xs, const std::function<double(const std::vector<double>&)>& stat,
                      std::size_t resamples, std::uint64_t seed, double level)
{
  if (xs.empty())
    throw std::invalid_argument("bootstrap of an empty sample");
  if (!(level > 0.0 && level < 1.0) || resamples == 0)
    throw std::invalid_argument("invalid bootstrap settings");
  Interval out;
  out.estimate = stat(xs);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> stats(resamples);
  std::vector<double> sample(xs.size());
  for (auto& s : stats) {
    for (auto& v : sample)
      v = xs[pick(rng)];
    s = stat(sample);
  }
  std::sort(stats.begin(), stats.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, resamples - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  out.lo = std::min(quantile(tail), out.estimate);
  out.hi = std::max(quantile(1.0 - tail), out.estimate);
  return out;
}

const CellSummary& SweepResult::cell(Protocol p, std::size_t n_query) const
{
  for (const auto& c : cells)
    if (c.protocol == p && c.n_query == n_query)
      return c;
  throw std::out_of_range("no such sweep cell");
}

std::string SweepResult::summary_csv() const
{
  std::ostringstream out;
  out << std::setprecision(10);
  out << "cell,protocol,n_query,total_executions,runs,failed,mean_entropy,entropy_ci_lo,entropy_ci_hi,"
         "median_similarity,similarity_ci_lo,similarity_ci_hi\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    out << i << ',' << to_string(c.protocol) << ',' << c.n_query << ',' << c.total_executions << ',' << c.runs << ','
        << c.failed << ',' << c.mean_entropy.estimate << ',' << c.mean_entropy.lo << ',' << c.mean_entropy.hi << ','
        << c.median_similarity.estimate << ',' << c.median_similarity.lo << ',' << c.median_similarity.hi << '\n';
  }
  return out.str();
}

json SweepResult::plot_data() const
{
  json out = json::array();
  for (const auto& c : cells) {
    std::vector<const RunRecord*> rs;
    for (const auto& r : records)
      if (r.protocol == c.protocol && r.n_query == c.n_query)
        rs.push_back(&r);
    json rounds = json::array();
    if (!rs.empty()) {
      const std::size_t initial = c.total_executions - c.n_query;
      for (std::size_t k = 0; k <= c.n_query; ++k) {
        std::vector<double> h, s;
        for (const auto* r : rs) {
          h.push_back(r->entropy[k]);
          s.push_back(r->similarity[k]);
        }
        rounds.push_back({{"round", k},
                          {"total_executions", initial + k},
                          {"mean_entropy", mean(h)},
                          {"median_similarity", median(s)}});
      }
    }
    out.push_back({{"protocol", to_string(c.protocol)},
                   {"n_query", c.n_query},
                   {"total_executions", c.total_executions},
                   {"runs", c.runs},
                   {"mean_entropy", {c.mean_entropy.estimate, c.mean_entropy.lo, c.mean_entropy.hi}},
                   {"median_similarity",
                    {c.median_similarity.estimate, c.median_similarity.lo, c.median_similarity.hi}},
                   {"rounds", std::move(rounds)}});
  }
  return {{"cells", std::move(out)}};
}

SweepResult sweep(const SweepConfig& cfg)
{
  if (cfg.protocols.empty() || cfg.n_query.empty() || cfg.runs == 0)
    throw std::invalid_argument("empty sweep grid");
  cfg.base.validate();

  struct Job
  {
    Protocol protocol;
    std::size_t n_query;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (auto p : cfg.protocols)
    for (auto n : cfg.n_query)
      for (std::size_t r = 0; r < cfg.runs; ++r)
        jobs.push_back({p, n, r});

  std::vector<std::optional<RunRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      ProtocolConfig pc = cfg.base;
      pc.protocol = jobs[i].protocol;
      pc.n_query = jobs[i].n_query;
      try {
        results[i] = run_protocol(pc, derive_seed(cfg.seed, jobs[i].run), jobs[i].run);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();

  SweepResult out;
  std::size_t cell_index = 0;
  for (auto p : cfg.protocols)
    for (auto n : cfg.n_query) {
      CellSummary c;
      c.protocol = p;
      c.n_query = n;
      c.total_executions = cfg.base.n_demos_initial + n;
      std::vector<double> h, s;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].protocol != p || jobs[i].n_query != n)
          continue;
        if (results[i]) {
          h.push_back(results[i]->final_entropy());
          s.push_back(results[i]->final_similarity());
          out.records.push_back(std::move(*results[i]));
        } else {
          ++c.failed;
          out.failures.push_back(to_string(p) + " n_query=" + std::to_string(n) + " run " +
                                 std::to_string(jobs[i].run) + ": " + errors[i]);
        }
      }
      c.runs = h.size();
      if (!h.empty()) {
        c.mean_entropy = bootstrap_ci(h, mean, cfg.bootstrap_resamples, derive_seed(cfg.seed, 1000000 + 2 * cell_index));
        c.median_similarity =
          bootstrap_ci(s, median, cfg.bootstrap_resamples, derive_seed(cfg.seed, 1000001 + 2 * cell_index));
      }
      out.cells.push_back(c);
      ++cell_index;
    }
  return out;
}

void write_sweep(const SweepResult& r, const std::string& dir)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f)
      throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("raw.jsonl");
    for (const auto& rec : r.records)
      f << rec.to_json(false).dump() << '\n';
  }
  open("summary.csv") << r.summary_csv();
  open("plot.json") << r.plot_data().dump(2) << '\n';
  {
    auto f = open("timing.csv");
    f << "protocol,n_query,run_id,wall_seconds\n";
    for (const auto& rec : r.records)
      f << to_string(rec.protocol) << ',' << rec.n_query << ',' << rec.run_id << ',' << rec.wall_seconds << '\n';
    for (const auto& msg : r.failures)
      f << "# failed: " << msg << '\n';
  }
}

}  // namespace speclearn
