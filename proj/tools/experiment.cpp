// Benchmark harness: protocol sweeps, single runs and scripted teaching sessions.
#include "options.hpp"

#include "speclearn/session.hpp"

#include <iostream>

using namespace speclearn;

namespace {

struct Common
{
  std::string domain = "synthetic";
  std::string config_json;
  InferenceConfig inference;
  QLearningConfig planner;
  PlannerKind planner_kind = PlannerKind::QLearning;

  void add(CLI::App& app)
  {
    app.add_option("--domain", domain, "dinner3, dinner5, synthetic or a domain JSON file")->capture_default_str();
    app.add_option("--config-json", config_json, "JSON file with \"inference\" and \"planner\" sections");
    cli::add_inference_flags(app, inference);
    cli::add_planner_flags(app, planner, planner_kind);
  }

  ProtocolConfig protocol() const
  {
    ProtocolConfig pc;
    pc.domain = cli::load_domain(domain);
    pc.inference = inference;
    pc.planner = planner;
    pc.planner_kind = planner_kind;
    return pc;
  }
};

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Active specification learning experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with flag values");

  Common common;

  auto* sw = app.add_subcommand("sweep", "run a protocol x n_query grid and write aggregates");
  std::string protocols = "active,random,batch";
  std::string n_query = "1..6";
  std::size_t runs = 30;
  bool paper_runs = false;
  std::uint64_t seed = 7;
  std::string out = "results";
  std::size_t threads = 0;
  std::size_t resamples = 1000;
  sw->add_option("--protocols", protocols, "comma separated")->capture_default_str();
  sw->add_option("--n-query", n_query, "list or range, e.g. 1..6 or 1,3,6")->capture_default_str();
  sw->add_option("--runs", runs, "runs per cell")->capture_default_str();
  sw->add_flag("--paper-runs", paper_runs, "200 runs per cell");
  sw->add_option("--seed", seed, "master seed")->capture_default_str();
  sw->add_option("--out", out, "output directory")->capture_default_str();
  sw->add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
  sw->add_option("--bootstrap", resamples, "bootstrap resamples")->capture_default_str();
  common.add(*sw);

  auto* run = app.add_subcommand("run", "one protocol run, printed as JSON");
  std::string protocol = "active";
  std::size_t run_queries = 3;
  std::uint64_t run_seed = 0;
  run->add_option("--protocol", protocol, "active, random or batch")->capture_default_str();
  run->add_option("--n-query", run_queries, "queries or extra demonstrations")->capture_default_str();
  run->add_option("--seed", run_seed, "run seed")->capture_default_str();
  common.add(*run);

  auto* script = app.add_subcommand("session-script",
                                    "simulated teacher on dinner5, task 1: 2 demos, 3 queries, 3 rollouts");
  std::size_t sessions = 20;
  std::uint64_t script_seed = 11;
  script->add_option("--sessions", sessions, "number of sessions")->capture_default_str();
  script->add_option("--seed", script_seed, "master seed")->capture_default_str();
  cli::add_inference_flags(*script, common.inference);
  cli::add_planner_flags(*script, common.planner, common.planner_kind);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!common.config_json.empty()) {
      // Flags win over the file, so reparse them on top of it.
      cli::apply_json_config(common.config_json, common.inference, common.planner);
      app.clear();
      app.parse(argc, argv);
    }

    if (*sw) {
      SweepConfig sc;
      sc.protocols.clear();
      std::stringstream ss(protocols);
      for (std::string p; std::getline(ss, p, ',');)
        sc.protocols.push_back(protocol_from_string(p));
      sc.n_query = cli::parse_range_list(n_query);
      sc.runs = paper_runs ? 200 : runs;
      sc.seed = seed;
      sc.threads = threads;
      sc.bootstrap_resamples = resamples;
      sc.base = common.protocol();
      auto result = sweep(sc);
      write_sweep(result, out);
      std::cout << result.summary_csv();
      for (const auto& f : result.failures)
        std::cerr << "failed: " << f << '\n';
      return 0;
    }
    if (*run) {
      ProtocolConfig pc = common.protocol();
      pc.protocol = protocol_from_string(protocol);
      pc.n_query = run_queries;
      std::cout << run_protocol(pc, run_seed).to_json().dump(2) << '\n';
      return 0;
    }
    if (*script) {
      SessionManager manager;
      const auto domain = dinner5();
      const auto truth = task1_ground_truth(domain);
      std::size_t passed = 0;
      for (std::size_t i = 0; i < sessions; ++i) {
        SessionConfig sc;
        sc.seed = derive_seed(script_seed, 2 * i);
        sc.inference = common.inference;
        sc.planner = common.planner;
        sc.planner_kind = common.planner_kind;
        auto r = run_scripted_session(manager, domain, truth, sc, derive_seed(script_seed, 2 * i + 1));
        passed += r.final_similarity >= 0.8;
        std::cout << r.session_id << " similarity " << r.final_similarity << '\n';
      }
      std::cout << passed << "/" << sessions << " sessions reached similarity 0.8\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
