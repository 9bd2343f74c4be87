// Offline utilities over trace, dataset and belief files.
#include "options.hpp"

#include "speclearn/reward_machine.hpp"

#include <iostream>

using namespace speclearn;

int main(int argc, char** argv)
{
  CLI::App app{"Specification inference utilities"};
  app.require_subcommand(1);

  auto* check = app.add_subcommand("check", "evaluate a formula on a trace");
  std::string formula, props_csv, trace_file;
  check->add_option("--formula", formula)->required();
  check->add_option("--props", props_csv, "comma separated proposition names")->required();
  check->add_option("--trace", trace_file, "JSON list of 0/1 rows, inline or in a file")->required();

  auto* infer = app.add_subcommand("infer", "posterior belief from a dataset file");
  std::string dataset_file, domain = "dinner5";
  InferenceConfig inf;
  infer->add_option("--dataset", dataset_file)->required();
  infer->add_option("--domain", domain, "vocabulary: dinner3, dinner5, synthetic or domain JSON")->capture_default_str();
  infer->add_option("--seed", inf.rng_seed)->capture_default_str();
  cli::add_inference_flags(*infer, inf);

  auto* comp = app.add_subcommand("compile", "reward machine of a belief file");
  std::string belief_file, format = "dot";
  std::size_t max_states = CompileOptions{}.max_states;
  comp->add_option("--belief", belief_file)->required();
  comp->add_option("--format", format)->check(CLI::IsMember({"dot", "json"}))->capture_default_str();
  comp->add_option("--max-states", max_states)->capture_default_str();

  auto* dom = app.add_subcommand("domain", "print a domain description");
  std::string dom_name = "dinner5";
  dom->add_option("name", dom_name)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      std::vector<std::string> names;
      std::stringstream ss(props_csv);
      for (std::string n; std::getline(ss, n, ',');)
        names.push_back(n);
      PropositionSet props(names);
      Formula f = parse(formula, props);
      const bool inline_json = !trace_file.empty() && trace_file.front() == '[';
      Trace tr = trace_from_json(json::parse(inline_json ? trace_file : cli::read_file(trace_file)), props);
      const bool ok = evaluate(f, tr);
      std::cout << (ok ? "satisfied" : "violated") << '\n';
      return ok ? 0 : 2;
    }
    if (*infer) {
      Dataset d = dataset_from_json(json::parse(cli::read_file(dataset_file)));
      DomainSpec spec = cli::load_domain(domain);
      ClauseUniverse u = spec.universe();
      Belief b = infer_posterior(u, d, inf);
      json out = belief_to_json(b);
      out["entropy"] = entropy(b);
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*comp) {
      Belief b = belief_from_json(json::parse(cli::read_file(belief_file)));
      RewardMachine m = compile(b, {max_states});
      std::cout << (format == "dot" ? m.to_dot() : m.to_json()) << '\n';
      return 0;
    }
    if (*dom) {
      std::cout << json::parse(cli::load_domain(dom_name).to_json()).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
