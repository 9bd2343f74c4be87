#pragma once

#include "speclearn/domains.hpp"
#include "speclearn/experiments.hpp"
#include "speclearn/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace speclearn::cli {

inline std::string read_file(const std::string& path)
{
  std::ifstream f(path);
  if (!f)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// A domain name or a path to a domain JSON file.
inline DomainSpec load_domain(const std::string& name_or_path)
{
  if (name_or_path.size() > 5 && name_or_path.substr(name_or_path.size() - 5) == ".json")
    return DomainSpec::from_json(read_file(name_or_path));
  return DomainSpec::named(name_or_path);
}

inline void add_inference_flags(CLI::App& app, InferenceConfig& c)
{
  app.add_option("--epsilon", c.epsilon, "likelihood floor for contradicted examples")->capture_default_str();
  app.add_option("--samples", c.mcmc_samples, "MH iterations per chain, burn-in included")->capture_default_str();
  app.add_option("--burn-in", c.burn_in, "MH samples discarded per chain")->capture_default_str();
  app.add_option("--support-k", c.support_k, "formulas kept in a belief")->capture_default_str();
  app.add_option("--inclusion-prior", c.inclusion_prior, "prior probability of each clause")->capture_default_str();
  app.add_option("--chains", c.chains, "independent MH chains")->capture_default_str();
}

inline void add_planner_flags(CLI::App& app, QLearningConfig& c, PlannerKind& kind)
{
  app.add_option("--alpha", c.alpha, "Q-learning step size")->capture_default_str();
  app.add_option("--gamma", c.gamma, "discount")->capture_default_str();
  app.add_option("--episodes", c.episodes, "Q-learning episodes")->capture_default_str();
  app.add_option("--epsilon-greedy", c.epsilon_start, "initial exploration rate")->capture_default_str();
  app.add_option("--epsilon-greedy-end", c.epsilon_end, "final exploration rate")->capture_default_str();
  app.add_option("--planner", kind, "qlearning or exact (backward induction)")
    ->transform(CLI::CheckedTransformer(std::map<std::string, PlannerKind>{{"qlearning", PlannerKind::QLearning},
                                                                           {"exact", PlannerKind::Exact}}));
}

/// Applies {"inference": {...}, "planner": {...}} from a JSON file; flags given on the
/// command line are applied afterwards by the caller.
inline void apply_json_config(const std::string& path, InferenceConfig& inf, QLearningConfig& plan)
{
  auto j = json::parse(read_file(path));
  if (j.contains("inference"))
    inf = inference_config_from_json(j["inference"], inf);
  if (j.contains("planner"))
    plan = qlearning_config_from_json(j["planner"], plan);
}

/// "1..6", "1,3,6" or a mix such as "1..3,6".
inline std::vector<std::size_t> parse_range_list(const std::string& text)
{
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    if (part.empty())
      continue;
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(std::stoul(part));
    } else {
      const auto lo = std::stoul(part.substr(0, dots));
      const auto hi = std::stoul(part.substr(dots + 2));
      if (hi < lo)
        throw std::invalid_argument("empty range " + part);
      for (auto v = lo; v <= hi; ++v)
        out.push_back(v);
    }
  }
  if (out.empty())
    throw std::invalid_argument("empty list '" + text + "'");
  return out;
}

}  // namespace speclearn::cli
