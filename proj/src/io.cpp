#include "speclearn/io.hpp"

namespace speclearn {

json trace_to_json(const Trace& tr)
{
  json steps = json::array();
  for (const auto& a : tr.steps()) {
    json row = json::array();
    for (std::size_t i = 0; i < a.size(); ++i)
      row.push_back(a[i] ? 1 : 0);
    steps.push_back(std::move(row));
  }
  return steps;
}

Trace trace_from_json(const json& j, const PropositionSet& props)
{
  if (!j.is_array() || j.empty())
    throw ParseError("trace must be a non-empty list of steps", 0);
  std::vector<TruthAssignment> steps;
  for (std::size_t t = 0; t < j.size(); ++t) {
    const auto& row = j[t];
    if (!row.is_array() || row.size() != props.size())
      throw ParseError("step " + std::to_string(t) + " must list " + std::to_string(props.size()) + " values", t);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      bool v;
      if (row[i].is_boolean())
        v = row[i].get<bool>();
      else if (row[i].is_number_integer() && (row[i] == 0 || row[i] == 1))
        v = row[i].get<int>() == 1;
      else
        throw ParseError("step values must be 0 or 1", t);
      if (v)
        bits |= std::uint64_t{1} << i;
    }
    steps.emplace_back(props.size(), bits);
  }
  return Trace(props, std::move(steps));
}

json dataset_to_json(const Dataset& d)
{
  json items = json::array();
  for (const auto& it : d.items)
    items.push_back({{"steps", trace_to_json(it.trace)}, {"label", it.label ? 1 : 0}});
  return {{"props", d.props.names()}, {"items", std::move(items)}};
}

static bool label_of(const json& j)
{
  if (j.is_boolean())
    return j.get<bool>();
  if (j.is_number_integer() && (j == 0 || j == 1))
    return j.get<int>() == 1;
  throw ParseError("label must be 0 or 1", 0);
}

Dataset dataset_from_json(const json& j)
{
  Dataset d(PropositionSet(j.at("props").get<std::vector<std::string>>()));
  for (const auto& it : j.at("items"))
    d.add(trace_from_json(it.at("steps"), d.props), label_of(it.at("label")));
  return d;
}

json belief_to_json(const Belief& b)
{
  json support = json::array();
  for (std::size_t i = 0; i < b.size(); ++i)
    support.push_back({{"formula", to_string(b.support()[i], b.props())}, {"prob", b.probs()[i]}});
  return {{"props", b.props().names()}, {"support", std::move(support)}};
}

Belief belief_from_json(const json& j)
{
  PropositionSet props(j.at("props").get<std::vector<std::string>>());
  std::vector<TemplateFormula> support;
  std::vector<double> probs;
  for (const auto& e : j.at("support")) {
    support.push_back(parse_template(e.at("formula").get<std::string>(), props));
    probs.push_back(e.at("prob").get<double>());
  }
  return Belief(std::move(props), std::move(support), std::move(probs));
}

json inference_config_to_json(const InferenceConfig& c)
{
  return {{"epsilon", c.epsilon},     {"samples", c.mcmc_samples},          {"burn_in", c.burn_in},
          {"seed", c.rng_seed},       {"support_k", c.support_k},           {"inclusion_prior", c.inclusion_prior},
          {"chains", c.chains}};
}

InferenceConfig inference_config_from_json(const json& j, InferenceConfig c)
{
  c.epsilon = j.value("epsilon", c.epsilon);
  c.mcmc_samples = j.value("samples", c.mcmc_samples);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.rng_seed = j.value("seed", c.rng_seed);
  c.support_k = j.value("support_k", c.support_k);
  c.inclusion_prior = j.value("inclusion_prior", c.inclusion_prior);
  c.chains = j.value("chains", c.chains);
  c.validate();
  return c;
}

json qlearning_config_to_json(const QLearningConfig& c)
{
  return {{"alpha", c.alpha},
          {"gamma", c.gamma},
          {"epsilon_greedy", c.epsilon_start},
          {"epsilon_greedy_end", c.epsilon_end},
          {"episodes", c.episodes},
          {"initial_q", c.initial_q}};
}

QLearningConfig qlearning_config_from_json(const json& j, QLearningConfig c)
{
  c.alpha = j.value("alpha", c.alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.epsilon_start = j.value("epsilon_greedy", c.epsilon_start);
  c.epsilon_end = j.value("epsilon_greedy_end", c.epsilon_end);
  c.episodes = j.value("episodes", c.episodes);
  c.initial_q = j.value("initial_q", c.initial_q);
  c.validate();
  return c;
}

}  // namespace speclearn
