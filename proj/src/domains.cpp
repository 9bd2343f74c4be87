#include "speclearn/domains.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace speclearn {

DomainSpec DomainSpec::dinner(std::vector<std::string> objects)
{
  DomainSpec d;
  d.kind = Kind::Dinner;
  d.objects = std::move(objects);
  if (d.objects.empty())
    throw std::invalid_argument("dinner domain needs at least one object");
  return d;
}

DomainSpec DomainSpec::synthetic(std::size_t waypoints, std::size_t threats)
{
  if (waypoints == 0 || waypoints > 5 || threats > 5)
    throw std::invalid_argument("synthetic domain supports 1-5 waypoints and 0-5 threats");
  DomainSpec d;
  d.kind = Kind::Synthetic;
  d.waypoints = waypoints;
  d.threats = threats;
  return d;
}

DomainSpec dinner3() { return DomainSpec::dinner({"Fork", "Bowl", "Plate"}); }
DomainSpec dinner5() { return DomainSpec::dinner({"DinnerPlate", "SmallPlate", "Bowl", "Fork", "Knife"}); }

DomainSpec DomainSpec::named(const std::string& name)
{
  if (name == "dinner3")
    return dinner3();
  if (name == "dinner5")
    return dinner5();
  if (name == "synthetic")
    return synthetic(5, 5);
  throw std::invalid_argument("unknown domain '" + name + "'");
}

DomainSpec DomainSpec::from_json(const std::string& text)
{
  auto j = nlohmann::json::parse(text);
  if (j.is_string())
    return named(j.get<std::string>());
  if (j.contains("name"))
    return named(j.at("name").get<std::string>());
  const auto kind = j.at("kind").get<std::string>();
  DomainSpec d;
  if (kind == "dinner")
    d = dinner(j.at("objects").get<std::vector<std::string>>());
  else if (kind == "synthetic")
    d = synthetic(j.at("waypoints").get<std::size_t>(), j.at("threats").get<std::size_t>());
  else
    throw std::invalid_argument("unknown domain kind '" + kind + "'");
  d.horizon_slack = j.value("horizon_slack", d.horizon_slack);
  (void)d.props();
  return d;
}

std::string DomainSpec::to_json() const
{
  nlohmann::json j;
  if (kind == Kind::Dinner) {
    j["kind"] = "dinner";
    j["objects"] = objects;
  } else {
    j["kind"] = "synthetic";
    j["waypoints"] = waypoints;
    j["threats"] = threats;
  }
  j["horizon_slack"] = horizon_slack;
  j["props"] = props().names();
  return j.dump();
}

PropositionSet DomainSpec::props() const
{
  if (kind == Kind::Dinner)
    return PropositionSet(objects);
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= waypoints; ++i)
    names.push_back("w" + std::to_string(i));
  for (std::size_t i = 1; i <= threats; ++i)
    names.push_back("t" + std::to_string(i));
  return PropositionSet(std::move(names));
}

std::size_t DomainSpec::target_count() const { return kind == Kind::Dinner ? objects.size() : waypoints + threats; }

ClauseUniverse DomainSpec::universe() const
{
  const auto props_ = props();
  std::vector<std::size_t> all(props_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (kind == Kind::Dinner)
    return ClauseUniverse::standard(props_, all, all, all);
  std::vector<std::size_t> wps(waypoints);
  std::iota(wps.begin(), wps.end(), std::size_t{0});
  return ClauseUniverse::standard(props_, all, wps, wps);
}

EnvironmentMDP build_env(const DomainSpec& spec)
{
  const auto props = spec.props();
  const std::size_t n = props.size();
  if (n > 16)
    throw std::invalid_argument("placement domains support at most 16 targets");
  std::vector<std::string> actions;
  for (const auto& name : props.names())
    actions.push_back((spec.kind == DomainSpec::Kind::Dinner ? "place " : "visit ") + name);

  const std::size_t states = std::size_t{1} << n;
  EnvironmentMDP env(props, states, std::move(actions), 0, n + spec.horizon_slack);
  for (std::size_t x = 0; x < states; ++x) {
    env.set_label(x, TruthAssignment(n, x));
    env.set_complete(x, x == states - 1);
    for (std::size_t a = 0; a < n; ++a)
      env.set_transition(x, a, {{x | (std::size_t{1} << a), 1.0}});
  }
  env.validate();
  return env;
}

TemplateFormula sample_ground_truth(const ClauseUniverse& u, Rng& rng, const GroundTruthOptions& options)
{
  std::uint64_t global_props = 0;
  std::uint64_t eventual_props = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Formula& c = u.clauses()[i];
    if (c.op() == Op::Globally)
      global_props |= c.atoms();
    else if (c.op() == Op::Eventually)
      eventual_props |= c.atoms();
  }
  std::vector<std::size_t> waypoints;
  std::vector<std::size_t> threats;
  for (std::size_t p = 0; p < u.props().size(); ++p) {
    if ((eventual_props >> p) & 1U)
      waypoints.push_back(p);
    else if ((global_props >> p) & 1U)
      threats.push_back(p);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TemplateFormula gt;
  if (!waypoints.empty()) {
    std::uniform_int_distribution<std::size_t> how_many(1, waypoints.size());
    const std::size_t k = how_many(rng);
    std::shuffle(waypoints.begin(), waypoints.end(), rng);
    waypoints.resize(k);
    // `waypoints` is now also the admissible visiting order.
    for (auto w : waypoints)
      gt.add(eventual_clause(w));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        Formula c = order_clause(waypoints[i], waypoints[j]);
        if (u.index_of(c) && unit(rng) < options.order_probability)
          gt.add(c);
      }
  }
  for (auto t : threats)
    if (unit(rng) < options.threat_probability)
      gt.add(global_clause(t));
  return gt;
}

TemplateFormula task1_ground_truth(const DomainSpec& spec)
{
  const auto props = spec.props();
  const auto dp = props.index("DinnerPlate");
  const auto sp = props.index("SmallPlate");
  const auto bowl = props.index("Bowl");
  TemplateFormula gt;
  for (std::size_t p = 0; p < props.size(); ++p)
    gt.add(eventual_clause(p));
  gt.add(order_clause(dp, sp));
  gt.add(order_clause(sp, bowl));
  gt.add(order_clause(dp, bowl));
  return gt;
}

TemplateFormula task2_ground_truth(const DomainSpec& spec)
{
  const auto props = spec.props();
  const auto dp = props.index("DinnerPlate");
  const auto sp = props.index("SmallPlate");
  const auto bowl = props.index("Bowl");
  TemplateFormula gt;
  gt.add(eventual_clause(dp));
  gt.add(eventual_clause(bowl));
  gt.add(order_clause(dp, bowl));
  gt.add(global_clause(sp));
  return gt;
}

}  // namespace speclearn
