#include "speclearn/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace speclearn {

void Dataset::add(Trace trace, bool label)
{
  if (trace.props() != props)
    throw std::invalid_argument("trace propositions do not match the dataset");
  items.push_back({std::move(trace), label});
}

ClauseUniverse::ClauseUniverse(PropositionSet props, std::vector<Formula> global, std::vector<Formula> eventual,
                               std::vector<Formula> order)
  : props_(std::move(props)), n_global_(global.size()), n_eventual_(eventual.size())
{
  for (auto* group : {&global, &eventual, &order})
    for (auto& c : *group)
      clauses_.push_back(canonical(c));
  if (clauses_.size() > max_clauses)
    throw std::invalid_argument("clause universe exceeds 64 clauses");
  for (std::size_t i = 0; i < clauses_.size(); ++i) {
    if (clauses_[i].atoms() >> props_.size())
      throw std::invalid_argument("clause refers to an unknown proposition");
    for (std::size_t j = 0; j < i; ++j)
      if (clauses_[i] == clauses_[j])
        throw std::invalid_argument("duplicate clause in universe");
  }
}

ClauseUniverse ClauseUniverse::standard(const PropositionSet& props, const std::vector<std::size_t>& global_props,
                                        const std::vector<std::size_t>& eventual_props,
                                        const std::vector<std::size_t>& order_props)
{
  std::vector<Formula> g, f, o;
  for (auto p : global_props)
    g.push_back(global_clause(p));
  for (auto p : eventual_props)
    f.push_back(eventual_clause(p));
  for (auto first : order_props)
    for (auto later : order_props)
      if (first != later)
        o.push_back(order_clause(first, later));
  return ClauseUniverse(props, std::move(g), std::move(f), std::move(o));
}

std::optional<std::size_t> ClauseUniverse::index_of(const Formula& clause) const
{
  Formula c = canonical(clause);
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if (clauses_[i] == c)
      return i;
  return std::nullopt;
}

std::optional<ClauseMask> ClauseUniverse::mask_of(const TemplateFormula& f) const
{
  ClauseMask m = 0;
  for (const auto& c : speclearn::clauses(f)) {
    auto i = index_of(c);
    if (!i)
      return std::nullopt;
    m |= ClauseMask{1} << *i;
  }
  return m;
}

TemplateFormula ClauseUniverse::from_mask(ClauseMask mask) const
{
  TemplateFormula t;
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if ((mask >> i) & 1U)
      t.add(clauses_[i]);
  return t;
}

ClauseMask ClauseUniverse::satisfied_by(const Trace& tr) const
{
  ClauseMask m = 0;
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if (satisfies(tr, clauses_[i]))
      m |= ClauseMask{1} << i;
  return m;
}

ClauseMask ClauseUniverse::full_mask() const noexcept
{
  return clauses_.size() == 64 ? ~ClauseMask{0} : (ClauseMask{1} << clauses_.size()) - 1;
}

void InferenceConfig::validate() const
{
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(mcmc_samples > burn_in))
    throw std::invalid_argument("mcmc_samples must exceed burn_in");
  if (!(inclusion_prior > 0.0 && inclusion_prior < 1.0))
    throw std::invalid_argument("inclusion_prior must lie in (0, 1)");
  if (support_k == 0)
    throw std::invalid_argument("support_k must be positive");
  if (chains == 0)
    throw std::invalid_argument("at least one chain is required");
}

double log_likelihood_terms(bool label, bool satisfied, std::size_t clause_count, double epsilon)
{
  static const double ln2 = std::log(2.0);
  const double n = static_cast<double>(clause_count);
  if (label)
    return satisfied ? n * ln2 : std::log(epsilon);
  if (satisfied || clause_count == 0)
    return std::log(epsilon);
  // log(2^n / (2^n - 1))
  return -std::log1p(-std::exp2(-n));
}

double log_likelihood(const LabeledTrace& item, const TemplateFormula& f, const InferenceConfig& cfg)
{
  return log_likelihood_terms(item.label, satisfies(item.trace, f.to_formula()), f.clause_count(), cfg.epsilon);
}

double log_likelihood_dataset(const Dataset& d, const TemplateFormula& f, const InferenceConfig& cfg)
{
  double total = 0.0;
  for (const auto& item : d.items)
    total += log_likelihood(item, f, cfg);
  return total;
}

double log_prior(const TemplateFormula& f, const ClauseUniverse& u, const InferenceConfig& cfg)
{
  auto mask = u.mask_of(f);
  if (!mask)
    return -std::numeric_limits<double>::infinity();
  const auto k = static_cast<double>(std::popcount(*mask));
  const auto n = static_cast<double>(u.size());
  return k * std::log(cfg.inclusion_prior) + (n - k) * std::log1p(-cfg.inclusion_prior);
}

namespace {

struct Scorer
{
  std::vector<ClauseMask> satisfied;
  std::vector<bool> labels;
  double log_in = 0.0;
  double log_out = 0.0;
  double epsilon = 0.01;

  double operator()(ClauseMask m) const
  {
    const auto k = static_cast<std::size_t>(std::popcount(m));
    double s = static_cast<double>(k) * (log_in - log_out);
    for (std::size_t i = 0; i < satisfied.size(); ++i)
      s += log_likelihood_terms(labels[i], (m & ~satisfied[i]) == 0, k, epsilon);
    return s;
  }
};

ClauseMask nth_bit(ClauseMask bits, std::size_t n)
{
  for (std::size_t i = 0; i < n; ++i)
    bits &= bits - 1;
  return bits & (~bits + 1);
}

}  // namespace

Belief infer_posterior(const ClauseUniverse& u, const Dataset& d, const InferenceConfig& cfg)
{
  cfg.validate();
  if (d.empty())
    throw std::invalid_argument("inference needs at least one labeled trace");
  if (d.props != u.props())
    throw std::invalid_argument("dataset and clause universe use different propositions");
  const std::size_t n = u.size();

  Scorer score;
  score.epsilon = cfg.epsilon;
  score.log_in = std::log(cfg.inclusion_prior);
  score.log_out = std::log1p(-cfg.inclusion_prior);
  for (const auto& item : d.items) {
    score.satisfied.push_back(u.satisfied_by(item.trace));
    score.labels.push_back(item.label);
  }

  std::unordered_map<ClauseMask, std::size_t> visits;
  const ClauseMask full = u.full_mask();

  for (std::size_t chain = 0; chain < cfg.chains; ++chain) {
    std::mt19937_64 rng(cfg.rng_seed + 0x9e3779b97f4a7c15ULL * chain);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ClauseMask state = 0;
    double current = score(state);

    for (std::size_t it = 0; it < cfg.mcmc_samples; ++it) {
      ClauseMask proposal = state;
      if (n > 0) {
        const bool toggle = unit(rng) < 0.5;
        const auto present = static_cast<std::size_t>(std::popcount(state));
        if (toggle) {
          std::uniform_int_distribution<std::size_t> pick(0, n - 1);
          proposal ^= ClauseMask{1} << pick(rng);
        } else if (present > 0 && present < n) {
          std::uniform_int_distribution<std::size_t> pick_in(0, present - 1);
          std::uniform_int_distribution<std::size_t> pick_out(0, n - present - 1);
          ClauseMask drop = nth_bit(state, pick_in(rng));
          ClauseMask add = nth_bit(full & ~state, pick_out(rng));
          proposal = (state & ~drop) | add;
        }
      }
      if (proposal != state) {
        const double candidate = score(proposal);
        if (candidate >= current || unit(rng) < std::exp(candidate - current)) {
          state = proposal;
          current = candidate;
        }
      }
      if (it >= cfg.burn_in)
        ++visits[state];
    }
  }

  std::vector<std::pair<ClauseMask, std::size_t>> ranked(visits.begin(), visits.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cfg.support_k)
    ranked.resize(cfg.support_k);

  std::size_t total = 0;
  for (const auto& r : ranked)
    total += r.second;
  std::vector<TemplateFormula> support;
  std::vector<double> probs;
  for (const auto& [mask, count] : ranked) {
    support.push_back(u.from_mask(mask));
    probs.push_back(static_cast<double>(count) / static_cast<double>(total));
  }
  return Belief(u.props(), std::move(support), std::move(probs));
}

Belief update_belief(const Belief& prior, const Dataset& d, const InferenceConfig& cfg)
{
  cfg.validate();
  std::vector<double> logw;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    double p = prior.probs()[i];
    logw.push_back(p > 0.0 ? std::log(p) + log_likelihood_dataset(d, prior.support()[i], cfg)
                           : -std::numeric_limits<double>::infinity());
  }
  return Belief::from_log_weights(prior.props(), prior.support(), logw, cfg.support_k);
}

}  // namespace speclearn
