#pragma once

#include "speclearn/belief.hpp"
#include "speclearn/ltl.hpp"
#include "speclearn/template_formula.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace speclearn {

struct LabeledTrace
{
  Trace trace;
  bool label = true;

  friend bool operator==(const LabeledTrace&, const LabeledTrace&) = default;
};

struct Dataset
{
  PropositionSet props;
  std::vector<LabeledTrace> items;

  Dataset() = default;
  explicit Dataset(PropositionSet p) : props(std::move(p)) {}

  /// Appends an item; throws std::invalid_argument if the trace uses other propositions.
  void add(Trace trace, bool label);

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

using ClauseMask = std::uint64_t;

/// Finite vocabulary of template clauses the prior draws from (at most 64 clauses).
class ClauseUniverse
{
public:
  static constexpr std::size_t max_clauses = 64;

  ClauseUniverse() = default;
  ClauseUniverse(PropositionSet props, std::vector<Formula> global, std::vector<Formula> eventual,
                 std::vector<Formula> order);

  /// G !p for every p in `global_props`, F p for every p in `eventual_props` and
  /// !q U p for every ordered pair of distinct propositions in `order_props`.
  static ClauseUniverse standard(const PropositionSet& props, const std::vector<std::size_t>& global_props,
                                 const std::vector<std::size_t>& eventual_props,
                                 const std::vector<std::size_t>& order_props);

  const PropositionSet& props() const noexcept { return props_; }
  const std::vector<Formula>& clauses() const noexcept { return clauses_; }
  std::size_t size() const noexcept { return clauses_.size(); }
  std::size_t global_count() const noexcept { return n_global_; }
  std::size_t eventual_count() const noexcept { return n_eventual_; }

  std::optional<std::size_t> index_of(const Formula& clause) const;
  /// Mask of the template's clauses, or nullopt if one lies outside the universe.
  std::optional<ClauseMask> mask_of(const TemplateFormula& f) const;
  TemplateFormula from_mask(ClauseMask mask) const;
  /// Bit i is set when `tr` satisfies clause i.
  ClauseMask satisfied_by(const Trace& tr) const;

  ClauseMask full_mask() const noexcept;

private:
  PropositionSet props_;
  std::vector<Formula> clauses_;
  std::size_t n_global_ = 0;
  std::size_t n_eventual_ = 0;
};

struct InferenceConfig
{
  double epsilon = 0.01;
  std::size_t mcmc_samples = 20000;
  std::size_t burn_in = 2000;
  double inclusion_prior = 0.3;
  std::size_t support_k = 32;
  std::uint64_t rng_seed = 0;
  /// Independent chains whose post-burn-in samples are pooled.
  std::size_t chains = 1;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Unnormalized per-item log-likelihood. Ratios between formulas reproduce the
/// clause-counting odds: 2^N for a satisfied positive example, 2^N / (2^N - 1) for a
/// violated negative example, epsilon for any example that contradicts the formula.
double log_likelihood(const LabeledTrace& item, const TemplateFormula& f, const InferenceConfig& cfg);

/// Same quantity from precomputed facts: label, whether the trace satisfies the formula,
/// and the formula's clause count.
double log_likelihood_terms(bool label, bool satisfied, std::size_t clause_count, double epsilon);

double log_likelihood_dataset(const Dataset& d, const TemplateFormula& f, const InferenceConfig& cfg);

/// Independent-inclusion prior; -inf for clauses outside the universe.
double log_prior(const TemplateFormula& f, const ClauseUniverse& u, const InferenceConfig& cfg);

/// Metropolis-Hastings over clause subsets of `u`, collapsed into a belief of at most
/// cfg.support_k formulas weighted by visit frequency.
Belief infer_posterior(const ClauseUniverse& u, const Dataset& d, const InferenceConfig& cfg);

/// Exact Bayes update of a discrete prior belief.
Belief update_belief(const Belief& prior, const Dataset& d, const InferenceConfig& cfg);

}  // namespace speclearn
