#pragma once

#include "speclearn/ltl.hpp"
#include "speclearn/template_formula.hpp"

#include <cstddef>
#include <vector>

namespace speclearn {

/// Discrete distribution over template formulas sharing one proposition set.
class Belief
{
public:
  static constexpr double tolerance = 1e-9;

  Belief() = default;

  /// Validates the distribution and merges entries that are equal after canonicalization.
  /// Support order is preserved (first occurrence wins).
  Belief(PropositionSet props, std::vector<TemplateFormula> support, std::vector<double> probs);

  static Belief point_mass(PropositionSet props, TemplateFormula f);

  /// Normalizes log-domain weights, merges duplicates, keeps the `max_support` most probable
  /// formulas (0 keeps all) and sorts by decreasing probability.
  static Belief from_log_weights(PropositionSet props, const std::vector<TemplateFormula>& support,
                                 const std::vector<double>& log_weights, std::size_t max_support = 0);

  const PropositionSet& props() const noexcept { return props_; }
  const std::vector<TemplateFormula>& support() const noexcept { return support_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return support_.size(); }

  /// Most probable formula (first on ties).
  const TemplateFormula& mode() const;

  /// Probability of `f`, 0 when absent.
  double probability(const TemplateFormula& f) const;

  friend bool operator==(const Belief&, const Belief&) = default;

private:
  PropositionSet props_;
  std::vector<TemplateFormula> support_;
  std::vector<double> probs_;
};

/// Shannon entropy in bits.
double entropy(const Belief& b);

/// Expected similarity of the belief's formulas to `truth`.
double belief_similarity(const Belief& b, const TemplateFormula& truth);

/// Probability under `b` that `tr` is an acceptable execution.
double acceptability(const Belief& b, const Trace& tr);

}  // namespace speclearn
