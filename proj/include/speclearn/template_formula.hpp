#pragma once

#include "speclearn/ltl.hpp"

#include <set>
#include <string>

namespace speclearn {

/// G !p
Formula global_clause(std::size_t prop);
/// F p
Formula eventual_clause(std::size_t prop);
/// !later U first -- `later` may not hold before `first` has held.
Formula order_clause(std::size_t first, std::size_t later);

/// Conjunction of template clauses. The empty template is `true`.
struct TemplateFormula
{
  std::set<Formula> global;
  std::set<Formula> eventual;
  std::set<Formula> order;

  /// Splits a canonical conjunction into its template clauses. Throws
  /// std::invalid_argument when a conjunct is not a template clause.
  static TemplateFormula from_formula(const Formula& f);

  /// Routes a single clause into the matching set.
  void add(const Formula& clause);

  Formula to_formula() const;
  std::size_t clause_count() const noexcept { return global.size() + eventual.size() + order.size(); }
  bool empty() const noexcept { return clause_count() == 0; }

  friend bool operator==(const TemplateFormula&, const TemplateFormula&) = default;
  friend auto operator<=>(const TemplateFormula&, const TemplateFormula&) = default;
};

std::set<Formula> clauses(const TemplateFormula& f);

/// Intersection over union of the clause sets; 1 when both are empty.
double similarity(const TemplateFormula& a, const TemplateFormula& b);

TemplateFormula parse_template(std::string_view text, const PropositionSet& props);
std::string to_string(const TemplateFormula& f, const PropositionSet& props);

}  // namespace speclearn
