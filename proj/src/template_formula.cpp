#include "speclearn/template_formula.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

namespace speclearn {

Formula global_clause(std::size_t prop)
{
  return canonical(Formula::globally(Formula::negation(Formula::atom(prop))));
}

Formula eventual_clause(std::size_t prop) { return canonical(Formula::eventually(Formula::atom(prop))); }

Formula order_clause(std::size_t first, std::size_t later)
{
  return canonical(Formula::until(Formula::negation(Formula::atom(later)), Formula::atom(first)));
}

void TemplateFormula::add(const Formula& clause)
{
  Formula c = canonical(clause);
  switch (c.op()) {
    case Op::Globally: global.insert(c); break;
    case Op::Eventually: eventual.insert(c); break;
    case Op::Until: order.insert(c); break;
    default: throw std::invalid_argument("not a template clause: expected a G, F or U formula");
  }
}

TemplateFormula TemplateFormula::from_formula(const Formula& f)
{
  TemplateFormula t;
  Formula c = canonical(f);
  if (c.is_true())
    return t;
  if (c.op() == Op::And) {
    for (const auto& k : c.children())
      t.add(k);
  } else {
    t.add(c);
  }
  return t;
}

Formula TemplateFormula::to_formula() const
{
  std::vector<Formula> kids;
  kids.reserve(clause_count());
  kids.insert(kids.end(), global.begin(), global.end());
  kids.insert(kids.end(), eventual.begin(), eventual.end());
  kids.insert(kids.end(), order.begin(), order.end());
  return canonical(Formula::conjunction(std::move(kids)));
}

std::set<Formula> clauses(const TemplateFormula& f)
{
  std::set<Formula> all = f.global;
  all.insert(f.eventual.begin(), f.eventual.end());
  all.insert(f.order.begin(), f.order.end());
  return all;
}

double similarity(const TemplateFormula& a, const TemplateFormula& b)
{
  auto ca = clauses(a);
  auto cb = clauses(b);
  if (ca.empty() && cb.empty())
    return 1.0;
  std::vector<Formula> common;
  std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  const double uni = static_cast<double>(ca.size() + cb.size()) - inter;
  return inter / uni;
}

TemplateFormula parse_template(std::string_view text, const PropositionSet& props)
{
  return TemplateFormula::from_formula(parse(text, props));
}

std::string to_string(const TemplateFormula& f, const PropositionSet& props)
{
  return to_string(f.to_formula(), props);
}

}  // namespace speclearn
