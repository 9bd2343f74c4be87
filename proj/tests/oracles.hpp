#pragma once
// Independent reference implementations used as test oracles. Written straight from the
// textbook definitions; nothing here calls into the library's semantics.

#include "speclearn/belief.hpp"
#include "speclearn/inference.hpp"
#include "speclearn/ltl.hpp"
#include "speclearn/planner.hpp"
#include "speclearn/template_formula.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using namespace speclearn;

/// Finite-trace satisfaction by direct quantification over positions.
inline bool holds(const Formula& f, const std::vector<std::uint64_t>& w, std::size_t t)
{
  const std::size_t n = w.size();
  switch (f.op()) {
  case Op::True:
    return true;
  case Op::False:
    return false;
  case Op::Atom:
    return (w[t] >> f.atom_index()) & 1U;
  case Op::Not:
    return !holds(f.child(0), w, t);
  case Op::And:
    for (const auto& c : f.children())
      if (!holds(c, w, t))
        return false;
    return true;
  case Op::Or:
    for (const auto& c : f.children())
      if (holds(c, w, t))
        return true;
    return false;
  case Op::Next:
    return t + 1 < n && holds(f.child(0), w, t + 1);
  case Op::Until:
    for (std::size_t k = t; k < n; ++k) {
      if (holds(f.child(1), w, k))
        return true;
      if (!holds(f.child(0), w, k))
        return false;
    }
    return false;
  case Op::Eventually:
    for (std::size_t k = t; k < n; ++k)
      if (holds(f.child(0), w, k))
        return true;
    return false;
  case Op::Globally:
    for (std::size_t k = t; k < n; ++k)
      if (!holds(f.child(0), w, k))
        return false;
    return true;
  }
  return false;
}

inline std::vector<std::uint64_t> bits_of(const Trace& tr)
{
  std::vector<std::uint64_t> w;
  for (const auto& a : tr.steps())
    w.push_back(a.bits());
  return w;
}

inline bool holds(const Formula& f, const Trace& tr) { return holds(f, bits_of(tr), 0); }

inline Trace make_trace(const PropositionSet& props, const std::vector<std::uint64_t>& w)
{
  std::vector<TruthAssignment> steps;
  for (auto b : w)
    steps.emplace_back(props.size(), b);
  return Trace(props, steps);
}

/// Calls `fn` on every trace of length 1..max_len over `n_props` propositions.
inline void for_each_trace(std::size_t n_props, std::size_t max_len,
                           const std::function<void(const std::vector<std::uint64_t>&)>& fn)
{
  const std::uint64_t letters = std::uint64_t{1} << n_props;
  std::vector<std::uint64_t> w;
  std::function<void()> rec = [&] {
    if (!w.empty())
      fn(w);
    if (w.size() == max_len)
      return;
    for (std::uint64_t a = 0; a < letters; ++a) {
      w.push_back(a);
      rec();
      w.pop_back();
    }
  };
  rec();
}

/// Random LTL formula of bounded depth over `n_props` atoms.
inline Formula random_formula(std::mt19937_64& rng, std::size_t n_props, int depth)
{
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  std::uniform_int_distribution<std::size_t> atom(0, n_props - 1);
  switch (pick(rng)) {
  case 0:
  case 1:
    return Formula::atom(atom(rng));
  case 2:
    return std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? Formula::top() : Formula::atom(atom(rng));
  case 3:
    return Formula::negation(random_formula(rng, n_props, depth - 1));
  case 4:
    return Formula::conjunction({random_formula(rng, n_props, depth - 1), random_formula(rng, n_props, depth - 1)});
  case 5:
    return Formula::disjunction({random_formula(rng, n_props, depth - 1), random_formula(rng, n_props, depth - 1)});
  case 6:
    return Formula::next(random_formula(rng, n_props, depth - 1));
  case 7:
  case 8:
    return Formula::until(random_formula(rng, n_props, depth - 1), random_formula(rng, n_props, depth - 1));
  case 9:
    return Formula::eventually(random_formula(rng, n_props, depth - 1));
  case 10:
    return Formula::globally(random_formula(rng, n_props, depth - 1));
  default:
    return Formula::bottom();
  }
}

/// Every template clause over `n` propositions: G !p, F p and !q U p.
inline std::vector<Formula> all_clauses(std::size_t n)
{
  std::vector<Formula> out;
  for (std::size_t p = 0; p < n; ++p)
    out.push_back(Formula::globally(Formula::negation(Formula::atom(p))));
  for (std::size_t p = 0; p < n; ++p)
    out.push_back(Formula::eventually(Formula::atom(p)));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      if (p != q)
        out.push_back(Formula::until(Formula::negation(Formula::atom(q)), Formula::atom(p)));
  return out;
}

/// Random conjunction of 1..max_clauses distinct template clauses.
inline Formula random_template(std::mt19937_64& rng, std::size_t n_props, std::size_t max_clauses)
{
  auto pool = all_clauses(n_props);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::uniform_int_distribution<std::size_t> k(1, max_clauses);
  pool.resize(std::min(pool.size(), k(rng)));
  return Formula::conjunction(pool);
}

/// Best discounted return over all action sequences of a deterministic product,
/// by exhaustive search (exponential; small instances only).
inline double best_return(const ProductMDP& p, const ProductState& s, double gamma)
{
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < p.action_count(); ++a) {
    const auto& out = p.env().outcomes(s.env, a);
    ProductStep st = p.step_to(s, out.front().next);
    const double v = st.done ? st.reward : gamma * best_return(p, st.next, gamma);
    best = std::max(best, v);
  }
  return best;
}

/// Random belief over `props` with 1..max_support template formulas of up to
/// `max_clauses` clauses each.
inline Belief random_belief(std::mt19937_64& rng, const PropositionSet& props, std::size_t max_support,
                            std::size_t max_clauses)
{
  std::uniform_int_distribution<std::size_t> k(1, max_support);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  std::vector<TemplateFormula> support;
  std::vector<double> probs;
  double z = 0.0;
  for (std::size_t i = k(rng); i > 0; --i) {
    support.push_back(TemplateFormula::from_formula(canonical(random_template(rng, props.size(), max_clauses))));
    probs.push_back(w(rng));
    z += probs.back();
  }
  for (auto& p : probs)
    p /= z;
  return Belief(props, support, probs);
}

/// Posterior over every subset of `u` by enumeration, in plain probability space:
/// Bernoulli inclusion prior times the per-item likelihood factors.
inline std::map<TemplateFormula, double> exact_posterior(const ClauseUniverse& u, const Dataset& d, double eps,
                                                         double rho)
{
  std::map<TemplateFormula, double> out;
  double z = 0.0;
  for (ClauseMask m = 0; m < (ClauseMask{1} << u.size()); ++m) {
    TemplateFormula f;
    std::size_t n = 0;
    double w = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const bool in = (m >> i) & 1U;
      w *= in ? rho : 1.0 - rho;
      if (in) {
        f.add(u.clauses()[i]);
        ++n;
      }
    }
    for (const auto& item : d.items) {
      const bool sat = holds(f.to_formula(), item.trace);
      const double two_n = std::pow(2.0, static_cast<double>(n));
      if (item.label)
        w *= sat ? two_n : eps;
      else if (sat || n == 0)
        w *= eps;
      else
        w *= two_n / (two_n - 1.0);
    }
    out[f] = w;
    z += w;
  }
  for (auto& [f, w] : out)
    w /= z;
  return out;
}

inline double total_variation(const Belief& b, const std::map<TemplateFormula, double>& exact)
{
  double tv = 0.0;
  for (const auto& [f, p] : exact)
    tv += std::abs(p - b.probability(f));
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!exact.count(b.support()[i]))
      tv += b.probs()[i];
  return 0.5 * tv;
}

}  // namespace oracle
