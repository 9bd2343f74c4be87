#include "speclearn/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace speclearn {

Belief::Belief(PropositionSet props, std::vector<TemplateFormula> support, std::vector<double> probs)
  : props_(std::move(props))
{
  if (support.size() != probs.size())
    throw std::invalid_argument("belief support and probabilities differ in length");
  if (support.empty())
    throw std::invalid_argument("belief support is empty");

  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i]))
      throw std::invalid_argument("belief probabilities must be finite and non-negative");
    total += probs[i];
    auto it = std::find(support_.begin(), support_.end(), support[i]);
    if (it == support_.end()) {
      support_.push_back(std::move(support[i]));
      probs_.push_back(probs[i]);
    } else {
      probs_[static_cast<std::size_t>(it - support_.begin())] += probs[i];
    }
  }
  if (std::abs(total - 1.0) > tolerance)
    throw std::invalid_argument("belief probabilities sum to " + std::to_string(total) + ", not 1");
}

Belief Belief::point_mass(PropositionSet props, TemplateFormula f)
{
  return Belief(std::move(props), {std::move(f)}, {1.0});
}

Belief Belief::from_log_weights(PropositionSet props, const std::vector<TemplateFormula>& support,
                                const std::vector<double>& log_weights, std::size_t max_support)
{
  if (support.size() != log_weights.size())
    throw std::invalid_argument("support and weights differ in length");

  // Merge duplicates with log-sum-exp.
  std::map<TemplateFormula, double> merged;
  for (std::size_t i = 0; i < support.size(); ++i) {
    auto [it, inserted] = merged.emplace(support[i], log_weights[i]);
    if (!inserted) {
      double hi = std::max(it->second, log_weights[i]);
      double lo = std::min(it->second, log_weights[i]);
      it->second = hi + std::log1p(std::exp(lo - hi));
    }
  }

  std::vector<std::pair<TemplateFormula, double>> entries(merged.begin(), merged.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (max_support > 0 && entries.size() > max_support)
    entries.resize(max_support);
  if (entries.empty() || entries.front().second == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("no support entry has positive weight");

  const double top = entries.front().second;
  std::vector<TemplateFormula> out_support;
  std::vector<double> out_probs;
  double total = 0.0;
  for (auto& [f, lw] : entries) {
    double w = std::exp(lw - top);
    out_support.push_back(f);
    out_probs.push_back(w);
    total += w;
  }
  for (auto& p : out_probs)
    p /= total;
  return Belief(std::move(props), std::move(out_support), std::move(out_probs));
}

const TemplateFormula& Belief::mode() const
{
  if (support_.empty())
    throw std::logic_error("empty belief has no mode");
  auto it = std::max_element(probs_.begin(), probs_.end());
  return support_[static_cast<std::size_t>(it - probs_.begin())];
}

double Belief::probability(const TemplateFormula& f) const
{
  for (std::size_t i = 0; i < support_.size(); ++i)
    if (support_[i] == f)
      return probs_[i];
  return 0.0;
}

double entropy(const Belief& b)
{
  double h = 0.0;
  for (double p : b.probs())
    if (p > 0.0)
      h -= p * std::log2(p);
  return h;
}

double belief_similarity(const Belief& b, const TemplateFormula& truth)
{
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    s += b.probs()[i] * similarity(b.support()[i], truth);
  return s;
}

double acceptability(const Belief& b, const Trace& tr)
{
  if (tr.props() != b.props())
    throw std::invalid_argument("trace and belief use different propositions");
  double p = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (satisfies(tr, b.support()[i].to_formula()))
      p += b.probs()[i];
  return p;
}

}  // namespace speclearn
