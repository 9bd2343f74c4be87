#pragma once

#include "speclearn/inference.hpp"
#include "speclearn/planner.hpp"
#include "speclearn/template_formula.hpp"

#include <memory>
#include <vector>

namespace speclearn {

/// Thrown when the ground truth cannot be satisfied inside the environment's horizon.
class PlanningFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Perfect teacher with a known ground-truth template.
///
/// Demonstrations are optimal plans for the point-mass belief on the ground truth,
/// with ties between optimal actions broken at random so that repeated demos differ.
class SimTeacher
{
public:
  SimTeacher(TemplateFormula ground_truth, EnvironmentMDP env, std::uint64_t seed, double gamma = 0.95);
  ~SimTeacher();
  SimTeacher(SimTeacher&&) noexcept;
  SimTeacher& operator=(SimTeacher&&) noexcept;

  const TemplateFormula& ground_truth() const noexcept;
  const EnvironmentMDP& env() const noexcept;

  /// `k` satisfying traces, all labeled acceptable. Throws PlanningFailure.
  std::vector<LabeledTrace> demonstrate(std::size_t k);

  /// Perfect label: does `tr` satisfy the ground truth?
  bool assess(const Trace& tr) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace speclearn
