#include "speclearn/teacher.hpp"

#include "speclearn/belief.hpp"
#include "speclearn/reward_machine.hpp"

namespace speclearn {

struct SimTeacher::Impl
{
  TemplateFormula truth;
  Formula truth_formula;
  EnvironmentMDP env;
  RewardMachine machine;
  std::unique_ptr<ProductMDP> product;
  std::unique_ptr<ValueFunction> values;
  Rng rng;

  Impl(TemplateFormula gt, EnvironmentMDP e, std::uint64_t seed, double gamma)
    : truth(std::move(gt))
    , truth_formula(truth.to_formula())
    , env(std::move(e))
    , machine(compile(Belief::point_mass(env.props(), truth)))
    , rng(seed)
  {
    product = std::make_unique<ProductMDP>(env, machine);
    values = std::make_unique<ValueFunction>(*product, gamma);
  }
};

SimTeacher::SimTeacher(TemplateFormula ground_truth, EnvironmentMDP env, std::uint64_t seed, double gamma)
  : impl_(std::make_unique<Impl>(std::move(ground_truth), std::move(env), seed, gamma))
{
}

SimTeacher::~SimTeacher() = default;
SimTeacher::SimTeacher(SimTeacher&&) noexcept = default;
SimTeacher& SimTeacher::operator=(SimTeacher&&) noexcept = default;

const TemplateFormula& SimTeacher::ground_truth() const noexcept { return impl_->truth; }
const EnvironmentMDP& SimTeacher::env() const noexcept { return impl_->env; }

std::vector<LabeledTrace> SimTeacher::demonstrate(std::size_t k)
{
  std::vector<LabeledTrace> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Episode ep = optimal_episode(*impl_->product, *impl_->values, impl_->rng, true);
    Trace tr = ep.trace(impl_->env.props());
    if (!assess(tr))
      throw PlanningFailure("ground truth " + to_string(impl_->truth, impl_->env.props()) +
                            " is not satisfiable within the horizon");
    out.push_back({std::move(tr), true});
  }
  return out;
}

bool SimTeacher::assess(const Trace& tr) const
{
  if (!(tr.props() == impl_->env.props()))
    throw std::invalid_argument("trace propositions do not match the teacher's environment");
  return evaluate(impl_->truth_formula, tr, 0);
}

}  // namespace speclearn
