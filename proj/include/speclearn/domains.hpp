#pragma once

#include "speclearn/inference.hpp"
#include "speclearn/planner.hpp"
#include "speclearn/template_formula.hpp"

#include <string>
#include <vector>

namespace speclearn {

/// Placement or visit domain: each action irreversibly sets one proposition.
/// Dinner tables place objects; the synthetic domain visits waypoints and threats.
struct DomainSpec
{
  enum class Kind { Dinner, Synthetic };

  Kind kind = Kind::Dinner;
  std::vector<std::string> objects;  // dinner only
  std::size_t waypoints = 0;         // synthetic only
  std::size_t threats = 0;           // synthetic only
  /// Steps beyond one per object before an episode is cut off.
  std::size_t horizon_slack = 2;

  static DomainSpec dinner(std::vector<std::string> objects);
  static DomainSpec synthetic(std::size_t waypoints, std::size_t threats);
  /// "dinner3", "dinner5" or "synthetic". Throws std::invalid_argument otherwise.
  static DomainSpec named(const std::string& name);
  static DomainSpec from_json(const std::string& text);
  std::string to_json() const;

  PropositionSet props() const;
  std::size_t target_count() const;
  /// Hypothesis vocabulary for this domain.
  ClauseUniverse universe() const;
};

/// Fork, Bowl, Plate.
DomainSpec dinner3();
/// DinnerPlate, SmallPlate, Bowl, Fork, Knife.
DomainSpec dinner5();

/// Deterministic environment over placement vectors: 2^n states, n actions, identity
/// labeling, completion once everything is set, horizon n + slack.
EnvironmentMDP build_env(const DomainSpec& spec);

struct GroundTruthOptions
{
  double threat_probability = 0.5;
  double order_probability = 0.3;
};

/// Draws a satisfiable template: a uniform number of waypoints (propositions with an F
/// clause in `u`) that must be visited, each threat (G-only proposition) forbidden with
/// `threat_probability`, and order clauses consistent with one random permutation of the
/// chosen waypoints.
TemplateFormula sample_ground_truth(const ClauseUniverse& u, Rng& rng, const GroundTruthOptions& options = {});

/// Dinner plate, small plate and bowl in that order; every object placed.
TemplateFormula task1_ground_truth(const DomainSpec& dinner5_spec);

/// Dinner plate then bowl, small plate never; fork and knife optional.
TemplateFormula task2_ground_truth(const DomainSpec& dinner5_spec);

}  // namespace speclearn
