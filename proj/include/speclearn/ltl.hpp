#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace speclearn {

/// Thrown for malformed formulas and traces.
class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"), position_(position)
  {
  }

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// Ordered, duplicate-free list of proposition names. Truth assignments index into it.
class PropositionSet
{
public:
  static constexpr std::size_t max_size = 64;

  PropositionSet() = default;
  explicit PropositionSet(std::vector<std::string> names);
  PropositionSet(std::initializer_list<std::string> names)
    : PropositionSet(std::vector<std::string>(names))
  {
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }

  /// Index of `name`, or -1.
  int find(std::string_view name) const noexcept;
  /// Index of `name`; throws std::out_of_range for unknown names.
  std::size_t index(std::string_view name) const;

  friend bool operator==(const PropositionSet&, const PropositionSet&) = default;

private:
  std::vector<std::string> names_;
};

/// One time step: a Boolean value per proposition, stored as a bit vector.
class TruthAssignment
{
public:
  TruthAssignment() = default;
  TruthAssignment(std::size_t arity, std::uint64_t bits);
  explicit TruthAssignment(const std::vector<bool>& values);

  /// Assignment over `props` with exactly the named propositions true.
  static TruthAssignment of(const PropositionSet& props, std::initializer_list<std::string_view> true_names);

  std::size_t size() const noexcept { return arity_; }
  bool operator[](std::size_t index) const noexcept { return (bits_ >> index) & 1U; }
  std::uint64_t bits() const noexcept { return bits_; }
  TruthAssignment with(std::size_t index, bool value) const;

  friend bool operator==(const TruthAssignment&, const TruthAssignment&) = default;

private:
  std::size_t arity_ = 0;
  std::uint64_t bits_ = 0;
};

/// Finite, non-empty sequence of truth assignments over a fixed proposition set.
class Trace
{
public:
  Trace() = default;
  Trace(PropositionSet props, std::vector<TruthAssignment> steps);

  const PropositionSet& props() const noexcept { return props_; }
  const std::vector<TruthAssignment>& steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_.size(); }
  const TruthAssignment& operator[](std::size_t t) const { return steps_.at(t); }

  friend bool operator==(const Trace&, const Trace&) = default;

private:
  PropositionSet props_;
  std::vector<TruthAssignment> steps_;
};

enum class Op : std::uint8_t { True, False, Atom, Not, And, Or, Next, Until, Eventually, Globally };

/// Immutable LTL syntax tree with shared structure. Copies are cheap.
class Formula
{
public:
  Formula();  // true

  static Formula top();
  static Formula bottom();
  static Formula atom(std::size_t index);
  static Formula negation(Formula child);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);
  static Formula next(Formula child);
  static Formula until(Formula hold, Formula goal);
  static Formula eventually(Formula child);
  static Formula globally(Formula child);

  Op op() const noexcept;
  std::size_t atom_index() const noexcept;
  std::span<const Formula> children() const noexcept;
  const Formula& child(std::size_t i = 0) const { return children()[i]; }

  bool is_true() const noexcept { return op() == Op::True; }
  bool is_false() const noexcept { return op() == Op::False; }

  std::size_t hash() const noexcept;
  /// Number of nodes in the tree.
  std::size_t size() const noexcept;
  /// Bit mask of proposition indices that occur in the formula.
  std::uint64_t atoms() const noexcept;

  /// Set on results of canonical().
  bool is_canonical() const noexcept;

  friend bool operator==(const Formula& a, const Formula& b) noexcept;
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) noexcept;
  friend Formula canonical(const Formula& f);

private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(Op op, std::size_t atom, std::vector<Formula> children);

  std::shared_ptr<const Node> node_;
};

struct FormulaHash
{
  std::size_t operator()(const Formula& f) const noexcept { return f.hash(); }
};

/// Parses the prefix grammar
///   true | false | name | (not F) | (and F ...) | (or F ...) | (X F) | (U F F) | (F F) | (G F)
Formula parse(std::string_view text, const PropositionSet& props);

/// Prints in the same grammar; parse(to_string(f)) == f.
std::string to_string(const Formula& f, const PropositionSet& props);

/// Boolean normal form: And/Or flattened into sorted duplicate-free lists, constants folded.
Formula canonical(const Formula& f);

/// Finite-trace satisfaction at position t (0 <= t < |tr|).
bool evaluate(const Formula& f, const Trace& tr, std::size_t t = 0);

inline bool satisfies(const Trace& tr, const Formula& f) { return evaluate(f, tr, 0); }

/// Truth on the empty remainder of a trace: what a progressed formula means once
/// the execution has ended. G holds, F/U/X and atoms do not, negation is classical.
bool holds_at_end(const Formula& f);

/// One step of syntactic progression, returned in canonical form.
/// For every trace w (possibly empty): a.w |= f  iff  w |= progress(f, a).
Formula progress(const Formula& f, const TruthAssignment& a);

/// Progresses through every step of `tr` and decides the remainder with holds_at_end.
bool satisfies_by_progression(const Formula& f, const Trace& tr);

/// True for formulas that only carry safety obligations: no X or U anywhere, and F
/// only under negation. Constants count as safe.
bool is_safe(const Formula& f);

}  // namespace speclearn
