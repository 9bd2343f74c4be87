#include "speclearn/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace speclearn {

// ---------------------------------------------------------------------------
// Propositions, assignments, traces
// ---------------------------------------------------------------------------

namespace {

bool valid_name(std::string_view name)
{
  if (name.empty() || !std::isalpha(static_cast<unsigned char>(name[0])))
    return false;
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
      return false;
  return name != "true" && name != "false";
}

}  // namespace

PropositionSet::PropositionSet(std::vector<std::string> names) : names_(std::move(names))
{
  if (names_.size() > max_size)
    throw std::invalid_argument("at most 64 propositions are supported");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!valid_name(n))
      throw std::invalid_argument("invalid proposition name '" + n + "'");
    if (!seen.insert(n).second)
      throw std::invalid_argument("duplicate proposition name '" + n + "'");
  }
}

int PropositionSet::find(std::string_view name) const noexcept
{
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name)
      return static_cast<int>(i);
  return -1;
}

std::size_t PropositionSet::index(std::string_view name) const
{
  int i = find(name);
  if (i < 0)
    throw std::out_of_range("unknown proposition '" + std::string(name) + "'");
  return static_cast<std::size_t>(i);
}

TruthAssignment::TruthAssignment(std::size_t arity, std::uint64_t bits) : arity_(arity), bits_(bits)
{
  if (arity > PropositionSet::max_size)
    throw std::invalid_argument("assignment arity exceeds 64");
  if (arity < 64 && (bits >> arity) != 0)
    throw std::invalid_argument("assignment sets propositions beyond its arity");
}

TruthAssignment::TruthAssignment(const std::vector<bool>& values) : TruthAssignment(values.size(), 0)
{
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i])
      bits_ |= std::uint64_t{1} << i;
}

TruthAssignment TruthAssignment::of(const PropositionSet& props,
                                    std::initializer_list<std::string_view> true_names)
{
  std::uint64_t bits = 0;
  for (auto n : true_names)
    bits |= std::uint64_t{1} << props.index(n);
  return {props.size(), bits};
}

TruthAssignment TruthAssignment::with(std::size_t index, bool value) const
{
  std::uint64_t mask = std::uint64_t{1} << index;
  return {arity_, value ? (bits_ | mask) : (bits_ & ~mask)};
}

Trace::Trace(PropositionSet props, std::vector<TruthAssignment> steps)
  : props_(std::move(props)), steps_(std::move(steps))
{
  if (steps_.empty())
    throw std::invalid_argument("a trace needs at least one step");
  for (const auto& s : steps_)
    if (s.size() != props_.size())
      throw std::invalid_argument("trace step arity does not match the proposition set");
}

// ---------------------------------------------------------------------------
// Formula nodes
// ---------------------------------------------------------------------------

struct Formula::Node
{
  Op op;
  std::size_t atom = 0;
  std::vector<Formula> children;
  std::size_t hash = 0;
  std::size_t size = 1;
  std::uint64_t atoms = 0;
  mutable bool canonical = false;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v)
{
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

Formula Formula::make(Op op, std::size_t atom, std::vector<Formula> children)
{
  auto n = std::make_shared<Node>();
  n->op = op;
  n->atom = atom;
  n->hash = mix(static_cast<std::size_t>(op) * 0x100000001b3ULL, atom);
  for (const auto& c : children) {
    n->hash = mix(n->hash, c.hash());
    n->size += c.size();
    n->atoms |= c.atoms();
  }
  if (op == Op::Atom)
    n->atoms = std::uint64_t{1} << atom;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula::Formula() : Formula(top()) {}

Formula Formula::top()
{
  static const Formula t = [] {
    Formula f = make(Op::True, 0, {});
    f.node_->canonical = true;
    return f;
  }();
  return t;
}

Formula Formula::bottom()
{
  static const Formula b = [] {
    Formula f = make(Op::False, 0, {});
    f.node_->canonical = true;
    return f;
  }();
  return b;
}

Formula Formula::atom(std::size_t index)
{
  if (index >= PropositionSet::max_size)
    throw std::invalid_argument("atom index out of range");
  Formula f = make(Op::Atom, index, {});
  f.node_->canonical = true;
  return f;
}

Formula Formula::negation(Formula child) { return make(Op::Not, 0, {std::move(child)}); }
Formula Formula::conjunction(std::vector<Formula> children) { return make(Op::And, 0, std::move(children)); }
Formula Formula::disjunction(std::vector<Formula> children) { return make(Op::Or, 0, std::move(children)); }
Formula Formula::next(Formula child) { return make(Op::Next, 0, {std::move(child)}); }
Formula Formula::until(Formula hold, Formula goal) { return make(Op::Until, 0, {std::move(hold), std::move(goal)}); }
Formula Formula::eventually(Formula child) { return make(Op::Eventually, 0, {std::move(child)}); }
Formula Formula::globally(Formula child) { return make(Op::Globally, 0, {std::move(child)}); }

Op Formula::op() const noexcept { return node_->op; }
std::size_t Formula::atom_index() const noexcept { return node_->atom; }
std::span<const Formula> Formula::children() const noexcept { return node_->children; }
std::size_t Formula::hash() const noexcept { return node_->hash; }
std::size_t Formula::size() const noexcept { return node_->size; }
std::uint64_t Formula::atoms() const noexcept { return node_->atoms; }

bool operator==(const Formula& a, const Formula& b) noexcept
{
  if (a.node_ == b.node_)
    return true;
  if (a.hash() != b.hash() || a.size() != b.size())
    return false;
  return (a <=> b) == std::strong_ordering::equal;
}

std::strong_ordering operator<=>(const Formula& a, const Formula& b) noexcept
{
  if (a.node_ == b.node_)
    return std::strong_ordering::equal;
  if (auto c = a.op() <=> b.op(); c != 0)
    return c;
  if (auto c = a.atom_index() <=> b.atom_index(); c != 0)
    return c;
  auto ac = a.children();
  auto bc = b.children();
  for (std::size_t i = 0; i < ac.size() && i < bc.size(); ++i)
    if (auto c = ac[i] <=> bc[i]; c != 0)
      return c;
  return ac.size() <=> bc.size();
}

// ---------------------------------------------------------------------------
// Parsing and printing
// ---------------------------------------------------------------------------

namespace {

class Parser
{
public:
  Parser(std::string_view text, const PropositionSet& props) : text_(text), props_(props) {}

  Formula parse_all()
  {
    Formula f = parse_formula();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("trailing input", pos_);
    return f;
  }

private:
  void skip_ws()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  std::string_view word()
  {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_)
      throw ParseError("expected a symbol", start);
    return text_.substr(start, pos_ - start);
  }

  void expect(char c)
  {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  bool peek(char c)
  {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  Formula parse_formula()
  {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of input", pos_);
    if (!peek('(')) {
      std::size_t at = pos_;
      auto w = word();
      if (w == "true")
        return Formula::top();
      if (w == "false")
        return Formula::bottom();
      int idx = props_.find(w);
      if (idx < 0)
        throw ParseError("unknown proposition '" + std::string(w) + "'", at);
      return Formula::atom(static_cast<std::size_t>(idx));
    }
    expect('(');
    std::size_t at = pos_;
    auto head = word();
    Formula result;
    if (head == "not") {
      result = Formula::negation(parse_formula());
    } else if (head == "and" || head == "or") {
      std::vector<Formula> kids;
      while (!peek(')'))
        kids.push_back(parse_formula());
      result = head == "and" ? Formula::conjunction(std::move(kids)) : Formula::disjunction(std::move(kids));
    } else if (head == "X") {
      result = Formula::next(parse_formula());
    } else if (head == "F") {
      result = Formula::eventually(parse_formula());
    } else if (head == "G") {
      result = Formula::globally(parse_formula());
    } else if (head == "U") {
      Formula hold = parse_formula();
      Formula goal = parse_formula();
      result = Formula::until(std::move(hold), std::move(goal));
    } else {
      throw ParseError("unknown operator '" + std::string(head) + "'", at);
    }
    expect(')');
    return result;
  }

  std::string_view text_;
  const PropositionSet& props_;
  std::size_t pos_ = 0;
};

void print(const Formula& f, const PropositionSet& props, std::string& out)
{
  auto unary = [&](const char* name) {
    out += '(';
    out += name;
    out += ' ';
    print(f.child(), props, out);
    out += ')';
  };
  switch (f.op()) {
    case Op::True: out += "true"; return;
    case Op::False: out += "false"; return;
    case Op::Atom: out += props.name(f.atom_index()); return;
    case Op::Not: unary("not"); return;
    case Op::Next: unary("X"); return;
    case Op::Eventually: unary("F"); return;
    case Op::Globally: unary("G"); return;
    case Op::Until:
      out += "(U ";
      print(f.child(0), props, out);
      out += ' ';
      print(f.child(1), props, out);
      out += ')';
      return;
    case Op::And:
    case Op::Or:
      out += f.op() == Op::And ? "(and" : "(or";
      for (const auto& c : f.children()) {
        out += ' ';
        print(c, props, out);
      }
      out += ')';
      return;
  }
}

}  // namespace

Formula parse(std::string_view text, const PropositionSet& props)
{
  return Parser(text, props).parse_all();
}

std::string to_string(const Formula& f, const PropositionSet& props)
{
  std::string out;
  print(f, props, out);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

bool Formula::is_canonical() const noexcept { return node_->canonical; }

Formula canonical(const Formula& f)
{
  if (f.is_canonical())
    return f;

  auto flagged = [](Formula g) {
    g.node_->canonical = true;
    return g;
  };

  switch (f.op()) {
    case Op::True:
    case Op::False:
    case Op::Atom:
      return flagged(f);

    case Op::Not: {
      Formula c = canonical(f.child());
      if (c.is_true())
        return Formula::bottom();
      if (c.is_false())
        return Formula::top();
      if (c.op() == Op::Not)
        return c.child();
      return flagged(Formula::negation(std::move(c)));
    }

    case Op::And:
    case Op::Or: {
      const bool is_and = f.op() == Op::And;
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const auto& raw : f.children()) {
        Formula c = canonical(raw);
        if (c.op() == f.op()) {
          kids.insert(kids.end(), c.children().begin(), c.children().end());
          continue;
        }
        if (is_and ? c.is_true() : c.is_false())
          continue;
        if (is_and ? c.is_false() : c.is_true())
          return c;
        kids.push_back(std::move(c));
      }
      std::sort(kids.begin(), kids.end());
      kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
      if (kids.empty())
        return is_and ? Formula::top() : Formula::bottom();
      if (kids.size() == 1)
        return kids.front();
      return flagged(is_and ? Formula::conjunction(std::move(kids)) : Formula::disjunction(std::move(kids)));
    }

    case Op::Next: {
      Formula c = canonical(f.child());
      if (c.is_false())
        return c;
      return flagged(Formula::next(std::move(c)));
    }

    case Op::Eventually: {
      Formula c = canonical(f.child());
      if (c.is_false())
        return c;
      if (c.op() == Op::Eventually)
        return c;
      return flagged(Formula::eventually(std::move(c)));
    }

    case Op::Globally: {
      Formula c = canonical(f.child());
      if (c.is_true())
        return c;
      if (c.op() == Op::Globally)
        return c;
      return flagged(Formula::globally(std::move(c)));
    }

    case Op::Until: {
      Formula hold = canonical(f.child(0));
      Formula goal = canonical(f.child(1));
      if (goal.is_false())
        return goal;
      return flagged(Formula::until(std::move(hold), std::move(goal)));
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Semantics
// ---------------------------------------------------------------------------

bool evaluate(const Formula& f, const Trace& tr, std::size_t t)
{
  const std::size_t n = tr.size();
  if (t >= n)
    throw std::out_of_range("time index " + std::to_string(t) + " outside trace of length " + std::to_string(n));

  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: return tr[t][f.atom_index()];
    case Op::Not: return !evaluate(f.child(), tr, t);
    case Op::And:
      return std::all_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return evaluate(c, tr, t); });
    case Op::Or:
      return std::any_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return evaluate(c, tr, t); });
    case Op::Next: return t + 1 < n && evaluate(f.child(), tr, t + 1);
    case Op::Eventually:
      for (std::size_t k = t; k < n; ++k)
        if (evaluate(f.child(), tr, k))
          return true;
      return false;
    case Op::Globally:
      for (std::size_t k = t; k < n; ++k)
        if (!evaluate(f.child(), tr, k))
          return false;
      return true;
    case Op::Until:
      for (std::size_t k = t; k < n; ++k) {
        if (evaluate(f.child(1), tr, k))
          return true;
        if (!evaluate(f.child(0), tr, k))
          return false;
      }
      return false;
  }
  return false;
}

bool holds_at_end(const Formula& f)
{
  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: return false;
    case Op::Not: return !holds_at_end(f.child());
    case Op::And:
      return std::all_of(f.children().begin(), f.children().end(), [](const Formula& c) { return holds_at_end(c); });
    case Op::Or:
      return std::any_of(f.children().begin(), f.children().end(), [](const Formula& c) { return holds_at_end(c); });
    case Op::Next: return false;
    case Op::Until: return false;
    case Op::Eventually: return false;
    case Op::Globally: return true;
  }
  return false;
}

namespace {

Formula progress_raw(const Formula& f, const TruthAssignment& a)
{
  switch (f.op()) {
    case Op::True:
    case Op::False:
      return f;
    case Op::Atom:
      return a[f.atom_index()] ? Formula::top() : Formula::bottom();
    case Op::Not:
      return Formula::negation(progress_raw(f.child(), a));
    case Op::And:
    case Op::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const auto& c : f.children())
        kids.push_back(progress_raw(c, a));
      return f.op() == Op::And ? Formula::conjunction(std::move(kids)) : Formula::disjunction(std::move(kids));
    }
    case Op::Next:
      // The remainder must be non-empty; F true encodes "at least one more step".
      return Formula::conjunction({f.child(), Formula::eventually(Formula::top())});
    case Op::Until:
      return Formula::disjunction(
        {progress_raw(f.child(1), a), Formula::conjunction({progress_raw(f.child(0), a), f})});
    case Op::Eventually:
      return Formula::disjunction({progress_raw(f.child(), a), f});
    case Op::Globally:
      return Formula::conjunction({progress_raw(f.child(), a), f});
  }
  return f;
}

bool safe_with_polarity(const Formula& f, bool positive)
{
  switch (f.op()) {
    case Op::True:
    case Op::False:
    case Op::Atom:
      return true;
    case Op::Not:
      return safe_with_polarity(f.child(), !positive);
    case Op::And:
    case Op::Or:
      return std::all_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return safe_with_polarity(c, positive); });
    case Op::Next:
    case Op::Until:
      return false;
    case Op::Eventually:
      return !positive && safe_with_polarity(f.child(), positive);
    case Op::Globally:
      return positive && safe_with_polarity(f.child(), positive);
  }
  return false;
}

}  // namespace

Formula progress(const Formula& f, const TruthAssignment& a)
{
  return canonical(progress_raw(f, a));
}

bool satisfies_by_progression(const Formula& f, const Trace& tr)
{
  Formula residue = f;
  for (const auto& step : tr.steps()) {
    residue = progress(residue, step);
    if (residue.is_true() || residue.is_false())
      return residue.is_true();
  }
  return holds_at_end(residue);
}

bool is_safe(const Formula& f) { return safe_with_polarity(f, true); }

}  // namespace speclearn
