#include <doctest.h>

#include <random>

#include "hrc/error.hpp"
#include "hrc/evaluate.hpp"
#include "hrc/formula.hpp"
#include "support/generators.hpp"

using namespace hrc;
using namespace hrc::testing;

namespace {

Atom atom(std::string rel, std::vector<std::string> args, bool negated = false) {
  Atom a;
  a.relation = std::move(rel);
  for (auto& s : args) {
    a.args.push_back(s.front() == '?' ? Term::variable(s.substr(1)) : Term::object(s));
  }
  a.negated = negated;
  return a;
}

WorldMap boxes_map() {
  WorldMap m;
  for (const char* id : {"box1", "box2", "box3", "roomA", "roomB"}) m.put_object(ObjectInstance{id, "Thing", {}, {}});
  m.assert_atom(atom("isIn", {"box1", "roomA"}));
  m.assert_atom(atom("isIn", {"box2", "roomA"}));
  m.assert_atom(atom("isIn", {"box3", "roomB"}));
  return m;
}

// Second, independently coded enumerator for entailment: recursive
// assignment over the atom list instead of bitmasks.
bool entails_recursive(const Formula& phi, const Formula& psi, std::vector<Atom> atoms, std::size_t i,
                       WorldMap& m) {
  if (i == atoms.size()) return !oracle_evaluate(phi, m) || oracle_evaluate(psi, m);
  m.retract_atom(atoms[i]);
  if (!entails_recursive(phi, psi, atoms, i + 1, m)) return false;
  m.assert_atom(atoms[i]);
  const bool ok = entails_recursive(phi, psi, atoms, i + 1, m);
  m.retract_atom(atoms[i]);
  return ok;
}

}  // namespace

TEST_CASE("parse conjunction of named relations") {
  const Formula f = parse("isIn(box1, room2) and isAdjacentTo(room2, corridor1)");
  REQUIRE(f.kind == Formula::Kind::And);
  REQUIRE(f.children.size() == 2);
  CHECK(f.children[0].atom == atom("isIn", {"box1", "room2"}));
  CHECK(f.children[1].atom == atom("isAdjacentTo", {"room2", "corridor1"}));
  CHECK_FALSE(f.children[0].atom.negated);
}

TEST_CASE("parse true and precedence") {
  CHECK(parse("true").is_true());
  const Formula f = parse("a(x) or b(x) and c(?v)");
  REQUIRE(f.kind == Formula::Kind::Or);
  CHECK(f.children[1].kind == Formula::Kind::And);
  CHECK(to_string(f) == "a(x) or b(x) and c(?v)");
  CHECK(to_string(parse("(a(x) or b(x)) and c(y)")) == "(a(x) or b(x)) and c(y)");
}

TEST_CASE("parse terms: literals and functions") {
  const Formula f = parse("gt(attr(?h, \"heart_rate\"), 120.5) and eq(attr(s1, \"ok\"), true)");
  const auto& lhs = f.children[0].atom.args[0];
  CHECK(lhs.kind == Term::Kind::Function);
  CHECK(lhs.name == "attr");
  CHECK(f.children[0].atom.args[1] == Term::literal(120.5));
  CHECK(f.children[1].atom.args[1] == Term::literal(true));
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse(""), SyntaxError);
  CHECK_THROWS_AS(parse("not (a(x) and b(x))"), SyntaxError);
  CHECK_THROWS_AS(parse("a(x) and"), SyntaxError);
  CHECK_THROWS_AS(parse("a()"), SyntaxError);
  CHECK_THROWS_AS(parse("a(x) b(y)"), SyntaxError);
  try {
    parse("isIn(box1, $)");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 11);
  }
}

TEST_CASE("print/parse round trip over random ASTs") {
  std::mt19937_64 rng(11);
  Signature sig = small_signature(4, 4);
  for (int i = 0; i < 1000; ++i) {
    Formula f = random_formula(rng, sig, 4, true);
    if (i % 7 == 0) {
      // Sprinkle literals and function terms through computed atoms.
      Atom c;
      c.relation = "le";
      c.args = {Term::function("attr", {Term::variable("x"), Term::literal(std::string("w \"q\""))}),
                Term::literal(-2.5e-3 * i)};
      f = Formula::conjunction({f, Formula::of(c)});
    }
    const std::string text = to_string(f);
    INFO(text);
    CHECK(parse(text) == f);
  }
}

TEST_CASE("evaluate with closed-world negation") {
  const WorldMap m = boxes_map();
  CHECK(evaluate(parse("isIn(box1, roomA)"), m));
  CHECK_FALSE(evaluate(parse("not isIn(box1, roomA)"), m));
  CHECK(evaluate(parse("not isIn(box1, roomB)"), m));
  CHECK_THROWS_AS(evaluate(parse("isIn(?x, roomA)"), m), Error);
  CHECK_THROWS_AS(evaluate(parse("isIn(box9, roomA)"), m), Error);
}

TEST_CASE("evaluate computed relations over attributes") {
  WorldMap m;
  m.put_object(ObjectInstance{"h1", "HumanBody", {{"heart_rate", AttributeValue{130.0, "bpm"}}}, {}});
  CHECK(evaluate(parse("gt(attr(h1, \"heart_rate\"), 120)"), m));
  CHECK_FALSE(evaluate(parse("lt(attr(h1, \"heart_rate\"), 120)"), m));
  CHECK_FALSE(evaluate(parse("eq(attr(h1, \"missing\"), 1)"), m));
  CHECK(evaluate(parse("eq(?a, h1)"), m, Binding{{"a", Term::object("h1")}}));
}

TEST_CASE("evaluate agrees with truth-table oracle") {
  std::mt19937_64 rng(3);
  const Signature sig = small_signature(3, 2);
  int checked = 0;
  for (int m = 0; m < 500; ++m) {
    const WorldMap map = random_map(rng, sig, 0.4);
    for (int k = 0; k < 200; k += 10) {
      const Formula f = random_formula(rng, sig, 3, false);
      CHECK(evaluate(f, map) == oracle_evaluate(f, map));
      ++checked;
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("satisfying bindings") {
  const WorldMap m = boxes_map();
  const auto b = satisfying_bindings(parse("isIn(?x, roomA)"), m);
  REQUIRE(b.size() == 2);
  CHECK(b[0].at("x") == Term::object("box1"));
  CHECK(b[1].at("x") == Term::object("box2"));

  const auto ground = satisfying_bindings(parse("isIn(box3, roomB)"), m);
  REQUIRE(ground.size() == 1);
  CHECK(ground[0].empty());
  CHECK(satisfying_bindings(parse("isIn(box3, roomA)"), m).empty());
}

TEST_CASE("satisfying bindings agree with exhaustive enumeration") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const Signature sig = small_signature(1 + pick(rng, 5), 3);
    const WorldMap map = random_map(rng, sig, 0.35);
    const Formula f = random_formula(rng, sig, 2, true);
    const auto got = satisfying_bindings(f, map);
    const std::set<Binding> got_set(got.begin(), got.end());
    INFO(to_string(f));
    CHECK(got.size() == got_set.size());
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got_set == brute_force_bindings(f, map));
  }
}

TEST_CASE("substitute") {
  CHECK(substitute(parse("isIn(?x, roomA)"), Binding{{"x", Term::object("box1")}}) == parse("isIn(box1, roomA)"));
  const Formula f = parse("isIn(?x, ?y) or not p(?z)");
  CHECK(substitute(f, Binding{}) == f);
  CHECK(substitute(f, Binding{{"x", Term::object("a")}}) == parse("isIn(a, ?y) or not p(?z)"));
}

TEST_CASE("substitute then evaluate commutes with evaluate under binding") {
  std::mt19937_64 rng(9);
  const Signature sig = small_signature(4, 3);
  for (int i = 0; i < 500; ++i) {
    const WorldMap map = random_map(rng, sig);
    const Formula f = random_formula(rng, sig, 3, true);
    Binding b;
    for (const auto& v : sig.variables) b[v] = Term::object(sig.objects[pick(rng, sig.objects.size())]);
    CHECK(evaluate(substitute(f, b), map) == evaluate(f, map, b));
  }
}

TEST_CASE("entails") {
  const std::vector<std::string> dom{"a", "b"};
  const Formula a = parse("p(a)");
  const Formula ab = parse("p(a) and r(a, b)");
  CHECK(entails(a, a, dom));
  CHECK(entails(ab, a, dom));
  CHECK_FALSE(entails(a, ab, dom));
  CHECK(entails(parse("p(a) and not p(a)"), parse("r(b, b)"), dom));
  CHECK_THROWS_AS(entails(parse("p(?x)"), a, dom), Error);

  std::vector<Formula> big;
  for (int i = 0; i < 21; ++i) big.push_back(Formula::of(atom("p", {"o" + std::to_string(i)})));
  std::vector<std::string> wide{"a"};
  for (int i = 0; i < 21; ++i) wide.push_back("o" + std::to_string(i));
  try {
    entails(Formula::conjunction(big), a, wide);
    FAIL("expected DomainTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DomainTooLarge);
  }
}

TEST_CASE("entails agrees with an independent recursive enumerator") {
  std::mt19937_64 rng(17);
  const Signature sig = small_signature(3, 3);
  for (int i = 0; i < 300; ++i) {
    const Formula phi = random_formula(rng, sig, 2, false);
    const Formula psi = random_formula(rng, sig, 2, false);
    std::set<Atom> atoms;
    for (const auto& x : all_atoms(phi)) atoms.insert(x.positive());
    for (const auto& x : all_atoms(psi)) atoms.insert(x.positive());
    if (atoms.size() > 10) continue;
    WorldMap m;
    for (const auto& o : sig.objects) m.put_object(ObjectInstance{o, "Thing", {}, {}});
    const bool expected = entails_recursive(phi, psi, {atoms.begin(), atoms.end()}, 0, m);
    CHECK(entails(phi, psi, sig.objects) == expected);
  }
}

TEST_CASE("conjuncts rejects disjunction") {
  CHECK(conjuncts(parse("true")).empty());
  CHECK(conjuncts(parse("a(x) and (b(x) and not c(x))")).size() == 3);
  CHECK_THROWS_AS(conjuncts(parse("a(x) or b(x)")), Error);
}
