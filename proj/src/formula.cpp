#include "hrc/formula.hpp"

#include <cctype>
#include <charconv>
#include <utility>

#include "hrc/error.hpp"

namespace hrc {

namespace {

std::strong_ordering compare_literals(const Literal& a, const Literal& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    if (*x < y) return std::strong_ordering::less;
    if (*x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  if (const auto* x = std::get_if<std::string>(&a)) return *x <=> std::get<std::string>(b);
  return std::get<bool>(a) <=> std::get<bool>(b);
}

bool is_keyword(std::string_view word) {
  return word == "and" || word == "or" || word == "not" || word == "true" || word == "false";
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "0";
  return std::string(buf, end);
}

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

struct Token {
  enum class Kind { Ident, Variable, Number, String, LParen, RParen, Comma, End };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws();
      Token tok;
      tok.pos = pos_;
      if (pos_ >= text_.size()) {
        out.push_back(tok);
        return out;
      }
      const char c = text_[pos_];
      if (c == '(') {
        tok.kind = Token::Kind::LParen;
        ++pos_;
      } else if (c == ')') {
        tok.kind = Token::Kind::RParen;
        ++pos_;
      } else if (c == ',') {
        tok.kind = Token::Kind::Comma;
        ++pos_;
      } else if (c == '?') {
        ++pos_;
        if (pos_ >= text_.size() || !ident_start(text_[pos_])) {
          throw SyntaxError(tok.pos, "expected variable name after '?'");
        }
        tok.kind = Token::Kind::Variable;
        tok.text = ident();
      } else if (c == '"') {
        tok.kind = Token::Kind::String;
        tok.text = string_literal();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
        tok.kind = Token::Kind::Number;
        tok.number = number();
      } else if (ident_start(c)) {
        tok.kind = Token::Kind::Ident;
        tok.text = ident();
      } else {
        throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(tok));
    }
  }

 private:
  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_continue(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_continue(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string string_literal() {
    const std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        ++pos_;
        if (pos_ >= text_.size()) break;
      }
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) throw SyntaxError(start, "unterminated string literal");
    ++pos_;
    return out;
  }

  double number() {
    const std::size_t start = pos_;
    if (text_[pos_] == '+') ++pos_;
    const char* first = text_.data() + pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), value);
    if (ec != std::errc{} || ptr == first) throw SyntaxError(start, "malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Formula run() {
    Formula f = disjunction();
    if (peek().kind != Token::Kind::End) throw SyntaxError(peek().pos, "unexpected trailing input");
    return f;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  bool at_keyword(std::string_view word) const {
    return peek().kind == Token::Kind::Ident && peek().text == word;
  }

  void expect(Token::Kind kind, const char* what) {
    if (peek().kind != kind) throw SyntaxError(peek().pos, std::string("expected ") + what);
    next();
  }

  Formula disjunction() {
    std::vector<Formula> items{conjunction()};
    while (at_keyword("or")) {
      next();
      items.push_back(conjunction());
    }
    return items.size() == 1 ? std::move(items.front()) : Formula::disjunction(std::move(items));
  }

  Formula conjunction() {
    std::vector<Formula> items{primary()};
    while (at_keyword("and")) {
      next();
      items.push_back(primary());
    }
    return items.size() == 1 ? std::move(items.front()) : Formula::conjunction(std::move(items));
  }

  Formula primary() {
    if (peek().kind == Token::Kind::LParen) {
      next();
      Formula inner = disjunction();
      expect(Token::Kind::RParen, "')'");
      return inner;
    }
    if (at_keyword("true")) {
      next();
      return Formula::truth();
    }
    if (at_keyword("not")) {
      const std::size_t pos = next().pos;
      if (peek().kind != Token::Kind::Ident || is_keyword(peek().text)) {
        throw SyntaxError(pos, "negation applies only to atoms");
      }
      Atom a = atom();
      a.negated = true;
      return Formula::of(std::move(a));
    }
    return Formula::of(atom());
  }

  Atom atom() {
    const Token& tok = peek();
    if (tok.kind != Token::Kind::Ident || is_keyword(tok.text)) {
      throw SyntaxError(tok.pos, "expected relation name");
    }
    Atom a;
    a.relation = next().text;
    a.args = arguments();
    return a;
  }

  std::vector<Term> arguments() {
    expect(Token::Kind::LParen, "'('");
    std::vector<Term> args;
    if (peek().kind == Token::Kind::RParen) throw SyntaxError(peek().pos, "empty argument list");
    args.push_back(term());
    while (peek().kind == Token::Kind::Comma) {
      next();
      args.push_back(term());
    }
    expect(Token::Kind::RParen, "')'");
    return args;
  }

  Term term() {
    const Token tok = peek();
    switch (tok.kind) {
      case Token::Kind::Variable:
        next();
        return Term::variable(tok.text);
      case Token::Kind::Number:
        next();
        return Term::literal(tok.number);
      case Token::Kind::String:
        next();
        return Term::literal(tok.text);
      case Token::Kind::Ident: {
        next();
        if (tok.text == "true") return Term::literal(true);
        if (tok.text == "false") return Term::literal(false);
        if (is_keyword(tok.text)) throw SyntaxError(tok.pos, "keyword used as term");
        if (peek().kind == Token::Kind::LParen) return Term::function(tok.text, arguments());
        return Term::object(tok.text);
      }
      default:
        throw SyntaxError(tok.pos, "expected term");
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

void collect_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Variable) out.insert(t.name);
  for (const auto& a : t.args) collect_vars(a, out);
}

void collect_atoms(const Formula& f, std::vector<Atom>& out) {
  if (f.kind == Formula::Kind::Atom) out.push_back(f.atom);
  for (const auto& c : f.children) collect_atoms(c, out);
}

bool match_term(const Term& pattern, const Term& target, Binding& b) {
  if (pattern.kind == Term::Kind::Variable) {
    auto it = b.find(pattern.name);
    if (it != b.end()) return it->second == target;
    b.emplace(pattern.name, target);
    return true;
  }
  if (pattern.kind != target.kind) return false;
  if (pattern.kind == Term::Kind::Function) {
    if (pattern.name != target.name || pattern.args.size() != target.args.size()) return false;
    for (std::size_t i = 0; i < pattern.args.size(); ++i) {
      if (!match_term(pattern.args[i], target.args[i], b)) return false;
    }
    return true;
  }
  return pattern == target;
}

}  // namespace

std::string literal_to_string(const Literal& value) {
  if (const auto* d = std::get_if<double>(&value)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&value)) return quote(*s);
  return std::get<bool>(value) ? "true" : "false";
}

Term Term::variable(std::string name) {
  Term t;
  t.kind = Kind::Variable;
  t.name = std::move(name);
  return t;
}

Term Term::object(std::string id) {
  Term t;
  t.kind = Kind::Object;
  t.name = std::move(id);
  return t;
}

Term Term::literal(Literal value) {
  Term t;
  t.kind = Kind::Value;
  t.value = std::move(value);
  return t;
}

Term Term::function(std::string name, std::vector<Term> args) {
  Term t;
  t.kind = Kind::Function;
  t.name = std::move(name);
  t.args = std::move(args);
  return t;
}

bool Term::is_ground() const {
  if (kind == Kind::Variable) return false;
  for (const auto& a : args) {
    if (!a.is_ground()) return false;
  }
  return true;
}

bool Term::operator==(const Term& other) const { return (*this <=> other) == 0; }

std::strong_ordering Term::operator<=>(const Term& other) const {
  if (auto c = kind <=> other.kind; c != 0) return c;
  if (kind == Kind::Value) return compare_literals(value, other.value);
  if (auto c = name <=> other.name; c != 0) return c;
  if (auto c = args.size() <=> other.args.size(); c != 0) return c;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (auto c = args[i] <=> other.args[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

bool Atom::is_ground() const {
  for (const auto& a : args) {
    if (!a.is_ground()) return false;
  }
  return true;
}

Atom Atom::positive() const {
  Atom a = *this;
  a.negated = false;
  return a;
}

bool Atom::operator==(const Atom& other) const { return (*this <=> other) == 0; }

std::strong_ordering Atom::operator<=>(const Atom& other) const {
  if (auto c = relation <=> other.relation; c != 0) return c;
  if (auto c = args.size() <=> other.args.size(); c != 0) return c;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (auto c = args[i] <=> other.args[i]; c != 0) return c;
  }
  return negated <=> other.negated;
}

Formula Formula::truth() { return Formula{}; }

Formula Formula::of(hrc::Atom atom) {
  Formula f;
  f.kind = Kind::Atom;
  f.atom = std::move(atom);
  return f;
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.empty()) throw Error(Errc::MalformedFormula, "empty conjunction");
  Formula f;
  f.kind = Kind::And;
  f.children = std::move(children);
  return f;
}

Formula Formula::disjunction(std::vector<Formula> children) {
  if (children.empty()) throw Error(Errc::MalformedFormula, "empty disjunction");
  Formula f;
  f.kind = Kind::Or;
  f.children = std::move(children);
  return f;
}

bool Formula::is_conjunctive() const {
  switch (kind) {
    case Kind::True:
    case Kind::Atom:
      return true;
    case Kind::Or:
      return false;
    case Kind::And:
      for (const auto& c : children) {
        if (!c.is_conjunctive()) return false;
      }
      return true;
  }
  return false;
}

Formula parse(std::string_view text) {
  Lexer lexer(text);
  auto tokens = lexer.run();
  if (tokens.size() == 1) throw SyntaxError(0, "empty formula");
  return Parser(std::move(tokens)).run();
}

std::string to_string(const Term& term) {
  switch (term.kind) {
    case Term::Kind::Variable:
      return "?" + term.name;
    case Term::Kind::Object:
      return term.name;
    case Term::Kind::Value:
      return literal_to_string(term.value);
    case Term::Kind::Function: {
      std::string out = term.name + "(";
      for (std::size_t i = 0; i < term.args.size(); ++i) {
        if (i) out += ", ";
        out += to_string(term.args[i]);
      }
      return out + ")";
    }
  }
  return {};
}

std::string to_string(const Atom& atom) {
  std::string out = atom.negated ? "not " : "";
  out += atom.relation + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ", ";
    out += to_string(atom.args[i]);
  }
  return out + ")";
}

std::string to_string(const Formula& formula) {
  switch (formula.kind) {
    case Formula::Kind::True:
      return "true";
    case Formula::Kind::Atom:
      return to_string(formula.atom);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      const bool is_and = formula.kind == Formula::Kind::And;
      std::string out;
      for (std::size_t i = 0; i < formula.children.size(); ++i) {
        const Formula& c = formula.children[i];
        if (i) out += is_and ? " and " : " or ";
        // Parentheses only where dropping them would change the parse.
        const bool wrap =
            c.kind == Formula::Kind::Or || (is_and && c.kind == Formula::Kind::And);
        out += wrap ? "(" + to_string(c) + ")" : to_string(c);
      }
      return out;
    }
  }
  return {};
}

std::string to_string(const Task& task) {
  return "(" + to_string(task.precondition) + ") -> (" + to_string(task.effect) + ")";
}

std::string to_string(const Binding& binding) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, value] : binding) {
    if (!first) out += ", ";
    first = false;
    out += "?" + name + "->" + to_string(value);
  }
  return out + "}";
}

std::set<std::string> free_variables(const Atom& atom) {
  std::set<std::string> out;
  for (const auto& a : atom.args) collect_vars(a, out);
  return out;
}

std::set<std::string> free_variables(const Formula& formula) {
  std::set<std::string> out;
  for (const auto& a : all_atoms(formula)) {
    for (const auto& t : a.args) collect_vars(t, out);
  }
  return out;
}

Term substitute(const Term& term, const Binding& binding) {
  if (term.kind == Term::Kind::Variable) {
    auto it = binding.find(term.name);
    return it == binding.end() ? term : it->second;
  }
  if (term.kind != Term::Kind::Function) return term;
  Term out = term;
  for (auto& a : out.args) a = substitute(a, binding);
  return out;
}

Atom substitute(const Atom& atom, const Binding& binding) {
  Atom out = atom;
  for (auto& a : out.args) a = substitute(a, binding);
  return out;
}

Formula substitute(const Formula& formula, const Binding& binding) {
  Formula out = formula;
  if (out.kind == Formula::Kind::Atom) out.atom = substitute(out.atom, binding);
  for (auto& c : out.children) c = substitute(c, binding);
  return out;
}

Task substitute(const Task& task, const Binding& binding) {
  return Task{substitute(task.precondition, binding), substitute(task.effect, binding)};
}

std::vector<Atom> conjuncts(const Formula& formula) {
  if (!formula.is_conjunctive()) {
    throw Error(Errc::DisjunctiveEffect, "formula is not conjunctive: " + to_string(formula));
  }
  std::vector<Atom> out;
  collect_atoms(formula, out);
  return out;
}

std::vector<Atom> all_atoms(const Formula& formula) {
  std::vector<Atom> out;
  collect_atoms(formula, out);
  return out;
}

Formula conjoin(const std::vector<Atom>& atoms) {
  if (atoms.empty()) return Formula::truth();
  if (atoms.size() == 1) return Formula::of(atoms.front());
  std::vector<Formula> items;
  items.reserve(atoms.size());
  for (const auto& a : atoms) items.push_back(Formula::of(a));
  return Formula::conjunction(std::move(items));
}

bool match_atom(const Atom& pattern, const Atom& target, Binding& binding) {
  if (pattern.relation != target.relation || pattern.negated != target.negated ||
      pattern.args.size() != target.args.size()) {
    return false;
  }
  Binding trial = binding;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    if (!match_term(pattern.args[i], target.args[i], trial)) return false;
  }
  binding = std::move(trial);
  return true;
}

}  // namespace hrc
