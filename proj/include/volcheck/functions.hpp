#pragma once

// Named functions of (t, x) used as hypothesis bases, drifts and local
// volatility models. A StateFunction is a finite linear combination of
// catalog primitives, written e.g. "0.25*one + 0.75*x2" or "0.1*x".

#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "volcheck/errors.hpp"

namespace volcheck {

enum class Primitive { One, X, X2, AbsX, OnePlusAbsX, T, TX2, SqrtAbsX };

struct PrimitiveInfo {
  Primitive id;
  std::string_view name;
};

inline constexpr std::array<PrimitiveInfo, 8> kPrimitives{{
    {Primitive::One, "one"},
    {Primitive::X, "x"},
    {Primitive::X2, "x2"},
    {Primitive::AbsX, "absx"},
    {Primitive::OnePlusAbsX, "one_plus_absx"},
    {Primitive::T, "t"},
    {Primitive::TX2, "tx2"},
    {Primitive::SqrtAbsX, "sqrt_absx"},
}};

inline double evaluate(Primitive p, double t, double x) {
  switch (p) {
    case Primitive::One: return 1.0;
    case Primitive::X: return x;
    case Primitive::X2: return x * x;
    case Primitive::AbsX: return std::abs(x);
    case Primitive::OnePlusAbsX: return 1.0 + std::abs(x);
    case Primitive::T: return t;
    case Primitive::TX2: return t * x * x;
    case Primitive::SqrtAbsX: return std::sqrt(std::abs(x));
  }
  return 0.0;
}

inline std::string_view primitive_name(Primitive p) {
  for (const auto& info : kPrimitives) {
    if (info.id == p) return info.name;
  }
  return "?";
}

inline Primitive primitive_from_name(std::string_view name) {
  for (const auto& info : kPrimitives) {
    if (info.name == name) return info.id;
  }
  throw InvalidArgument("unknown catalog function '" + std::string(name) + "'");
}

class StateFunction {
 public:
  struct Term {
    double coef;
    Primitive primitive;
  };

  StateFunction() = default;
  explicit StateFunction(Primitive p) : terms_{{1.0, p}} {}

  static StateFunction zero() { return StateFunction(); }
  static StateFunction constant(double c) {
    StateFunction f;
    f.add(c, Primitive::One);
    return f;
  }

  // expr := term (('+' | '-') term)* ; term := number | [number '*'] name
  static StateFunction parse(std::string_view text) {
    std::string s;
    for (char c : text) {
      if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    if (s.empty()) throw InvalidArgument("empty function expression");
    if (s == "0" || s == "zero") return zero();

    StateFunction f;
    std::size_t pos = 0;
    while (pos < s.size()) {
      double sign = 1.0;
      if (s[pos] == '+' || s[pos] == '-') {
        sign = s[pos] == '-' ? -1.0 : 1.0;
        ++pos;
      } else if (pos != 0) {
        throw InvalidArgument("malformed expression '" + std::string(text) + "'");
      }
      std::size_t end = pos;
      while (end < s.size() && s[end] != '+' && s[end] != '-') {
        // allow exponents such as 1e-4
        if ((s[end] == 'e' || s[end] == 'E') && end + 1 < s.size() &&
            (s[end + 1] == '-' || s[end + 1] == '+') && end > pos &&
            std::isdigit(static_cast<unsigned char>(s[end - 1]))) {
          end += 2;
          continue;
        }
        ++end;
      }
      const std::string term = s.substr(pos, end - pos);
      if (term.empty()) throw InvalidArgument("malformed expression '" + std::string(text) + "'");
      const auto star = term.find('*');
      double coef = 1.0;
      std::string name = term;
      if (star != std::string::npos) {
        coef = parse_number(term.substr(0, star), text);
        name = term.substr(star + 1);
      } else if (std::isdigit(static_cast<unsigned char>(term[0])) || term[0] == '.') {
        coef = parse_number(term, text);
        name = "one";
      }
      f.add(sign * coef, primitive_from_name(name));
      pos = end;
    }
    return f;
  }

  void add(double coef, Primitive p) {
    for (auto& term : terms_) {
      if (term.primitive == p) {
        term.coef += coef;
        return;
      }
    }
    terms_.push_back({coef, p});
  }

  StateFunction scaled(double c) const {
    StateFunction f = *this;
    for (auto& term : f.terms_) term.coef *= c;
    return f;
  }

  StateFunction operator+(const StateFunction& other) const {
    StateFunction f = *this;
    for (const auto& term : other.terms_) f.add(term.coef, term.primitive);
    return f;
  }

  double operator()(double t, double x) const {
    double v = 0.0;
    for (const auto& term : terms_) v += term.coef * evaluate(term.primitive, t, x);
    return v;
  }

  const std::vector<Term>& terms() const { return terms_; }

  std::string describe() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& term : terms_) {
      if (!first) os << '+';
      first = false;
      if (term.coef == 1.0) {
        os << primitive_name(term.primitive);
      } else {
        os << term.coef << '*' << primitive_name(term.primitive);
      }
    }
    return os.str();
  }

  bool operator==(const StateFunction& other) const {
    if (terms_.size() != other.terms_.size()) return false;
    for (const auto& term : terms_) {
      bool found = false;
      for (const auto& o : other.terms_) {
        if (o.primitive == term.primitive && o.coef == term.coef) found = true;
      }
      if (!found) return false;
    }
    return true;
  }

 private:
  static double parse_number(const std::string& s, std::string_view text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw InvalidArgument("");
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument("bad coefficient in '" + std::string(text) + "'");
    }
  }

  std::vector<Term> terms_;
};

/// Ordered basis sigma_1^2 .. sigma_d^2 (or sigma-bar_1 .. sigma-bar_d).
struct HypothesisSpec {
  std::vector<StateFunction> basis;

  // Comma separated list of expressions, e.g. "one,x2".
  static HypothesisSpec parse(std::string_view text) {
    HypothesisSpec h;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const auto piece = text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                            : comma - start);
      h.basis.push_back(StateFunction::parse(piece));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    h.validate();
    return h;
  }

  std::size_t dimension() const { return basis.size(); }

  // Identical entries are allowed through here; the design-matrix condition
  // check in the fit reports them as a singular design.
  void validate() const {
    if (basis.empty()) throw InvalidArgument("hypothesis basis must be non-empty");
  }

  std::string describe() const {
    std::string s;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (i) s += ',';
      s += basis[i].describe();
    }
    return s;
  }
};

}  // namespace volcheck
