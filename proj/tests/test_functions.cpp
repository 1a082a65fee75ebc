#include <cmath>

#include <gtest/gtest.h>

#include "volcheck/functions.hpp"

using namespace volcheck;

TEST(Primitives, Catalog) {
  EXPECT_EQ(evaluate(Primitive::One, 0.3, -2.0), 1.0);
  EXPECT_EQ(evaluate(Primitive::X, 0.3, -2.0), -2.0);
  EXPECT_EQ(evaluate(Primitive::X2, 0.3, -2.0), 4.0);
  EXPECT_EQ(evaluate(Primitive::AbsX, 0.3, -2.0), 2.0);
  EXPECT_EQ(evaluate(Primitive::OnePlusAbsX, 0.3, -2.0), 3.0);
  EXPECT_EQ(evaluate(Primitive::T, 0.3, -2.0), 0.3);
  EXPECT_DOUBLE_EQ(evaluate(Primitive::TX2, 0.5, -2.0), 2.0);
  EXPECT_DOUBLE_EQ(evaluate(Primitive::SqrtAbsX, 0.0, -4.0), 2.0);
  for (const auto& info : kPrimitives) EXPECT_EQ(primitive_from_name(info.name), info.id);
  EXPECT_THROW(primitive_from_name("cube"), InvalidArgument);
}

TEST(StateFunctionTest, ParseLinearCombination) {
  const auto f = StateFunction::parse("0.25*one + 0.75*x2");
  EXPECT_DOUBLE_EQ(f(0.0, 2.0), 0.25 + 3.0);
  const auto g = StateFunction::parse("-x+2*absx-1e-1");
  EXPECT_DOUBLE_EQ(g(0.0, -1.0), 1.0 + 2.0 - 0.1);
  EXPECT_EQ(StateFunction::parse("0")(0.5, 3.0), 0.0);
  EXPECT_EQ(StateFunction::parse("one"), StateFunction::constant(1.0));
}

TEST(StateFunctionTest, ParseErrors) {
  EXPECT_THROW(StateFunction::parse(""), InvalidArgument);
  EXPECT_THROW(StateFunction::parse("2*"), InvalidArgument);
  EXPECT_THROW(StateFunction::parse("a*x"), InvalidArgument);
  EXPECT_THROW(StateFunction::parse("x++x2"), InvalidArgument);
}

TEST(StateFunctionTest, AlgebraAndDescription) {
  const auto f = StateFunction::parse("x2");
  const auto g = f.scaled(3.0) + StateFunction::constant(1.0);
  EXPECT_DOUBLE_EQ(g(0.0, 2.0), 13.0);
  EXPECT_EQ(StateFunction::parse(g.describe()), g);
  EXPECT_EQ(StateFunction::zero().describe(), "0");
}

TEST(HypothesisSpecTest, ParseList) {
  const auto h = HypothesisSpec::parse("one, x2 ,t");
  ASSERT_EQ(h.dimension(), 3u);
  EXPECT_DOUBLE_EQ(h.basis[1](0.0, 3.0), 9.0);
  EXPECT_EQ(h.describe(), "one,x2,t");
  EXPECT_THROW(HypothesisSpec{}.validate(), InvalidArgument);
}
