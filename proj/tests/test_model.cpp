#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlbranch/model.hpp"

using namespace nlbranch;

namespace {

ModelErrc error_code(ModelSpec spec) {
  try {
    validate(std::move(spec));
  } catch (const ModelError& e) {
    return e.code();
  }
  ADD_FAILURE() << "validate accepted the model";
  return ModelErrc::unsupported;
}

ModelSpec drift_only(double b0 = 1.0, double r0 = 0.0) { return power_law_model(1.5, b0, r0, 0, 0, 0, 0); }

}  // namespace

TEST(Validate, AcceptsDriftOnly) {
  const ValidatedModel m = validate(drift_only());
  EXPECT_DOUBLE_EQ(m.a0(3.0), 1.0);
  EXPECT_DOUBLE_EQ(m.a1(3.0), 0.0);
  EXPECT_TRUE(m.is_pure_power_law());
}

TEST(Validate, DistinctErrorCodes) {
  auto bad_alpha = drift_only();
  bad_alpha.mu.alpha = 2.0;
  EXPECT_EQ(error_code(bad_alpha), ModelErrc::alpha_out_of_range);
  bad_alpha.mu.alpha = 1.0;
  EXPECT_EQ(error_code(bad_alpha), ModelErrc::alpha_out_of_range);

  EXPECT_EQ(error_code(power_law_model(1.5, 1, 0, -1, 0, 0, 0)), ModelErrc::negative_coefficient);
  EXPECT_EQ(error_code(power_law_model(1.5, 1, -0.5, 0, 0, 0, 0)), ModelErrc::negative_exponent);
  EXPECT_EQ(error_code(drift_only(0.0)), ModelErrc::zero_drift_coefficient);
  EXPECT_EQ(error_code(drift_only(std::nan(""))), ModelErrc::non_finite_parameter);

  auto atom_inside = drift_only();
  atom_inside.nu.atoms.push_back({0.5, 1.0});
  EXPECT_EQ(error_code(atom_inside), ModelErrc::atom_inside_support);

  auto bad_atom = drift_only();
  bad_atom.mu.support_cut = 1.0;
  bad_atom.nu.atoms.push_back({2.0, 0.0});
  EXPECT_EQ(error_code(bad_atom), ModelErrc::invalid_atom);

  auto bad_cut = drift_only();
  bad_cut.mu.support_cut = -1.0;
  EXPECT_EQ(error_code(bad_cut), ModelErrc::invalid_support_cut);

  auto bad_table = drift_only();
  bad_table.a1 = Tabulated{{{1.0, 1.0}, {1.0, 2.0}}};
  EXPECT_EQ(error_code(bad_table), ModelErrc::invalid_table);
  bad_table.a1 = Tabulated{};
  EXPECT_EQ(error_code(bad_table), ModelErrc::invalid_table);
}

TEST(Validate, AtomOutsideTruncatedSupportIsAccepted) {
  auto spec = drift_only();
  spec.mu.support_cut = 1.0;
  spec.nu.atoms.push_back({2.0, 0.5});
  spec.a3 = RateFunction::power(1.0, 1.0);
  const ValidatedModel m = validate(spec);
  EXPECT_FALSE(m.is_pure_power_law());
  EXPECT_DOUBLE_EQ(m.nu().total_mass(), 0.5);
}

TEST(RateFunction, TabulatedInterpolatesAndClamps) {
  const RateFunction f = Tabulated{{{1.0, 2.0}, {3.0, 6.0}, {5.0, 4.0}}};
  EXPECT_DOUBLE_EQ(f(0.1), 2.0);
  EXPECT_DOUBLE_EQ(f(2.0), 4.0);
  EXPECT_DOUBLE_EQ(f(4.0), 5.0);
  EXPECT_DOUBLE_EQ(f(1e9), 4.0);
  EXPECT_FALSE(f.is_zero());
}

TEST(RateFunction, ValuesFiniteAndNonnegativeOverRange) {
  const ValidatedModel m = validate(power_law_model(1.7, 2.0, 2.5, 3.0, 3.0, 0.5, 1.2));
  for (double u = 1e-12; u < 1e12; u *= 3.7) {
    for (double v : {m.a0(u), m.a1(u), m.a2(u), m.a3(u)}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(StableMeasure, NormalizingConstant) {
  EXPECT_NEAR((StableMeasure{1.5, std::nullopt}.c_alpha()), 0.4231421877, 1e-9);
  const StableMeasure cut{1.5, 2.0};
  EXPECT_TRUE(cut.contains(2.0));
  EXPECT_FALSE(cut.contains(2.5));
  EXPECT_EQ(cut.density(3.0), 0.0);
}

TEST(Criticality, DiffusionCritical) {
  const CriticalityCheck c = critical_deficit(validate(power_law_model(1.5, 1, 1, 2, 2, 0, 0)));
  EXPECT_EQ(c.coefficient_deficit, 0.0);
  ASSERT_TRUE(c.r1_residual);
  EXPECT_EQ(*c.r1_residual, 0.0);
  EXPECT_FALSE(c.r2_residual);
  EXPECT_TRUE(c.is_critical);
}

TEST(Criticality, JumpCritical) {
  const CriticalityCheck c = critical_deficit(validate(power_law_model(1.5, std::tgamma(1.5), 1, 0, 0, 1, 1.5)));
  EXPECT_NEAR(c.coefficient_deficit, 0.0, 1e-15);
  ASSERT_TRUE(c.r2_residual);
  EXPECT_EQ(*c.r2_residual, 0.0);
  EXPECT_TRUE(c.is_critical);
}

TEST(Criticality, DriftOnlyIsNotCritical) {
  const CriticalityCheck c = critical_deficit(validate(drift_only()));
  EXPECT_EQ(c.coefficient_deficit, 1.0);
  EXPECT_FALSE(c.is_critical);
}

TEST(Criticality, RejectsNonPowerLaw) {
  auto spec = drift_only();
  spec.a1 = Tabulated{{{1.0, 1.0}}};
  try {
    critical_deficit(validate(spec));
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), ModelErrc::unsupported);
  }
}

TEST(Criticality, TimeScalingProperty) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> alpha_dist(1.05, 1.95);
  std::uniform_real_distribution<double> pos(0.1, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double alpha = alpha_dist(gen);
    const double b1 = pos(gen);
    const double b2 = pos(gen);
    const double r0 = pos(gen);
    const double b0 = 0.5 * b1 + std::tgamma(alpha) * b2 + (i % 2 ? 0.0 : pos(gen));
    const double lambda = pos(gen);
    const auto base = critical_deficit(validate(power_law_model(alpha, b0, r0, b1, r0 + 1, b2, r0 + alpha - 1)));
    const auto scaled = critical_deficit(
        validate(power_law_model(alpha, lambda * b0, r0, lambda * b1, r0 + 1, lambda * b2, r0 + alpha - 1)));
    EXPECT_NEAR(scaled.coefficient_deficit, lambda * base.coefficient_deficit, 1e-12 * lambda * b0);
    EXPECT_EQ(scaled.is_critical, base.is_critical);
    EXPECT_EQ(base.is_critical, i % 2 == 1);
  }
}
