#include <gtest/gtest.h>

#include "gradient_cases.hpp"

using namespace fastre;
using namespace fastre::testing;

static_assert(sizeof(Real) == sizeof(double), "gradient tests need the double-precision build");

TEST(Gradients, CentralDifferencesAgree) {
  for (const auto& [name, run] : gradient_cases()) {
    const auto r = run();
    EXPECT_GT(r.nonzero, r.checked / 2) << name;
    EXPECT_LE(r.max_rel_error, kGradRelTolerance) << name;
  }
}

TEST(Gradients, CheckerCatchesAWrongGradient) {
  // A leaf that enters the loss through a detached copy gets no gradient,
  // which the checker must report.
  Rng rng(3);
  auto x = random_tensor({4}, rng, 1.0, true);
  auto y = Tensor::from_data({4}, {1, 1, 1, 1}, true);
  const auto r = grad_check("detached", [&] {
    return sum(add(mul(x.detach(), x.detach()), y));
  }, {x});
  EXPECT_FALSE(r.passed());
}
