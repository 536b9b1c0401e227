#include "doctest.h"
#include "rnnlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

using namespace rnnlab;

TEST_CASE("finite_diff on a quadratic") {
  auto f = [](std::span<const double> theta) {
    double s = 0.0;
    for (double v : theta) s += v * v;
    return s;
  };
  std::vector<double> theta = {1.0, 2.0};
  auto g = finite_diff(f, theta, 1e-6);
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);
}

TEST_CASE("finite_diff on a constant") {
  auto f = [](std::span<const double>) { return 3.5; };
  std::vector<double> theta = {0.3, -0.7, 1.1};
  for (double g : finite_diff(f, theta, 1e-6)) CHECK(std::abs(g) < 1e-9);
}

TEST_CASE("finite_diff flags non-finite losses") {
  auto f = [](std::span<const double> theta) {
    return theta[0] > 1.0 ? std::numeric_limits<double>::infinity() : theta[0];
  };
  std::vector<double> theta = {1.0};
  auto g = finite_diff(f, theta, 1e-6);
  CHECK(std::isnan(g[0]));
}

TEST_CASE("relative error metric is symmetric and scale-free") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == relative_error(1.0, 2.0));
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(relative_error(2e-11, 1e-11) == doctest::Approx(1e-11 / 1e-10));  // floor kicks in
  CHECK(relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("all nine presets pass the gradient check at small sizes") {
  GradCheckSizes sizes;
  sizes.n_blocks = 2;
  sizes.n_inputs = 2;
  sizes.n_outputs = 2;
  sizes.seq_len = 3;
  sizes.n_sequences = 2;
  for (const auto& name : VariantSpec::preset_names()) {
    for (TaskKind task : {TaskKind::FramewiseClassification, TaskKind::NextStepPrediction}) {
      CAPTURE(name);
      CAPTURE(task_name(task));
      GradCheckReport rep = check_variant(name, task, sizes, 314);
      CHECK(rep.pass);
    }
  }
}

TEST_CASE("FGR report includes the nine extra recurrent blocks") {
  GradCheckSizes sizes;
  sizes.n_blocks = 2;
  sizes.n_inputs = 2;
  sizes.seq_len = 3;
  sizes.n_sequences = 1;
  GradCheckReport rep = check_variant("FGR", TaskKind::NextStepPrediction, sizes, 1);
  int fgr_blocks = 0;
  for (const auto& b : rep.blocks)
    if (b.block.find("fwd.R_") == 0 && b.block.size() == 8) ++fgr_blocks;
  CHECK(fgr_blocks == 9);
}

TEST_CASE("an unattainable tolerance fails") {
  GradCheckSizes sizes;
  sizes.n_blocks = 2;
  sizes.n_inputs = 2;
  sizes.seq_len = 3;
  sizes.n_sequences = 1;
  GradCheckReport rep = check_variant("CIFG", TaskKind::NextStepPrediction, sizes, 2, 1e-12);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("check is deterministic per seed") {
  GradCheckSizes sizes;
  sizes.n_blocks = 2;
  sizes.n_inputs = 2;
  sizes.seq_len = 3;
  sizes.n_sequences = 1;
  GradCheckReport a = check_variant("V", TaskKind::NextStepPrediction, sizes, 99);
  GradCheckReport b = check_variant("V", TaskKind::NextStepPrediction, sizes, 99);
  CHECK(a.max_relative_error == b.max_relative_error);
}
