#include <cmath>

#include "anchorrank/autodiff.hpp"
#include "anchorrank/optim.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace anchorrank;

TEST_CASE("finite differences agree with backward for every op and composite") {
  for (const auto& e : suites::gradient_suite(20, 2024)) {
    INFO(e.name << ": worst relative error " << e.worst << ", " << e.rejected << " draws screened out");
    CHECK(e.instances == 20);
    CHECK(e.failures == 0);
  }
}

TEST_CASE("tanh derivative at zero is one") {
  ParamSlot x("x", Tensor({1}));
  Tape tape;
  Var y = ops::dense(tape.param(x), tape.constant(Tensor::matrix(1, 1, {1.0})), tape.constant(Tensor({1})),
                     Activation::tanh);
  tape.backward(y);
  CHECK(x.gradient[0] == 1.0);
}

TEST_CASE("kernel_pool gradient vanishes at a kernel centre") {
  KernelConfig cfg{{0.3}, {0.1}};
  ParamSlot m("m", Tensor::matrix(1, 1, {0.3}));
  Tape tape;
  tape.backward(ops::sum(ops::kernel_pool(tape.param(m), cfg)));
  CHECK(m.gradient[0] == 0.0);
}

TEST_CASE("a recorded graph refuses backward after its parameter changed") {
  ParamSlot x("x", Tensor::vector({1, 2}));
  Tape tape;
  Var s = ops::sum(tape.param(x));
  x.value[0] = 5;
  x.touch();
  CHECK_THROWS_AS(tape.backward(s), GraphError);

  Tape again;
  Var t = ops::sum(again.param(x));
  again.backward(t);
  CHECK_THROWS_AS(again.backward(t), GraphError);
}

TEST_CASE("backward needs a scalar") {
  ParamSlot x("x", Tensor::vector({1, 2}));
  Tape tape;
  CHECK_THROWS_AS(tape.backward(ops::scale(tape.param(x), 2.0)), ShapeError);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves the value alone") {
    ParamSlot p("p", Tensor::vector({0.5, -1}));
    adam_step(p, 1e-2);
    CHECK(p.value == Tensor::vector({0.5, -1}));
    CHECK(p.step == 1);
  }
  SUBCASE("first step moves by lr against the sign of the gradient") {
    ParamSlot p("p", Tensor::vector({0, 0, 0}));
    p.gradient = Tensor::vector({3, -0.2, 1e-3});
    adam_step(p, 1e-2);
    // Bias-corrected t=1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
    const double g[] = {3, -0.2, 1e-3};
    for (int i = 0; i < 3; ++i) CHECK(p.value[i] == doctest::Approx(-1e-2 * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-12));
    for (double v : p.gradient.span()) CHECK(v == 0.0);
  }
  SUBCASE("frozen PAD row stays at zero") {
    ParamSlot p("emb", Tensor({3, 2}));
    p.freeze_row0 = true;
    p.gradient.fill(1.0);
    adam_step(p, 0.1);
    CHECK(p.value.at(0, 0) == 0.0);
    CHECK(p.value.at(1, 0) < 0.0);
  }
  SUBCASE("non-finite gradient is an error") {
    ParamSlot p("p", Tensor({2}));
    p.gradient[1] = NAN;
    CHECK_THROWS_AS(adam_step(p, 1e-3), NumericError);
  }
  SUBCASE("identical runs are bit-identical") {
    auto run = [] {
      Rng rng(9);
      ParamSlot p("p", fd::random_tensor({4}, rng));
      for (int s = 0; s < 10; ++s) {
        p.gradient = fd::random_tensor({4}, rng);
        adam_step(p, 1e-3);
      }
      return p.value;
    };
    CHECK(run() == run());
  }
  SUBCASE("reset clears moments") {
    ParamSlot p("p", Tensor::vector({1}));
    p.gradient[0] = 1;
    adam_step(p, 1e-3);
    reset_optimizer(p);
    CHECK(p.step == 0);
    CHECK(p.moment1[0] == 0.0);
    CHECK(p.moment2[0] == 0.0);
  }
}

TEST_CASE("checkpoints round-trip and reject mismatches") {
  fixtures::TempDir dir("ckpt");
  Rng rng(4);
  ParamSlot a("a", fd::random_tensor({3, 2}, rng)), b("b", fd::random_tensor({5}, rng));
  const ParamSlot* out[] = {&a, &b};
  save_checkpoint(dir.path / "x.ckpt", out);

  ParamSlot a2("a", Tensor({3, 2})), b2("b", Tensor({5}));
  ParamSlot* in[] = {&a2, &b2};
  load_checkpoint(dir.path / "x.ckpt", in);
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);

  ParamSlot wrong("a", Tensor({2, 3}));
  ParamSlot* bad_shape[] = {&wrong, &b2};
  CHECK_THROWS_AS(load_checkpoint(dir.path / "x.ckpt", bad_shape), CheckpointError);
  ParamSlot missing("c", Tensor({1}));
  ParamSlot* bad_name[] = {&missing};
  CHECK_THROWS_AS(load_checkpoint(dir.path / "x.ckpt", bad_name), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "nope.ckpt", in), CheckpointError);
}
