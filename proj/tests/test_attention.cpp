#include "doctest.h"
#include "oracles.hpp"
#include "satin/attention.hpp"

using namespace satin;

namespace {

struct Fixture {
  ParamStore ps;
  Attention att;
  Tape tape;
  Fwd f{tape, false};
  Var s1, s2;

  explicit Fixture(uint64_t seed, int64_t c = 8, int64_t e = 6) {
    Rng rng(seed);
    att = Attention::make(ps, "att", c, 4, rng);
    s1 = ops::leaf(tape, oracle::random_tensor({c, e, e}, rng));
    s2 = ops::leaf(tape, oracle::random_tensor({c, e, e}, rng));
  }
};

}  // namespace

TEST_CASE("gate shapes and open range") {
  Fixture fx(3);
  Var ms = fx.att.spatial_gate(fx.f, fx.s1);
  Var mc = fx.att.channel_gate(fx.f, fx.s2);
  CHECK(ms.val().shape() == std::vector<int64_t>{1, 6, 6});
  CHECK(mc.val().shape() == std::vector<int64_t>{8, 1, 1});
  for (int64_t i = 0; i < ms.val().size(); ++i) {
    CHECK(ms.val().data()[i] > 0.0);
    CHECK(ms.val().data()[i] < 1.0);
  }
  for (int64_t i = 0; i < mc.val().size(); ++i) {
    CHECK(mc.val().data()[i] > 0.0);
    CHECK(mc.val().data()[i] < 1.0);
  }
}

TEST_CASE("output satisfies F_a - F_o = F_o * M_s * M_c elementwise") {
  Fixture fx(5);
  Var out = fx.att(fx.f, fx.s1, fx.s2);
  Var ms = fx.att.spatial_gate(fx.f, fx.s1);
  Var mc = fx.att.channel_gate(fx.f, fx.s2);
  const Tensor& o = out.val();
  const Tensor& s2 = fx.s2.val();
  REQUIRE(o.shape() == s2.shape());
  for (int64_t c = 0; c < 8; ++c)
    for (int64_t y = 0; y < 6; ++y)
      for (int64_t x = 0; x < 6; ++x) {
        double expect = s2.at(c, y, x) * ms.val().at(0, y, x) * mc.val().at(c, 0, 0);
        CHECK(o.at(c, y, x) - s2.at(c, y, x) == doctest::Approx(expect).epsilon(1e-12));
      }
}

TEST_CASE("spatially uniform stage-1 gives a constant spatial gate") {
  Fixture fx(7);
  Tensor flat({8, 16, 16});
  for (int64_t c = 0; c < 8; ++c)
    for (int64_t i = 0; i < 256; ++i) flat.data()[c * 256 + i] = 0.1 * double(c);
  Var ms = fx.att.spatial_gate(fx.f, ops::leaf(fx.tape, flat));
  // cells at least 3 away from every border see identical 7x7 neighborhoods
  double center = ms.val().at(0, 8, 8);
  for (int64_t y = 3; y < 13; ++y)
    for (int64_t x = 3; x < 13; ++x)
      CHECK(ms.val().at(0, y, x) == doctest::Approx(center).epsilon(1e-12));
}

TEST_CASE("module passes grad_check end-to-end") {
  ParamStore ps;
  Rng rng(11);
  Attention att = Attention::make(ps, "att", 4, 4, rng);
  Tensor s1 = oracle::random_tensor({4, 5, 5}, rng);
  Tensor point = oracle::random_tensor({4, 5, 5}, rng);
  auto fn = [&](Tape& t, Var x) {
    Fwd f{t, false};
    return ops::sum_all(att(f, ops::leaf(t, s1), x));
  };
  auto rep = ops::grad_check(fn, point, 1e-4);
  CHECK(!rep.non_checkable);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("all attention parameters receive gradients") {
  Fixture fx(13);
  Var out = fx.att(fx.f, fx.s1, fx.s2);
  fx.tape.backward(ops::sum_all(out).id);
  fx.tape.accumulate_param_grads();
  for (auto& p : fx.ps.all()) {
    double mag = 0;
    for (int64_t i = 0; i < p->grad.size(); ++i) mag += std::abs(p->grad.data()[i]);
    CHECK_MESSAGE(mag > 0, p->name);
  }
}
