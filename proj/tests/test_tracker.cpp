#include "doctest.h"
#include "oracles.hpp"
#include "satin/synth.hpp"
#include "satin/tracker.hpp"

using namespace satin;

TEST_CASE("iou fixtures") {
  Box a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{10, 10, 12, 12}) == 0.0);
  // intersection 2, union 6
  CHECK(iou(a, Box{1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou(a, Box{1, 0, 3, 2}) == iou(Box{1, 0, 3, 2}, a));
}

TEST_CASE("assemble_box: consistent corners accepted") {
  Box prev{0, 0, 10, 10};
  Assembled a = assemble_box(Pt{10, 10}, Pt{30, 25}, Pt{50, 40}, prev, 0.5);
  CHECK(a.used_corners);
  CHECK(!a.degenerate);
  CHECK(a.box.x0 == 10.0);
  CHECK(a.box.y0 == 10.0);
  CHECK(a.box.w() == 40.0);
  CHECK(a.box.h() == 30.0);

  // exact midpoint centroid passes for any positive tolerance
  Assembled tight = assemble_box(Pt{10, 10}, Pt{30, 25}, Pt{50, 40}, prev, 1e-9);
  CHECK(tight.used_corners);
}

TEST_CASE("assemble_box: inverted corners fall back to the centroid") {
  Box prev = Box::from_center(100, 100, 20, 12);
  Assembled a = assemble_box(Pt{50, 40}, Pt{30, 25}, Pt{10, 10}, prev, 0.5);
  CHECK(!a.used_corners);
  CHECK(!a.degenerate);
  CHECK(a.box.cx() == doctest::Approx(30.0));
  CHECK(a.box.cy() == doctest::Approx(25.0));
  CHECK(a.box.w() == doctest::Approx(20.0));
  CHECK(a.box.h() == doctest::Approx(12.0));
}

TEST_CASE("assemble_box: disagreeing corners defer to the centroid") {
  Box prev = Box::from_center(0, 0, 8, 8);
  // corner midpoint (30, 25) far from centroid (90, 90) at tol 0.1
  Assembled a = assemble_box(Pt{10, 10}, Pt{90, 90}, Pt{50, 40}, prev, 0.1);
  CHECK(!a.used_corners);
  CHECK(a.box.cx() == doctest::Approx(90.0));
}

TEST_CASE("assemble_box: non-finite everything returns the previous box flagged") {
  double nan = std::numeric_limits<double>::quiet_NaN();
  Box prev{5, 6, 15, 18};
  Assembled a = assemble_box(Pt{nan, nan}, Pt{nan, nan}, Pt{nan, nan}, prev, 0.5);
  CHECK(a.degenerate);
  CHECK(a.box.x0 == 5.0);
  CHECK(a.box.y1 == 18.0);
}

TEST_CASE("tracker produces valid, deterministic boxes with an untrained model") {
  ModelConfig mc;
  mc.dims = {4, 8};
  Model model(mc);

  SynthConfig sc;
  sc.frames = 4;
  SynthVideo v = SynthVideo::sample(sc, 2);

  auto run = [&] {
    Tracker tr(model, TrackerConfig{});
    tr.init(v.render(0), v.gt(0));
    std::vector<Box> out;
    for (int64_t t = 1; t < sc.frames; ++t) out.push_back(tr.update(v.render(t)));
    return out;
  };
  std::vector<Box> a = run(), b = run();
  REQUIRE(a.size() == 3);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].w() >= 1.0);
    CHECK(a[i].h() >= 1.0);
    CHECK(a[i].cx() >= 0.0);
    CHECK(a[i].cx() <= sc.width - 1);
    CHECK(a[i].cy() >= 0.0);
    CHECK(a[i].cy() <= sc.height - 1);
    CHECK(a[i].x0 == b[i].x0);
    CHECK(a[i].y1 == b[i].y1);
  }
}

TEST_CASE("tracker init caches kernels: update ignores later exemplar changes") {
  ModelConfig mc;
  mc.dims = {4, 8};
  Model model(mc);
  SynthConfig sc;
  sc.frames = 3;
  SynthVideo v = SynthVideo::sample(sc, 3);

  Tracker tr(model, TrackerConfig{});
  tr.init(v.render(0), v.gt(0));
  Box b1 = tr.update(v.render(1));

  // same init, but the first frame tensor is freed/meaningless afterwards
  Tracker tr2(model, TrackerConfig{});
  {
    Tensor f0 = v.render(0);
    tr2.init(f0, v.gt(0));
  }
  Box b2 = tr2.update(v.render(1));
  CHECK(b1.x0 == b2.x0);
  CHECK(b1.y0 == b2.y0);
}
