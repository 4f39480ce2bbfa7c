#include <doctest.h>

#include "behgan/enhance.hpp"
#include "behgan/errors.hpp"
#include "test_util.hpp"

using namespace behgan;

TEST_CASE("baseline enhancer scales by four") {
  const auto reg = EnhancerRegistry::with_builtins();
  for (int n = 1; n <= 4; ++n) {
    const GlyphImage in = testing::stroke_image(n);
    const GlyphImage out = reg.get("baseline").apply(in);
    CHECK(out.width == 4 * in.width);
    CHECK(out.height == 4 * in.height);
    CHECK(out.n_chars == n);
    CHECK(reg.get("baseline").scale == 4);
    const GlyphImage back = to_slot_geometry(out);
    CHECK(back.width == in.width);
    CHECK(back.height == 32);
    CHECK(has_slot_geometry(back));
  }
}

TEST_CASE("identity enhancer and registry") {
  const auto reg = EnhancerRegistry::with_builtins();
  const GlyphImage in = testing::stroke_image(3);
  CHECK(reg.get("identity").apply(in) == in);
  CHECK(to_slot_geometry(in) == in);
  CHECK(reg.ids() == std::vector<std::string>{"baseline", "identity"});
  CHECK_THROWS_AS(reg.get("esrgan"), UnknownEnhancer);
}

TEST_CASE("plain background survives enhancement") {
  const GlyphImage white(32, 32, 2);
  const GlyphImage out = enhance_baseline(white);
  for (auto p : out.pixels) CHECK(p == 255);
}
