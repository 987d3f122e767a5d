#include <cmath>
#include <set>

#include "doctest.h"
#include "qsdlab/rng.hpp"

using namespace qsdlab;

// Known-answer vectors of the Random123 distribution.
TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  StreamFactory f(42);
  RngStream a = f.stream("x", 3), b = f.stream("x", 3), c = f.stream("x", 4), d = f.stream("y", 3);
  std::set<std::uint32_t> firsts;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u32();
    CHECK(va == b.next_u32());
    firsts.insert(va);
  }
  CHECK(f.stream("x", 3).next_u32() != c.next_u32());
  CHECK(f.stream("x", 3).next_u32() != d.next_u32());
  CHECK(firsts.size() > 95);
}

TEST_CASE("uniform and normal moments") {
  RngStream r = StreamFactory(7).stream("moments", 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0 && u < 1));
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}
