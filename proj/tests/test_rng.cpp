#include <doctest.h>

#include <cmath>
#include <vector>

#include "ppk/rng.hpp"

using ppk::Philox;

TEST_CASE("philox known-answer vectors") {
  CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) ==
        Philox::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream draws are the cipher of (block, stream) under the seed") {
  Philox g(0, 0);
  CHECK(g.next_u32() == 0x6627e8d5u);
  CHECK(g.next_u32() == 0xe169c58du);
  CHECK(g.next_u32() == 0xbc57ac4cu);
  CHECK(g.next_u32() == 0x9b00dbd8u);
  CHECK(g.next_u32() == Philox::block({1, 0, 0, 0}, {0, 0})[0]);

  Philox s(0x0000000200000001ull, 0x0000000400000003ull);
  CHECK(s.next_u32() == Philox::block({0, 0, 3, 4}, {1, 2})[0]);
}

TEST_CASE("streams are reproducible and distinct") {
  Philox a(42, 7), b(42, 7), c(42, 8);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int k = 0; k < 16; ++k) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
}

TEST_CASE("uniform and normal moments") {
  Philox g(2024, 1);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int k = 0; k < n; ++k) {
    const double u = g.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = g.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(su2 / n - (su / n) * (su / n) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.015));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("poisson variates") {
  Philox g(99, 0);
  CHECK(g.poisson(0.0) == 0);
  CHECK(g.poisson(-1.0) == 0);
  for (double mean : {0.3, 4.0, 250.0, 1800.0}) {
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      const auto x = static_cast<double>(g.poisson(mean));
      s += x;
      s2 += x * x;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 4.0 * std::sqrt(mean / n));
    CHECK(v == doctest::Approx(mean).epsilon(0.05));
  }
}
