#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "knnball/rng.hpp"
#include "knnball/torus.hpp"

using namespace knnball;

TEST_CASE("canonicalize_coord maps into [0,1)") {
    CHECK(canonicalize_coord(0.0) == 0.0);
    CHECK(canonicalize_coord(1.0) == 0.0);
    CHECK(canonicalize_coord(1.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(canonicalize_coord(-0.25) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(canonicalize_coord(-3.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(canonicalize_coord(7.0) == 0.0);
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        double x = (rng.uniform() - 0.5) * 200.0;
        double c = canonicalize_coord(x);
        CHECK(c >= 0.0);
        CHECK(c < 1.0);
    }
}

TEST_CASE("canonicalize rejects non-finite input") {
    CHECK_THROWS_AS(canonicalize({0.5, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(canonicalize({HUGE_VAL}), std::invalid_argument);
}

TEST_CASE("torus distance, hand values") {
    std::vector<double> a{0.1}, b{0.9};
    CHECK(torus_distance(a, b) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(torus_distance({0.0}, {0.5}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(torus_distance({0.1, 0.1}, {0.9, 0.9}) ==
          doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(torus_distance({0.25, 0.5, 0.75}, {0.25, 0.5, 0.75}) == 0.0);
}

TEST_CASE("torus distance properties: symmetry, triangle, diameter") {
    Rng rng(5);
    for (int d = 1; d <= 4; ++d) {
        for (int it = 0; it < 200; ++it) {
            std::vector<double> x(d), y(d), z(d);
            for (int i = 0; i < d; ++i) {
                x[i] = rng.uniform();
                y[i] = rng.uniform();
                z[i] = rng.uniform();
            }
            double dxy = torus_distance(x.data(), y.data(), d);
            double dyx = torus_distance(y.data(), x.data(), d);
            CHECK(dxy == dyx);
            CHECK(dxy <= torus_diameter(d) + 1e-15);
            double dxz = torus_distance(x.data(), z.data(), d);
            double dzy = torus_distance(z.data(), y.data(), d);
            CHECK(dxy <= dxz + dzy + 1e-12);
        }
    }
}

TEST_CASE("torus distance is shift invariant") {
    Rng rng(17);
    for (int it = 0; it < 200; ++it) {
        int d = 1 + static_cast<int>(rng.uniform_below(3));
        std::vector<double> x(d), y(d), xs(d), ys(d);
        double shift = rng.uniform();
        for (int i = 0; i < d; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
            xs[i] = canonicalize_coord(x[i] + shift);
            ys[i] = canonicalize_coord(y[i] + shift);
        }
        CHECK(torus_distance(x.data(), y.data(), d) ==
              doctest::Approx(torus_distance(xs.data(), ys.data(), d)).epsilon(1e-12));
    }
}

TEST_CASE("torus distance equals plain distance when nothing wraps") {
    Rng rng(23);
    for (int it = 0; it < 300; ++it) {
        int d = 1 + static_cast<int>(rng.uniform_below(5));
        std::vector<double> x(d), y(d);
        for (int i = 0; i < d; ++i) {
            x[i] = 0.3 * rng.uniform();  // both in [0, 0.3): gaps below 0.5
            y[i] = 0.3 * rng.uniform();
        }
        // bit-identical, not just approximately equal
        CHECK(torus_distance(x.data(), y.data(), d) == euclid_distance(x.data(), y.data(), d));
        CHECK(torus_distance2(x.data(), y.data(), d) == euclid_distance2(x.data(), y.data(), d));
    }
}

TEST_CASE("unit ball volumes") {
    // frozen reference values of pi^{d/2} / Gamma(d/2 + 1)
    CHECK(ball_volume_coeff(1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ball_volume_coeff(2) == doctest::Approx(3.1415926535897932).epsilon(1e-15));
    CHECK(ball_volume_coeff(3) == doctest::Approx(4.188790204786391).epsilon(1e-14));
    CHECK(ball_volume_coeff(4) == doctest::Approx(4.9348022005446793).epsilon(1e-14));
    CHECK(ball_volume_coeff(5) == doctest::Approx(5.2637890139143246).epsilon(1e-14));
    CHECK(ball_volume_coeff(8) == doctest::Approx(4.0587121264167682).epsilon(1e-14));
    CHECK(ball_volume(0.5, 2) == doctest::Approx(3.1415926535897932 / 4.0).epsilon(1e-15));
    CHECK(ball_volume(0.0, 3) == 0.0);
    CHECK_THROWS_AS(ball_volume(-1e-9, 2), std::domain_error);
}

TEST_CASE("dimension guard") {
    CHECK_THROWS_AS(check_dim(0), std::invalid_argument);
    CHECK_THROWS_AS(check_dim(9), std::invalid_argument);
    CHECK_NOTHROW(check_dim(1));
    CHECK_NOTHROW(check_dim(8));
    CHECK(torus_diameter(4) == doctest::Approx(1.0).epsilon(1e-15));
}
