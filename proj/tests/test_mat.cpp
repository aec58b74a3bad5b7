#include <doctest.h>

#include <cmath>
#include <random>

#include "macs/mat.hpp"

using macs::Mat;

TEST_CASE("construction and shape") {
    Mat z(2, 3);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 3);
    CHECK(z.max_abs() == 0.0);

    Mat m{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 3.0);
    CHECK(Mat::identity(3)(2, 2) == 1.0);
}

TEST_CASE("constructors reject non-finite entries") {
    CHECK_THROWS_AS(Mat(1, 1, {std::nan("")}), macs::NonFiniteError);
    CHECK_THROWS_AS((Mat{{1.0, INFINITY}}), macs::NonFiniteError);
    CHECK_THROWS_AS(Mat::diag({1.0, -INFINITY}), macs::NonFiniteError);
    CHECK_THROWS_AS(Mat(2, 2, {1.0, 2.0, 3.0}), macs::DimensionError);
}

TEST_CASE("arithmetic") {
    Mat a{{1.0, 2.0}, {3.0, 4.0}};
    Mat b{{0.0, 1.0}, {1.0, 0.0}};
    CHECK((a + b)(0, 0) == 1.0);
    CHECK((a - b)(0, 1) == 1.0);
    CHECK((2.0 * a)(1, 1) == 8.0);
    CHECK((a * b) == Mat{{2.0, 1.0}, {4.0, 3.0}});
    CHECK(a.transposed() == Mat{{1.0, 3.0}, {2.0, 4.0}});
    CHECK_THROWS_AS(a * Mat(3, 2), macs::DimensionError);
    CHECK_THROWS_AS(a + Mat(3, 2), macs::DimensionError);
}

TEST_CASE("block access and stacking") {
    Mat a{{1.0, 2.0}, {3.0, 4.0}};
    Mat h = macs::hstack({a, Mat::identity(2)});
    CHECK(h.cols() == 4);
    CHECK(h(0, 2) == 1.0);
    Mat v = macs::vstack({a, a});
    CHECK(v.rows() == 4);
    CHECK(v.block(2, 0, 2, 2) == a);

    Mat d = macs::block_diag({a, Mat::identity(1)});
    CHECK(d.rows() == 3);
    CHECK(d(2, 2) == 1.0);
    CHECK(d(2, 0) == 0.0);

    Mat k = macs::kron(Mat::identity(2), a);
    CHECK(k.rows() == 4);
    CHECK(k.block(2, 2, 2, 2) == a);
    CHECK(k.block(0, 2, 2, 2).max_abs() == 0.0);
}

TEST_CASE("serial and parallel products agree bit for bit") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {3u, 17u, 65u}) {
        Mat a(n, n), b(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) = u(rng);
                b(r, c) = u(rng);
            }
        const Mat s = macs::kernels::mul_serial(a, b);
        const Mat p = macs::kernels::mul_parallel(a, b);
        CHECK(s == p);
        CHECK(s == a * b);
    }
}

TEST_CASE("vector helpers") {
    Mat v = Mat::col_vec({3.0, 4.0});
    CHECK(macs::norm2(v) == doctest::Approx(5.0));
    CHECK(macs::dot(v, v) == doctest::Approx(25.0));
}
