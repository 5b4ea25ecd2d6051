#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "ruq/core/error.hpp"
#include "ruq/core/field.hpp"
#include "ruq/core/rng.hpp"
#include "ruq/core/tensor.hpp"

using namespace ruq;

namespace {

ScalarField random_field(const Grid& g, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> v(g.cells());
    for (auto& x : v) x = u(rng);
    return ScalarField(g, v);
}

Tensor<double> random_tensor(Shape shape, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(shape_product(shape));
    for (auto& x : v) x = n(rng);
    return Tensor<double>(std::move(shape), std::move(v));
}

} // namespace

TEST_CASE("grid validation")
{
    CHECK_THROWS_AS(Grid::make(1, 4, 1, 1, 0.2, 1), InvalidArgument);
    CHECK_THROWS_AS(Grid::make(4, 4, 0, 1, 0.2, 1), InvalidArgument);
    CHECK_THROWS_AS(Grid::make(4, 4, 1, 1, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(Grid::make(4, 4, 1, 1, 1.5, 1), InvalidArgument);
    CHECK_NOTHROW(Grid::make(4, 4, 1, 1, 1.0, 1));
    const Grid g = Grid::square(32);
    CHECK(g.index(3, 2) == 3 + 2 * 32);
    CHECK_NOTHROW(require_divisible(g, 4));
    CHECK_THROWS_AS(require_divisible(Grid::square(24), 4), InvalidArgument);
}

TEST_CASE("field_linear_combine")
{
    const Grid g2 = Grid::make(2, 2, 1, 1, 0.2, 1);
    const ScalarField f = ScalarField::constant(g2, 2.0);
    const ScalarField h = ScalarField::constant(g2, 4.0);

    SUBCASE("identity case") { CHECK(field_linear_combine(1.0, f, 0.0, h) == f); }

    SUBCASE("midpoint")
    {
        const auto m = field_linear_combine(0.5, f, 0.5, h);
        for (double v : m.values()) CHECK(v == 3.0);
    }

    SUBCASE("elementwise oracle on random 4x4")
    {
        const Grid g = Grid::make(4, 4, 1, 1, 0.2, 1);
        const auto a = random_field(g, 1);
        const auto b = random_field(g, 2);
        const auto r = field_linear_combine(0.3, a, -1.7, b);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) CHECK(r.at(i, j) == 0.3 * a.at(i, j) + -1.7 * b.at(i, j));
    }

    SUBCASE("grid mismatch")
    {
        const Grid g3 = Grid::make(3, 2, 1, 1, 0.2, 1);
        CHECK_THROWS_AS(field_linear_combine(1, f, 1, ScalarField::constant(g3, 1.0)), InvalidArgument);
    }
}

TEST_CASE("non-finite values are rejected")
{
    const Grid g = Grid::make(2, 2, 1, 1, 0.2, 1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ScalarField(g, {0, 1, nan, 2}), InvalidArgument);
    CHECK_THROWS_AS(ScalarField(g, {0, 1, std::numeric_limits<double>::infinity(), 2}), InvalidArgument);
    CHECK_THROWS_AS(ScalarField(g, {0, 1, 2}), InvalidArgument);
    CHECK_THROWS_AS(Tensor<double>({2}, {1.0, nan}), InvalidArgument);
    CHECK_THROWS_AS(Tensor<float>({1}, {std::numeric_limits<float>::quiet_NaN()}), InvalidArgument);
    CHECK_THROWS_AS(Tensor<double>({3}, {1.0, 2.0}), InvalidArgument);

    std::vector<double> fx(3 * 2, 0.0), fy(2 * 3, 0.0);
    fx[1] = nan;
    CHECK_THROWS_AS(FaceField(g, fx, fy), InvalidArgument);
}

TEST_CASE("face field boundary faces are zero")
{
    const Grid g = Grid::make(2, 2, 1, 1, 0.2, 1);
    std::vector<double> fx(3 * 2, 0.0), fy(2 * 3, 0.0);
    fx[FaceField::x_index(g, 1, 0)] = 2.0;
    fy[FaceField::y_index(g, 0, 1)] = -1.0;
    const FaceField ok(g, fx, fy);
    CHECK(ok.x_face(1, 0) == 2.0);
    CHECK(ok.y_face(0, 1) == -1.0);

    auto bad = fx;
    bad[FaceField::x_index(g, 0, 1)] = 1.0;
    CHECK_THROWS_AS(FaceField(g, bad, fy), InvalidArgument);
    auto bad_y = fy;
    bad_y[FaceField::y_index(g, 1, 2)] = 1.0;
    CHECK_THROWS_AS(FaceField(g, fx, bad_y), InvalidArgument);
}

TEST_CASE("tensor_concat_channels")
{
    SUBCASE("bottleneck concatenation shape")
    {
        const auto a = Tensor<float>::zeros({1, 128, 8, 8});
        const auto b = Tensor<float>::filled({1, 128, 8, 8}, 1.0f);
        const std::vector<Tensor<float>> v{a, b};
        const auto c = tensor_concat_channels<float>(v);
        CHECK(c.shape() == Shape{1, 256, 8, 8});
    }

    SUBCASE("single input unchanged")
    {
        const auto a = random_tensor({2, 3, 4, 5}, 7);
        CHECK(tensor_concat_channels({a}) == a);
    }

    SUBCASE("concat then slice recovers originals")
    {
        const auto a = random_tensor({3, 2, 4, 5}, 1);
        const auto b = random_tensor({3, 5, 4, 5}, 2);
        const auto c = random_tensor({3, 1, 4, 5}, 3);
        const auto cat = tensor_concat_channels({a, b, c});
        CHECK(cat.shape() == Shape{3, 8, 4, 5});
        CHECK(tensor_slice_channels(cat, 0, 2) == a);
        CHECK(tensor_slice_channels(cat, 2, 5) == b);
        CHECK(tensor_slice_channels(cat, 7, 1) == c);
    }

    SUBCASE("spatial mismatch rejected")
    {
        const auto a = Tensor<double>::zeros({1, 2, 4, 4});
        const auto b = Tensor<double>::zeros({1, 2, 4, 5});
        CHECK_THROWS_AS(tensor_concat_channels({a, b}), InvalidArgument);
        const auto c = Tensor<double>::zeros({2, 2, 4, 4});
        CHECK_THROWS_AS(tensor_concat_channels({a, c}), InvalidArgument);
    }
}

TEST_CASE("seed streams are distinct and reproducible")
{
    CHECK(stream_seed(7, "perm", 0) == stream_seed(7, "perm", 0));
    CHECK(stream_seed(7, "perm", 0) != stream_seed(7, "perm", 1));
    CHECK(stream_seed(7, "perm", 0) != stream_seed(7, "wells", 0));
    CHECK(stream_seed(7, "perm", 0) != stream_seed(8, "perm", 0));
}
