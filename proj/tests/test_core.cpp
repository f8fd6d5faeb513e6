#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "helpers.hpp"
#include "tsvc/core.hpp"
#include "tsvc/random.hpp"

using namespace tsvc;

TEST_SUITE("core") {

TEST_CASE("intercept-only fit is the mean") {
    Matrix design = Matrix::Ones(4, 1);
    Vector y(4);
    y << 1, 2, 3, 4;
    const auto fit = solve_least_squares(design, y);
    CHECK(fit.coefficients[0] == doctest::Approx(2.5));
    CHECK(fit.rss == doctest::Approx(5.0));
    CHECK(fit.n_params == 1);
    CHECK(fit.sigma2_hat == doctest::Approx(5.0 / 4));
    CHECK(fit.log_lik == doctest::Approx(-2.0 * (std::log(2 * std::numbers::pi * 1.25) + 1)));
}

TEST_CASE("response in the column span is interpolated") {
    Matrix design(4, 2);
    design << 0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5;
    Vector y = design * Vector::Constant(2, 3.0);
    const auto fit = solve_least_squares(design, y);
    CHECK(fit.rss == 0.0);
    CHECK(std::isinf(fit.log_lik));
    CHECK((fit.fitted - y).norm() < 1e-12);
}

TEST_CASE("noiseless response recovers the coefficients") {
    auto rng = make_stream(11, {});
    Matrix design = standard_normal(rng, 20, 3);
    Vector beta(3);
    beta << 1.5, -2.0, 0.25;
    const auto fit = solve_least_squares(design, design * beta);
    CHECK((fit.coefficients - beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("collinear columns are rejected") {
    auto rng = make_stream(12, {});
    Matrix design(10, 3);
    design.leftCols(2) = standard_normal(rng, 10, 2);
    design.col(2) = 2.0 * design.col(0) - design.col(1);
    CHECK_THROWS_AS(solve_least_squares(design, standard_normal(rng, 10)), Error);
    try {
        solve_least_squares(design, standard_normal(rng, 10));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RankDeficient);
    }
}

TEST_CASE("shape errors") {
    CHECK_THROWS_AS(solve_least_squares(Matrix::Ones(3, 1), Vector::Ones(4)), Error);
    CHECK_THROWS_AS(solve_least_squares(Matrix::Ones(2, 3), Vector::Ones(2)), Error);
}

TEST_CASE("gaussian log-likelihood values") {
    CHECK(gaussian_log_lik(10.0, 10) == doctest::Approx(-14.189).epsilon(1e-4));
    CHECK(gaussian_log_lik(20.0, 10) == doctest::Approx(-17.655).epsilon(1e-4));
    CHECK(gaussian_log_lik(10.0, 10) == doctest::Approx(-5.0 * (std::log(2 * std::numbers::pi) + 1)));
    CHECK(gaussian_log_lik(7.0, 10) > gaussian_log_lik(14.0, 10));
    CHECK_THROWS_AS(gaussian_log_lik(0.0, 10), Error);
    try {
        gaussian_log_lik(0.0, 10);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateFit);
    }
}

TEST_CASE("adding a column never increases rss") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto rng = make_stream(seed, {1});
        Matrix design = standard_normal(rng, 30, 6);
        design.col(0).setOnes();
        const Vector y = standard_normal(rng, 30);
        double prev = std::numeric_limits<double>::infinity();
        for (Eigen::Index q = 1; q <= 6; ++q) {
            const double rss = solve_least_squares(design.leftCols(q), y).rss;
            CHECK(rss <= prev + 1e-10);
            prev = rss;
        }
    }
}

TEST_CASE("log-likelihood ignores row order") {
    auto rng = make_stream(5, {});
    Matrix design = standard_normal(rng, 25, 3);
    Vector y = standard_normal(rng, 25);
    const double a = solve_least_squares(design, y).log_lik;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(25);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 25, rng);
    const double b = solve_least_squares(perm * design, perm * y).log_lik;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("one-hot basis reproduces y") {
    const Matrix design = Matrix::Identity(6, 6);
    Vector y(6);
    y << 3, -1, 4, 1, -5, 9;
    const auto fit = solve_least_squares(design, y);
    CHECK((fit.fitted - y).norm() < 1e-12);
    CHECK(fit.rss == 0.0);
}

TEST_CASE("dataset validation") {
    auto rng = make_stream(3, {});
    const Matrix X = standard_normal(rng, 6, 2);
    const Vector y = standard_normal(rng, 6);
    CHECK_NOTHROW(Dataset(y, X));
    CHECK(Dataset(y, X).names() == std::vector<std::string>{"x1", "x2"});

    auto kind_of = [](auto&& make) {
        try {
            make();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind_of([&] { Dataset(y.head(5), X.topRows(5)); }) == ErrorKind::InvalidDataset);
    CHECK(kind_of([&] { Dataset(y.head(4), X.topRows(5)); }) == ErrorKind::InvalidDataset);
    CHECK(kind_of([&] { Dataset(y, Matrix(6, 0)); }) == ErrorKind::InvalidDataset);
    Matrix bad = X;
    bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK(kind_of([&] { Dataset(y, bad); }) == ErrorKind::InvalidDataset);
    CHECK(kind_of([&] { Dataset(y, X, {"a", "a"}); }) == ErrorKind::InvalidDataset);
    CHECK(kind_of([&] { Dataset(y, X, {"a"}); }) == ErrorKind::InvalidDataset);

    const auto d = Dataset(y, X, {"a", "b"}).with_response(Vector::Zero(6));
    CHECK(d.y().isZero());
    CHECK(d.names()[1] == "b");
}

TEST_CASE("input errors are told apart from numeric failures") {
    CHECK(Error(ErrorKind::InvalidArgument, "").is_input_error());
    CHECK(Error(ErrorKind::OffGrid, "").is_input_error());
    CHECK(Error(ErrorKind::Io, "").is_input_error());
    CHECK_FALSE(Error(ErrorKind::DegenerateFit, "").is_input_error());
    CHECK_FALSE(Error(ErrorKind::RankDeficient, "").is_input_error());
    CHECK(std::string(to_string(ErrorKind::NoAdmissibleSplit)).size() > 0);
}

TEST_CASE("random streams are reproducible and distinct") {
    auto a = make_stream(1, {2, 3});
    auto b = make_stream(1, {2, 3});
    auto c = make_stream(1, {3, 2});
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
}

}
