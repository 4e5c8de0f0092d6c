#include "mklpo/error.hpp"
#include "mklpo/kernels.hpp"
#include "reference.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mklpo;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64 &gen, int d, int n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd X(d, n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < d; ++r) X(r, c) = nd(gen);
    }
    return X;
}

double min_eigenvalue(const Eigen::MatrixXd &K) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("gram examples") {
    CHECK(gram(KernelSpec::linear(), Eigen::MatrixXd::Identity(2, 2)) == Eigen::MatrixXd::Identity(2, 2));

    Eigen::MatrixXd same(2, 2);
    same << 0.3, 0.3, -1.0, -1.0;
    CHECK(gram(KernelSpec::rbf(1.0), same) == Eigen::MatrixXd::Ones(2, 2));

    Eigen::MatrixXd one_d(1, 2);
    one_d << 1, 2;
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 4, 4, 16;
    CHECK(gram(KernelSpec::polynomial(2, 0.0), one_d) == expected);
}

TEST_CASE("kernel definitions") {
    std::mt19937_64 gen(2);
    const Eigen::MatrixXd X = random_points(gen, 3, 7);
    const Eigen::MatrixXd lin = gram(KernelSpec::linear(), X);
    CHECK((lin - X.transpose() * X).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::MatrixXd poly = gram(KernelSpec::polynomial(3, 0.5), X);
    const Eigen::MatrixXd rbf = gram(KernelSpec::rbf(0.7), X);
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            CHECK(poly(i, j) == doctest::Approx(std::pow(X.col(i).dot(X.col(j)) + 0.5, 3)).epsilon(1e-12));
            CHECK(rbf(i, j) == doctest::Approx(std::exp(-0.7 * (X.col(i) - X.col(j)).squaredNorm())).epsilon(1e-12));
        }
    }
    for (const auto &K : {lin, poly, rbf}) {
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(min_eigenvalue(K) >= -1e-6 * std::max(1.0, K.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("gram overflow names the pair") {
    Eigen::MatrixXd X(1, 2);
    X << 1e200, 1.0;
    try {
        (void)gram(KernelSpec::polynomial(3, 1.0), X);
        FAIL("expected an error");
    } catch (const DataError &e) {
        CHECK(std::string{e.what()}.find("(0, 0)") != std::string::npos);
    }
}

TEST_CASE("normalize unit diagonal examples") {
    Eigen::MatrixXd a(2, 2);
    a << 4, 2, 2, 1;
    CHECK(normalize_unit_diagonal(a) == Eigen::MatrixXd::Ones(2, 2));
    Eigen::MatrixXd b(2, 2);
    b << 1, 0, 0, 9;
    CHECK(normalize_unit_diagonal(b) == Eigen::MatrixXd::Identity(2, 2));

    std::mt19937_64 gen(4);
    const Eigen::MatrixXd K = gram(KernelSpec::rbf(0.3), random_points(gen, 2, 9));
    CHECK((normalize_unit_diagonal(K) - K).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXd bad(2, 2);
    bad << 1, 0, 0, 0;
    CHECK_THROWS_AS((void)normalize_unit_diagonal(bad), DataError);
}

TEST_CASE("combine examples") {
    std::mt19937_64 gen(5);
    const Eigen::MatrixXd X = random_points(gen, 2, 6);
    KernelBank single({KernelSpec::rbf(0.5)}, X, true);
    CHECK(combine(single) == single.gram(0));

    Eigen::MatrixXd k1(1, 1), k2(1, 1);
    k1 << 2;
    k2 << 4;
    KernelBank two({KernelSpec::linear(), KernelSpec::linear()}, {k1, k2},
                   {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)}, false);
    CHECK(combine(two)(0, 0) == doctest::Approx(1.5));
    Eigen::VectorXd vertex(2);
    vertex << 1, 0;
    two.set_tau(vertex);
    CHECK(combine(two) == k1);

    Eigen::VectorXd off(2);
    off << 0.7, 0.7;
    CHECK_THROWS_AS(two.set_tau(off), DataError);
}

TEST_CASE("combine is quadratic in tau and stays PSD") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd X = random_points(gen, 3, 12);
        const KernelBank bank(default_kernel_specs(3), X, true);
        Eigen::VectorXd tau = ref::random_vector(gen, 6, 1.0).cwiseAbs();
        tau /= tau.sum();
        Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(12, 12);
        for (int m = 0; m < 6; ++m) direct += 2.5 * 2.5 * tau(m) * tau(m) * bank.gram(m);
        KernelBank weighted = bank;
        weighted.set_tau(tau);
        CHECK(((6.25 * combine(weighted)) - direct).cwiseAbs().maxCoeff() <= 1e-12);
        const Eigen::MatrixXd K = combine(weighted);
        CHECK(min_eigenvalue(K) >= -1e-6 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().maxCoeff());
        for (int m = 0; m < 6; ++m) CHECK((bank.gram(m).diagonal().array() - 1.0).abs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("combine_cross consistency") {
    std::mt19937_64 gen(7);
    const Eigen::MatrixXd X = random_points(gen, 2, 8);
    KernelBank bank(default_kernel_specs(2), X, true);
    Eigen::VectorXd tau(6);
    tau << 0.1, 0.3, 0.05, 0.2, 0.25, 0.1;
    bank.set_tau(tau);
    const Eigen::MatrixXd K = combine(bank);
    CHECK((combine_cross(bank, X, X) - K).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::MatrixXd col = combine_cross(bank, X, X.col(3));
    CHECK((col - K.col(3)).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXd train(2, 2), test(2, 1);
    train << 1, 2, 0, 0;
    test << 0, 5;
    const KernelBank lin({KernelSpec::linear()}, train, false);
    CHECK(combine_cross(lin, train, test) == Eigen::MatrixXd::Zero(2, 1));
    CHECK_THROWS_AS((void)combine_cross(lin, train, Eigen::MatrixXd::Zero(3, 1)), DataError);
}

TEST_CASE("kernel spec strings") {
    const auto specs = parse_kernel_specs("linear,poly:degree=2,offset=1,rbf:gamma=0.1");
    REQUIRE(specs.size() == 3);
    CHECK(specs[0] == KernelSpec::linear());
    CHECK(specs[1] == KernelSpec::polynomial(2, 1.0));
    CHECK(specs[2] == KernelSpec::rbf(0.1));
    CHECK(parse_kernel_specs(format_kernel_specs(specs)) == specs);
    CHECK(parse_kernel_specs("rbf:gamma=0.5")[0].to_string() == "rbf:gamma=0.5");

    CHECK_THROWS_AS((void)parse_kernel_specs("poly:degree=2"), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs("rbf:gamma=-1"), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs("rbf:gamma=1,degree=2"), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs("poly:degree=0,offset=1"), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs("sigmoid"), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs(""), DataError);
    CHECK_THROWS_AS((void)parse_kernel_specs("linear:gamma=1"), DataError);
}

TEST_CASE("default bank") {
    const auto specs = default_kernel_specs(4);
    REQUIRE(specs.size() == 6);
    CHECK(specs[0] == KernelSpec::linear());
    CHECK(specs[1] == KernelSpec::polynomial(2, 1.0));
    CHECK(specs[2].gamma == doctest::Approx(0.01 / 4));
    CHECK(specs[5].gamma == doctest::Approx(10.0 / 4));
}

TEST_CASE("single kernel bank") {
    std::mt19937_64 gen(8);
    const Eigen::MatrixXd X = random_points(gen, 2, 5);
    const KernelBank bank(default_kernel_specs(2), X, true);
    const KernelBank one = bank.single(3);
    CHECK(one.size() == 1);
    CHECK(one.tau()(0) == 1.0);
    CHECK(one.gram(0) == bank.gram(3));
    CHECK(one.specs()[0] == bank.specs()[3]);
    CHECK_THROWS((void)bank.single(6));
}
