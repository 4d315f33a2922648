#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "mldf/error.hpp"
#include "mldf/metrics.hpp"
#include "oracle_metrics.hpp"
#include "test_util.hpp"

using mldf::MeasureKind;
using testutil::bmat;
using testutil::mat;
using testutil::near;

TEST_CASE("measure orientation, basis, names") {
    CHECK(mldf::lower_is_better(MeasureKind::HammingLoss));
    CHECK(mldf::lower_is_better(MeasureKind::OneError));
    CHECK(mldf::lower_is_better(MeasureKind::Coverage));
    CHECK(mldf::lower_is_better(MeasureKind::RankingLoss));
    CHECK_FALSE(mldf::lower_is_better(MeasureKind::AveragePrecision));
    CHECK_FALSE(mldf::lower_is_better(MeasureKind::MacroAUC));

    CHECK(mldf::label_based(MeasureKind::HammingLoss));
    CHECK(mldf::label_based(MeasureKind::MacroAUC));
    CHECK_FALSE(mldf::label_based(MeasureKind::OneError));
    CHECK_FALSE(mldf::label_based(MeasureKind::Coverage));
    CHECK_FALSE(mldf::label_based(MeasureKind::RankingLoss));
    CHECK_FALSE(mldf::label_based(MeasureKind::AveragePrecision));

    CHECK(mldf::better(MeasureKind::HammingLoss, 0.1, 0.2));
    CHECK(mldf::worse(MeasureKind::HammingLoss, 0.2, 0.1));
    CHECK_FALSE(mldf::better(MeasureKind::HammingLoss, 0.2, 0.2));
    CHECK(mldf::better(MeasureKind::AveragePrecision, 0.9, 0.8));
    CHECK(mldf::worse(MeasureKind::AveragePrecision, 0.8, 0.9));
    CHECK_FALSE(mldf::worse(MeasureKind::AveragePrecision, 0.9, 0.9));

    for (auto m : mldf::all_measures()) {
        CHECK(mldf::better(m, 0.5, mldf::worst_value(m)));
        CHECK(mldf::measure_from_name(mldf::measure_name(m)) == m);
    }
    CHECK(mldf::measure_name(MeasureKind::HammingLoss) == "hamming-loss");
    CHECK(mldf::measure_name(MeasureKind::MacroAUC) == "macro-auc");
    CHECK_THROWS_AS((void)mldf::measure_from_name("f1"), mldf::ArgumentError);
}

TEST_CASE("binarize") {
    const auto b = mldf::binarize(mat({{0.2, 0.8, 0.4}}), 0.5);
    CHECK(b == bmat({{0, 1, 0}}));
    CHECK(mldf::binarize(mat({{0.0, 0.0}}), 0.5) == bmat({{0, 0}}));
    // exact threshold stays 0: the comparison is strict
    CHECK(mldf::binarize(mat({{0.5, 0.500001}}), 0.5) == bmat({{0, 1}}));
}

TEST_CASE("rank_of") {
    const std::vector<double> r1{0.2, 0.8, 0.4};
    CHECK(mldf::rank_of(r1, 1) == 1);
    CHECK(mldf::rank_of(r1, 2) == 2);
    CHECK(mldf::rank_of(r1, 0) == 3);
    const std::vector<double> tied{0.5, 0.5};
    CHECK(mldf::rank_of(tied, 0) == 1);
    CHECK(mldf::rank_of(tied, 1) == 2);
    const std::vector<double> asc{0.1, 0.2, 0.3};
    CHECK(mldf::rank_of(asc, 0) == 3);
}

TEST_CASE("evaluate hand examples") {
    const auto F = mat({{0.2, 0.8, 0.4}});
    const auto Y = bmat({{0, 1, 0}});
    CHECK(mldf::evaluate(MeasureKind::RankingLoss, F, Y) == 0.0);
    CHECK(mldf::evaluate(MeasureKind::AveragePrecision, F, Y) == 1.0);
    CHECK(mldf::evaluate(MeasureKind::HammingLoss, F, Y, 0.5) == 0.0);
    CHECK(near(mldf::evaluate(MeasureKind::HammingLoss, F, bmat({{1, 1, 0}}), 0.5), 1.0 / 3.0, 1e-15));
    CHECK(mldf::evaluate(MeasureKind::Coverage, F, Y) == 0.0);
    CHECK(mldf::evaluate(MeasureKind::OneError, F, Y) == 0.0);
}

TEST_CASE("perfect scores are optimal for every measure") {
    const auto Y = bmat({{1, 0, 1}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}});
    mldf::Matrix F(Y.rows(), Y.cols());
    for (std::size_t i = 0; i < Y.rows(); ++i)
        for (std::size_t j = 0; j < Y.cols(); ++j) F(i, j) = Y(i, j);
    CHECK(mldf::evaluate(MeasureKind::HammingLoss, F, Y) == 0.0);
    CHECK(mldf::evaluate(MeasureKind::OneError, F, Y) == 0.0);
    CHECK(mldf::evaluate(MeasureKind::RankingLoss, F, Y) == 0.0);
    CHECK(mldf::evaluate(MeasureKind::AveragePrecision, F, Y) == 1.0);
    CHECK(mldf::evaluate(MeasureKind::MacroAUC, F, Y) == 1.0);
}

TEST_CASE("per-instance examples") {
    const std::vector<double> f{0.2, 0.8, 0.4};
    const std::vector<std::uint8_t> y{0, 1, 0};
    CHECK(mldf::evaluate_per_instance(MeasureKind::OneError, f, y) == 0.0);
    const std::vector<double> f2{0.9, 0.1};
    const std::vector<std::uint8_t> y2{0, 1};
    CHECK(mldf::evaluate_per_instance(MeasureKind::OneError, f2, y2) == 1.0);
    const std::vector<double> f3{0.5, 0.6};
    const std::vector<std::uint8_t> y3{1, 0};
    CHECK(mldf::evaluate_per_instance(MeasureKind::RankingLoss, f3, y3) == 1.0);
    // coverage is (worst relevant rank - 1) / l
    const std::vector<double> f4{0.9, 0.2, 0.5, 0.1};
    const std::vector<std::uint8_t> y4{1, 1, 0, 0};
    CHECK(near(mldf::evaluate_per_instance(MeasureKind::Coverage, f4, y4), (3.0 - 1.0) / 4.0, 1e-15));

    const std::vector<std::uint8_t> allpos{1, 1};
    CHECK_THROWS_AS((void)mldf::evaluate_per_instance(MeasureKind::OneError, f2, allpos),
                    mldf::UndefinedMeasureError);
}

TEST_CASE("per-label examples") {
    const std::vector<double> c{0.9, 0.2};
    const std::vector<std::uint8_t> t{1, 0};
    CHECK(mldf::evaluate_per_label(MeasureKind::HammingLoss, c, t) == 0.0);
    CHECK(mldf::evaluate_per_label(MeasureKind::MacroAUC, c, t) == 1.0);
    const std::vector<double> rev{0.2, 0.9};
    CHECK(mldf::evaluate_per_label(MeasureKind::MacroAUC, rev, t) == 0.0);
    const std::vector<std::uint8_t> oneclass{1, 1};
    CHECK_THROWS_AS((void)mldf::evaluate_per_label(MeasureKind::MacroAUC, c, oneclass),
                    mldf::UndefinedMeasureError);
    // per-label hamming stays defined on a one-class column
    CHECK(mldf::evaluate_per_label(MeasureKind::HammingLoss, c, oneclass) == 0.5);
}

TEST_CASE("tie semantics differ between ranking loss and AUC") {
    const std::vector<double> tied{0.5, 0.5};
    const std::vector<std::uint8_t> y{1, 0};
    // a tied pair counts as a ranking violation
    CHECK(mldf::evaluate_per_instance(MeasureKind::RankingLoss, tied, y) == 1.0);
    // but as an AUC success
    CHECK(mldf::evaluate_per_label(MeasureKind::MacroAUC, tied, y) == 1.0);
}

TEST_CASE("degenerate slices are excluded, not averaged as zeros") {
    // row 0 is all-negative: only row 1 counts
    const auto F = mat({{0.9, 0.1}, {0.2, 0.7}});
    const auto Y = bmat({{0, 0}, {1, 0}});
    CHECK(mldf::evaluate(MeasureKind::OneError, F, Y) == 1.0);
    CHECK(mldf::evaluate(MeasureKind::RankingLoss, F, Y) == 1.0);

    // every row degenerate: instance-based measures are undefined
    const auto Yd = bmat({{0, 0}, {1, 1}});
    CHECK_THROWS_AS((void)mldf::evaluate(MeasureKind::OneError, F, Yd), mldf::UndefinedMeasureError);
    // every column one-class: macro-AUC is undefined
    const auto Yc = bmat({{0, 1}, {0, 1}});
    CHECK_THROWS_AS((void)mldf::evaluate(MeasureKind::MacroAUC, F, Yc), mldf::UndefinedMeasureError);
    // hamming is always defined
    CHECK(mldf::evaluate(MeasureKind::HammingLoss, F, Yd) == 0.5);
}

TEST_CASE("whole-matrix equals mean of per-slice values") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 2 + trial % 7, l = 2 + trial % 5;
        const auto F = testutil::random_scores(rng, m, l);
        const auto Y = testutil::random_truth(rng, m, l);
        for (auto mk : mldf::all_measures()) {
            double sum = 0.0;
            std::size_t n = 0;
            try {
                if (mldf::label_based(mk)) {
                    for (std::size_t j = 0; j < l; ++j) {
                        try {
                            sum += mldf::evaluate_per_label(mk, F.col(j), Y.col(j));
                            ++n;
                        } catch (const mldf::UndefinedMeasureError&) {
                        }
                    }
                } else {
                    for (std::size_t i = 0; i < m; ++i) {
                        try {
                            sum += mldf::evaluate_per_instance(mk, F.row(i), Y.row(i));
                            ++n;
                        } catch (const mldf::UndefinedMeasureError&) {
                        }
                    }
                }
                const double whole = mldf::evaluate(mk, F, Y);
                REQUIRE(n > 0);
                CHECK(near(whole, sum / static_cast<double>(n), 1e-12));
            } catch (const mldf::UndefinedMeasureError&) {
                CHECK(n == 0);
            }
        }
    }
}

TEST_CASE("ranking loss zero iff average precision one") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const auto F = testutil::random_scores(rng, 1, 5);
        auto Y = testutil::random_truth(rng, 1, 5);
        std::size_t ones = 0;
        for (std::size_t j = 0; j < 5; ++j) ones += Y(0, j);
        if (ones == 0 || ones == 5) continue;
        const double rl = mldf::evaluate_per_instance(MeasureKind::RankingLoss, F.row(0), Y.row(0));
        const double ap = mldf::evaluate_per_instance(MeasureKind::AveragePrecision, F.row(0), Y.row(0));
        CHECK((rl == 0.0) == (ap == 1.0));
    }
}

TEST_CASE("raising a relevant score never hurts the ranking measures") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t l = 3 + trial % 4;
        const auto F = testutil::random_scores(rng, 1, l);
        auto Y = testutil::random_truth(rng, 1, l);
        std::size_t ones = 0;
        for (std::size_t j = 0; j < l; ++j) ones += Y(0, j);
        if (ones == 0 || ones == l) continue;
        std::size_t rel = 0;
        while (Y(0, rel) == 0) ++rel;
        mldf::Matrix F2 = F;
        F2(0, rel) = F(0, rel) + uni(rng) * (1.0 - F(0, rel)) * 0.999;
        const std::span<const double> row = F.row(0);
        const std::span<const double> row2 = F2.row(0);
        const auto y = Y.row(0);
        // 1e-12 slack: rank shifts reorder the floating-point summation
        CHECK(mldf::evaluate_per_instance(MeasureKind::RankingLoss, row2, y) <=
              mldf::evaluate_per_instance(MeasureKind::RankingLoss, row, y) + 1e-12);
        CHECK(mldf::evaluate_per_instance(MeasureKind::Coverage, row2, y) <=
              mldf::evaluate_per_instance(MeasureKind::Coverage, row, y) + 1e-12);
        CHECK(mldf::evaluate_per_instance(MeasureKind::AveragePrecision, row2, y) >=
              mldf::evaluate_per_instance(MeasureKind::AveragePrecision, row, y) - 1e-12);
    }
}

TEST_CASE("all six measures match the brute-force transcription") {
    std::mt19937_64 rng(7);
    const auto t0 = std::chrono::steady_clock::now();
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + static_cast<std::size_t>(rng() % 8);
        const std::size_t l = 2 + static_cast<std::size_t>(rng() % 5);
        const double density = 0.15 + 0.7 * (static_cast<double>(rng() % 100) / 99.0);
        const auto F = testutil::random_scores(rng, m, l);
        const auto Y = testutil::random_truth(rng, m, l, density);
        const auto oF = testutil::to_rows(F);
        const auto oY = testutil::to_rows(Y);
        for (auto mk : mldf::all_measures()) {
            double ours = 0.0, ref = 0.0;
            bool ours_undef = false, ref_undef = false;
            try {
                ours = mldf::evaluate(mk, F, Y, 0.5);
            } catch (const mldf::UndefinedMeasureError&) {
                ours_undef = true;
            }
            try {
                switch (mk) {
                    case MeasureKind::HammingLoss: ref = oracle::hamming_loss(oF, oY, 0.5); break;
                    case MeasureKind::OneError: ref = oracle::one_error(oF, oY); break;
                    case MeasureKind::Coverage: ref = oracle::coverage(oF, oY); break;
                    case MeasureKind::RankingLoss: ref = oracle::ranking_loss(oF, oY); break;
                    case MeasureKind::AveragePrecision: ref = oracle::average_precision(oF, oY); break;
                    case MeasureKind::MacroAUC: ref = oracle::macro_auc(oF, oY); break;
                }
            } catch (const oracle::undefined_measure&) {
                ref_undef = true;
            }
            REQUIRE(ours_undef == ref_undef);
            if (!ours_undef) {
                CHECK(near(ours, ref, 1e-12));
                CHECK(ours >= 0.0);
                CHECK(ours <= 1.0);
                ++checked;
            }
        }
    }
    CHECK(checked >= 1000);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
}
