#pragma once

// Linear readout: ridge-regularized least squares through the normal
// equations, prediction, and the rms / classification metrics.

#include "stno/errors.hpp"
#include "stno/multiplexing.hpp"
#include "stno/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace stno {

struct ReadoutWeights {
    Eigen::VectorXd w;  // last entry multiplies the bias feature
    bool underdetermined = false;  // fewer rows than columns at training time
};

struct EvalReport {
    double rms = 0.0;
    double point_error_rate = 0.0;
    double symbol_error_rate = 0.0;
};

/// Condition number above which an unregularized system is rejected.
inline constexpr double max_condition = 1e12;

inline Eigen::VectorXd make_targets(const Waveform& waveform)
{
    Eigen::VectorXd y(static_cast<Eigen::Index>(waveform.size()));
    for (std::size_t k = 0; k < waveform.size(); ++k)
        y(static_cast<Eigen::Index>(k)) = waveform.labels[k] == 1 ? 1.0 : 0.0;
    return y;
}

/// lambda = rel * trace(S^T S) / cols.
inline double default_ridge(const Eigen::MatrixXd& s, double rel)
{
    if (s.cols() == 0) return 0.0;
    return rel * s.squaredNorm() / static_cast<double>(s.cols());
}

/// Minimizes |S w - y|^2 + lambda |w'|^2 where w' omits the bias weight when
/// `bias_last` is set. Solved through (S^T S + lambda P) w = S^T y.
inline ReadoutWeights train(const Eigen::MatrixXd& s, const Eigen::VectorXd& y, double lambda,
                            bool bias_last = true)
{
    if (s.rows() != y.size())
        throw DimensionMismatch("train: " + std::to_string(s.rows()) + " rows but "
                                + std::to_string(y.size()) + " targets");
    if (s.cols() == 0) throw DimensionMismatch("train: no features");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("train: lambda must be >= 0");

    const Eigen::MatrixXd gram = s.transpose() * s;
    if (lambda == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > max_condition)
            throw SingularSystem("train: normal equations are singular (condition estimate "
                                 + (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf"))
                                 + ")");
    }

    Eigen::MatrixXd lhs = gram;
    const Eigen::Index penalized = bias_last ? s.cols() - 1 : s.cols();
    for (Eigen::Index i = 0; i < penalized; ++i) lhs(i, i) += lambda;

    ReadoutWeights out;
    out.underdetermined = s.rows() < s.cols();
    out.w = lhs.ldlt().solve(s.transpose() * y);
    if (!out.w.allFinite()) throw SingularSystem("train: solution is not finite");
    return out;
}

inline ReadoutWeights train(const StateMatrix& states, const Eigen::VectorXd& y, double lambda)
{
    return train(states.data, y, lambda, true);
}

inline Eigen::VectorXd predict(const Eigen::MatrixXd& s, const ReadoutWeights& weights)
{
    if (s.cols() != weights.w.size())
        throw DimensionMismatch("predict: " + std::to_string(s.cols()) + " features but "
                                + std::to_string(weights.w.size()) + " weights");
    return s * weights.w;
}

inline Eigen::VectorXd predict(const StateMatrix& states, const ReadoutWeights& weights)
{
    return predict(states.data, weights);
}

/// Point class from an output value. Exactly 0.5 counts as square.
inline int classify(double output) noexcept { return output >= 0.5 ? 1 : 0; }

/// rms deviation plus point and symbol error rates. Symbols are consecutive
/// blocks of `points_per_symbol` points, decided by majority vote with ties
/// going to square.
inline EvalReport evaluate(std::span<const double> outputs, std::span<const double> targets,
                           std::size_t points_per_symbol = points_per_period)
{
    if (outputs.size() != targets.size())
        throw DimensionMismatch("evaluate: outputs and targets differ in length");
    if (points_per_symbol == 0 || outputs.size() % points_per_symbol != 0)
        throw DimensionMismatch("evaluate: length is not a whole number of symbols");

    EvalReport report;
    if (outputs.empty()) return report;
    double sq = 0.0;
    std::size_t wrong_points = 0, wrong_symbols = 0;
    const std::size_t n_symbols = outputs.size() / points_per_symbol;
    for (std::size_t sym = 0; sym < n_symbols; ++sym) {
        std::size_t votes_square = 0, target_square = 0;
        for (std::size_t j = 0; j < points_per_symbol; ++j) {
            const std::size_t k = sym * points_per_symbol + j;
            const double d = outputs[k] - targets[k];
            sq += d * d;
            const int predicted = classify(outputs[k]);
            const int truth = classify(targets[k]);
            if (predicted != truth) ++wrong_points;
            votes_square += static_cast<std::size_t>(predicted);
            target_square += static_cast<std::size_t>(truth);
        }
        const int sym_pred = 2 * votes_square >= points_per_symbol ? 1 : 0;
        const int sym_true = 2 * target_square >= points_per_symbol ? 1 : 0;
        if (sym_pred != sym_true) ++wrong_symbols;
    }
    const auto n = static_cast<double>(outputs.size());
    report.rms = std::sqrt(sq / n);
    report.point_error_rate = static_cast<double>(wrong_points) / n;
    report.symbol_error_rate = static_cast<double>(wrong_symbols) / static_cast<double>(n_symbols);
    return report;
}

inline EvalReport evaluate(const Eigen::VectorXd& outputs, const Eigen::VectorXd& targets,
                           std::size_t points_per_symbol = points_per_period)
{
    return evaluate(std::span<const double>(outputs.data(), static_cast<std::size_t>(outputs.size())),
                    std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())),
                    points_per_symbol);
}

/// Symbol-level partition into train and test sets; all points of a symbol stay together.
struct Split {
    std::vector<std::size_t> train_symbols, test_symbols;  // ascending
    std::vector<std::size_t> train_points, test_points;    // ascending
};

inline Split split_train_test(std::size_t n_symbols, std::size_t points_per_symbol,
                              double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("split_train_test: train_fraction must be in (0, 1)");
    const auto n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n_symbols)));
    if (n_train == 0 || n_train >= n_symbols)
        throw ConfigError("split_train_test: " + std::to_string(n_symbols) + " symbols at fraction "
                          + std::to_string(train_fraction) + " leaves one side empty");

    std::vector<std::size_t> order(n_symbols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(seed);
    for (std::size_t i = n_symbols - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    Split split;
    split.train_symbols.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_symbols.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(split.train_symbols.begin(), split.train_symbols.end());
    std::sort(split.test_symbols.begin(), split.test_symbols.end());
    auto expand = [points_per_symbol](const std::vector<std::size_t>& syms) {
        std::vector<std::size_t> pts;
        pts.reserve(syms.size() * points_per_symbol);
        for (auto s : syms)
            for (std::size_t j = 0; j < points_per_symbol; ++j) pts.push_back(s * points_per_symbol + j);
        return pts;
    };
    split.train_points = expand(split.train_symbols);
    split.test_points = expand(split.test_symbols);
    return split;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

inline Eigen::VectorXd select_rows(const Eigen::VectorXd& v, std::span<const std::size_t> rows)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
    return out;
}

}  // namespace stno
