#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "bwsq/error.hpp"
#include "bwsq/random.hpp"
#include "bwsq/stats.hpp"

namespace bwsq {

enum class KernelKind { Linear, Rbf };

struct Kernel {
    KernelKind kind = KernelKind::Linear;
    double gamma = 1.0;  // rbf only: exp(-gamma * ||a - b||^2)

    static Kernel linear() { return {}; }
    static Kernel rbf(double gamma) { return {KernelKind::Rbf, gamma}; }

    std::string name() const { return kind == KernelKind::Linear ? "linear" : "rbf"; }
    bool operator==(const Kernel&) const = default;
};

namespace detail {

template <typename Scalar, int Options>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inner_products(
    const Eigen::SparseMatrix<Scalar, Options>& A, const Eigen::SparseMatrix<Scalar, Options>& B) {
    const Eigen::SparseMatrix<Scalar, Options> prod = A * B.transpose();
    return Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(prod);
}

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> inner_products(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& B) {
    return A * B.transpose();
}

template <typename Scalar, int Options>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_squared_norms(const Eigen::SparseMatrix<Scalar, Options>& A) {
    return A.cwiseAbs2() * Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(A.cols());
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> row_squared_norms(const Eigen::MatrixBase<Derived>& A) {
    return A.rowwise().squaredNorm();
}

}  // namespace detail

// Gram matrix between the rows of A and the rows of B. Works for dense
// matrices and for sparse row matrices (unigram features).
template <typename Features>
auto kernel_matrix(const Features& A, const Features& B, const Kernel& kernel) {
    using Scalar = typename Features::Scalar;
    if (A.cols() != B.cols()) throw InvalidArgument("kernel_matrix: feature dimension mismatch");
    auto K = detail::inner_products(A, B);
    if (kernel.kind == KernelKind::Rbf) {
        if (!(kernel.gamma > 0.0)) throw InvalidArgument("rbf gamma must be positive");
        const auto na = detail::row_squared_norms(A);
        const auto nb = detail::row_squared_norms(B);
        for (Eigen::Index j = 0; j < K.cols(); ++j) {
            for (Eigen::Index i = 0; i < K.rows(); ++i) {
                // Clamp tiny negative distances from cancellation.
                const Scalar d2 = std::max(Scalar(0), na(i) + nb(j) - Scalar(2) * K(i, j));
                K(i, j) = std::exp(-static_cast<Scalar>(kernel.gamma) * d2);
            }
        }
    }
    return K;
}

// Dual coefficients c of (K + alpha I) c = y. Cholesky first, LDLT when the
// matrix is not numerically positive definite. alpha = 0 goes through a
// rank-revealing QR and fails on a singular kernel matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_dual(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> K,
                                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                                                     Scalar alpha) {
    if (alpha < Scalar(0)) throw InvalidArgument("krr alpha must be non-negative");
    if (alpha == Scalar(0)) {
        Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(K);
        if (qr.rank() < K.rows()) {
            throw InvalidArgument("kernel matrix is singular (duplicate or collinear points); use alpha > 0");
        }
        return qr.solve(y);
    }
    K.diagonal().array() += alpha;
    Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(K);
    if (llt.info() == Eigen::Success) return llt.solve(y);
    Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw InvalidArgument("krr system could not be factorized");
    return ldlt.solve(y);
}

template <typename Features>
struct KrrModel {
    using Scalar = typename Features::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Kernel kernel;
    Scalar alpha{};
    // Targets are fit around this offset (their training mean when
    // centering is on, otherwise 0).
    Scalar offset{};
    Vector dual;
    Features train_features;

    Vector predict(const Features& X) const {
        Vector out = kernel_matrix(X, train_features, kernel) * dual;
        out.array() += offset;
        return out;
    }
};

template <typename Features>
KrrModel<Features> fit_krr(const Features& X, const Eigen::Matrix<typename Features::Scalar, Eigen::Dynamic, 1>& y,
                           const Kernel& kernel, typename Features::Scalar alpha, bool center_targets = true) {
    if (X.rows() != y.size()) throw InvalidArgument("krr: feature rows and targets differ in length");
    if (X.rows() < 2) throw InvalidArgument("krr needs at least two training points");
    KrrModel<Features> m;
    m.kernel = kernel;
    m.alpha = alpha;
    m.offset = center_targets ? y.mean() : typename Features::Scalar(0);
    const auto yc = (y.array() - m.offset).matrix().eval();
    m.dual = solve_dual(kernel_matrix(X, X, kernel), yc, alpha);
    m.train_features = X;
    return m;
}

// n values from lo to hi, evenly spaced in log10.
inline std::vector<double> logspace(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("logspace: bad range");
    if (n == 1) return {lo};
    std::vector<double> out;
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
    return out;
}

struct KrrConfig {
    Kernel kernel = Kernel::rbf(1.0);
    double alpha = 1.0;
    bool center_targets = true;

    // Grid search over {linear, rbf x gamma_grid} x alpha_grid by MAE on an
    // inner validation split, then refit on all points.
    bool tune = false;
    std::vector<double> alpha_grid = logspace(1e-3, 1e2, 6);
    std::vector<double> gamma_grid = logspace(1e-3, 10.0, 5);
    bool try_linear = true;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct KrrSelection {
    Kernel kernel;
    double alpha = 0.0;
    double validation_mae = 0.0;
};

template <typename Features>
Features take_rows(const Features& X, const std::vector<Eigen::Index>& rows) {
    if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Features>, Features>) {
        std::vector<Eigen::Triplet<typename Features::Scalar>> triplets;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (typename Features::InnerIterator it(X, rows[r]); it; ++it) {
                triplets.emplace_back(static_cast<Eigen::Index>(r), it.col(), it.value());
            }
        }
        Features out(static_cast<Eigen::Index>(rows.size()), X.cols());
        out.setFromTriplets(triplets.begin(), triplets.end());
        return out;
    } else {
        return X(rows, Eigen::all);
    }
}

template <typename Features>
KrrSelection select_krr(const Features& X, const Eigen::Matrix<typename Features::Scalar, Eigen::Dynamic, 1>& y,
                        const KrrConfig& cfg) {
    using Vector = Eigen::Matrix<typename Features::Scalar, Eigen::Dynamic, 1>;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(cfg.seed ^ 0x6b7272ULL);
    rng.shuffle(std::span<Eigen::Index>(order));
    auto n_val = static_cast<std::size_t>(std::nearbyint(cfg.validation_fraction * static_cast<double>(order.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, order.size() - 2);
    std::vector<Eigen::Index> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<Eigen::Index> fit(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(fit.begin(), fit.end());

    const Features X_fit = take_rows(X, fit);
    const Features X_val = take_rows(X, val);
    const Vector y_fit = y(fit);
    const Vector y_val = y(val);

    std::vector<Kernel> kernels;
    if (cfg.try_linear) kernels.push_back(Kernel::linear());
    for (double g : cfg.gamma_grid) kernels.push_back(Kernel::rbf(g));
    if (kernels.empty() || cfg.alpha_grid.empty()) throw InvalidArgument("krr tuning grid is empty");

    KrrSelection best{cfg.kernel, cfg.alpha, std::numeric_limits<double>::infinity()};
    for (const auto& kernel : kernels) {
        for (double alpha : cfg.alpha_grid) {
            const auto m = fit_krr(X_fit, y_fit, kernel, static_cast<typename Features::Scalar>(alpha),
                                   cfg.center_targets);
            const double mae = static_cast<double>((m.predict(X_val) - y_val).cwiseAbs().mean());
            if (mae < best.validation_mae) best = {kernel, alpha, mae};
        }
    }
    return best;
}

template <typename Features>
KrrModel<Features> train_krr(const Features& X, const Eigen::Matrix<typename Features::Scalar, Eigen::Dynamic, 1>& y,
                             const KrrConfig& cfg) {
    if (!cfg.tune) {
        return fit_krr(X, y, cfg.kernel, static_cast<typename Features::Scalar>(cfg.alpha), cfg.center_targets);
    }
    if (X.rows() < 3) throw InvalidArgument("krr tuning needs at least three points");
    const auto sel = select_krr(X, y, cfg);
    return fit_krr(X, y, sel.kernel, static_cast<typename Features::Scalar>(sel.alpha), cfg.center_targets);
}

}  // namespace bwsq
