#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "l2c/dataset.hpp"
#include "l2c/separation.hpp"

namespace l2c {

struct CiResult {
    bool independent = false;
    double p_value = 0.0;
    double statistic = 0.0;
};

/// Number of fresh backend invocations. Cache hits never count.
class CiCounter {
public:
    void increment() { count_.fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }
    void reset() { count_.store(0); }

private:
    std::atomic<std::uint64_t> count_{0};
};

namespace detail {

inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Partial correlation of idx[0], idx[1] given idx[2..] from a correlation matrix.
inline double partial_correlation(const Eigen::MatrixXd& corr, const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 2) return corr(idx[0], idx[1]);
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = corr(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 1e-10)
        throw NumericError("singular correlation submatrix in partial correlation");
    Eigen::MatrixXd prec = sub.inverse();
    return -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
}

inline CiResult fisher_z_from_corr(const Eigen::MatrixXd& corr, std::size_t n, VarId x, VarId y,
                                   const std::vector<VarId>& z, double alpha) {
    if (n <= z.size() + 3)
        throw InputError("Fisher-Z needs more than |z|+3 samples (n=" + std::to_string(n) + ", |z|=" +
                         std::to_string(z.size()) + ")");
    std::vector<Eigen::Index> idx{x, y};
    for (VarId v : z) idx.push_back(v);
    double r = partial_correlation(corr, idx);
    r = std::clamp(r, -1.0 + 1e-12, 1.0 - 1e-12);
    const double stat = std::sqrt(static_cast<double>(n - z.size() - 3)) * std::atanh(r);
    const double p = two_sided_normal_p(stat);
    return {p > alpha, p, stat};
}

// Residual variance of idx[0] regressed on the remaining idx (unit-variance scale).
inline double residual_variance(const Eigen::MatrixXd& corr, const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 1) return 1.0;
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = corr(idx[i], idx[j]);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sub);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < 1e-10)
        throw NumericError("singular correlation submatrix in regression");
    Eigen::VectorXd e = Eigen::VectorXd::Unit(k, 0);
    return 1.0 / ldlt.solve(e)(0);
}

// Likelihood-ratio test of x _||_ Y | z for Gaussian data with Bartlett's
// correction; chi-square with |Y| degrees of freedom.
inline CiResult gaussian_lr_from_corr(const Eigen::MatrixXd& corr, std::size_t n, VarId x,
                                      const std::vector<VarId>& y, const std::vector<VarId>& z, double alpha) {
    const double q = static_cast<double>(y.size());
    const double scale = static_cast<double>(n) - static_cast<double>(z.size()) - (q + 3.0) / 2.0;
    if (scale <= 1.0) throw InputError("too few samples for a " + std::to_string(y.size()) + "-variable CI test");
    std::vector<Eigen::Index> small{x};
    for (VarId v : z) small.push_back(v);
    std::vector<Eigen::Index> big = small;
    for (VarId v : y) big.push_back(v);
    const double ratio = residual_variance(corr, big) / residual_variance(corr, small);
    const double stat = -scale * std::log(std::clamp(ratio, 1e-300, 1.0));
    const double p = boost::math::gamma_q(q / 2.0, stat / 2.0);
    return {p > alpha, p, stat};
}

inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (sd(j) <= 0) throw NumericError("constant column " + std::to_string(j));
    return cov.array() / (sd * sd.transpose()).array();
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
}

}  // namespace detail

/// Gaussian partial-correlation test of x _||_ y | z.
inline CiResult fisher_z(const Dataset& data, VarId x, VarId y, const NodeSet& z, double alpha,
                         CiCounter* counter = nullptr) {
    detail::check_alpha(alpha);
    data.check_column(x);
    data.check_column(y);
    for (VarId v : z) data.check_column(v);
    if (x == y || z.count(x) || z.count(y)) throw InputError("fisher_z: x, y, z must be disjoint");
    std::vector<VarId> cols{x, y};
    cols.insert(cols.end(), z.begin(), z.end());
    Eigen::MatrixXd sub(data.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = data.values.col(cols[j]);
    Eigen::MatrixXd corr = detail::correlation_matrix(sub);
    std::vector<VarId> zi;
    for (std::size_t j = 2; j < cols.size(); ++j) zi.push_back(static_cast<VarId>(j));
    auto r = detail::fisher_z_from_corr(corr, data.num_samples(), 0, 1, zi, alpha);
    if (counter) counter->increment();
    return r;
}

/// Graph-backed test: independence is exactly m-separation in `g`.
inline CiResult oracle_test(const MixedGraph& g, VarId x, VarId y, const NodeSet& z,
                            CiCounter* counter = nullptr) {
    bool sep = m_separated(g, SepQuery{{x}, {y}, z});
    if (counter) counter->increment();
    return {sep, sep ? 1.0 : 0.0, 0.0};
}

/// A backend answers x _||_ Y | z. Set-valued Y is used by the blanket
/// search to test many candidates at once.
class CiBackend {
public:
    virtual ~CiBackend() = default;
    virtual std::size_t num_vars() const = 0;
    virtual CiResult run(VarId x, const NodeSet& y, const NodeSet& z) const = 0;
};

class OracleBackend final : public CiBackend {
public:
    explicit OracleBackend(MixedGraph g) : g_(std::move(g)) {}
    std::size_t num_vars() const override { return g_.num_vars(); }
    CiResult run(VarId x, const NodeSet& y, const NodeSet& z) const override {
        bool sep = m_separated(g_, SepQuery{{x}, y, z});
        return {sep, sep ? 1.0 : 0.0, 0.0};
    }
    const MixedGraph& graph() const { return g_; }

private:
    MixedGraph g_;
};

/// Fisher-Z with the correlation matrix computed once up front.
class FisherZBackend final : public CiBackend {
public:
    FisherZBackend(const Dataset& data, double alpha)
        : corr_(detail::correlation_matrix(data.values)), n_(data.num_samples()), alpha_(alpha) {
        detail::check_alpha(alpha);
    }
    std::size_t num_vars() const override { return static_cast<std::size_t>(corr_.cols()); }
    CiResult run(VarId x, const NodeSet& y, const NodeSet& z) const override {
        std::vector<VarId> zs(z.begin(), z.end());
        if (y.size() == 1) return detail::fisher_z_from_corr(corr_, n_, x, *y.begin(), zs, alpha_);
        return detail::gaussian_lr_from_corr(corr_, n_, x, std::vector<VarId>(y.begin(), y.end()), zs, alpha_);
    }
    double alpha() const { return alpha_; }

private:
    Eigen::MatrixXd corr_;
    std::size_t n_;
    double alpha_;
};

/// Memoizing, counting front end shared by every discovery routine of a run.
/// Keys are symmetric in (x, y). Concurrent callers asking the same fresh
/// question wait on one backend call, so the counter is exact.
class CiTester {
public:
    explicit CiTester(std::shared_ptr<const CiBackend> backend, bool cache = true)
        : backend_(std::move(backend)), use_cache_(cache) {}

    CiResult test(VarId x, VarId y, const NodeSet& z) { return test_set(x, NodeSet{y}, z); }

    /// x _||_ Y | z as a single test (one count).
    CiResult test_set(VarId x, const NodeSet& y, const NodeSet& z) {
        if (y.empty()) throw InputError("CI test with empty y");
        if (x >= num_vars()) throw InputError("CI test on unknown variable");
        for (VarId v : y)
            if (v >= num_vars() || v == x || z.count(v)) throw InputError("CI test sets overlap or are out of range");
        for (VarId v : z)
            if (v >= num_vars() || v == x) throw InputError("CI test sets overlap or are out of range");
        if (!use_cache_) {
            auto r = backend_->run(x, y, z);
            counter_.increment();
            return r;
        }
        Key key{x, std::vector<VarId>(y.begin(), y.end()), std::vector<VarId>(z.begin(), z.end())};
        if (key.y.size() == 1 && key.y[0] < x) std::swap(key.a, key.y[0]);
        std::promise<CiResult> promise;
        std::shared_future<CiResult> fut;
        bool owner = false;
        {
            std::lock_guard lock(mu_);
            auto [it, inserted] = cache_.try_emplace(key);
            if (inserted) {
                it->second = promise.get_future().share();
                owner = true;
            }
            fut = it->second;
        }
        if (owner) {
            try {
                promise.set_value(backend_->run(x, y, z));
                counter_.increment();
            } catch (...) {
                promise.set_exception(std::current_exception());
                std::lock_guard lock(mu_);
                cache_.erase(key);
            }
        }
        return fut.get();
    }

    bool independent(VarId x, VarId y, const NodeSet& z) { return test(x, y, z).independent; }
    bool independent_set(VarId x, const NodeSet& y, const NodeSet& z) { return test_set(x, y, z).independent; }

    std::uint64_t count() const { return counter_.count(); }
    std::size_t num_vars() const { return backend_->num_vars(); }
    const CiBackend& backend() const { return *backend_; }

    void reset() {
        std::lock_guard lock(mu_);
        cache_.clear();
        counter_.reset();
    }

private:
    struct Key {
        VarId a;
        std::vector<VarId> y;
        std::vector<VarId> z;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = std::hash<VarId>{}(k.a);
            auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
            for (VarId v : k.y) mix(v);
            mix(0xffffffffu);
            for (VarId v : k.z) mix(v);
            return h;
        }
    };

    std::shared_ptr<const CiBackend> backend_;
    bool use_cache_;
    CiCounter counter_;
    std::mutex mu_;
    std::unordered_map<Key, std::shared_future<CiResult>, KeyHash> cache_;
};

}  // namespace l2c
