#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "l2c/calculus.hpp"
#include "l2c/dataset.hpp"
#include "l2c/errors.hpp"
#include "l2c/partition.hpp"

namespace l2c {

namespace detail {

// Evaluates interventional means of a do-free expression under a linear
// Gaussian model: every term P(A | B) is read as A = beta B + c fitted by
// least squares, and a summed cluster contributes the mean implied by the
// factor that produces it.
class LinearEvaluator {
public:
    using Env = std::map<ClusterId, Eigen::VectorXd>;

    LinearEvaluator(const Dataset& data, const Partition& p) : data_(data), p_(p) {
        if (data.num_vars() != p.num_vars())
            throw InputError("dataset has " + std::to_string(data.num_vars()) + " columns, partition covers " +
                             std::to_string(p.num_vars()));
    }

    Eigen::VectorXd mean_of(const CausalExpr& e, ClusterId c, const Env& env) {
        switch (e.kind) {
            case CausalExpr::Kind::prob:
                return term_mean(e, c, env);
            case CausalExpr::Kind::sum: {
                Env inner = env;
                for (auto b : e.bound) inner.erase(b);
                return mean_of(e.children[0], c, inner);
            }
            case CausalExpr::Kind::product: {
                Env local = env;
                std::set<ClusterId> active;
                std::function<void(ClusterId)> need = [&](ClusterId v) {
                    if (local.count(v)) return;
                    if (!active.insert(v).second) throw InputError("cyclic factorization");
                    const CausalExpr* f = nullptr;
                    for (const auto& ch : e.children)
                        if (ch.outcomes().count(v)) f = &ch;
                    if (!f) throw InputError("no factor determines cluster " + p_.name(v));
                    for (auto g : f->free_inputs()) need(g);
                    local[v] = mean_of(*f, v, local);
                    active.erase(v);
                };
                need(c);
                return local.at(c);
            }
            case CausalExpr::Kind::fraction:
                throw InputError("linear plug-in evaluation does not support fractions");
        }
        return {};
    }

private:
    Eigen::VectorXd term_mean(const CausalExpr& e, ClusterId c, const Env& env) {
        if (!e.outcome.count(c)) throw InputError("term does not determine cluster " + p_.name(c));
        if (!e.intervened.empty()) throw ContractError("expression is not do-free");
        std::vector<VarId> preds;
        Eigen::VectorXd x(0);
        for (auto g : e.given) {
            auto it = env.find(g);
            if (it == env.end()) throw InputError("cluster " + p_.name(g) + " has no value in scope");
            const auto& m = p_.members(g);
            preds.insert(preds.end(), m.begin(), m.end());
            Eigen::VectorXd nx(x.size() + it->second.size());
            nx << x, it->second;
            x = nx;
        }
        const auto& mem = p_.members(c);
        Eigen::VectorXd out(mem.size());
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const auto& beta = fit(mem[i], preds);
            out[static_cast<Eigen::Index>(i)] = beta[0] + (preds.empty() ? 0.0 : beta.tail(x.size()).dot(x));
        }
        return out;
    }

    const Eigen::VectorXd& fit(VarId target, const std::vector<VarId>& preds) {
        auto key = std::make_pair(target, preds);
        if (auto it = fits_.find(key); it != fits_.end()) return it->second;
        const Eigen::Index n = data_.values.rows();
        Eigen::MatrixXd design(n, static_cast<Eigen::Index>(preds.size()) + 1);
        design.col(0).setOnes();
        for (std::size_t j = 0; j < preds.size(); ++j) design.col(static_cast<Eigen::Index>(j) + 1) = data_.values.col(preds[j]);
        Eigen::MatrixXd gram = design.transpose() * design;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12)
            throw NumericError("singular design when regressing variable " + std::to_string(target));
        Eigen::VectorXd beta = ldlt.solve(design.transpose() * data_.values.col(target));
        return fits_.emplace(key, std::move(beta)).first->second;
    }

    const Dataset& data_;
    const Partition& p_;
    std::map<std::pair<VarId, std::vector<VarId>>, Eigen::VectorXd> fits_;
};

}  // namespace detail

/// Plug-in interventional mean, averaged over `y_vars`, of a do-free
/// expression under do(x_value). Every member of an intervened cluster needs
/// a value.
inline double estimate(const CausalExpr& expr, const Dataset& data, const Partition& p,
                       const std::map<VarId, double>& x_value, const std::vector<VarId>& y_vars) {
    if (!expr.do_free()) throw ContractError("estimate needs a do-free expression");
    if (y_vars.empty()) throw InputError("no outcome variables given");
    detail::LinearEvaluator ev(data, p);
    detail::LinearEvaluator::Env env;
    std::set<ClusterId> xc;
    for (auto [v, val] : x_value) xc.insert(p.of(v));
    for (auto c : xc) {
        const auto& m = p.members(c);
        Eigen::VectorXd vals(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto it = x_value.find(m[i]);
            if (it == x_value.end()) throw InputError("no intervention value for variable " + std::to_string(m[i]));
            vals[static_cast<Eigen::Index>(i)] = it->second;
        }
        env[c] = vals;
    }
    std::map<ClusterId, Eigen::VectorXd> cache;
    double total = 0;
    for (VarId y : y_vars) {
        ClusterId c = p.of(y);
        if (xc.count(c)) throw InputError("outcome variable lies in an intervened cluster");
        auto it = cache.find(c);
        if (it == cache.end()) it = cache.emplace(c, ev.mean_of(expr, c, env)).first;
        const auto& m = p.members(c);
        auto pos = std::find(m.begin(), m.end(), y) - m.begin();
        total += it->second[pos];
    }
    return total / static_cast<double>(y_vars.size());
}

struct EstimateWithError {
    double value = 0;
    double std_error = 0;
};

/// Estimate plus a bootstrap standard error over `replicates` row resamples.
inline EstimateWithError estimate_with_error(const CausalExpr& expr, const Dataset& data, const Partition& p,
                                             const std::map<VarId, double>& x_value, const std::vector<VarId>& y_vars,
                                             std::size_t replicates, std::uint64_t seed) {
    EstimateWithError r;
    r.value = estimate(expr, data, p, x_value, y_vars);
    if (replicates < 2) return r;
    std::mt19937_64 rng(seed);
    const auto n = data.values.rows();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<double> vals;
    Dataset boot;
    boot.names = data.names;
    boot.values.resize(n, data.values.cols());
    for (std::size_t b = 0; b < replicates; ++b) {
        for (Eigen::Index i = 0; i < n; ++i) boot.values.row(i) = data.values.row(pick(rng));
        vals.push_back(estimate(expr, boot, p, x_value, y_vars));
    }
    double mean = 0, var = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    for (double v : vals) var += (v - mean) * (v - mean);
    r.std_error = std::sqrt(var / static_cast<double>(vals.size() - 1));
    return r;
}

}  // namespace l2c
