#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/partition.hpp"

namespace l2c {

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    bool empty_prediction = false;  // precision was set to 0 by convention
};

inline double harmonic_f1(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

/// Set-based scores over directed edges. A reversed edge is both a false
/// positive and a miss.
inline Prf edge_prf(const std::set<Edge>& predicted, const std::set<Edge>& truth) {
    Prf r;
    std::size_t tp = 0;
    for (const auto& e : predicted) tp += truth.count(e);
    r.empty_prediction = predicted.empty();
    r.precision = predicted.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted.size());
    r.recall = truth.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(truth.size());
    r.f1 = harmonic_f1(r.precision, r.recall);
    return r;
}

namespace detail {

struct Contingency {
    std::map<std::pair<ClusterId, ClusterId>, double> cells;
    std::vector<double> rows, cols;
    double n = 0;
};

inline Contingency contingency(const Partition& a, const Partition& b) {
    if (a.num_vars() != b.num_vars()) throw InputError("partitions cover different variable sets");
    Contingency c;
    c.rows.assign(a.num_clusters(), 0);
    c.cols.assign(b.num_clusters(), 0);
    for (VarId v = 0; v < a.num_vars(); ++v) {
        c.cells[{a.of(v), b.of(v)}] += 1;
        c.rows[a.of(v)] += 1;
        c.cols[b.of(v)] += 1;
    }
    c.n = static_cast<double>(a.num_vars());
    return c;
}

inline double choose2(double x) { return x * (x - 1) / 2; }

}  // namespace detail

/// Adjusted Rand index. When both partitions are trivial in the same way the
/// index is undefined; identical partitions give 1 and any other case 0.
inline double ari(const Partition& a, const Partition& b) {
    auto c = detail::contingency(a, b);
    double sum_cells = 0, sum_rows = 0, sum_cols = 0;
    for (auto& [k, v] : c.cells) sum_cells += detail::choose2(v);
    for (double r : c.rows) sum_rows += detail::choose2(r);
    for (double k : c.cols) sum_cols += detail::choose2(k);
    double total = detail::choose2(c.n);
    if (total == 0) return 1.0;
    double expected = sum_rows * sum_cols / total;
    double max_index = (sum_rows + sum_cols) / 2;
    if (max_index == expected) return a == b ? 1.0 : 0.0;
    return (sum_cells - expected) / (max_index - expected);
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
inline double nmi(const Partition& a, const Partition& b) {
    auto c = detail::contingency(a, b);
    auto entropy = [&](const std::vector<double>& m) {
        double h = 0;
        for (double x : m)
            if (x > 0) h -= x / c.n * std::log(x / c.n);
        return h;
    };
    double ha = entropy(c.rows), hb = entropy(c.cols);
    double mi = 0;
    for (auto& [k, v] : c.cells) mi += v / c.n * std::log(v * c.n / (c.rows[k.first] * c.cols[k.second]));
    if (ha + hb == 0) return 1.0;  // both single-cluster
    return std::clamp(2 * mi / (ha + hb), 0.0, 1.0);
}

inline double effect_mse(const std::vector<double>& est, const std::vector<double>& truth) {
    if (est.size() != truth.size()) throw InputError("estimate and truth lists differ in length");
    if (est.empty()) throw InputError("effect_mse needs at least one pair");
    double s = 0;
    for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - truth[i]) * (est[i] - truth[i]);
    return s / static_cast<double>(est.size());
}

struct MetricsReport {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double ari = 0;
    double nmi = 0;
    double mse = 0;
    std::uint64_t n_tests = 0;
    double runtime_seconds = 0;

    void check() const {
        auto unit = [](double x, const char* what) {
            if (!(x >= 0 && x <= 1)) throw ContractError(std::string(what) + " outside [0,1]");
        };
        unit(precision, "precision");
        unit(recall, "recall");
        unit(f1, "f1");
        unit(nmi, "nmi");
        if (!(ari >= -1 && ari <= 1)) throw ContractError("ari outside [-1,1]");
        if (!(mse >= 0)) throw ContractError("mse negative");
        if (!(runtime_seconds >= 0)) throw ContractError("runtime negative");
    }

    static const std::vector<std::string>& csv_columns() {
        static const std::vector<std::string> cols{"precision", "recall", "f1",      "ari",
                                                   "nmi",       "mse",    "n_tests", "runtime_seconds"};
        return cols;
    }
    std::vector<double> values() const {
        return {precision, recall, f1, ari, nmi, mse, static_cast<double>(n_tests), runtime_seconds};
    }

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

}  // namespace l2c
