#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "l2c/errors.hpp"
#include "l2c/graph.hpp"

namespace l2c {

/// n x p sample matrix. Column j holds variable j; `names[j]` is its header.
struct Dataset {
    Eigen::MatrixXd values;
    std::vector<std::string> names;

    std::size_t num_samples() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t num_vars() const { return static_cast<std::size_t>(values.cols()); }

    void check_column(VarId v) const {
        if (v >= num_vars()) throw InputError("dataset has no column " + std::to_string(v));
    }
};

inline void write_csv(const Dataset& d, std::ostream& os) {
    for (std::size_t j = 0; j < d.num_vars(); ++j) {
        if (j) os << ',';
        os << (j < d.names.size() ? d.names[j] : "V" + std::to_string(j));
    }
    os << '\n';
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
            if (j) os << ',';
            os << d.values(i, j);
        }
        os << '\n';
    }
}

inline Dataset read_csv(std::istream& is) {
    Dataset d;
    std::string line;
    if (!std::getline(is, line)) throw InputError("empty CSV");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) d.names.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InputError("non-numeric CSV cell '" + cell + "'");
            }
        }
        if (row.size() != d.names.size())
            throw InputError("CSV row " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                             " cells, header has " + std::to_string(d.names.size()));
        rows.push_back(std::move(row));
    }
    d.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return d;
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    return read_csv(f);
}

}  // namespace l2c
