#ifndef SCCDGA_MATRIX_HPP
#define SCCDGA_MATRIX_HPP

#include <Eigen/Dense>

#include <string>

namespace sccdga {

/// Dense row-major matrix; rows are observations (cells, genes, nodes).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline std::string shape_string(const Matrix& m) {
    return "(" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")";
}

inline bool all_finite(const Matrix& m) {
    return m.allFinite();
}

}

#endif
