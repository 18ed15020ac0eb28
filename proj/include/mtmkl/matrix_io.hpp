#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace mtmkl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Plain-text dense rows: one matrix row per line, whitespace separated,
/// 17 significant digits. '#' lines are comments.
void write_dense_matrix(std::ostream& out, const Matrix& m);
void write_dense_matrix_file(const std::string& path, const Matrix& m);
Matrix read_dense_matrix(std::istream& in);
Matrix read_dense_matrix_file(const std::string& path);

/// max |m(i,j) - m(j,i)|
double max_asymmetry(const Matrix& m);

}  // namespace mtmkl
