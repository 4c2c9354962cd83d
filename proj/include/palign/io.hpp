#pragma once

#include <Eigen/Dense>
#include <string>

#include "palign/framework.hpp"
#include "palign/types.hpp"

namespace palign {

// { "d", "n", "m", "views": [ { "index", "points": [ { "id", "coords" } ] } ] }, 1-based ids.
// Unknown fields are ignored. Errors throw InputError with a JSON path.
PatchFramework parse_framework(const std::string& text);
std::string serialize_framework(const PatchFramework& fw);

// { "d", "m", "blocks": [ [row-major d*d] ] }. Also accepts an object whose "alignment" member
// has this shape (the align result file).
Alignment parse_alignment(const std::string& text);
std::string serialize_alignment(const BlockStack& S);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

// Row-major CSV with a leading "rows,cols" header line.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace palign
