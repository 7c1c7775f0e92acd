#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "rhetseg/errors.hpp"

namespace rhetseg {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (long i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("expected a matrix as array of rows");
  const long rows = static_cast<long>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const long cols = static_cast<long>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (static_cast<long>(j[static_cast<std::size_t>(i)].size()) != cols)
      throw FormatError("ragged matrix rows");
    for (long c = 0; c < cols; ++c)
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("expected a vector as array");
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace rhetseg
