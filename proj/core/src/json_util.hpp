#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dqadapt::detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<size_t>(N)) {
    throw std::invalid_argument(std::string("field '") + what + "' must have " +
                                std::to_string(N) + " entries");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

inline Eigen::VectorXd dynamic_vector(const json& j, const char* what) {
  if (!j.is_array()) {
    throw std::invalid_argument(std::string("field '") + what + "' must be an array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

template <typename Derived>
json to_array(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json parse_stream(std::istream& is, const std::string& what) {
  try {
    return json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  return in;
}

}  // namespace dqadapt::detail
