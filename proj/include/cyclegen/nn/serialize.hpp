#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cyclegen/nn/adam.hpp"
#include "cyclegen/nn/layers.hpp"

namespace cyclegen::nn {

nlohmann::json matrix_to_json(const std::string& name, const Matrix& m);
/// Throws std::runtime_error when name or shape disagree with `expected`.
void matrix_from_json(const nlohmann::json& j, const std::string& name, Matrix& expected);

/// Flattened tensors with names and shapes, in visit order.
template <class Net>
nlohmann::json to_json(const Net& net) {
  auto arr = nlohmann::json::array();
  net.visit([&](const std::string& name, const Matrix& m) { arr.push_back(matrix_to_json(name, m)); });
  return arr;
}

/// Fills an already-shaped network from `to_json` output.
template <class Net>
void from_json(const nlohmann::json& arr, Net& net) {
  std::size_t k = 0;
  net.visit([&](const std::string& name, Matrix& m) {
    if (k >= arr.size()) throw std::runtime_error("tensor list too short at '" + name + "'");
    matrix_from_json(arr.at(k++), name, m);
  });
  if (k != arr.size()) throw std::runtime_error("tensor list has extra entries");
}

/// A default-constructed optimizer is written as zero moments.
template <class Net>
nlohmann::json adam_to_json(const Adam& optimizer, const Net& shape) {
  const Adam adam = optimizer.m.empty() ? Adam(shape) : optimizer;
  nlohmann::json j;
  j["steps"] = adam.steps;
  j["m"] = nlohmann::json::array();
  j["v"] = nlohmann::json::array();
  std::size_t k = 0;
  shape.visit([&](const std::string& name, const Matrix&) {
    j["m"].push_back(matrix_to_json(name, adam.m[k]));
    j["v"].push_back(matrix_to_json(name, adam.v[k]));
    ++k;
  });
  return j;
}

template <class Net>
Adam adam_from_json(const nlohmann::json& j, const Net& shape) {
  Adam adam(shape);
  adam.steps = j.at("steps").get<long>();
  std::size_t k = 0;
  shape.visit([&](const std::string& name, const Matrix&) {
    matrix_from_json(j.at("m").at(k), name, adam.m[k]);
    matrix_from_json(j.at("v").at(k), name, adam.v[k]);
    ++k;
  });
  return adam;
}

}  // namespace cyclegen::nn
