#include "cyclegen/nn/serialize.hpp"

namespace cyclegen::nn {

nlohmann::json matrix_to_json(const std::string& name, const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

void matrix_from_json(const nlohmann::json& j, const std::string& name, Matrix& expected) {
  if (j.at("name").get<std::string>() != name)
    throw std::runtime_error("tensor name mismatch: expected '" + name + "', found '" +
                             j.at("name").get<std::string>() + "'");
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  if (rows != expected.rows() || cols != expected.cols())
    throw std::runtime_error("tensor '" + name + "' shape mismatch");
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols)
    throw std::runtime_error("tensor '" + name + "' has wrong element count");
  for (Index k = 0; k < rows * cols; ++k) expected.data()[k] = data[k].get<double>();
}

}  // namespace cyclegen::nn
