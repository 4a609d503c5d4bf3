#include "rkevo/tableau.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rkevo/errors.hpp"

namespace rkevo {

using nlohmann::json;

ButcherTableau::ButcherTableau(Eigen::MatrixXd a, Eigen::VectorXd w, bool explicit_flag)
    : a_(std::move(a)), w_(std::move(w)), explicit_(explicit_flag) {
  const auto s = w_.size();
  if (s < 1) throw DimensionError("tableau: at least one stage is required");
  if (a_.rows() != s || a_.cols() != s) {
    throw DimensionError("tableau: coefficient matrix must be " + std::to_string(s) + "x" + std::to_string(s));
  }
  if (explicit_) {
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = i; j < s; ++j) {
        if (a_(i, j) != 0.0) {
          throw std::invalid_argument("tableau: explicit method has nonzero a(" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + ")");
        }
      }
    }
  }
  // Left-to-right row sums, so c is reproducible independent of vectorization.
  c_ = Eigen::VectorXd::Zero(a_.rows());
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    for (Eigen::Index j = 0; j < a_.cols(); ++j) c_(i) += a_(i, j);
  }
}

std::size_t ButcherTableau::parameter_count(int stages, bool explicit_flag) {
  if (stages < 1) throw DimensionError("tableau: at least one stage is required");
  const auto s = static_cast<std::size_t>(stages);
  return explicit_flag ? s * (s + 1) / 2 : s * (s + 1);
}

ButcherTableau ButcherTableau::from_vector(std::span<const double> x, int stages, bool explicit_flag) {
  const std::size_t expected = parameter_count(stages, explicit_flag);
  if (x.size() != expected) {
    throw DimensionError("tableau: flat vector has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(expected));
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(stages, stages);
  Eigen::VectorXd w(stages);
  std::size_t k = 0;
  for (int i = 0; i < stages; ++i) {
    const int row_end = explicit_flag ? i : stages;
    for (int j = 0; j < row_end; ++j) a(i, j) = x[k++];
  }
  for (int i = 0; i < stages; ++i) w(i) = x[k++];
  return ButcherTableau(std::move(a), std::move(w), explicit_flag);
}

std::vector<double> ButcherTableau::to_vector() const {
  const int s = stages();
  std::vector<double> x;
  x.reserve(parameter_count(s, explicit_));
  for (int i = 0; i < s; ++i) {
    const int row_end = explicit_ ? i : s;
    for (int j = 0; j < row_end; ++j) x.push_back(a_(i, j));
  }
  for (int i = 0; i < s; ++i) x.push_back(w_(i));
  return x;
}

namespace {

ButcherTableau tableau_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw FormatError("tableau: document must be a JSON object");
    const int s = doc.at("stages").get<int>();
    if (s < 1) throw DimensionError("tableau: \"stages\" must be positive");
    const bool explicit_flag = doc.at("explicit").get<bool>();
    const json& rows = doc.at("a");
    const json& weights = doc.at("w");
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(s)) {
      throw DimensionError("tableau: \"a\" must have " + std::to_string(s) + " rows");
    }
    if (!weights.is_array() || weights.size() != static_cast<std::size_t>(s)) {
      throw DimensionError("tableau: \"w\" must have " + std::to_string(s) + " entries");
    }
    Eigen::MatrixXd a(s, s);
    Eigen::VectorXd w(s);
    for (int i = 0; i < s; ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(s)) {
        throw DimensionError("tableau: row " + std::to_string(i + 1) + " of \"a\" must have " + std::to_string(s) +
                             " entries");
      }
      for (int j = 0; j < s; ++j) a(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      w(i) = weights[static_cast<std::size_t>(i)].get<double>();
    }
    return ButcherTableau(std::move(a), std::move(w), explicit_flag);
  } catch (const json::exception& e) {
    throw FormatError(std::string("tableau: ") + e.what());
  }
}

json tableau_to_json(const ButcherTableau& t) {
  const int s = t.stages();
  json rows = json::array();
  for (int i = 0; i < s; ++i) {
    json row = json::array();
    for (int j = 0; j < s; ++j) row.push_back(t.a()(i, j));
    rows.push_back(std::move(row));
  }
  json w = json::array();
  for (int i = 0; i < s; ++i) w.push_back(t.w()(i));
  return json{{"stages", s}, {"explicit", t.is_explicit()}, {"a", std::move(rows)}, {"w", std::move(w)}};
}

}  // namespace

ButcherTableau tableau_from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("tableau: ") + e.what());
  }
  return tableau_from_json(doc);
}

std::string tableau_to_json_text(const ButcherTableau& tableau) {
  return tableau_to_json(tableau).dump(2) + "\n";
}

ButcherTableau load_tableau(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("tableau: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return tableau_from_json_text(buffer.str());
}

void save_tableau(const ButcherTableau& tableau, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("tableau: cannot write " + path.string());
  out << tableau_to_json_text(tableau);
}

namespace methods {

ButcherTableau forward_euler() {
  return ButcherTableau(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), true);
}

ButcherTableau explicit_midpoint() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(1, 0) = 0.5;
  Eigen::VectorXd w(2);
  w << 0.0, 1.0;
  return ButcherTableau(std::move(a), std::move(w), true);
}

ButcherTableau heun() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(1, 0) = 1.0;
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  return ButcherTableau(std::move(a), std::move(w), true);
}

ButcherTableau classical_rk4() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(1, 0) = 0.5;
  a(2, 1) = 0.5;
  a(3, 2) = 1.0;
  Eigen::VectorXd w(4);
  w << 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0;
  return ButcherTableau(std::move(a), std::move(w), true);
}

}  // namespace methods

}  // namespace rkevo
