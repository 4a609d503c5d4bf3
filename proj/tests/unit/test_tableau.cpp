#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "rkevo/errors.hpp"
#include "rkevo/tableau.hpp"

using rkevo::ButcherTableau;

namespace {
const std::filesystem::path kFixtures = std::filesystem::path(RKEVO_FIXTURE_DIR) / "tableaux";
}

TEST_CASE("from_vector explicit layout") {
  const std::vector<double> x{1.0, 0.0, 1.0};
  const auto t = ButcherTableau::from_vector(x, 2, true);
  CHECK(t.stages() == 2);
  CHECK(t.is_explicit());
  CHECK(t.a()(1, 0) == 1.0);
  CHECK(t.w()(0) == 0.0);
  CHECK(t.w()(1) == 1.0);
  CHECK(t.c()(0) == 0.0);
  CHECK(t.c()(1) == 1.0);
  CHECK(t.to_vector() == x);

  const auto one = ButcherTableau::from_vector(std::vector<double>{1.0}, 1, true);
  CHECK(one.w()(0) == 1.0);
  CHECK(one.c()(0) == 0.0);
}

TEST_CASE("parameter counts and dimension errors") {
  CHECK(ButcherTableau::parameter_count(4, true) == 10);
  CHECK(ButcherTableau::parameter_count(4, false) == 20);
  CHECK_THROWS_AS(ButcherTableau::from_vector(std::vector<double>{1.0, 2.0}, 2, true), rkevo::DimensionError);
  CHECK_THROWS_AS(ButcherTableau::from_vector(std::vector<double>(5, 0.0), 2, false), rkevo::DimensionError);
  CHECK_THROWS_AS(ButcherTableau(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), false), rkevo::DimensionError);
}

TEST_CASE("explicit tableau rejects diagonal and upper entries") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 0.5;
  CHECK_THROWS_AS(ButcherTableau(a, Eigen::VectorXd::Ones(2), true), std::invalid_argument);
  CHECK_NOTHROW(ButcherTableau(a, Eigen::VectorXd::Ones(2), false));
}

TEST_CASE("zero tableau maps to zero vector") {
  const auto t = ButcherTableau(Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3), true);
  CHECK(t.to_vector() == std::vector<double>(6, 0.0));
}

TEST_CASE("to_vector/from_vector round trip on random vectors") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int s = 1; s <= 6; ++s) {
    for (bool explicit_flag : {true, false}) {
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(ButcherTableau::parameter_count(s, explicit_flag));
        for (auto& v : x) v = normal(rng);
        const auto t = ButcherTableau::from_vector(x, s, explicit_flag);
        CHECK(t.to_vector() == x);
        for (int i = 0; i < s; ++i) {
          double row = 0.0;
          for (int j = 0; j < s; ++j) row += t.a()(i, j);
          CHECK(t.c()(i) == row);
        }
      }
    }
  }
}

TEST_CASE("load fixture with published digits") {
  const auto t = rkevo::load_tableau(kFixtures / "ev44_1.json");
  CHECK(t.stages() == 4);
  CHECK(t.is_explicit());
  const auto x = t.to_vector();
  REQUIRE(x.size() == 10);
  // Last strictly-lower entry a_43 carries the leading published coefficient.
  CHECK(x[5] == 0.6284799329301066);
  CHECK(ButcherTableau::from_vector(x, 4, true) == t);
}

TEST_CASE("save/load round trip is bit exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(ButcherTableau::parameter_count(5, false));
  for (auto& v : x) v = u(rng);
  const auto t = ButcherTableau::from_vector(x, 5, false);
  const auto path = std::filesystem::temp_directory_path() / "rkevo_test_roundtrip.json";
  rkevo::save_tableau(t, path);
  const auto back = rkevo::load_tableau(path);
  CHECK(back == t);
  CHECK(back.to_vector() == x);
  std::filesystem::remove(path);
}

TEST_CASE("load ignores stored nodes and validates shape") {
  const auto t = rkevo::tableau_from_json_text(
      R"({"stages": 2, "explicit": true, "a": [[0, 0], [0.5, 0]], "w": [0, 1], "c": [9, 9]})");
  CHECK(t.c()(1) == 0.5);
  CHECK_THROWS_AS(rkevo::tableau_from_json_text(R"({"stages": 2, "explicit": true, "a": [[0, 0], [0.5]], "w": [0, 1]})"),
                  rkevo::DimensionError);
  CHECK_THROWS_AS(rkevo::tableau_from_json_text(R"({"stages": 2, "explicit": true, "a": [[0, 0]], "w": [0, 1]})"),
                  rkevo::DimensionError);
  CHECK_THROWS_AS(rkevo::tableau_from_json_text("{not json"), rkevo::FormatError);
  CHECK_THROWS_AS(rkevo::tableau_from_json_text(R"({"stages": 2})"), rkevo::FormatError);
  CHECK_THROWS_AS(rkevo::tableau_from_json_text(R"({"stages": 2, "explicit": true, "a": [[0, 1], [0.5, 0]], "w": [0, 1]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(rkevo::load_tableau(kFixtures / "does_not_exist.json"), rkevo::FormatError);
}

TEST_CASE("every shipped fixture loads with consistent nodes") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kFixtures)) {
    if (entry.path().extension() != ".json") continue;
    const auto t = rkevo::load_tableau(entry.path());
    for (int i = 0; i < t.stages(); ++i) CHECK(t.c()(i) == t.a().row(i).sum());
    ++count;
  }
  CHECK(count >= 18);
}
