#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rkevo {

/**
 * Butcher tableau of an s-stage Runge-Kutta method.
 *
 * The nodes c are never free: c_i = sum_j a_ij is recomputed on every
 * construction. Explicit tableaux must have a strictly lower-triangular
 * coefficient matrix.
 *
 * Flat parameter layout (the optimizer's search space):
 *   explicit: a_21, a_31, a_32, ..., a_s(s-1), w_1, ..., w_s   (s(s+1)/2 values)
 *   implicit: a_11, a_12, ..., a_ss (row-major), w_1, ..., w_s (s(s+1) values)
 */
class ButcherTableau {
 public:
  /// Throws DimensionError on shape mismatch, std::invalid_argument when an
  /// explicit tableau has a nonzero entry on or above the diagonal.
  ButcherTableau(Eigen::MatrixXd a, Eigen::VectorXd w, bool explicit_flag);

  static ButcherTableau from_vector(std::span<const double> x, int stages, bool explicit_flag);
  [[nodiscard]] std::vector<double> to_vector() const;

  [[nodiscard]] static std::size_t parameter_count(int stages, bool explicit_flag);

  [[nodiscard]] int stages() const noexcept { return static_cast<int>(w_.size()); }
  [[nodiscard]] bool is_explicit() const noexcept { return explicit_; }
  [[nodiscard]] const Eigen::MatrixXd& a() const noexcept { return a_; }
  [[nodiscard]] const Eigen::VectorXd& w() const noexcept { return w_; }
  [[nodiscard]] const Eigen::VectorXd& c() const noexcept { return c_; }

  friend bool operator==(const ButcherTableau& lhs, const ButcherTableau& rhs) {
    return lhs.explicit_ == rhs.explicit_ && lhs.a_ == rhs.a_ && lhs.w_ == rhs.w_;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd w_;
  Eigen::VectorXd c_;
  bool explicit_;
};

// Tableau JSON: {"stages": s, "explicit": bool, "a": [[...] x s], "w": [...]}.
// Any "c" member is ignored on load; nodes are recomputed from a.
ButcherTableau load_tableau(const std::filesystem::path& path);
void save_tableau(const ButcherTableau& tableau, const std::filesystem::path& path);
ButcherTableau tableau_from_json_text(std::string_view text);
std::string tableau_to_json_text(const ButcherTableau& tableau);

namespace methods {
ButcherTableau forward_euler();
ButcherTableau explicit_midpoint();
ButcherTableau heun();
ButcherTableau classical_rk4();
}  // namespace methods

}  // namespace rkevo
