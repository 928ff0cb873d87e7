#ifndef NESTCAST_NUMCORE_LINALG_HPP
#define NESTCAST_NUMCORE_LINALG_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace nestcast::num {

using Vector = std::vector<double>;

/// Dense row-major matrix.  Sized for the small Gram systems (p <= ~20) that
/// recursive forecasting needs; no expression templates, no views.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    const double* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }
    double* row(std::size_t r) noexcept { return data_.data() + r * cols_; }

    const std::vector<double>& data() const noexcept { return data_; }

    /// Copy of the listed columns, in the listed order.
    Matrix select_columns(const std::vector<std::size_t>& cols) const;
    /// Copy of rows [begin, end).
    Matrix row_block(std::size_t begin, std::size_t end) const;

    Matrix transpose() const;
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

/// X'X.
Matrix gram(const Matrix& X);
/// X'y.
Vector cross(const Matrix& X, const Vector& y);

double dot(const Vector& a, const Vector& b);

/// Cholesky factor of a symmetric positive definite matrix.
///
/// A pivot is declared singular when it falls below 1e-10 times the largest
/// diagonal entry of the input; the failure carries the zero-based pivot.
class Cholesky {
public:
    static constexpr double kRelativePivotTol = 1e-10;

    explicit Cholesky(const Matrix& a);

    Vector solve(const Vector& b) const;
    Matrix inverse() const;
    std::size_t size() const noexcept { return l_.rows(); }
    const Matrix& lower() const noexcept { return l_; }

private:
    Matrix l_;
};

/// Least-squares coefficients via the normal equations.  Throws
/// SingularityError when X'X is numerically rank deficient.
Vector ols_solve(const Matrix& X, const Vector& y);

/// Growing-window least squares.  Moments X'X and X'y are accumulated row by
/// row and the inverse Gram matrix is carried by Sherman-Morrison updates; a
/// full Cholesky re-solve from the accumulated moments runs every
/// `refresh_every` rows to cap drift.
class RecursiveOls {
public:
    explicit RecursiveOls(std::size_t p, std::size_t refresh_every = 64);

    void add(const double* x, double y);
    void add(const Vector& x, double y) { add(x.data(), y); }

    std::size_t count() const noexcept { return n_; }
    std::size_t dim() const noexcept { return p_; }

    /// Current coefficients; requires at least p rows and a nonsingular Gram.
    const Vector& coef();

    /// Inner product of the current coefficients with x.
    double predict(const double* x);

private:
    void refactor();

    std::size_t p_;
    std::size_t refresh_every_;
    std::size_t n_ = 0;
    std::size_t since_refresh_ = 0;
    bool have_inverse_ = false;
    bool coef_stale_ = true;
    Matrix xtx_;
    Vector xty_;
    Matrix inv_;
    Vector coef_;
    Vector work_;
};

/// Coefficients of ols_solve on the first t rows for every t in
/// [t_start, n].  Element k holds the fit on t_start + k rows.
std::vector<Vector> recursive_ols_path(const Matrix& X, const Vector& y, std::size_t t_start);

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi).
double min_eigenvalue_sym(const Matrix& a);

}  // namespace nestcast::num

#endif  // NESTCAST_NUMCORE_LINALG_HPP
