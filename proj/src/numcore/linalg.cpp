#include "nestcast/numcore/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nestcast/errors.hpp"

namespace nestcast::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::select_columns(const std::vector<std::size_t>& cols) const {
    Matrix out(rows_, cols.size());
    for (std::size_t c : cols) {
        if (c >= cols_) throw IndexError("Matrix::select_columns: column " + std::to_string(c) + " out of range");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = 0; k < cols.size(); ++k) out(r, k) = (*this)(r, cols[k]);
    }
    return out;
}

Matrix Matrix::row_block(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw IndexError("Matrix::row_block: bad range");
    Matrix out(end - begin, cols_);
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
              data_.begin() + static_cast<std::ptrdiff_t>(end * cols_), out.data_.begin());
    return out;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("Matrix product: dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("Matrix-vector product: dimension mismatch");
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += r[j] * x[j];
        out[i] = s;
    }
    return out;
}

Matrix gram(const Matrix& X) {
    const std::size_t p = X.cols();
    Matrix g(p, p);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const double* x = X.row(r);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j <= i; ++j) g(i, j) += x[i] * x[j];
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
    return g;
}

Vector cross(const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw std::invalid_argument("cross: dimension mismatch");
    Vector out(X.cols(), 0.0);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const double* x = X.row(r);
        for (std::size_t i = 0; i < X.cols(); ++i) out[i] += x[i] * y[r];
    }
    return out;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Cholesky::Cholesky(const Matrix& a) : l_(a.rows(), a.cols()) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("Cholesky: matrix not square");
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
    const double tol = kRelativePivotTol * max_diag;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
        if (!(d > tol) || max_diag <= 0.0) throw SingularityError(j);
        const double ljj = std::sqrt(d);
        l_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            l_(i, j) = s / ljj;
        }
    }
}

Vector Cholesky::solve(const Vector& b) const {
    const std::size_t n = l_.rows();
    if (b.size() != n) throw std::invalid_argument("Cholesky::solve: dimension mismatch");
    Vector z(b);
    for (std::size_t i = 0; i < n; ++i) {
        double s = z[i];
        for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * z[k];
        z[i] = s / l_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * z[k];
        z[ii] = s / l_(ii, ii);
    }
    return z;
}

Matrix Cholesky::inverse() const {
    const std::size_t n = l_.rows();
    Matrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        const Vector col = solve(e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

Vector ols_solve(const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw std::invalid_argument("ols_solve: X rows and y length differ");
    if (X.rows() < X.cols()) throw SingularityError(X.rows());
    return Cholesky(gram(X)).solve(cross(X, y));
}

RecursiveOls::RecursiveOls(std::size_t p, std::size_t refresh_every)
    : p_(p),
      refresh_every_(std::max<std::size_t>(refresh_every, 1)),
      xtx_(p, p),
      xty_(p, 0.0),
      inv_(p, p),
      coef_(p, 0.0),
      work_(p, 0.0) {}

void RecursiveOls::add(const double* x, double y) {
    for (std::size_t i = 0; i < p_; ++i) {
        const double xi = x[i];
        double* row = xtx_.row(i);
        for (std::size_t j = 0; j < p_; ++j) row[j] += xi * x[j];
        xty_[i] += xi * y;
    }
    ++n_;
    coef_stale_ = true;
    if (!have_inverse_) return;

    ++since_refresh_;
    if (since_refresh_ >= refresh_every_) {
        refactor();
        return;
    }
    // Sherman-Morrison: (A + xx')^{-1} = A^{-1} - (A^{-1}x)(A^{-1}x)' / (1 + x'A^{-1}x)
    double denom = 1.0;
    for (std::size_t i = 0; i < p_; ++i) {
        const double* r = inv_.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < p_; ++j) s += r[j] * x[j];
        work_[i] = s;
        denom += x[i] * s;
    }
    for (std::size_t i = 0; i < p_; ++i) {
        double* r = inv_.row(i);
        const double wi = work_[i] / denom;
        for (std::size_t j = 0; j < p_; ++j) r[j] -= wi * work_[j];
    }
}

void RecursiveOls::refactor() {
    const Cholesky chol(xtx_);
    inv_ = chol.inverse();
    have_inverse_ = true;
    since_refresh_ = 0;
    coef_ = chol.solve(xty_);
    coef_stale_ = false;
}

const Vector& RecursiveOls::coef() {
    if (!have_inverse_) {
        if (n_ < p_) throw SingularityError(n_);
        refactor();
    }
    if (coef_stale_) {
        coef_ = inv_ * xty_;
        coef_stale_ = false;
    }
    return coef_;
}

double RecursiveOls::predict(const double* x) {
    const Vector& b = coef();
    double s = 0.0;
    for (std::size_t i = 0; i < p_; ++i) s += b[i] * x[i];
    return s;
}

std::vector<Vector> recursive_ols_path(const Matrix& X, const Vector& y, std::size_t t_start) {
    const std::size_t n = X.rows();
    if (y.size() != n) throw std::invalid_argument("recursive_ols_path: X rows and y length differ");
    if (t_start < X.cols() || t_start > n || t_start == 0) {
        throw ConfigError("recursive_ols_path: t_start must lie in [p, n]");
    }
    RecursiveOls rls(X.cols());
    std::vector<Vector> path;
    path.reserve(n - t_start + 1);
    for (std::size_t t = 0; t < n; ++t) {
        rls.add(X.row(t), y[t]);
        if (t + 1 >= t_start) {
            try {
                path.push_back(rls.coef());
            } catch (const SingularityError& e) {
                throw e.with_position(t + 1);
            }
        }
    }
    return path;
}

double min_eigenvalue_sym(const Matrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("min_eigenvalue_sym: matrix not square");
    if (n == 0) throw std::invalid_argument("min_eigenvalue_sym: empty matrix");
    if (n == 1) return a(0, 0);
    Matrix m = a;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    double lo = m(0, 0);
    for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, m(i, i));
    return lo;
}

}  // namespace nestcast::num
