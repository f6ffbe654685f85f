#include "wmsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wmsim {

ComplexMatrix::ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
    if (dim == 0) {
        throw std::invalid_argument("ComplexMatrix: dimension must be positive");
    }
}

ComplexMatrix::ComplexMatrix(std::size_t dim, std::vector<complex> entries) : dim_(dim), data_(std::move(entries)) {
    if (dim == 0 || data_.size() != dim * dim) {
        throw std::invalid_argument("ComplexMatrix: entry count does not match dim*dim");
    }
    for (const auto &z : data_) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw std::invalid_argument("ComplexMatrix: non-finite entry");
        }
    }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<complex>> rows) : dim_(rows.size()) {
    data_.reserve(dim_ * dim_);
    for (const auto &row : rows) {
        if (row.size() != dim_) {
            throw std::invalid_argument("ComplexMatrix: rows must form a square matrix");
        }
        data_.insert(data_.end(), row.begin(), row.end());
    }
    if (dim_ == 0) {
        throw std::invalid_argument("ComplexMatrix: dimension must be positive");
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
    ComplexMatrix m(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        m(i, i) = values[i];
    }
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix r(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            r(j, i) = std::conj((*this)(i, j));
        }
    }
    return r;
}

ComplexMatrix ComplexMatrix::conjugate() const {
    ComplexMatrix r(*this);
    for (auto &z : r.data_) {
        z = std::conj(z);
    }
    return r;
}

complex ComplexMatrix::trace() const {
    complex t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        t += (*this)(i, i);
    }
    return t;
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto &z : data_) {
        s += std::norm(z);
    }
    return std::sqrt(s);
}

bool ComplexMatrix::is_hermitian(double tol) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            s += std::norm((*this)(i, j) - std::conj((*this)(j, i)));
        }
    }
    return std::sqrt(s) <= tol;
}

ComplexMatrix &ComplexMatrix::operator+=(const ComplexMatrix &o) {
    if (o.dim_ != dim_) {
        throw std::invalid_argument("ComplexMatrix: dimension mismatch in +");
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
        data_[k] += o.data_[k];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator-=(const ComplexMatrix &o) {
    if (o.dim_ != dim_) {
        throw std::invalid_argument("ComplexMatrix: dimension mismatch in -");
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
        data_[k] -= o.data_[k];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator*=(complex s) {
    for (auto &z : data_) {
        z *= s;
    }
    return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, complex s) { return a *= s; }
ComplexMatrix operator*(complex s, ComplexMatrix a) { return a *= s; }
ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b) { return mat_mul(a, b); }

ComplexMatrix mat_mul(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("mat_mul: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    }
    const std::size_t n = a.dim();
    ComplexMatrix r(n);
    // i-k-j order keeps the inner loop contiguous in both b and r.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const complex aik = a(i, k);
            if (aik == complex(0.0)) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                r(i, j) += aik * b(k, j);
            }
        }
    }
    return r;
}

ComplexMatrix commutator(const ComplexMatrix &a, const ComplexMatrix &b) { return a * b - b * a; }

ComplexMatrix anticommutator(const ComplexMatrix &a, const ComplexMatrix &b) { return a * b + b * a; }

ComplexMatrix hermitian_part(const ComplexMatrix &m) { return (m + m.adjoint()) * complex(0.5); }

double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("max_abs_diff: dimension mismatch");
    }
    double worst = 0.0;
    auto ea = a.entries();
    auto eb = b.entries();
    for (std::size_t k = 0; k < ea.size(); ++k) {
        worst = std::max(worst, std::abs(ea[k] - eb[k]));
    }
    return worst;
}

namespace pauli {
ComplexMatrix x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix y() { return {{0.0, complex(0.0, -1.0)}, {complex(0.0, 1.0), 0.0}}; }
ComplexMatrix z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
} // namespace pauli

namespace {

double off_diagonal_norm(const ComplexMatrix &a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < a.dim(); ++j) {
            if (i != j) {
                s += std::norm(a(i, j));
            }
        }
    }
    return std::sqrt(s);
}

} // namespace

EigenSystem jacobi_eigensystem(const ComplexMatrix &m) {
    if (!m.is_hermitian(1e-10 * std::max(1.0, m.frobenius_norm()))) {
        throw std::invalid_argument("hermitian_eigen: matrix is not Hermitian");
    }
    const std::size_t n = m.dim();
    ComplexMatrix a = hermitian_part(m);
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double scale = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(a) <= 1e-15 * scale) {
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300) {
                    continue;
                }
                // Phase rotation makes the (p,q) element real, then a real
                // Jacobi rotation annihilates it.
                const complex phase = std::conj(apq) / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const complex vpp = c;
                const complex vpq = s;
                const complex vqp = -s * phase;
                const complex vqq = c * phase;

                for (std::size_t k = 0; k < n; ++k) {
                    const complex akp = a(k, p);
                    const complex akq = a(k, q);
                    a(k, p) = akp * vpp + akq * vqp;
                    a(k, q) = akp * vpq + akq * vqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const complex apk = a(p, k);
                    const complex aqk = a(q, k);
                    a(p, k) = std::conj(vpp) * apk + std::conj(vqp) * aqk;
                    a(q, k) = std::conj(vpq) * apk + std::conj(vqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t k = 0; k < n; ++k) {
                    const complex vkp = v(k, p);
                    const complex vkq = v(k, q);
                    v(k, p) = vkp * vpp + vkq * vqp;
                    v(k, q) = vkp * vpq + vkq * vqq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigenSystem out{std::vector<double>(n), ComplexMatrix(n)};
    for (std::size_t col = 0; col < n; ++col) {
        out.eigenvalues[col] = a(order[col], order[col]).real();
        for (std::size_t k = 0; k < n; ++k) {
            out.vectors(k, col) = v(k, order[col]);
        }
    }
    return out;
}

SpectralDecomposition hermitian_eigen(const ComplexMatrix &m, double degeneracy_tol) {
    const EigenSystem es = jacobi_eigensystem(m);
    const std::size_t n = m.dim();
    const double merge_gap = degeneracy_tol * m.frobenius_norm();

    SpectralDecomposition out;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && es.eigenvalues[end] - es.eigenvalues[end - 1] <= merge_gap) {
            ++end;
        }
        ComplexMatrix proj(n);
        double mean = 0.0;
        for (std::size_t col = start; col < end; ++col) {
            mean += es.eigenvalues[col];
            for (std::size_t i = 0; i < n; ++i) {
                const complex vi = es.vectors(i, col);
                for (std::size_t j = 0; j < n; ++j) {
                    proj(i, j) += vi * std::conj(es.vectors(j, col));
                }
            }
        }
        out.eigenvalues.push_back(mean / static_cast<double>(end - start));
        out.projectors.push_back(std::move(proj));
        start = end;
    }
    return out;
}

ComplexMatrix matrix_function(const SpectralDecomposition &spectrum, const SpectralFunction &f) {
    if (spectrum.size() == 0) {
        throw std::invalid_argument("matrix_function: empty spectrum");
    }
    ComplexMatrix r(spectrum.projectors.front().dim());
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const complex fi = f(spectrum.eigenvalues[i]);
        if (!std::isfinite(fi.real()) || !std::isfinite(fi.imag())) {
            throw std::invalid_argument("matrix_function: f is not finite at eigenvalue " +
                                        std::to_string(spectrum.eigenvalues[i]));
        }
        r += spectrum.projectors[i] * fi;
    }
    return r;
}

ComplexMatrix matrix_function(const ComplexMatrix &m, const SpectralFunction &f) {
    // Works from individual eigenvectors so that near-degenerate eigenvalues
    // are not averaged before f is applied.
    const EigenSystem es = jacobi_eigensystem(m);
    const std::size_t n = m.dim();
    std::vector<complex> fv(n);
    for (std::size_t i = 0; i < n; ++i) {
        fv[i] = f(es.eigenvalues[i]);
        if (!std::isfinite(fv[i].real()) || !std::isfinite(fv[i].imag())) {
            throw std::invalid_argument("matrix_function: f is not finite at eigenvalue " +
                                        std::to_string(es.eigenvalues[i]));
        }
    }
    ComplexMatrix r(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            complex s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += es.vectors(i, k) * fv[k] * std::conj(es.vectors(j, k));
            }
            r(i, j) = s;
        }
    }
    return r;
}

} // namespace wmsim
