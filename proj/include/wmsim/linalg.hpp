#pragma once

// Dense complex linear algebra for small Hermitian problems (dim <= 64).

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace wmsim {

using complex = std::complex<double>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t dim);
    ComplexMatrix(std::size_t dim, std::vector<complex> entries);
    ComplexMatrix(std::initializer_list<std::initializer_list<complex>> rows);

    static ComplexMatrix identity(std::size_t dim);
    static ComplexMatrix diagonal(std::span<const double> values);

    std::size_t dim() const { return dim_; }
    complex &operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
    const complex &operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
    std::span<const complex> entries() const { return data_; }

    ComplexMatrix adjoint() const;
    ComplexMatrix conjugate() const;
    complex trace() const;
    double frobenius_norm() const;
    bool is_hermitian(double tol = 1e-10) const;

    ComplexMatrix &operator+=(const ComplexMatrix &o);
    ComplexMatrix &operator-=(const ComplexMatrix &o);
    ComplexMatrix &operator*=(complex s);

private:
    std::size_t dim_ = 0;
    std::vector<complex> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b);
ComplexMatrix operator*(ComplexMatrix a, complex s);
ComplexMatrix operator*(complex s, ComplexMatrix a);
ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b);

/// Matrix product. Throws std::invalid_argument on dimension mismatch.
ComplexMatrix mat_mul(const ComplexMatrix &a, const ComplexMatrix &b);

ComplexMatrix commutator(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix anticommutator(const ComplexMatrix &a, const ComplexMatrix &b);

/// Hermitian part (m + m^dagger)/2.
ComplexMatrix hermitian_part(const ComplexMatrix &m);

/// Largest absolute entrywise difference.
double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b);

namespace pauli {
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
} // namespace pauli

/// Eigenvalues in ascending order, each paired with the orthogonal projector
/// onto its (merged) eigenspace.
struct SpectralDecomposition {
    std::vector<double> eigenvalues;
    std::vector<ComplexMatrix> projectors;

    std::size_t size() const { return eigenvalues.size(); }
};

inline constexpr double kDefaultDegeneracyTol = 1e-9;

/// Cyclic Jacobi eigensolver for Hermitian matrices. Eigenvalues closer than
/// degeneracy_tol * ||m||_F are merged into a single projector whose
/// eigenvalue is the group mean.
SpectralDecomposition hermitian_eigen(const ComplexMatrix &m, double degeneracy_tol = kDefaultDegeneracyTol);

/// Raw Jacobi output: ascending eigenvalues and the unitary whose columns are
/// the matching eigenvectors. No degeneracy merging.
struct EigenSystem {
    std::vector<double> eigenvalues;
    ComplexMatrix vectors;
};
EigenSystem jacobi_eigensystem(const ComplexMatrix &m);

using SpectralFunction = std::function<complex(double)>;

/// sum_i f(lambda_i) P_i. Throws if f is non-finite on the spectrum.
ComplexMatrix matrix_function(const SpectralDecomposition &spectrum, const SpectralFunction &f);
ComplexMatrix matrix_function(const ComplexMatrix &m, const SpectralFunction &f);

} // namespace wmsim
