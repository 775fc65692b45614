#pragma once

// Exact finite-dimensional state manipulation.
//
// Registers are indexed big-endian: for dims {d0, d1, ..., dn} the amplitude
// of |i0 i1 ... in> lives at ((i0*d1 + i1)*d2 + i2)... so register 0 is the
// most significant digit.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpkid/numeric.hpp"

namespace qpkid::qsim {

using Complex = std::complex<double>;
using Dims = std::vector<std::size_t>;
using ComplexVector = std::vector<Complex>;

inline std::size_t product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major complex matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw DimensionMismatch("Matrix: data size does not match shape");
    }

    static Matrix zeros(std::size_t n) { return Matrix(n, n); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> values) {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
        return m;
    }

    /// |a><b|
    static Matrix outer(std::span<const Complex> a, std::span<const Complex> b) {
        Matrix m(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const Complex> data() const { return data_; }

    Matrix adjoint() const {
        Matrix m(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    Complex trace() const {
        Complex t = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(Complex s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, Complex s) { return a *= s; }
    friend Matrix operator*(Complex s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("Matrix product: inner dimensions differ");
        Matrix m(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) m(i, j) += aik * b(k, j);
            }
        return m;
    }

    ComplexVector apply(std::span<const Complex> v) const {
        if (v.size() != cols_) throw DimensionMismatch("Matrix::apply: vector length differs from columns");
        ComplexVector out(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    /// Largest absolute entry of (this - other).
    double max_abs_diff(const Matrix& other) const {
        check_same_shape(other);
        double m = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& v : data_) s += std::norm(v);
        return std::sqrt(s);
    }

    bool is_hermitian(double tol) const {
        if (!square()) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i; j < cols_; ++j)
                if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
        return true;
    }

    bool is_unitary(double tol) const {
        if (!square()) return false;
        return (adjoint() * (*this)).max_abs_diff(identity(rows_)) <= tol;
    }

private:
    void check_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("Matrix: shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

/// Kronecker product a (x) b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix m(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    m(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return m;
}

namespace gates {

inline Matrix pauli_z() { return Matrix(2, 2, {1.0, 0.0, 0.0, -1.0}); }

inline Matrix hadamard() {
    const double h = 1.0 / std::numbers::sqrt2;
    return Matrix(2, 2, {h, h, h, -h});
}

/// Exchanges two registers of dimension d each.
inline Matrix swap(std::size_t d) {
    Matrix m(d * d, d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(j * d + i, i * d + j) = 1.0;
    return m;
}

/// |0><0| (x) I + |1><1| (x) U on (control, target...).
inline Matrix controlled(const Matrix& u) {
    const std::size_t n = u.rows();
    Matrix m(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(n + i, n + j) = u(i, j);
    return m;
}

}  // namespace gates

// Hermitian eigendecomposition --------------------------------------------

struct HermitianEigen {
    std::vector<double> values;  ///< ascending
    Matrix vectors;              ///< column k is the eigenvector for values[k]
};

/// Cyclic complex Jacobi. Each rotation is U = diag(1, e^{-i arg a_pq}) * R
/// with R the real Jacobi rotation that zeroes the (now real) a_pq.
inline HermitianEigen hermitian_eigen(const Matrix& input) {
    if (!input.is_hermitian(kHermitianTol)) throw InvalidArgument("hermitian_eigen: matrix is not Hermitian");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, a.frobenius_norm());

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps && off_norm() > kEigenTol * scale; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double b = std::abs(a(p, q));
                if (b < 1e-300) continue;
                const Complex phase = a(p, q) / b;  // e^{i alpha}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * b);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const Complex upp = c;
                const Complex upq = s;
                const Complex uqp = -s * std::conj(phase);
                const Complex uqq = c * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {  // a <- a U
                    const Complex akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp * upp + akq * uqp;
                    a(k, q) = akp * upq + akq * uqq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // a <- U^dagger a
                    const Complex apk = a(p, k), aqk = a(q, k);
                    a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
                    a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {  // v <- v U
                    const Complex vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp * upp + vkq * uqp;
                    v(k, q) = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    if (off_norm() > kEigenTol * scale) throw NumericalFailure("hermitian_eigen: Jacobi sweep did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    HermitianEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
inline double trace_norm(const Matrix& delta) {
    if (!delta.is_hermitian(kHermitianTol)) throw InvalidArgument("trace_norm: matrix is not Hermitian");
    const auto eig = hermitian_eigen(delta);
    double s = 0.0;
    for (double v : eig.values) s += std::abs(v);
    return s;
}

// States ---------------------------------------------------------------------

/// Normalized state vector over a product of registers.
class PureState {
public:
    /// Normalizes `amplitudes`; throws on size mismatch, non-finite entries or zero norm.
    PureState(Dims dims, ComplexVector amplitudes) : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
        if (dims_.empty()) throw InvalidArgument("PureState: no registers");
        for (auto d : dims_)
            if (d == 0) throw InvalidArgument("PureState: zero-dimensional register");
        if (amps_.size() != product(dims_)) throw DimensionMismatch("PureState: amplitude count does not match dims");
        double n2 = 0.0;
        for (const auto& a : amps_) {
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
                throw NumericalFailure("PureState: non-finite amplitude");
            n2 += std::norm(a);
        }
        if (!(n2 > 0.0)) throw InvalidArgument("PureState: zero vector");
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& a : amps_) a *= inv;
    }

    static PureState basis(Dims dims, std::size_t index) {
        ComplexVector v(product(dims));
        if (index >= v.size()) throw InvalidArgument("PureState::basis: index out of range");
        v[index] = 1.0;
        return PureState(std::move(dims), std::move(v));
    }

    /// Single qubit a0|0> + a1|1>, normalized.
    static PureState qubit(Complex a0, Complex a1) { return PureState({2}, {a0, a1}); }

    const Dims& dims() const { return dims_; }
    std::size_t dim() const { return amps_.size(); }
    std::size_t registers() const { return dims_.size(); }
    std::span<const Complex> amplitudes() const { return amps_; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

    double norm() const {
        double n2 = 0.0;
        for (const auto& a : amps_) n2 += std::norm(a);
        return std::sqrt(n2);
    }

    Matrix projector() const { return Matrix::outer(amps_, amps_); }

private:
    Dims dims_;
    ComplexVector amps_;
};

/// <a|b>
inline Complex inner(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("inner: dimension mismatch");
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// |<a|b>|, equal to 1 iff the states agree up to global phase.
inline double overlap(const PureState& a, const PureState& b) { return std::abs(inner(a, b)); }

inline PureState tensor(const PureState& a, const PureState& b) {
    Dims dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    ComplexVector v(a.dim() * b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j) v[i * b.dim() + j] = a[i] * b[j];
    return PureState(std::move(dims), std::move(v));
}

/// Hermitian, unit-trace, positive semidefinite matrix with a register layout.
class DensityOperator {
public:
    explicit DensityOperator(Matrix matrix) : DensityOperator(Dims{matrix.rows()}, std::move(matrix)) {}

    DensityOperator(Dims dims, Matrix matrix) : dims_(std::move(dims)), m_(std::move(matrix)) {
        if (!m_.square()) throw DimensionMismatch("DensityOperator: matrix not square");
        if (product(dims_) != m_.rows()) throw DimensionMismatch("DensityOperator: dims do not match matrix");
        if (!m_.is_hermitian(kConstructionTol)) throw InvalidArgument("DensityOperator: not Hermitian");
        if (std::abs(m_.trace() - Complex{1.0}) > kConstructionTol)
            throw InvalidArgument("DensityOperator: trace is not 1");
        const auto eig = hermitian_eigen(m_);
        if (eig.values.front() < -kPsdTol) throw InvalidArgument("DensityOperator: negative eigenvalue");
    }

    static DensityOperator from_pure(const PureState& s) { return DensityOperator(s.dims(), s.projector()); }

    static DensityOperator maximally_mixed(std::size_t d) {
        return DensityOperator(Matrix::identity(d) * Complex{1.0 / static_cast<double>(d)});
    }

    std::size_t dim() const { return m_.rows(); }
    const Dims& dims() const { return dims_; }
    const Matrix& matrix() const { return m_; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    /// <v|rho|v>
    double expectation(const PureState& v) const {
        if (v.dim() != dim()) throw DimensionMismatch("DensityOperator::expectation: dimension mismatch");
        Complex s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j) s += std::conj(v[i]) * m_(i, j) * v[j];
        return s.real();
    }

private:
    Dims dims_;
    Matrix m_;
};

namespace detail {

inline std::vector<std::size_t> strides(const Dims& dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) s[i - 1] = s[i] * dims[i];
    return s;
}

inline void check_registers(const Dims& dims, std::span<const std::size_t> regs) {
    for (std::size_t i = 0; i < regs.size(); ++i) {
        if (regs[i] >= dims.size()) throw InvalidArgument("register index out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (regs[i] == regs[j]) throw InvalidArgument("register listed twice");
    }
}

/// Applies `op` (any square matrix) to `regs` of a raw amplitude vector.
inline ComplexVector apply_local(const Dims& dims, std::span<const Complex> amps, const Matrix& op,
                                 std::span<const std::size_t> regs) {
    check_registers(dims, regs);
    std::size_t local_dim = 1;
    for (auto r : regs) local_dim *= dims[r];
    if (!op.square() || op.rows() != local_dim)
        throw DimensionMismatch("apply: operator dimension does not match the target registers");

    const auto stride = strides(dims);
    // Offset in the full vector contributed by each local basis index.
    std::vector<std::size_t> local_offset(local_dim, 0);
    for (std::size_t l = 0; l < local_dim; ++l) {
        std::size_t rem = l;
        for (std::size_t k = regs.size(); k-- > 0;) {
            local_offset[l] += (rem % dims[regs[k]]) * stride[regs[k]];
            rem /= dims[regs[k]];
        }
    }
    std::vector<bool> in_regs(dims.size(), false);
    for (auto r : regs) in_regs[r] = true;

    ComplexVector out(amps.size());
    ComplexVector gathered(local_dim);
    const std::size_t total = amps.size();
    for (std::size_t base = 0; base < total; ++base) {
        // Visit each assignment of the untouched registers once: those with all target digits zero.
        bool is_base = true;
        for (std::size_t r = 0; r < dims.size() && is_base; ++r)
            if (in_regs[r] && (base / stride[r]) % dims[r] != 0) is_base = false;
        if (!is_base) continue;
        for (std::size_t l = 0; l < local_dim; ++l) gathered[l] = amps[base + local_offset[l]];
        for (std::size_t i = 0; i < local_dim; ++i) {
            Complex s = 0.0;
            for (std::size_t j = 0; j < local_dim; ++j) s += op(i, j) * gathered[j];
            out[base + local_offset[i]] = s;
        }
    }
    return out;
}

inline double norm_squared(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& a : v) s += std::norm(a);
    return s;
}

}  // namespace detail

/// Applies a unitary to the listed registers (in the listed order).
inline PureState apply_gate(const PureState& state, const Matrix& gate, std::span<const std::size_t> registers) {
    if (!gate.is_unitary(kConstructionTol)) throw NonUnitaryGate("apply_gate: gate is not unitary");
    return PureState(state.dims(), detail::apply_local(state.dims(), state.amplitudes(), gate, registers));
}

inline PureState apply_gate(const PureState& state, const Matrix& gate, std::initializer_list<std::size_t> registers) {
    return apply_gate(state, gate, std::span<const std::size_t>(registers.begin(), registers.size()));
}

// Measurement ----------------------------------------------------------------

struct MeasurementResult {
    std::size_t outcome = 0;
    double probability = 0.0;
    PureState post_state;
};

/// Outcomes whose Born probability is below this are dropped from exact results.
inline constexpr double kNegligibleProbability = 1e-300;

/// A projective measurement on a set of registers: projectors[i] is outcome i.
class ProjectiveMeasurement {
public:
    ProjectiveMeasurement(std::vector<Matrix> projectors, std::vector<std::size_t> registers)
        : projectors_(std::move(projectors)), registers_(std::move(registers)) {
        if (projectors_.empty()) throw InvalidArgument("ProjectiveMeasurement: no outcomes");
        const std::size_t d = projectors_.front().rows();
        Matrix sum = Matrix::zeros(d);
        for (const auto& p : projectors_) {
            if (!p.square() || p.rows() != d) throw DimensionMismatch("ProjectiveMeasurement: projector shape");
            if (!p.is_hermitian(kHermitianTol) || (p * p).max_abs_diff(p) > kHermitianTol)
                throw InvalidBasis("ProjectiveMeasurement: operator is not a projector");
            sum += p;
        }
        if (sum.max_abs_diff(Matrix::identity(d)) > kHermitianTol)
            throw InvalidBasis("ProjectiveMeasurement: projectors do not resolve the identity");
    }

    /// Rank-one projectors onto the given orthonormal basis of one register.
    static ProjectiveMeasurement in_basis(std::span<const PureState> basis, std::size_t reg) {
        std::vector<Matrix> ps;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            for (std::size_t j = 0; j < basis.size(); ++j) {
                const Complex ip = inner(basis[i], basis[j]);
                if (std::abs(ip - (i == j ? Complex{1.0} : Complex{})) > kConstructionTol)
                    throw InvalidBasis("measure_in_basis: basis is not orthonormal");
            }
            ps.push_back(basis[i].projector());
        }
        return ProjectiveMeasurement(std::move(ps), {reg});
    }

    std::size_t outcomes() const { return projectors_.size(); }
    const Matrix& projector(std::size_t i) const { return projectors_.at(i); }
    const std::vector<std::size_t>& registers() const { return registers_; }

    /// All outcomes with nonzero probability, each with its collapsed state.
    std::vector<MeasurementResult> exact(const PureState& state) const {
        std::vector<MeasurementResult> out;
        for (std::size_t i = 0; i < projectors_.size(); ++i) {
            auto branch = detail::apply_local(state.dims(), state.amplitudes(), projectors_[i], registers_);
            const double p = detail::norm_squared(branch);
            if (p <= kNegligibleProbability) continue;
            out.push_back({i, p, PureState(state.dims(), std::move(branch))});
        }
        return out;
    }

    /// One outcome drawn by the Born rule.
    MeasurementResult sample(const PureState& state, Rng& rng) const {
        auto branches = exact(state);
        const double u = rng.uniform();
        double acc = 0.0;
        for (auto& b : branches) {
            acc += b.probability;
            if (u < acc) return std::move(b);
        }
        return std::move(branches.back());  // u landed in the rounding gap at the top
    }

private:
    std::vector<Matrix> projectors_;
    std::vector<std::size_t> registers_;
};

/// Measures one qubit register in an orthonormal basis {b0, b1}; exact mode.
inline std::vector<MeasurementResult> measure_in_basis(const PureState& state, std::size_t reg,
                                                       const std::array<PureState, 2>& basis) {
    if (reg >= state.registers() || state.dims()[reg] != 2)
        throw InvalidArgument("measure_in_basis: register must be a qubit");
    return ProjectiveMeasurement::in_basis(basis, reg).exact(state);
}

/// Measures one qubit register in an orthonormal basis {b0, b1}; sampled mode.
inline MeasurementResult measure_in_basis(const PureState& state, std::size_t reg,
                                          const std::array<PureState, 2>& basis, Rng& rng) {
    if (reg >= state.registers() || state.dims()[reg] != 2)
        throw InvalidArgument("measure_in_basis: register must be a qubit");
    return ProjectiveMeasurement::in_basis(basis, reg).sample(state, rng);
}

// Reduced states -------------------------------------------------------------

/// Reduced density operator on `keep` (in the listed order).
inline DensityOperator partial_trace(const PureState& state, std::span<const std::size_t> keep) {
    const auto& dims = state.dims();
    detail::check_registers(dims, keep);
    if (keep.empty()) throw InvalidArgument("partial_trace: nothing kept");
    std::vector<std::size_t> traced;
    for (std::size_t r = 0; r < dims.size(); ++r)
        if (std::find(keep.begin(), keep.end(), r) == keep.end()) traced.push_back(r);

    Dims kept_dims;
    for (auto r : keep) kept_dims.push_back(dims[r]);
    Dims traced_dims;
    for (auto r : traced) traced_dims.push_back(dims[r]);
    const std::size_t dk = product(kept_dims);
    const std::size_t dt = product(traced_dims);
    const auto stride = detail::strides(dims);

    auto index_of = [&](std::size_t kept_index, std::size_t traced_index) {
        std::size_t idx = 0;
        for (std::size_t k = keep.size(); k-- > 0;) {
            idx += (kept_index % dims[keep[k]]) * stride[keep[k]];
            kept_index /= dims[keep[k]];
        }
        for (std::size_t k = traced.size(); k-- > 0;) {
            idx += (traced_index % dims[traced[k]]) * stride[traced[k]];
            traced_index /= dims[traced[k]];
        }
        return idx;
    };

    Matrix rho(dk, dk);
    for (std::size_t e = 0; e < dt; ++e)
        for (std::size_t i = 0; i < dk; ++i) {
            const Complex ai = state[index_of(i, e)];
            if (ai == Complex{}) continue;
            for (std::size_t j = 0; j < dk; ++j) rho(i, j) += ai * std::conj(state[index_of(j, e)]);
        }
    return DensityOperator(std::move(kept_dims), std::move(rho));
}

inline DensityOperator partial_trace(const PureState& state, std::initializer_list<std::size_t> keep) {
    return partial_trace(state, std::span<const std::size_t>(keep.begin(), keep.size()));
}

// SWAP test ------------------------------------------------------------------

/// Pass probability (1 + |<xi|chi>|^2) / 2.
inline double swap_test_pass_probability(const PureState& xi, const PureState& chi) {
    if (xi.dims() != chi.dims()) throw DimensionMismatch("swap test: register dimensions differ");
    return 0.5 * (1.0 + std::norm(inner(xi, chi)));
}

/// Pass probability (1 + tr(rho rho')) / 2.
inline double swap_test_pass_probability_mixed(const DensityOperator& rho, const DensityOperator& rho2) {
    if (rho.dim() != rho2.dim()) throw DimensionMismatch("swap test: register dimensions differ");
    Complex t = 0.0;
    for (std::size_t i = 0; i < rho.dim(); ++i)
        for (std::size_t j = 0; j < rho.dim(); ++j) t += rho(i, j) * rho2(j, i);
    return 0.5 * (1.0 + t.real());
}

/// The SWAP-test circuit on registers a and b of `state`: prepends a control
/// qubit in (|0>+|1>)/sqrt2, applies controlled-SWAP, then H on the control.
/// The returned measurement reads the control (register 0); outcome 0 is a pass.
struct SwapTestCircuit {
    PureState pre_measurement;
    ProjectiveMeasurement control_readout;
};

inline SwapTestCircuit swap_test_circuit(const PureState& state, std::size_t reg_a, std::size_t reg_b) {
    if (reg_a >= state.registers() || reg_b >= state.registers() || reg_a == reg_b)
        throw InvalidArgument("swap_test_circuit: bad register pair");
    const std::size_t d = state.dims()[reg_a];
    if (state.dims()[reg_b] != d) throw DimensionMismatch("swap test: register dimensions differ");
    const auto control = PureState::qubit(1.0, 1.0);
    auto joint = tensor(control, state);
    joint = apply_gate(joint, gates::controlled(gates::swap(d)), {0, reg_a + 1, reg_b + 1});
    joint = apply_gate(joint, gates::hadamard(), {0});
    const std::array<PureState, 2> computational{PureState::qubit(1.0, 0.0), PureState::qubit(0.0, 1.0)};
    return {std::move(joint), ProjectiveMeasurement::in_basis(computational, 0)};
}

}  // namespace qpkid::qsim
