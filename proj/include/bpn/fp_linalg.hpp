// Exact dense linear algebra over a prime field F_p.
//
// The prime is a runtime parameter carried by PrimeField; every matrix keeps
// a copy of the field it was built over. Elimination is deterministic: the
// pivot in each column is the first row (from the current position down)
// with a nonzero entry, and columns are scanned left to right.

#ifndef BPN_FP_LINALG_HPP
#define BPN_FP_LINALG_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bpn {

using fp_t = std::uint32_t;
using FpVector = std::vector<fp_t>;

/// Violated precondition on the caller's side (bad index, dimension mismatch).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data that breaks an algebraic identity the algorithm relies on.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An iteration budget ran out where termination is guaranteed.
class InternalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool is_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0)
            return false;
    return true;
}

class PrimeField {
public:
    explicit PrimeField(fp_t p) : p_(p)
    {
        if (!is_prime(p) || p > 65521)
            throw ContractError("modulus must be a prime below 2^16, got " + std::to_string(p));
        auto inv = std::make_shared<std::vector<fp_t>>(p, 0);
        for (fp_t a = 1; a < p; ++a) {
            // Fermat: a^(p-2)
            std::uint64_t r = 1, b = a, e = p - 2;
            while (e) {
                if (e & 1)
                    r = r * b % p;
                b = b * b % p;
                e >>= 1;
            }
            (*inv)[a] = static_cast<fp_t>(r);
        }
        inv_ = std::move(inv);
    }

    fp_t prime() const noexcept { return p_; }

    fp_t add(fp_t a, fp_t b) const noexcept
    {
        fp_t s = a + b;
        return s >= p_ ? s - p_ : s;
    }
    fp_t sub(fp_t a, fp_t b) const noexcept { return a >= b ? a - b : a + p_ - b; }
    fp_t neg(fp_t a) const noexcept { return a == 0 ? 0 : p_ - a; }
    fp_t mul(fp_t a, fp_t b) const noexcept
    {
        return static_cast<fp_t>(static_cast<std::uint64_t>(a) * b % p_);
    }
    fp_t inv(fp_t a) const
    {
        if (a == 0 || a >= p_)
            throw ContractError("inverse of zero or unreduced value");
        return (*inv_)[a];
    }
    fp_t reduce(std::int64_t v) const noexcept
    {
        std::int64_t m = v % static_cast<std::int64_t>(p_);
        return static_cast<fp_t>(m < 0 ? m + p_ : m);
    }
    /// (-1)^k in the field.
    fp_t sign(int k) const noexcept { return (k & 1) ? p_ - 1 : 1 % p_; }

    friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept { return a.p_ == b.p_; }

private:
    fp_t p_;
    std::shared_ptr<const std::vector<fp_t>> inv_;
};

// y += c * x
inline void axpy(const PrimeField& F, fp_t c, std::span<const fp_t> x, std::span<fp_t> y)
{
    if (c == 0)
        return;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k])
            y[k] = F.add(y[k], F.mul(c, x[k]));
}

inline bool is_zero(std::span<const fp_t> v) noexcept
{
    for (fp_t x : v)
        if (x)
            return false;
    return true;
}

class FpMatrix {
public:
    FpMatrix(PrimeField F, std::size_t rows, std::size_t cols)
        : F_(std::move(F)), rows_(rows), cols_(cols), data_(rows * cols, 0)
    {
    }

    static FpMatrix identity(PrimeField F, std::size_t n)
    {
        FpMatrix m(std::move(F), n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1;
        return m;
    }

    /// Entries are reduced mod p; all rows must have equal length.
    static FpMatrix from_rows(PrimeField F, const std::vector<std::vector<std::int64_t>>& rows)
    {
        std::size_t cols = rows.empty() ? 0 : rows.front().size();
        FpMatrix m(F, rows.size(), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols)
                throw ContractError("ragged row list");
            for (std::size_t c = 0; c < cols; ++c)
                m(r, c) = F.reduce(rows[r][c]);
        }
        return m;
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    static FpMatrix from_columns(PrimeField F, std::size_t rows, const std::vector<FpVector>& cols)
    {
        FpMatrix m(std::move(F), rows, cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (cols[c].size() != rows)
                throw ContractError("column length mismatch");
            for (std::size_t r = 0; r < rows; ++r)
                m(r, c) = cols[c][r];
        }
        return m;
    }

    const PrimeField& field() const noexcept { return F_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    fp_t& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    fp_t operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<fp_t> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const fp_t> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    FpVector column(std::size_t c) const
    {
        FpVector v(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            v[r] = (*this)(r, c);
        return v;
    }

    void swap_rows(std::size_t a, std::size_t b) noexcept
    {
        if (a == b)
            return;
        for (std::size_t c = 0; c < cols_; ++c)
            std::swap((*this)(a, c), (*this)(b, c));
    }

    FpMatrix transpose() const
    {
        FpMatrix t(F_, cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                t(c, r) = (*this)(r, c);
        return t;
    }

    bool is_zero() const noexcept { return bpn::is_zero(data_); }

    friend bool operator==(const FpMatrix& a, const FpMatrix& b) noexcept
    {
        return a.F_ == b.F_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    PrimeField F_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<fp_t> data_;
};

inline FpVector multiply(const FpMatrix& m, std::span<const fp_t> v)
{
    if (v.size() != m.cols())
        throw ContractError("matrix-vector dimension mismatch");
    const auto& F = m.field();
    FpVector out(m.rows(), 0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::uint64_t acc = 0;
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c)
            acc += static_cast<std::uint64_t>(row[c]) * v[c];
        out[r] = static_cast<fp_t>(acc % F.prime());
    }
    return out;
}

inline FpMatrix multiply(const FpMatrix& a, const FpMatrix& b)
{
    if (a.cols() != b.rows())
        throw ContractError("matrix product dimension mismatch");
    const auto& F = a.field();
    FpMatrix out(F, a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = 0; k < a.cols(); ++k)
            axpy(F, a(r, k), b.row(k), out.row(r));
    return out;
}

inline FpMatrix add(const FpMatrix& a, const FpMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ContractError("matrix sum dimension mismatch");
    FpMatrix out = a;
    for (std::size_t r = 0; r < a.rows(); ++r)
        axpy(a.field(), 1, b.row(r), out.row(r));
    return out;
}

struct RowEchelon {
    FpMatrix matrix;
    std::vector<std::size_t> pivots;

    std::size_t rank() const noexcept { return pivots.size(); }
};

namespace detail {
    // In-place reduction. When `aug` is non-null it receives the same row
    // operations (used by solve()).
    inline std::vector<std::size_t> reduce_in_place(FpMatrix& m, FpMatrix* aug = nullptr)
    {
        const auto& F = m.field();
        std::vector<std::size_t> pivots;
        std::size_t prow = 0;
        for (std::size_t c = 0; c < m.cols() && prow < m.rows(); ++c) {
            std::size_t r = prow;
            while (r < m.rows() && m(r, c) == 0)
                ++r;
            if (r == m.rows())
                continue;
            m.swap_rows(prow, r);
            if (aug)
                aug->swap_rows(prow, r);
            fp_t s = F.inv(m(prow, c));
            for (auto& x : m.row(prow))
                x = F.mul(x, s);
            if (aug)
                for (auto& x : aug->row(prow))
                    x = F.mul(x, s);
            for (std::size_t o = 0; o < m.rows(); ++o) {
                if (o == prow || m(o, c) == 0)
                    continue;
                fp_t f = F.neg(m(o, c));
                axpy(F, f, m.row(prow), m.row(o));
                if (aug)
                    axpy(F, f, aug->row(prow), aug->row(o));
            }
            pivots.push_back(c);
            ++prow;
        }
        return pivots;
    }
}  // namespace detail

inline RowEchelon rref(FpMatrix m)
{
    auto pivots = detail::reduce_in_place(m);
    return {std::move(m), std::move(pivots)};
}

inline std::size_t rank(const FpMatrix& m) { return rref(m).rank(); }

/// Basis of the null space, one vector per free column, with a 1 in that
/// column and zeros in the other free columns.
inline std::vector<FpVector> kernel_basis(const FpMatrix& m)
{
    auto [R, pivots] = rref(m);
    const auto& F = m.field();
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto c : pivots)
        is_pivot[c] = true;
    std::vector<FpVector> basis;
    for (std::size_t free = 0; free < m.cols(); ++free) {
        if (is_pivot[free])
            continue;
        FpVector v(m.cols(), 0);
        v[free] = 1;
        for (std::size_t k = 0; k < pivots.size(); ++k)
            v[pivots[k]] = F.neg(R(k, free));
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Some x with m x = b, zero in all non-pivot coordinates; nullopt when b is
/// outside the column space.
inline std::optional<FpVector> solve(const FpMatrix& m, std::span<const fp_t> b)
{
    if (b.size() != m.rows())
        throw ContractError("solve: right-hand side has length " + std::to_string(b.size()) +
                            ", expected " + std::to_string(m.rows()));
    FpMatrix R = m;
    FpMatrix rhs(m.field(), m.rows(), 1);
    for (std::size_t r = 0; r < b.size(); ++r)
        rhs(r, 0) = b[r] % m.field().prime();
    auto pivots = detail::reduce_in_place(R, &rhs);
    for (std::size_t r = pivots.size(); r < m.rows(); ++r)
        if (rhs(r, 0) != 0)
            return std::nullopt;
    FpVector x(m.cols(), 0);
    for (std::size_t k = 0; k < pivots.size(); ++k)
        x[pivots[k]] = rhs(k, 0);
    return x;
}

/// Incrementally built row-reduced basis of a subspace of F_p^dim.
/// Stored vectors are kept fully reduced against each other.
class EchelonBasis {
public:
    EchelonBasis(PrimeField F, std::size_t dim) : F_(std::move(F)), dim_(dim) {}

    std::size_t dim() const noexcept { return rows_.size(); }
    std::size_t ambient_dim() const noexcept { return dim_; }
    const PrimeField& field() const noexcept { return F_; }

    /// Reduces v against the basis; the result is zero iff v is in the span.
    FpVector reduce(FpVector v) const
    {
        for (std::size_t k = 0; k < rows_.size(); ++k) {
            fp_t c = v[pivots_[k]];
            if (c)
                axpy(F_, F_.neg(c), rows_[k], v);
        }
        return v;
    }

    bool contains(const FpVector& v) const { return is_zero(reduce(v)); }

    /// Returns true if v enlarged the span.
    bool add(FpVector v)
    {
        if (v.size() != dim_)
            throw ContractError("EchelonBasis: vector length mismatch");
        v = reduce(std::move(v));
        std::size_t c = 0;
        while (c < dim_ && v[c] == 0)
            ++c;
        if (c == dim_)
            return false;
        fp_t s = F_.inv(v[c]);
        for (auto& x : v)
            x = F_.mul(x, s);
        for (auto& r : rows_)
            if (r[c])
                axpy(F_, F_.neg(r[c]), v, r);
        rows_.push_back(std::move(v));
        pivots_.push_back(c);
        return true;
    }

    const std::vector<FpVector>& vectors() const noexcept { return rows_; }

private:
    PrimeField F_;
    std::size_t dim_;
    std::vector<FpVector> rows_;
    std::vector<std::size_t> pivots_;
};

inline std::size_t span_dim(const PrimeField& F, std::size_t dim, const std::vector<FpVector>& vs)
{
    EchelonBasis b(F, dim);
    for (const auto& v : vs)
        b.add(v);
    return b.dim();
}

/// dim span(cycles) - dim span(boundaries). Throws ConsistencyError when a
/// boundary is not in the span of the cycles.
inline std::size_t subquotient_dim(const PrimeField& F, std::size_t dim,
                                   const std::vector<FpVector>& cycles,
                                   const std::vector<FpVector>& boundaries)
{
    EchelonBasis z(F, dim);
    for (const auto& v : cycles)
        z.add(v);
    EchelonBasis b(F, dim);
    for (const auto& v : boundaries) {
        if (!z.contains(v))
            throw ConsistencyError("boundary outside the cycle space: broken differential");
        b.add(v);
    }
    return z.dim() - b.dim();
}

}  // namespace bpn

#endif
