// Finite (n+1)-multigraded chain complexes over F_p with anticommuting
// component differentials d^0, ..., d^n, where d^i raises the i-th grading
// by one and preserves every other grading (including the auxiliary ones).
//
// Provides partial homology H(M, d^I) for any direction subset I, the pages
// of the spectral sequence H(H(M, d^I), d^j) => H(M, d^{I u j}) obtained by
// filtering on the j-grading, and the representative-improvement procedure
// that pushes a permanent cycle towards the later directions.

#ifndef BPN_MULTICOMPLEX_HPP
#define BPN_MULTICOMPLEX_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fp_linalg.hpp"

namespace bpn {

using CellId = std::size_t;

/// Sparse F_p-linear combination of cells.
class Chain {
public:
    using Terms = std::map<CellId, fp_t>;

    Chain() = default;
    Chain(CellId c, fp_t coeff = 1)
    {
        if (coeff)
            terms_.emplace(c, coeff);
    }

    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    fp_t coefficient(CellId c) const
    {
        auto it = terms_.find(c);
        return it == terms_.end() ? 0 : it->second;
    }

    void add_term(const PrimeField& F, CellId c, fp_t coeff)
    {
        if (coeff == 0)
            return;
        auto [it, inserted] = terms_.emplace(c, coeff);
        if (!inserted) {
            it->second = F.add(it->second, coeff);
            if (it->second == 0)
                terms_.erase(it);
        }
    }

    /// Sets an already reduced coefficient.
    void set(CellId c, fp_t coeff)
    {
        if (coeff == 0)
            terms_.erase(c);
        else
            terms_[c] = coeff;
    }

    void add(const PrimeField& F, const Chain& o, fp_t scale = 1)
    {
        for (const auto& [c, v] : o.terms_)
            add_term(F, c, F.mul(v, scale));
    }

    Chain scaled(const PrimeField& F, fp_t s) const
    {
        Chain out;
        out.add(F, *this, s);
        return out;
    }

    friend bool operator==(const Chain&, const Chain&) = default;

private:
    Terms terms_;
};

using DirectionSet = std::vector<int>;

struct Cell {
    std::string name;
    std::vector<int> grading;        // one entry per direction
    std::vector<std::int64_t> aux;   // gradings preserved by every d^i
    bool edge = false;               // outgoing differentials not fully stored
};

class Multicomplex {
public:
    Multicomplex(PrimeField F, int directions) : F_(std::move(F)), directions_(directions)
    {
        if (directions < 0)
            throw ContractError("negative direction count");
        diff_.resize(directions);
    }

    const PrimeField& field() const noexcept { return F_; }
    int directions() const noexcept { return directions_; }
    std::size_t size() const noexcept { return cells_.size(); }
    const Cell& cell(CellId c) const { return cells_.at(c); }
    const std::vector<Cell>& cells() const noexcept { return cells_; }

    CellId add_cell(std::string name, std::vector<int> grading, std::vector<std::int64_t> aux = {},
                    bool edge = false)
    {
        if (static_cast<int>(grading.size()) != directions_)
            throw ContractError("cell '" + name + "' has " + std::to_string(grading.size()) +
                                " gradings, expected " + std::to_string(directions_));
        if (!name.empty() && by_name_.count(name))
            throw ContractError("duplicate cell name '" + name + "'");
        CellId id = cells_.size();
        if (!name.empty())
            by_name_.emplace(name, id);
        by_grading_[full_key(grading, aux)].push_back(id);
        cells_.push_back({std::move(name), std::move(grading), std::move(aux), edge});
        for (auto& d : diff_)
            d.emplace_back();
        return id;
    }

    std::optional<CellId> find(const std::string& name) const
    {
        auto it = by_name_.find(name);
        if (it == by_name_.end())
            return std::nullopt;
        return it->second;
    }

    /// Cells with exactly this multigrading and auxiliary grading.
    const std::vector<CellId>& cells_at(const std::vector<int>& grading,
                                        const std::vector<std::int64_t>& aux) const
    {
        static const std::vector<CellId> none;
        auto it = by_grading_.find(full_key(grading, aux));
        return it == by_grading_.end() ? none : it->second;
    }

    /// d^dir(from) += coeff * to
    void add_differential(int dir, CellId from, CellId to, fp_t coeff)
    {
        check_dir(dir);
        if (from >= cells_.size() || to >= cells_.size())
            throw ContractError("differential references unknown cell");
        diff_[dir][from].add_term(F_, to, F_.reduce(coeff));
    }

    const Chain& column(int dir, CellId from) const
    {
        check_dir(dir);
        return diff_[dir].at(from);
    }

    Chain apply(int dir, const Chain& x) const
    {
        Chain out;
        for (const auto& [c, v] : x.terms())
            out.add(F_, column(dir, c), v);
        return out;
    }

    Chain apply(const DirectionSet& dirs, const Chain& x) const
    {
        Chain out;
        for (int d : dirs)
            out.add(F_, apply(d, x));
        return out;
    }

    /// Full grading of a cell: multigrading followed by aux gradings.
    std::vector<std::int64_t> grading_key(CellId c) const
    {
        return full_key(cells_[c].grading, cells_[c].aux);
    }

    void check_dir(int dir) const
    {
        if (dir < 0 || dir >= directions_)
            throw ContractError("direction " + std::to_string(dir) + " out of range");
    }

private:
    static std::vector<std::int64_t> full_key(const std::vector<int>& g, const std::vector<std::int64_t>& aux)
    {
        std::vector<std::int64_t> k(g.begin(), g.end());
        k.insert(k.end(), aux.begin(), aux.end());
        return k;
    }

    PrimeField F_;
    int directions_;
    std::vector<Cell> cells_;
    std::vector<std::vector<Chain>> diff_;  // diff_[dir][cell]
    std::map<std::string, CellId> by_name_;
    std::map<std::vector<std::int64_t>, std::vector<CellId>> by_grading_;
};

inline DirectionSet all_directions(const Multicomplex& m)
{
    DirectionSet I(m.directions());
    for (int i = 0; i < m.directions(); ++i)
        I[i] = i;
    return I;
}

inline std::string describe(const Multicomplex& m, const Chain& x)
{
    if (x.is_zero())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [c, v] : x.terms()) {
        if (!first)
            os << " + ";
        first = false;
        os << v << '*' << (m.cell(c).name.empty() ? "#" + std::to_string(c) : m.cell(c).name);
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Validation

/// Violated identities: grading shifts, d^i d^i = 0, d^i d^j + d^j d^i = 0.
/// Compositions through edge cells are skipped since their columns are partial.
inline std::vector<std::string> validate(const Multicomplex& m)
{
    std::vector<std::string> issues;
    const auto& F = m.field();
    auto name = [&](CellId c) { return m.cell(c).name.empty() ? "#" + std::to_string(c) : m.cell(c).name; };
    for (int i = 0; i < m.directions(); ++i)
        for (CellId c = 0; c < m.size(); ++c)
            for (const auto& [t, v] : m.column(i, c).terms()) {
                auto expect = m.cell(c).grading;
                expect[i] += 1;
                if (m.cell(t).grading != expect || m.cell(t).aux != m.cell(c).aux)
                    issues.push_back("d" + std::to_string(i) + "(" + name(c) + ") hits " + name(t) +
                                     " with the wrong grading");
            }
    for (int i = 0; i < m.directions(); ++i)
        for (int j = i; j < m.directions(); ++j)
            for (CellId c = 0; c < m.size(); ++c) {
                Chain first_i = m.apply(i, Chain(c));
                Chain first_j = m.apply(j, Chain(c));
                bool partial = false;
                for (const auto& [t, v] : first_i.terms())
                    partial = partial || m.cell(t).edge;
                for (const auto& [t, v] : first_j.terms())
                    partial = partial || m.cell(t).edge;
                if (partial)
                    continue;
                Chain s = m.apply(j, first_i);
                if (i != j)
                    s.add(F, m.apply(i, first_j));
                if (!s.is_zero()) {
                    if (i == j)
                        issues.push_back("d" + std::to_string(i) + " d" + std::to_string(i) + "(" + name(c) +
                                         ") != 0");
                    else
                        issues.push_back("d" + std::to_string(i) + " d" + std::to_string(j) + " + d" +
                                         std::to_string(j) + " d" + std::to_string(i) + " nonzero on " +
                                         name(c));
                }
            }
    return issues;
}

// ---------------------------------------------------------------------------
// Partial homology

/// A homology spot: the gradings preserved by d^I (directions outside I, then
/// aux gradings) and the total I-degree sum_{i in I} g_i.
struct SpotKey {
    std::vector<std::int64_t> preserved;
    std::int64_t degree = 0;

    friend auto operator<=>(const SpotKey&, const SpotKey&) = default;
};

struct HomologySpot {
    std::size_t dimension = 0;
    std::vector<Chain> representatives;
    std::vector<CellId> cells;
    bool edge_uncertain = false;
};

struct HomologyResult {
    DirectionSet directions;
    std::map<SpotKey, HomologySpot> spots;

    std::size_t total_dimension() const
    {
        std::size_t s = 0;
        for (const auto& [k, v] : spots)
            s += v.dimension;
        return s;
    }
};

namespace detail {
    inline bool contains_dir(const DirectionSet& I, int d)
    {
        return std::find(I.begin(), I.end(), d) != I.end();
    }

    inline SpotKey spot_of(const Multicomplex& m, const DirectionSet& I, CellId c)
    {
        SpotKey k;
        const auto& cell = m.cell(c);
        for (int d = 0; d < m.directions(); ++d) {
            if (contains_dir(I, d))
                k.degree += cell.grading[d];
            else
                k.preserved.push_back(cell.grading[d]);
        }
        k.preserved.insert(k.preserved.end(), cell.aux.begin(), cell.aux.end());
        return k;
    }

    inline std::map<SpotKey, std::vector<CellId>> group_by_spot(const Multicomplex& m, const DirectionSet& I)
    {
        std::map<SpotKey, std::vector<CellId>> out;
        for (CellId c = 0; c < m.size(); ++c)
            out[spot_of(m, I, c)].push_back(c);
        return out;
    }

    inline FpVector to_dense(const Chain& x, const std::vector<CellId>& basis)
    {
        FpVector v(basis.size(), 0);
        for (const auto& [c, val] : x.terms()) {
            auto it = std::lower_bound(basis.begin(), basis.end(), c);
            if (it == basis.end() || *it != c)
                throw ContractError("chain has a term outside the expected spot");
            v[it - basis.begin()] = val;
        }
        return v;
    }

    inline Chain to_chain(const FpVector& v, const std::vector<CellId>& basis)
    {
        Chain out;
        for (std::size_t k = 0; k < v.size(); ++k)
            out.set(basis[k], v[k]);
        return out;
    }

    /// Matrix of d^I from `src` cells into `dst` cells (both sorted).
    inline FpMatrix block_matrix(const Multicomplex& m, const DirectionSet& I, const std::vector<CellId>& src,
                                 const std::vector<CellId>& dst)
    {
        FpMatrix A(m.field(), dst.size(), src.size());
        for (std::size_t k = 0; k < src.size(); ++k)
            for (int d : I)
                for (const auto& [t, v] : m.column(d, src[k]).terms()) {
                    auto it = std::lower_bound(dst.begin(), dst.end(), t);
                    if (it == dst.end() || *it != t)
                        throw ConsistencyError("differential leaves its homology block");
                    A(it - dst.begin(), k) = m.field().add(A(it - dst.begin(), k), v);
                }
        return A;
    }
}  // namespace detail

/// H(M, d^I) at every spot, with representative cycles completing a basis of
/// the boundaries. Spots touching edge cells are flagged edge-uncertain.
inline HomologyResult partial_homology(const Multicomplex& m, DirectionSet I)
{
    std::sort(I.begin(), I.end());
    I.erase(std::unique(I.begin(), I.end()), I.end());
    for (int d : I)
        m.check_dir(d);
    const auto& F = m.field();
    auto groups = detail::group_by_spot(m, I);
    HomologyResult out;
    out.directions = I;
    static const std::vector<CellId> none;
    auto lookup = [&](SpotKey k) -> const std::vector<CellId>& {
        auto it = groups.find(k);
        return it == groups.end() ? none : it->second;
    };
    for (const auto& [key, cells] : groups) {
        const auto& next = lookup({key.preserved, key.degree + 1});
        const auto& prev = lookup({key.preserved, key.degree - 1});
        HomologySpot spot;
        spot.cells = cells;
        for (CellId c : cells)
            spot.edge_uncertain = spot.edge_uncertain || m.cell(c).edge;
        for (CellId c : prev)
            spot.edge_uncertain = spot.edge_uncertain || m.cell(c).edge;

        auto cycles = I.empty() ? kernel_basis(FpMatrix(F, 0, cells.size()))
                                : kernel_basis(detail::block_matrix(m, I, cells, next));
        EchelonBasis z(F, cells.size());
        for (const auto& v : cycles)
            z.add(v);
        EchelonBasis b(F, cells.size());
        if (!I.empty() && !prev.empty()) {
            FpMatrix in = detail::block_matrix(m, I, prev, cells);
            for (std::size_t c = 0; c < in.cols(); ++c) {
                auto col = in.column(c);
                if (!z.contains(col))
                    throw ConsistencyError("boundary outside the cycle space: broken differential");
                b.add(std::move(col));
            }
        }
        for (const auto& v : cycles)
            if (b.add(v))
                spot.representatives.push_back(detail::to_chain(v, cells));
        spot.dimension = spot.representatives.size();
        out.spots.emplace(key, std::move(spot));
    }
    return out;
}

/// Some a with d^k(a) = x, for x homogeneous in the full grading; nullopt when
/// x is not a d^k-boundary.
inline std::optional<Chain> find_preimage(const Multicomplex& m, int k, const Chain& x)
{
    m.check_dir(k);
    if (x.is_zero())
        return Chain{};
    CellId first = x.terms().begin()->first;
    const auto& cell = m.cell(first);
    auto src_grading = cell.grading;
    src_grading[k] -= 1;
    const auto& src = m.cells_at(cell.grading, cell.aux);
    const auto& pre = m.cells_at(src_grading, cell.aux);
    if (pre.empty())
        return std::nullopt;
    FpMatrix A = detail::block_matrix(m, {k}, pre, src);
    auto sol = solve(A, detail::to_dense(x, src));
    if (!sol)
        return std::nullopt;
    return detail::to_chain(*sol, pre);
}

// ---------------------------------------------------------------------------
// Spectral sequence of the j-filtration on (M, d^{I u j})

inline constexpr int kInfinitePage = 1 << 20;

struct SsKey {
    std::vector<std::int64_t> preserved;  // gradings outside I u {j}, then aux
    std::int64_t degree = 0;              // sum of the I u {j} gradings
    std::int64_t filtration = 0;          // the j-grading

    friend auto operator<=>(const SsKey&, const SsKey&) = default;
};

struct SsEntry {
    std::size_t dimension = 0;
    std::size_t outgoing_rank = 0;  // rank of d_r leaving this spot
};

struct SpectralSequencePage {
    DirectionSet collapsed;
    int running = 0;
    int page = 0;
    std::map<SsKey, SsEntry> entries;

    /// Entries summed over filtrations at one total spot.
    std::size_t total_dimension(const SpotKey& k) const
    {
        std::size_t s = 0;
        for (const auto& [key, e] : entries)
            if (key.preserved == k.preserved && key.degree == k.degree)
                s += e.dimension;
        return s;
    }
};

/// Inclusive range of total degrees to compute.
using SsWindow = std::pair<std::int64_t, std::int64_t>;

namespace detail {
    struct FilteredSpot {
        const Multicomplex* m;
        DirectionSet dirs;
        int j;
        const std::vector<CellId>* cells;
        const std::vector<CellId>* next;

        std::int64_t filt(CellId c) const { return m->cell(c).grading[j]; }

        /// Z_r^p = { x in F^p : D x in F^{p+r} }, as vectors over `cells`.
        std::vector<FpVector> cycles(std::int64_t p, std::int64_t r) const
        {
            const auto& F = m->field();
            std::vector<CellId> src, dst;
            std::vector<std::size_t> src_pos;
            for (std::size_t k = 0; k < cells->size(); ++k)
                if (filt((*cells)[k]) >= p) {
                    src.push_back((*cells)[k]);
                    src_pos.push_back(k);
                }
            for (CellId c : *next)
                if (filt(c) < p + r)
                    dst.push_back(c);
            FpMatrix A(F, dst.size(), src.size());
            for (std::size_t k = 0; k < src.size(); ++k)
                for (int d : dirs)
                    for (const auto& [t, v] : m->column(d, src[k]).terms()) {
                        auto it = std::lower_bound(dst.begin(), dst.end(), t);
                        if (it != dst.end() && *it == t)
                            A(it - dst.begin(), k) = F.add(A(it - dst.begin(), k), v);
                    }
            std::vector<FpVector> out;
            for (const auto& v : kernel_basis(A)) {
                FpVector full(cells->size(), 0);
                for (std::size_t k = 0; k < v.size(); ++k)
                    full[src_pos[k]] = v[k];
                out.push_back(std::move(full));
            }
            return out;
        }
    };

}  // namespace detail

/// E_r of the spectral sequence H(H(M, d^I), d^j) => H(M, d^{I u j}), from
/// the Cartan-Eilenberg subquotients
///   E_r^p = Z_r^p / (Z_{r-1}^{p+1} + D Z_{r-1}^{p-r+1}),  D = d^{I u j}.
/// E_0 carries d^I, E_1 = H(M, d^I) and d_r moves the j-grading by r.
/// Pass kInfinitePage for E_infinity.
inline SpectralSequencePage ss_page(const Multicomplex& m, DirectionSet I, int j, int r,
                                    std::optional<SsWindow> window = std::nullopt)
{
    m.check_dir(j);
    if (r < 0)
        throw ContractError("page index must be non-negative");
    std::sort(I.begin(), I.end());
    I.erase(std::unique(I.begin(), I.end()), I.end());
    if (detail::contains_dir(I, j))
        throw ContractError("running direction already collapsed");
    DirectionSet J = I;
    J.push_back(j);
    std::sort(J.begin(), J.end());

    const auto& F = m.field();
    auto groups = detail::group_by_spot(m, J);
    static const std::vector<CellId> none;
    auto lookup = [&](SpotKey k) -> const std::vector<CellId>& {
        auto it = groups.find(k);
        return it == groups.end() ? none : it->second;
    };

    SpectralSequencePage page{I, j, r, {}};
    for (const auto& [key, cells] : groups) {
        if (window && (key.degree < window->first || key.degree > window->second))
            continue;
        const auto& next = lookup({key.preserved, key.degree + 1});
        const auto& prev = lookup({key.preserved, key.degree - 1});
        bool edge = false;
        for (CellId c : cells)
            edge = edge || m.cell(c).edge;
        for (CellId c : prev)
            edge = edge || m.cell(c).edge;
        if (edge) {
            if (window)
                throw ContractError("spectral sequence window exceeds the stored cells");
            continue;
        }
        detail::FilteredSpot here{&m, J, j, &cells, &next};
        detail::FilteredSpot before{&m, J, j, &prev, &cells};
        FpMatrix D = prev.empty() ? FpMatrix(F, cells.size(), 0) : detail::block_matrix(m, J, prev, cells);

        std::set<std::int64_t> filtrations;
        for (CellId c : cells)
            filtrations.insert(here.filt(c));
        for (std::int64_t p : filtrations) {
            auto zr = here.cycles(p, r);
            EchelonBasis denom(F, cells.size());
            for (auto& v : here.cycles(p + 1, r - 1))
                denom.add(std::move(v));
            if (!prev.empty())
                for (const auto& u : before.cycles(p - r + 1, r - 1))
                    denom.add(multiply(D, u));
            EchelonBasis num = denom;
            for (const auto& v : zr)
                num.add(v);
            SsEntry e;
            e.dimension = num.dim() - denom.dim();
            if (e.dimension) {
                EchelonBasis ker = denom;
                for (auto& v : here.cycles(p, r + 1))
                    ker.add(std::move(v));
                e.outgoing_rank = num.dim() - ker.dim();
            }
            page.entries.emplace(SsKey{key.preserved, key.degree, p}, e);
        }
    }
    return page;
}

/// Whether x, homogeneous for the total grading and lying in Z_r^p with p
/// its lowest j-grading, is nonzero in E_r^p.
inline bool ss_class_survives(const Multicomplex& m, DirectionSet I, int j, int r, const Chain& x)
{
    if (x.is_zero())
        return false;
    std::sort(I.begin(), I.end());
    DirectionSet J = I;
    J.push_back(j);
    std::sort(J.begin(), J.end());
    auto groups = detail::group_by_spot(m, J);
    SpotKey key = detail::spot_of(m, J, x.terms().begin()->first);
    std::int64_t p = std::numeric_limits<std::int64_t>::max();
    for (const auto& [c, v] : x.terms()) {
        if (detail::spot_of(m, J, c) != key)
            throw ContractError("class representative is not homogeneous");
        p = std::min<std::int64_t>(p, m.cell(c).grading[j]);
    }
    static const std::vector<CellId> none;
    auto lookup = [&](SpotKey k) -> const std::vector<CellId>& {
        auto it = groups.find(k);
        return it == groups.end() ? none : it->second;
    };
    const auto& cells = lookup(key);
    const auto& next = lookup({key.preserved, key.degree + 1});
    const auto& prev = lookup({key.preserved, key.degree - 1});
    const auto& F = m.field();
    detail::FilteredSpot here{&m, J, j, &cells, &next};
    detail::FilteredSpot before{&m, J, j, &prev, &cells};

    FpVector v = detail::to_dense(x, cells);
    EchelonBasis zr(F, cells.size());
    for (auto& z : here.cycles(p, r))
        zr.add(std::move(z));
    if (!zr.contains(v))
        throw ContractError("element does not survive to the requested page");
    EchelonBasis denom(F, cells.size());
    for (auto& z : here.cycles(p + 1, r - 1))
        denom.add(std::move(z));
    if (!prev.empty()) {
        FpMatrix D = detail::block_matrix(m, J, prev, cells);
        for (const auto& u : before.cycles(p - r + 1, r - 1))
            denom.add(multiply(D, u));
    }
    return !denom.contains(v);
}

// ---------------------------------------------------------------------------
// Representative improvement

/// Given a direction k and a d^k-boundary x, returns some a with d^k(a) = x.
using DivisionStrategy = std::function<Chain(int, const Chain&)>;

/// Preimages by Gaussian elimination on the single-direction block.
inline DivisionStrategy linear_division_strategy(const Multicomplex& m)
{
    return [&m](int k, const Chain& x) {
        auto a = find_preimage(m, k, x);
        if (!a)
            throw ContractError("division strategy invoked on a non-boundary");
        return *a;
    };
}

struct TraceEvent {
    int direction = 0;
    Chain component;    // the d^k-boundary that was traded
    Chain witness;      // a with d^k(a) = component
    Chain replacement;  // -d^{later}(a)
    Chain result;       // representative after the substitution
};

struct ImproveResult {
    Chain representative;
    std::vector<Chain> stages;  // output of each step, in processing order
    std::vector<TraceEvent> events;
};

namespace detail {
    /// Homogeneous components ordered by their smallest cell.
    inline std::vector<Chain> components(const Multicomplex& m, const Chain& x)
    {
        std::map<std::vector<std::int64_t>, Chain> by_key;
        for (const auto& [c, v] : x.terms())
            by_key[m.grading_key(c)].set(c, v);
        std::vector<Chain> out;
        for (auto& [k, ch] : by_key)
            out.push_back(std::move(ch));
        std::sort(out.begin(), out.end(), [](const Chain& a, const Chain& b) {
            return a.terms().begin()->first < b.terms().begin()->first;
        });
        return out;
    }
}  // namespace detail

/// Processes the directions in `order` (default n, n-1, ..., 0). At the step
/// for direction k, every homogeneous component x' that is a d^k-boundary,
/// d^k(a) = x', is replaced by -d^{done}(a), where `done` are the directions
/// processed before k; this repeats until no component is a d^k-boundary.
inline ImproveResult improve_representative(const Multicomplex& m, Chain x, DirectionSet order = {},
                                            DivisionStrategy strategy = {}, std::size_t budget = 100000)
{
    const auto& F = m.field();
    if (order.empty())
        for (int k = m.directions() - 1; k >= 0; --k)
            order.push_back(k);
    {
        DirectionSet sorted = order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != all_directions(m))
            throw ContractError("order must be a permutation of the directions");
    }
    if (!strategy)
        strategy = linear_division_strategy(m);

    ImproveResult res;
    DirectionSet done;
    std::size_t steps = 0;
    for (int k : order) {
        if (!m.apply(done, x).is_zero())
            throw ContractError("input is not a cycle for the directions already processed");
        for (;;) {
            bool traded = false;
            for (const auto& comp : detail::components(m, x)) {
                if (!find_preimage(m, k, comp))
                    continue;
                Chain a = strategy(k, comp);
                if (m.apply(k, a) != comp)
                    throw ConsistencyError("division strategy returned a non-preimage");
                if (++steps > budget)
                    throw InternalError("representative improvement exceeded its step budget");
                Chain repl = m.apply(done, a).scaled(F, F.neg(1));
                x.add(F, comp, F.neg(1));
                x.add(F, repl);
                res.events.push_back({k, comp, std::move(a), std::move(repl), x});
                traded = true;
                break;
            }
            if (!traded)
                break;
        }
        done.push_back(k);
        res.stages.push_back(x);
    }
    if (!m.apply(done, x).is_zero())
        throw ContractError("input is not a permanent cycle: final representative is not a cycle");
    res.representative = std::move(x);
    return res;
}

// ---------------------------------------------------------------------------
// Text fixtures
//
//   directions=3
//   prime=3                      (optional)
//   cell a grading=(0,0,0)       (optional: aux=(t,w))
//   d1 a = 1*x + 2*y - z

namespace detail {
    inline std::vector<std::int64_t> parse_tuple(const std::string& s, const std::string& line)
    {
        if (s.size() < 2 || s.front() != '(' || s.back() != ')')
            throw ContractError("expected a parenthesised tuple in: " + line);
        std::vector<std::int64_t> out;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ','))
            try {
                out.push_back(std::stoll(item));
            } catch (const std::exception&) {
                throw ContractError("bad integer '" + item + "' in: " + line);
            }
        return out;
    }
}  // namespace detail

inline Multicomplex parse_complex_fixture(std::istream& in, fp_t default_prime = 2)
{
    std::optional<Multicomplex> m;
    fp_t prime = default_prime;
    std::optional<int> directions;
    std::string line;
    static const std::regex cell_re(R"(^cell\s+([A-Za-z_][A-Za-z0-9_]*)\s+grading=(\([^)]*\))(?:\s+aux=(\([^)]*\)))?\s*$)");
    static const std::regex diff_re(R"(^d(\d+)\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$)");
    static const std::regex term_re(R"(\s*([+-])?\s*(?:(\d+)\s*\*\s*)?([A-Za-z_][A-Za-z0-9_]*)\s*)");
    auto require = [&]() -> Multicomplex& {
        if (!directions)
            throw ContractError("fixture must start with directions=k");
        if (!m)
            m.emplace(PrimeField(prime), *directions);
        return *m;
    };
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
        std::smatch sm;
        if (line.rfind("directions=", 0) == 0) {
            directions = std::stoi(line.substr(11));
        } else if (line.rfind("prime=", 0) == 0) {
            if (m)
                throw ContractError("prime= must precede cells");
            prime = static_cast<fp_t>(std::stoul(line.substr(6)));
        } else if (std::regex_match(line, sm, cell_re)) {
            auto g = detail::parse_tuple(sm[2], line);
            std::vector<std::int64_t> aux;
            if (sm[3].matched)
                aux = detail::parse_tuple(sm[3], line);
            require().add_cell(sm[1], std::vector<int>(g.begin(), g.end()), aux);
        } else if (std::regex_match(line, sm, diff_re)) {
            auto& mc = require();
            int dir = std::stoi(sm[1]);
            auto from = mc.find(sm[2]);
            if (!from)
                throw ContractError("unknown cell '" + sm[2].str() + "' in: " + line);
            std::string rhs = sm[3];
            if (rhs.find_first_not_of(" \t") == std::string::npos || rhs == "0")
                continue;
            std::size_t pos = 0;
            bool first_term = true;
            while (pos < rhs.size()) {
                std::smatch tm;
                std::string rest = rhs.substr(pos);
                if (!std::regex_search(rest, tm, term_re, std::regex_constants::match_continuous) ||
                    tm.length(0) == 0)
                    throw ContractError("cannot parse differential: " + line);
                if (!first_term && !tm[1].matched)
                    throw ContractError("missing sign between terms: " + line);
                first_term = false;
                std::int64_t coeff = tm[2].matched ? std::stoll(tm[2]) : 1;
                if (tm[1].matched && tm[1] == "-")
                    coeff = -coeff;
                auto to = mc.find(tm[3]);
                if (!to)
                    throw ContractError("unknown cell '" + tm[3].str() + "' in: " + line);
                mc.add_differential(dir, *from, *to, mc.field().reduce(coeff));
                pos += tm.length(0);
            }
        } else {
            throw ContractError("unrecognised fixture line: " + line);
        }
    }
    return std::move(require());
}

inline Multicomplex parse_complex_fixture(const std::string& text, fp_t default_prime = 2)
{
    std::istringstream is(text);
    return parse_complex_fixture(is, default_prime);
}

inline std::string write_complex_fixture(const Multicomplex& m)
{
    std::ostringstream os;
    auto tuple = [&](const auto& v) {
        os << '(';
        for (std::size_t k = 0; k < v.size(); ++k)
            os << (k ? "," : "") << v[k];
        os << ')';
    };
    os << "directions=" << m.directions() << "\nprime=" << m.field().prime() << '\n';
    for (const auto& c : m.cells()) {
        os << "cell " << c.name << " grading=";
        tuple(c.grading);
        if (!c.aux.empty()) {
            os << " aux=";
            tuple(c.aux);
        }
        os << '\n';
    }
    for (int d = 0; d < m.directions(); ++d)
        for (CellId c = 0; c < m.size(); ++c) {
            const auto& col = m.column(d, c);
            if (col.is_zero())
                continue;
            os << 'd' << d << ' ' << m.cell(c).name << " =";
            bool first = true;
            for (const auto& [t, v] : col.terms()) {
                os << (first ? " " : " + ") << v << '*' << m.cell(t).name;
                first = false;
            }
            os << '\n';
        }
    return os.str();
}

}  // namespace bpn

#endif
