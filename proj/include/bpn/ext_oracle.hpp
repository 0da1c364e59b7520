// Ext_{E_n}(F_p, N) for a finite-dimensional module N over the exterior
// algebra E_n = E(Q_0, ..., Q_n), computed from a minimal free resolution of
// the dual module N^v:  Ext^{s,t}(F_p, N) = Ext^{s,t}(N^v, F_p), whose
// dimension is the number of generators of the s-th free module in degree -t.
//
// Independent of the Koszul-complex path: only the module itself (built from
// the Q_i action) and fp_linalg are shared.

#ifndef BPN_EXT_ORACLE_HPP
#define BPN_EXT_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "fp_linalg.hpp"
#include "milnor.hpp"

namespace bpn {

using SparseVec = std::map<std::size_t, fp_t>;

inline void sparse_axpy(const PrimeField& F, fp_t c, const SparseVec& x, SparseVec& y)
{
    if (c == 0)
        return;
    for (const auto& [k, v] : x) {
        fp_t& slot = y[k];
        slot = F.add(slot, F.mul(c, v));
        if (slot == 0)
            y.erase(k);
    }
}

/// Module over E(Q_0, ..., Q_n). `action[i][b]` is Q_i applied to basis vector b.
struct EnModule {
    PrimeField field{2};
    int n = 0;
    std::vector<std::int64_t> shift;    // Q_i changes the internal degree by shift[i]
    std::vector<std::int64_t> degree;   // per basis vector
    std::vector<std::int64_t> weight;   // per basis vector
    std::vector<std::vector<SparseVec>> action;

    std::size_t dimension() const noexcept { return degree.size(); }
};

/// N = H^*(BP<n>)[w]: the duals m* of the weight-w monomials, m* in degree
/// -deg(m), with Q_i from q_action.
inline EnModule module_from_weight(const Context& ctx, std::int64_t w)
{
    auto basis = enumerate_basis(ctx, w);
    std::map<Monomial, std::size_t> index;
    for (std::size_t b = 0; b < basis.size(); ++b)
        index.emplace(basis[b], b);
    EnModule mod;
    mod.field = ctx.field();
    mod.n = ctx.n();
    for (int i = 0; i <= ctx.n(); ++i)
        mod.shift.push_back(-(2 * ctx.pow(i) - 1));
    for (const auto& m : basis) {
        mod.degree.push_back(-degree(ctx, m));
        mod.weight.push_back(w);
    }
    mod.action.assign(ctx.n() + 1, std::vector<SparseVec>(basis.size()));
    for (int i = 0; i <= ctx.n(); ++i)
        for (std::size_t b = 0; b < basis.size(); ++b) {
            auto img = q_action(ctx, i, CohomElement(basis[b]));
            for (const auto& [m, c] : img.terms())
                mod.action[i][b][index.at(m)] = c;
        }
    return mod;
}

/// The F_p-dual module: transposed action on negated degrees, so each Q_i
/// keeps its degree.
inline EnModule dual_module(const EnModule& N)
{
    EnModule D;
    D.field = N.field;
    D.n = N.n;
    D.shift = N.shift;
    for (auto d : N.degree)
        D.degree.push_back(-d);
    D.weight = N.weight;
    D.action.assign(N.n + 1, std::vector<SparseVec>(N.dimension()));
    for (int i = 0; i <= N.n; ++i)
        for (std::size_t b = 0; b < N.dimension(); ++b)
            for (const auto& [t, c] : N.action[i][b])
                D.action[i][t][b] = c;
    return D;
}

struct FreeStage {
    std::vector<std::int64_t> generator_degrees;
    /// Image of each generator in the previous free module, as coordinates in
    /// its basis (generator g, subset S) -> g * 2^(n+1) + S. Empty at stage 0.
    std::vector<SparseVec> differential;
};

struct Resolution {
    PrimeField field{2};
    int n = 0;
    std::vector<std::int64_t> shift;  // degree of Q_i on the resolved module
    std::vector<FreeStage> stages;

    std::size_t subsets() const noexcept { return std::size_t{1} << (n + 1); }

    /// Q_i on the free basis element (g, S): zero when i is in S, otherwise
    /// (-1)^{#{s in S : s < i}} (g, S u {i}).
    SparseVec act(int i, std::size_t basis_index) const
    {
        SparseVec out;
        std::size_t S = basis_index % subsets();
        if (S & (std::size_t{1} << i))
            return out;
        int below = __builtin_popcountll(S & ((std::size_t{1} << i) - 1));
        out[basis_index + (std::size_t{1} << i)] = field.sign(below);
        return out;
    }

    /// Number of stage-s generators in each internal degree.
    std::map<std::int64_t, std::size_t> ext_dims(int s) const
    {
        std::map<std::int64_t, std::size_t> out;
        for (auto d : stages.at(s).generator_degrees)
            ++out[d];
        return out;
    }
};

namespace detail {
    inline std::int64_t subset_shift(const std::vector<std::int64_t>& shift, std::size_t S)
    {
        std::int64_t d = 0;
        for (std::size_t i = 0; i < shift.size(); ++i)
            if (S & (std::size_t{1} << i))
                d += shift[i];
        return d;
    }
}  // namespace detail

/// Minimal free resolution of `mod` through stage s_max. All Q_i must move
/// degrees the same way so that generators can be chosen degree by degree.
inline Resolution minimal_resolution(const EnModule& mod, int s_max)
{
    const auto& F = mod.field;
    const int n = mod.n;
    const std::size_t nsub = std::size_t{1} << (n + 1);
    if (static_cast<int>(mod.shift.size()) != n + 1)
        throw ContractError("minimal_resolution: expected one shift per Q_i");
    const bool lowering = mod.shift.front() < 0;
    for (auto s : mod.shift)
        if (s == 0 || (s < 0) != lowering)
            throw ContractError("minimal_resolution: Q_i degrees must be nonzero and of one sign");
    Resolution res{F, n, mod.shift, {}};

    // Current module to cover, in sparse form.
    std::vector<std::int64_t> deg = mod.degree;
    std::vector<std::vector<SparseVec>> act = mod.action;
    // For stages >= 1 the current module is a kernel; its basis vectors in
    // the coordinates of the previous free module.
    std::vector<SparseVec> embed;

    for (int s = 0; s <= s_max; ++s) {
        const std::size_t dim = deg.size();
        std::map<std::int64_t, std::vector<std::size_t>> by_deg;
        for (std::size_t b = 0; b < dim; ++b)
            by_deg[deg[b]].push_back(b);
        std::vector<std::int64_t> order;
        for (const auto& [d, idx] : by_deg)
            order.push_back(d);
        if (lowering)
            std::reverse(order.begin(), order.end());

        // Minimal generators: basis vectors completing the decomposables,
        // starting from the end the Q_i move away from.
        FreeStage stage;
        std::vector<std::size_t> gens;
        for (std::int64_t d : order) {
            const auto& idx = by_deg.at(d);
            std::map<std::size_t, std::size_t> local;
            for (std::size_t k = 0; k < idx.size(); ++k)
                local[idx[k]] = k;
            EchelonBasis span(F, idx.size());
            for (int i = 0; i <= n; ++i) {
                auto src = by_deg.find(d - mod.shift[i]);
                if (src == by_deg.end())
                    continue;
                for (std::size_t b : src->second) {
                    FpVector v(idx.size(), 0);
                    for (const auto& [t, c] : act[i][b])
                        v[local.at(t)] = c;
                    span.add(std::move(v));
                }
            }
            for (std::size_t k = 0; k < idx.size(); ++k) {
                FpVector e(idx.size(), 0);
                e[k] = 1;
                if (span.add(std::move(e))) {
                    gens.push_back(idx[k]);
                    stage.generator_degrees.push_back(d);
                    if (s > 0)
                        stage.differential.push_back(embed[idx[k]]);
                }
            }
        }
        res.stages.push_back(std::move(stage));
        if (s == s_max)
            break;

        // Free module on `gens` and the cover map phi: (g, S) -> Q_S gens[g].
        const std::size_t fdim = gens.size() * nsub;
        std::vector<std::int64_t> fdeg(fdim);
        std::vector<SparseVec> phi(fdim);
        for (std::size_t g = 0; g < gens.size(); ++g)
            for (std::size_t S = 0; S < nsub; ++S) {
                fdeg[g * nsub + S] = deg[gens[g]] + detail::subset_shift(mod.shift, S);
                SparseVec v{{gens[g], 1}};
                for (int i = n; i >= 0; --i)  // Q_{s1}(Q_{s2}(...Q_{sk} x))
                    if (S & (std::size_t{1} << i)) {
                        SparseVec w;
                        for (const auto& [b, c] : v)
                            sparse_axpy(F, c, act[i][b], w);
                        v = std::move(w);
                    }
                phi[g * nsub + S] = std::move(v);
            }

        // Kernel per degree; with kernel_basis's normal form the coordinates
        // of a kernel vector are its entries at the free columns.
        std::map<std::int64_t, std::vector<std::size_t>> fby_deg;
        for (std::size_t b = 0; b < fdim; ++b)
            fby_deg[fdeg[b]].push_back(b);
        std::vector<std::int64_t> kdeg;
        std::vector<SparseVec> kvec;
        struct DegreeKernel {
            std::vector<std::size_t> cols;      // free-module indices in this degree
            std::vector<std::size_t> free_pos;  // positions (in cols) of the free columns
            std::size_t first = 0;              // index of the first kernel vector
        };
        std::map<std::int64_t, DegreeKernel> kernels;
        for (const auto& [d, cols] : fby_deg) {
            auto rows_it = by_deg.find(d);
            std::size_t nrows = rows_it == by_deg.end() ? 0 : rows_it->second.size();
            std::map<std::size_t, std::size_t> local;
            if (nrows)
                for (std::size_t k = 0; k < nrows; ++k)
                    local[rows_it->second[k]] = k;
            FpMatrix A(F, nrows, cols.size());
            for (std::size_t k = 0; k < cols.size(); ++k)
                for (const auto& [t, c] : phi[cols[k]])
                    A(local.at(t), k) = c;
            auto [R, pivots] = rref(A);
            std::vector<bool> is_pivot(cols.size(), false);
            for (auto c : pivots)
                is_pivot[c] = true;
            DegreeKernel dk{cols, {}, kvec.size()};
            for (std::size_t f = 0; f < cols.size(); ++f) {
                if (is_pivot[f])
                    continue;
                dk.free_pos.push_back(f);
                SparseVec v{{cols[f], 1}};
                for (std::size_t k = 0; k < pivots.size(); ++k)
                    if (R(k, f))
                        v[cols[pivots[k]]] = F.neg(R(k, f));
                kvec.push_back(std::move(v));
                kdeg.push_back(d);
            }
            kernels.emplace(d, std::move(dk));
        }

        // Action on the kernel.
        std::vector<std::vector<SparseVec>> kact(n + 1, std::vector<SparseVec>(kvec.size()));
        for (int i = 0; i <= n; ++i)
            for (std::size_t b = 0; b < kvec.size(); ++b) {
                SparseVec img;
                for (const auto& [fb, c] : kvec[b])
                    sparse_axpy(F, c, res.act(i, fb), img);
                if (img.empty())
                    continue;
                const auto& dk = kernels.at(kdeg[b] + mod.shift[i]);
                for (std::size_t q = 0; q < dk.free_pos.size(); ++q) {
                    auto it = img.find(dk.cols[dk.free_pos[q]]);
                    if (it != img.end())
                        kact[i][b][dk.first + q] = it->second;
                }
            }
        deg = std::move(kdeg);
        act = std::move(kact);
        embed = std::move(kvec);
    }
    return res;
}

/// Ext^{s,t}_{E_n}(F_p, N) dimensions for s <= s_max, keyed by (s, t). N is
/// homologically graded: Q_i has degree -(2p^i - 1), and v_i sits in
/// (s, t) = (1, 2p^i - 1).
inline std::map<std::pair<int, std::int64_t>, std::size_t> ext_dimensions(const EnModule& N, int s_max)
{
    auto res = minimal_resolution(dual_module(N), s_max);
    std::map<std::pair<int, std::int64_t>, std::size_t> out;
    for (int s = 0; s <= s_max; ++s)
        for (auto [d, c] : res.ext_dims(s))
            out[{s, -d}] = c;
    return out;
}

}  // namespace bpn

#endif
