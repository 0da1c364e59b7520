// H_*(BP<n>) = P(xib_1, xib_2, ...) (x) E(taub_{n+1}, taub_{n+2}, ...) in the
// conjugate Milnor generators, and the action of the Milnor primitives Q_i on
// its dual.
//
// Degrees are homological: xib_j has degree 2(p^j - 1), taub_j has degree
// 2p^j - 1, and the dual m* sits in degree -deg(m). Both xib_j and taub_j
// carry weight 2p^j.

#ifndef BPN_MILNOR_HPP
#define BPN_MILNOR_HPP

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fp_linalg.hpp"

namespace bpn {

inline std::int64_t ipow(std::int64_t base, int e)
{
    std::int64_t r = 1;
    while (e-- > 0)
        r *= base;
    return r;
}

/// A prime p and a height n >= 0.
class Context {
public:
    Context(fp_t p, int n) : field_(p), n_(n)
    {
        if (n < 0)
            throw ContractError("height must be non-negative");
    }

    const PrimeField& field() const noexcept { return field_; }
    int p() const noexcept { return static_cast<int>(field_.prime()); }
    int n() const noexcept { return n_; }
    std::int64_t pow(int e) const { return ipow(p(), e); }

    void check_index(int i) const
    {
        if (i < 0 || i > n_)
            throw ContractError("Milnor index " + std::to_string(i) + " outside [0, " +
                                std::to_string(n_) + "]");
    }

private:
    PrimeField field_;
    int n_;
};

/// xib^E taub_J. `xi[j-1]` is the exponent of xib_j (no trailing zeros);
/// `tau` is strictly increasing.
struct Monomial {
    std::vector<int> xi;
    std::vector<int> tau;

    Monomial() = default;
    Monomial(std::vector<int> xi_exponents, std::vector<int> tau_indices)
        : xi(std::move(xi_exponents)), tau(std::move(tau_indices))
    {
        trim();
        for (std::size_t k = 0; k < xi.size(); ++k)
            if (xi[k] < 0)
                throw ContractError("negative xi exponent");
        for (std::size_t k = 0; k < tau.size(); ++k)
            if (tau[k] < 1 || (k > 0 && tau[k] <= tau[k - 1]))
                throw ContractError("tau indices must be positive and strictly increasing");
    }

    bool is_unit() const noexcept { return xi.empty() && tau.empty(); }
    int xi_exponent(int j) const noexcept
    {
        return j >= 1 && j <= static_cast<int>(xi.size()) ? xi[j - 1] : 0;
    }
    bool has_tau(int j) const noexcept { return std::binary_search(tau.begin(), tau.end(), j); }
    int tau_count() const noexcept { return static_cast<int>(tau.size()); }

    void set_xi(int j, int e)
    {
        if (static_cast<int>(xi.size()) < j)
            xi.resize(j, 0);
        xi[j - 1] = e;
        trim();
    }

    void trim()
    {
        while (!xi.empty() && xi.back() == 0)
            xi.pop_back();
    }

    friend bool operator==(const Monomial&, const Monomial&) = default;

    /// Canonical order: taub factors compared from the largest index down,
    /// then xib exponents from the largest index down.
    friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b)
    {
        int jt = std::max(a.tau.empty() ? 0 : a.tau.back(), b.tau.empty() ? 0 : b.tau.back());
        for (int j = jt; j >= 1; --j) {
            bool ta = a.has_tau(j), tb = b.has_tau(j);
            if (ta != tb)
                return ta ? std::strong_ordering::greater : std::strong_ordering::less;
        }
        int jx = static_cast<int>(std::max(a.xi.size(), b.xi.size()));
        for (int j = jx; j >= 1; --j) {
            int ea = a.xi_exponent(j), eb = b.xi_exponent(j);
            if (ea != eb)
                return ea <=> eb;
        }
        return std::strong_ordering::equal;
    }
};

inline std::int64_t degree(const Context& ctx, const Monomial& m)
{
    std::int64_t d = 0;
    for (std::size_t k = 0; k < m.xi.size(); ++k)
        d += m.xi[k] * 2 * (ctx.pow(static_cast<int>(k) + 1) - 1);
    for (int j : m.tau)
        d += 2 * ctx.pow(j) - 1;
    return d;
}

inline std::int64_t weight(const Context& ctx, const Monomial& m)
{
    std::int64_t w = 0;
    for (std::size_t k = 0; k < m.xi.size(); ++k)
        w += m.xi[k] * 2 * ctx.pow(static_cast<int>(k) + 1);
    for (int j : m.tau)
        w += 2 * ctx.pow(j);
    return w;
}

/// True when m lies in H_*(BP<n>), i.e. every tau index is at least n+1.
inline bool in_module(const Context& ctx, const Monomial& m)
{
    return m.tau.empty() || m.tau.front() >= ctx.n() + 1;
}

// ---------------------------------------------------------------------------
// Text and JSON forms

inline std::string to_string(const Monomial& m)
{
    if (m.is_unit())
        return "1";
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first)
            os << ' ';
        first = false;
    };
    for (std::size_t k = 0; k < m.xi.size(); ++k) {
        if (m.xi[k] == 0)
            continue;
        sep();
        os << "xi" << k + 1;
        if (m.xi[k] != 1)
            os << '^' << m.xi[k];
    }
    for (int j : m.tau) {
        sep();
        os << "tau" << j;
    }
    return os.str();
}

namespace detail {
    inline std::string lower(std::string_view s)
    {
        std::string out(s);
        for (auto& c : out)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    }

    inline int parse_int(const std::string& s, const std::string& ctx)
    {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            throw ContractError("malformed integer in '" + ctx + "'");
        return std::stoi(s);
    }
}  // namespace detail

/// Parses `xi1^18 xi2^3 tau3`. Empty input (or `1`) is the unit monomial.
inline Monomial parse_monomial(std::string_view text)
{
    std::istringstream is{detail::lower(text)};
    std::string tok;
    Monomial m;
    std::vector<int> taus;
    while (is >> tok) {
        if (tok == "1")
            continue;
        std::string base = tok, exp = "1";
        if (auto caret = tok.find('^'); caret != std::string::npos) {
            base = tok.substr(0, caret);
            exp = tok.substr(caret + 1);
        }
        int e = detail::parse_int(exp, tok);
        if (base.rfind("xi", 0) == 0) {
            int j = detail::parse_int(base.substr(2), tok);
            if (j < 1)
                throw ContractError("xi index must be >= 1 in '" + tok + "'");
            m.set_xi(j, m.xi_exponent(j) + e);
        } else if (base.rfind("tau", 0) == 0) {
            int j = detail::parse_int(base.substr(3), tok);
            if (e != 1 || j < 0)
                throw ContractError("tau factors are exterior: '" + tok + "'");
            if (std::find(taus.begin(), taus.end(), j) != taus.end())
                throw ContractError("repeated tau factor '" + tok + "'");
            taus.push_back(j);
        } else {
            throw ContractError("unknown factor '" + tok + "'");
        }
    }
    std::sort(taus.begin(), taus.end());
    return Monomial(m.xi, taus);
}

/// `{"xi": {"1": 18, "2": 3}, "tau": [3]}`
inline std::string to_json_string(const Monomial& m)
{
    std::ostringstream os;
    os << "{\"xi\": {";
    bool first = true;
    for (std::size_t k = 0; k < m.xi.size(); ++k) {
        if (m.xi[k] == 0)
            continue;
        if (!first)
            os << ", ";
        first = false;
        os << '"' << k + 1 << "\": " << m.xi[k];
    }
    os << "}, \"tau\": [";
    for (std::size_t k = 0; k < m.tau.size(); ++k)
        os << (k ? ", " : "") << m.tau[k];
    os << "]}";
    return os.str();
}

inline Monomial monomial_from_json(const nlohmann::json& j)
{
    Monomial m;
    if (j.contains("xi"))
        for (const auto& [key, val] : j.at("xi").items())
            m.set_xi(std::stoi(key), val.get<int>());
    std::vector<int> taus = j.value("tau", std::vector<int>{});
    std::sort(taus.begin(), taus.end());
    return Monomial(m.xi, taus);
}

// ---------------------------------------------------------------------------
// Basis enumeration

/// All monomials of H_*(BP<n>) of the given weight, in ascending canonical order.
inline std::vector<Monomial> enumerate_basis(const Context& ctx, std::int64_t w)
{
    std::vector<Monomial> out;
    if (w < 0 || w % (2 * ctx.p()) != 0)
        return out;
    const std::int64_t units = w / (2 * ctx.p());  // weight 2p^j = p^(j-1) units
    int jmax = 1;
    while (ctx.pow(jmax) <= units)
        ++jmax;
    // indices 1..jmax have unit size p^(j-1) <= units

    std::vector<int> taus;
    std::vector<int> xi(jmax, 0);

    // Distribute `left` units among xi_1..xi_j.
    auto fill_xi = [&](auto&& self, int j, std::int64_t left) -> void {
        if (j == 1) {
            xi[0] = static_cast<int>(left);
            out.emplace_back(xi, taus);
            return;
        }
        std::int64_t unit = ctx.pow(j - 1);
        for (std::int64_t e = 0; e * unit <= left; ++e) {
            xi[j - 1] = static_cast<int>(e);
            self(self, j - 1, left - e * unit);
        }
        xi[j - 1] = 0;
    };
    auto choose_tau = [&](auto&& self, int j, std::int64_t left) -> void {
        if (j > jmax) {
            fill_xi(fill_xi, jmax, left);
            return;
        }
        self(self, j + 1, left);
        std::int64_t unit = ctx.pow(j - 1);
        if (unit <= left) {
            taus.push_back(j);
            self(self, j + 1, left - unit);
            taus.pop_back();
        }
    };
    choose_tau(choose_tau, ctx.n() + 1, units);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Elements of H^*(BP<n>) and the Q_i action

/// F_p-linear combination of dual monomials m*. Zero coefficients are never stored.
class CohomElement {
public:
    using Terms = std::map<Monomial, fp_t>;

    CohomElement() = default;
    CohomElement(const Monomial& m, fp_t c = 1)
    {
        if (c)
            terms_.emplace(m, c);
    }

    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    std::size_t size() const noexcept { return terms_.size(); }

    fp_t coefficient(const Monomial& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0 : it->second;
    }

    void add_term(const PrimeField& F, const Monomial& m, fp_t c)
    {
        if (c == 0)
            return;
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted) {
            it->second = F.add(it->second, c);
            if (it->second == 0)
                terms_.erase(it);
        }
    }

    void add(const PrimeField& F, const CohomElement& o, fp_t scale = 1)
    {
        for (const auto& [m, c] : o.terms_)
            add_term(F, m, F.mul(c, scale));
    }

    /// Largest monomial in the canonical order.
    const std::pair<const Monomial, fp_t>& leading() const
    {
        if (terms_.empty())
            throw ContractError("leading term of zero element");
        return *terms_.rbegin();
    }

    friend bool operator==(const CohomElement&, const CohomElement&) = default;

private:
    Terms terms_;
};

inline std::string to_string(const CohomElement& x, const PrimeField& F)
{
    if (x.is_zero())
        return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = x.terms().rbegin(); it != x.terms().rend(); ++it) {
        auto [m, c] = *it;
        bool negative = c == F.prime() - 1 && F.prime() != 2;
        if (!first)
            os << (negative ? " - " : " + ");
        else if (negative)
            os << '-';
        first = false;
        if (!negative && c != 1)
            os << c << '*';
        os << '(' << to_string(m) << ")*";
    }
    return os.str();
}

/// Q_i on a dual monomial by the replacement rule: every xib_j^{p^i} factor
/// is traded for taub_{j+i}. The sign is (-1)^(#tau(m) + #tau(m) below j+i),
/// which is what the coaction pairing produces (see q_action_by_pairing).
inline CohomElement q_action(const Context& ctx, int i, const CohomElement& x)
{
    ctx.check_index(i);
    const auto& F = ctx.field();
    const std::int64_t pi = ctx.pow(i);
    CohomElement out;
    for (const auto& [m, c] : x.terms()) {
        for (int j = 1; j <= static_cast<int>(m.xi.size()); ++j) {
            if (m.xi_exponent(j) < pi)
                continue;
            int target = j + i;
            if (target <= ctx.n() || m.has_tau(target))
                continue;
            Monomial r = m;
            r.set_xi(j, m.xi_exponent(j) - static_cast<int>(pi));
            auto pos = std::lower_bound(r.tau.begin(), r.tau.end(), target);
            int below = static_cast<int>(pos - r.tau.begin());
            r.tau.insert(pos, target);
            out.add_term(F, r, F.mul(c, F.sign(m.tau_count() + below)));
        }
    }
    return out;
}

/// Terms c * m' of psi_L(m) whose left tensor factor is the generator taub_i.
/// Computed from psi(taub_k) = 1 (x) taub_k + sum_l taub_l (x) xib_{k-l}^{p^l},
/// psi(xib_k) = sum_l xib_l (x) xib_{k-l}^{p^l}, extended multiplicatively with
/// the Koszul sign (a (x) x)(b (x) y) = (-1)^{|x||b|} ab (x) xy. Only a single
/// taub factor of m can supply taub_i on the left; every other factor supplies
/// its 1 (x) (-) term.
inline std::map<Monomial, fp_t> coaction_tau_component(const Context& ctx, int i, const Monomial& m)
{
    ctx.check_index(i);
    const auto& F = ctx.field();
    std::map<Monomial, fp_t> out;
    for (int l = 0; l < m.tau_count(); ++l) {
        int k = m.tau[l];
        if (k < i)
            continue;
        Monomial r = m;
        r.tau.erase(r.tau.begin() + l);
        if (k > i)
            r.set_xi(k - i, r.xi_exponent(k - i) + static_cast<int>(ctx.pow(i)));
        // The xi part and the l earlier taub factors sit to the right of the
        // moved taub_i: sign (-1)^l.
        fp_t c = F.sign(l);
        auto [it, inserted] = out.emplace(r, c);
        if (!inserted) {
            it->second = F.add(it->second, c);
            if (it->second == 0)
                out.erase(it);
        }
    }
    return out;
}

/// Q_i from the dual pairing (alpha . f)(x) = sum (-1)^{|f||a|} <alpha, a> <f, x'>
/// over psi_L(x) = sum a (x) x', with <Q_i, taub_i> = 1. Enumerates every basis
/// monomial that could pair nontrivially, so it is slow but independent of
/// the replacement rule.
inline CohomElement q_action_by_pairing(const Context& ctx, int i, const CohomElement& f)
{
    ctx.check_index(i);
    const auto& F = ctx.field();
    CohomElement out;
    std::map<std::int64_t, std::vector<Monomial>> basis_cache;
    for (const auto& [mf, c] : f.terms()) {
        std::int64_t w = weight(ctx, mf);
        auto [it, fresh] = basis_cache.try_emplace(w);
        if (fresh)
            it->second = enumerate_basis(ctx, w);
        const std::int64_t target_deg = degree(ctx, mf) + 2 * ctx.pow(i) - 1;
        const fp_t koszul = F.sign(mf.tau_count());  // |f| * |taub_i| parity
        for (const auto& x : it->second) {
            if (degree(ctx, x) != target_deg)
                continue;
            auto comp = coaction_tau_component(ctx, i, x);
            auto hit = comp.find(mf);
            if (hit != comp.end())
                out.add_term(F, x, F.mul(c, F.mul(koszul, hit->second)));
        }
    }
    return out;
}

/// y with Q_i y = x. Requires Q_i x = 0 and a taub factor in every monomial
/// of x. Greedy: take the leading monomial x1 with largest factor taub_a,
/// emit x1 / taub_a * xib_{a-i}^{p^i}, subtract its image and repeat.
inline CohomElement divide(const Context& ctx, int i, const CohomElement& x,
                           std::size_t max_iterations = 1'000'000)
{
    ctx.check_index(i);
    const auto& F = ctx.field();
    if (x.is_zero())
        return {};
    for (const auto& [m, c] : x.terms())
        if (m.tau.empty())
            throw ContractError("divide: monomial " + to_string(m) + " has no tau factor");
    if (!q_action(ctx, i, x).is_zero())
        throw ContractError("divide: element is not a Q_" + std::to_string(i) + "-cycle");

    CohomElement y;
    CohomElement rest = x;
    std::size_t steps = 0;
    while (!rest.is_zero()) {
        if (++steps > max_iterations)
            throw InternalError("divide: iteration budget exhausted");
        const auto [lead, lc] = rest.leading();
        if (lead.tau.empty())
            throw InternalError("divide: remainder lost its tau factor");
        int a = lead.tau.back();
        Monomial y1 = lead;
        y1.tau.pop_back();
        y1.set_xi(a - i, y1.xi_exponent(a - i) + static_cast<int>(ctx.pow(i)));
        CohomElement img = q_action(ctx, i, CohomElement(y1));
        fp_t hit = img.coefficient(lead);
        if (hit == 0)
            throw InternalError("divide: leading term not reproduced by " + to_string(y1));
        fp_t scale = F.mul(lc, F.inv(hit));
        y.add_term(F, y1, scale);
        rest.add(F, img, F.neg(scale));
        if (!rest.is_zero() && !(rest.leading().first < lead))
            throw InternalError("divide: leading monomial did not decrease");
    }
    return y;
}

}  // namespace bpn

#endif
