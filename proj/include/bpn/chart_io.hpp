// Serialization of Ext charts: JSON (round-trippable), CSV, plain text and an
// SVG Adams chart (stem horizontal, s vertical).

#ifndef BPN_CHART_IO_HPP
#define BPN_CHART_IO_HPP

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bp_instance.hpp"

namespace bpn {

inline nlohmann::json chart_to_json(const ExtChart& c)
{
    nlohmann::json j;
    j["p"] = c.p;
    j["n"] = c.n;
    j["w_max"] = c.w_max;
    j["s_max"] = c.s_max;
    j["entries"] = nlohmann::json::array();
    for (const auto& [k, d] : c.entries)
        j["entries"].push_back({{"w", k.w}, {"s", k.s}, {"stem", k.stem}, {"dim", d}});
    j["edge_uncertain"] = nlohmann::json::array();
    for (const auto& k : c.edge_uncertain)
        j["edge_uncertain"].push_back({{"w", k.w}, {"s", k.s}, {"stem", k.stem}});
    return j;
}

inline ExtChart chart_from_json(const nlohmann::json& j)
{
    try {
        ExtChart c;
        c.p = j.at("p").get<int>();
        c.n = j.at("n").get<int>();
        c.w_max = j.value("w_max", std::int64_t{0});
        c.s_max = j.value("s_max", 0);
        for (const auto& e : j.at("entries")) {
            auto d = e.at("dim").get<std::int64_t>();
            if (d < 0)
                throw ContractError("chart entry with negative dimension");
            if (d > 0)
                c.entries[{e.at("w").get<std::int64_t>(), e.at("s").get<int>(), e.at("stem").get<std::int64_t>()}] +=
                    static_cast<std::size_t>(d);
        }
        if (j.contains("edge_uncertain"))
            for (const auto& e : j.at("edge_uncertain"))
                c.edge_uncertain.push_back(
                    {e.at("w").get<std::int64_t>(), e.at("s").get<int>(), e.at("stem").get<std::int64_t>()});
        std::sort(c.edge_uncertain.begin(), c.edge_uncertain.end());
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("malformed chart JSON: ") + e.what());
    }
}

inline std::string chart_to_csv(const ExtChart& c)
{
    std::ostringstream os;
    os << "w,s,stem,dim\n";
    for (const auto& [k, d] : c.entries)
        os << k.w << ',' << k.s << ',' << k.stem << ',' << d << '\n';
    return os.str();
}

/// Dimensions summed over weights, keyed by (s, stem).
inline std::map<std::pair<int, std::int64_t>, std::size_t> collapse_weights(const ExtChart& c)
{
    std::map<std::pair<int, std::int64_t>, std::size_t> out;
    for (const auto& [k, d] : c.entries)
        out[{k.s, k.stem}] += d;
    return out;
}

inline std::string chart_to_text(const ExtChart& c)
{
    std::ostringstream os;
    os << "p=" << c.p << " n=" << c.n << " w_max=" << c.w_max << " s_max=" << c.s_max << '\n';
    std::int64_t w = -1;
    for (const auto& [k, d] : c.entries) {
        if (k.w != w) {
            w = k.w;
            os << "weight " << w << '\n';
        }
        os << "  s=" << k.s << " stem=" << k.stem << " dim=" << d << '\n';
    }
    for (const auto& k : c.edge_uncertain)
        os << "edge-uncertain w=" << k.w << " s=" << k.s << " stem=" << k.stem << '\n';
    return os.str();
}

/// A v_i multiplication drawn between two chart spots.
struct ChartLine {
    int i = 0;
    int s = 0;
    std::int64_t stem = 0;
    std::size_t rank = 0;
};

/// Nonzero v_i multiplications on the homology of one weight.
inline std::vector<ChartLine> v_lines(const WeightHomology& wh)
{
    std::vector<ChartLine> out;
    const auto& ctx = wh.complex.context();
    for (const auto& [key, spot] : wh.homology.spots) {
        int s = static_cast<int>(key.degree);
        if (spot.dimension == 0 || s >= wh.complex.s_max())
            continue;
        std::int64_t t = key.preserved[0];
        for (int i = 0; i <= ctx.n(); ++i)
            if (auto r = v_multiplication_rank(wh, i, s, t))
                out.push_back({i, s, t - s, r});
    }
    return out;
}

inline std::string chart_to_svg(const ExtChart& c, const std::vector<ChartLine>& lines = {})
{
    auto spots = collapse_weights(c);
    std::int64_t lo = 0, hi = 0;
    for (const auto& [k, d] : spots) {
        lo = std::min(lo, k.second);
        hi = std::max(hi, k.second);
    }
    const int cell = 14, margin = 30;
    const std::int64_t width = (hi - lo + 1) * cell + 2 * margin;
    const std::int64_t height = (c.s_max + 1) * cell + 2 * margin;
    auto x = [&](std::int64_t stem) { return margin + (stem - lo) * cell + cell / 2; };
    auto y = [&](int s) { return height - margin - s * cell - cell / 2; };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"monospace\" font-size=\"9\">\n";
    os << "<title>Ext chart p=" << c.p << " n=" << c.n << "</title>\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::int64_t st = lo; st <= hi; ++st)
        if (st % 10 == 0)
            os << "<text x=\"" << x(st) - 6 << "\" y=\"" << height - margin / 3 << "\">" << st << "</text>\n";
    for (int s = 0; s <= c.s_max; ++s)
        os << "<text x=\"4\" y=\"" << y(s) + 3 << "\">" << s << "</text>\n";
    for (const auto& l : lines) {
        std::int64_t dx = 2 * ipow(c.p, l.i) - 2;
        os << "<line x1=\"" << x(l.stem) << "\" y1=\"" << y(l.s) << "\" x2=\"" << x(l.stem + dx) << "\" y2=\""
           << y(l.s + 1) << "\" stroke=\"" << colors[l.i % 5] << "\" stroke-width=\"1\"/>\n";
    }
    for (const auto& [k, d] : spots) {
        os << "<circle cx=\"" << x(k.second) << "\" cy=\"" << y(k.first) << "\" r=\"3\" fill=\"black\"/>\n";
        if (d > 1)
            os << "<text x=\"" << x(k.second) + 4 << "\" y=\"" << y(k.first) - 4 << "\">" << d << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace bpn

#endif
