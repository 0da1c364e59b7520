// bpn: command-line front end for the BP<n> Koszul/Ext engine.
//
// Exit codes: 0 success, 1 violation (failed check or oracle diff), 2 configuration error.

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpn/bp_instance.hpp"
#include "bpn/chart_io.hpp"
#include "bpn/ext_oracle.hpp"

using namespace bpn;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int prime = 3;
    int height = 2;
    std::optional<std::int64_t> w_max;
    std::optional<int> s_max;
    std::string format = "text";
    std::string out;
    std::string complex_file;
    std::string start;
    std::string order;
    std::uint64_t seed = 1;
    bool any_prime = false;
    std::size_t max_cells = 20'000'000;
};

struct Window {
    std::int64_t w_max;
    int s_max;
};

Context make_context(const RunConfig& cfg)
{
    if (!cfg.any_prime && cfg.prime != 2 && cfg.prime != 3 && cfg.prime != 5 && cfg.prime != 7)
        throw ConfigError("prime " + std::to_string(cfg.prime) + " is outside {2,3,5,7}; pass --any-prime to allow it");
    if (cfg.height < 0)
        throw ConfigError("height must be non-negative");
    try {
        return Context(static_cast<fp_t>(cfg.prime), cfg.height);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
}

Window make_window(const Context& ctx, const RunConfig& cfg)
{
    std::int64_t w = cfg.w_max ? *cfg.w_max : 2 * ctx.pow(ctx.n() + 2);
    if (w < 0)
        throw ConfigError("--max-weight must be non-negative");
    w -= w % (2 * ctx.p());
    int s = cfg.s_max ? *cfg.s_max : static_cast<int>(2 + w / (2 * ctx.p() - 2));
    if (s < 0)
        throw ConfigError("--max-s must be non-negative");
    return {w, s};
}

void check_budget(const Context& ctx, const Window& win, const RunConfig& cfg)
{
    std::size_t cells = estimate_cells(ctx, win.w_max, win.s_max);
    if (cells <= cfg.max_cells)
        return;
    int s = win.s_max;
    while (s > 0 && estimate_cells(ctx, win.w_max, s) > cfg.max_cells)
        --s;
    std::ostringstream os;
    os << "window w<=" << win.w_max << " s<=" << win.s_max << " needs about " << cells << " cells, over the budget of "
       << cfg.max_cells << "; try --max-s " << s << " or raise --max-cells";
    throw ConfigError(os.str());
}

void require_format(const RunConfig& cfg, std::initializer_list<const char*> allowed)
{
    for (const char* f : allowed)
        if (cfg.format == f)
            return;
    throw ConfigError("format '" + cfg.format + "' is not available for this command");
}

void emit(const RunConfig& cfg, const std::string& text)
{
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write " + cfg.out);
    f << text;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_basis(const RunConfig& cfg)
{
    require_format(cfg, {"text", "json", "csv"});
    auto ctx = make_context(cfg);
    auto win = make_window(ctx, cfg);
    std::ostringstream os;
    json rows = json::array();
    if (cfg.format == "csv")
        os << "w,monomial,deg,stem\n";
    for (std::int64_t w = 0; w <= win.w_max; w += 2 * ctx.p())
        for (const auto& m : enumerate_basis(ctx, w)) {
            std::int64_t d = degree(ctx, m);
            std::string name = m.xi.empty() && m.tau.empty() ? "1" : to_string(m);
            if (cfg.format == "json")
                rows.push_back({{"w", w}, {"monomial", json::parse(to_json_string(m))}, {"text", name},
                                {"deg", d}, {"stem", -d}});
            else if (cfg.format == "csv")
                os << w << ',' << name << ',' << d << ',' << -d << '\n';
            else
                os << "w=" << w << "  " << name << "  deg=" << d << "  stem=" << -d << '\n';
        }
    emit(cfg, cfg.format == "json" ? json_text(rows) : os.str());
    return 0;
}

int cmd_chart(const RunConfig& cfg)
{
    require_format(cfg, {"text", "json", "csv", "svg"});
    auto ctx = make_context(cfg);
    auto win = make_window(ctx, cfg);
    check_budget(ctx, win, cfg);
    ExtChart chart{ctx.p(), ctx.n(), win.w_max, win.s_max, {}, {}};
    std::vector<ChartLine> lines;
    for (std::int64_t w = 0; w <= win.w_max; w += 2 * ctx.p()) {
        auto wh = weight_homology(ctx, w, win.s_max);
        auto part = chart_from_homology(wh);
        part.w_max = win.w_max;
        chart.merge(part);
        if (cfg.format == "svg")
            for (const auto& l : v_lines(wh))
                lines.push_back(l);
    }
    if (cfg.format == "json")
        emit(cfg, json_text(chart_to_json(chart)));
    else if (cfg.format == "csv")
        emit(cfg, chart_to_csv(chart));
    else if (cfg.format == "svg")
        emit(cfg, chart_to_svg(chart, lines));
    else
        emit(cfg, chart_to_text(chart));
    return 0;
}

json report_json(const VerifyReport& r)
{
    json v = json::array();
    for (const auto& x : r.violations)
        v.push_back({{"w", x.at.w}, {"s", x.at.s}, {"stem", x.at.stem}, {"dim", x.dimension},
                     {"representatives", x.representatives}});
    return {{"check", r.check}, {"pass", r.pass}, {"violations", v}, {"notes", r.notes}};
}

std::string report_text(const VerifyReport& r)
{
    std::ostringstream os;
    os << (r.pass ? "PASS " : "FAIL ") << r.check << '\n';
    for (const auto& n : r.notes)
        os << "  " << n << '\n';
    for (const auto& x : r.violations) {
        os << "  violation w=" << x.at.w << " s=" << x.at.s << " stem=" << x.at.stem << " dim=" << x.dimension << '\n';
        for (const auto& rep : x.representatives)
            os << "    " << rep << '\n';
    }
    return os.str();
}

// Seeded spot check of the Q-action rule against the coaction pairing.
VerifyReport q_action_sample(const Context& ctx, const Window& win, std::uint64_t seed)
{
    VerifyReport rep{"q-action-sample", true, {}, {}};
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::int64_t, Monomial>> pool;
    for (std::int64_t w = 0; w <= win.w_max; w += 2 * ctx.p())
        for (const auto& m : enumerate_basis(ctx, w))
            pool.push_back({w, m});
    const std::size_t samples = std::min<std::size_t>(100, pool.size());
    for (std::size_t k = 0; k < samples; ++k) {
        const auto& [w, m] = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        for (int i = 0; i <= ctx.n(); ++i)
            if (!(q_action(ctx, i, CohomElement(m)) == q_action_by_pairing(ctx, i, CohomElement(m)))) {
                rep.pass = false;
                rep.violations.push_back({{w, 0, -degree(ctx, m)}, 1, {"Q_" + std::to_string(i) + " on " + to_string(m)}});
            }
    }
    rep.notes.push_back("seed " + std::to_string(seed) + ", " + std::to_string(samples) + " monomials");
    return rep;
}

int verify_complex_file(const RunConfig& cfg)
{
    std::ifstream in(cfg.complex_file);
    if (!in)
        throw ConfigError("cannot read " + cfg.complex_file);
    Multicomplex m = [&] {
        try {
            return parse_complex_fixture(in, static_cast<fp_t>(cfg.prime));
        } catch (const ContractError& e) {
            throw ConfigError(e.what());
        }
    }();
    auto issues = validate(m);
    if (cfg.format == "json") {
        emit(cfg, json_text({{"check", "complex-file"}, {"pass", issues.empty()}, {"cells", m.size()},
                             {"issues", issues}}));
    } else {
        std::ostringstream os;
        os << (issues.empty() ? "PASS" : "FAIL") << " complex-file " << cfg.complex_file << " (" << m.size()
           << " cells)\n";
        for (const auto& s : issues)
            os << "  " << s << '\n';
        emit(cfg, os.str());
    }
    return issues.empty() ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg)
{
    require_format(cfg, {"text", "json"});
    if (!cfg.complex_file.empty())
        return verify_complex_file(cfg);
    auto ctx = make_context(cfg);
    auto win = make_window(ctx, cfg);
    check_budget(ctx, win, cfg);

    std::vector<VerifyReport> reports{verify_stem_minus_one(ctx, win.w_max, win.s_max),
                                      verify_odd_stem_bound(ctx, win.w_max, win.s_max),
                                      q_action_sample(ctx, win, cfg.seed)};
    std::size_t tower_entries = 0, inconclusive = 0;
    json towers = json::array();
    for (std::int64_t w = 0; w <= win.w_max; w += 2 * ctx.p()) {
        auto t = verify_no_odd_towers(ctx, w, win.s_max);
        tower_entries += t.entries.size();
        inconclusive += t.inconclusive;
        for (const auto& e : t.entries)
            if (!e.killed_after)
                towers.push_back({{"w", e.at.w}, {"s", e.at.s}, {"stem", e.at.stem}, {"v", e.direction}});
    }
    bool pass = true;
    for (const auto& r : reports)
        pass = pass && r.pass;

    if (cfg.format == "json") {
        json j = {{"p", ctx.p()}, {"n", ctx.n()}, {"w_max", win.w_max}, {"s_max", win.s_max}, {"pass", pass}};
        j["checks"] = json::array();
        for (const auto& r : reports)
            j["checks"].push_back(report_json(r));
        j["towers"] = {{"entries", tower_entries}, {"inconclusive", inconclusive}, {"alive_at_edge", towers}};
        emit(cfg, json_text(j));
    } else {
        std::ostringstream os;
        os << "p=" << ctx.p() << " n=" << ctx.n() << " w_max=" << win.w_max << " s_max=" << win.s_max << '\n';
        for (const auto& r : reports)
            os << report_text(r);
        os << "INFO towers: " << tower_entries << " (class, v_i) pairs, " << inconclusive
           << " inconclusive at the truncation edge\n";
        emit(cfg, os.str());
    }
    return pass ? 0 : 1;
}

DirectionSet parse_order(const std::string& text, int n)
{
    DirectionSet out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            int k = std::stoi(item, &used);
            if (used != item.size() || k < 0 || k > n)
                throw std::invalid_argument(item);
            out.push_back(k);
        } catch (const std::exception&) {
            throw ConfigError("bad --order entry '" + item + "'");
        }
    }
    return out;
}

int cmd_trace(const RunConfig& cfg)
{
    require_format(cfg, {"text", "json"});
    auto ctx = make_context(cfg);
    const auto& F = ctx.field();
    KoszulTrace tr;
    try {
        auto start = parse_koszul(ctx, cfg.start);
        tr = cfg.order.empty() ? run_paper_trace(ctx, start)
                               : trace_representative(ctx, start, parse_order(cfg.order, ctx.n()));
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    if (cfg.format == "json") {
        json events = json::array();
        for (const auto& e : tr.events)
            events.push_back({{"direction", e.direction}, {"component", to_string(e.component, F)},
                              {"witness", to_string(e.witness, F)}, {"replacement", to_string(e.replacement, F)},
                              {"result", to_string(e.result, F)}});
        json stages = json::array();
        for (const auto& s : tr.stages)
            stages.push_back(to_string(s, F));
        emit(cfg, json_text({{"p", ctx.p()}, {"n", ctx.n()}, {"start", to_string(tr.start, F)}, {"events", events},
                             {"stages", stages}, {"representative", to_string(tr.representative, F)}}));
    } else {
        std::ostringstream os;
        os << "start: " << to_string(tr.start, F) << '\n';
        for (const auto& e : tr.events) {
            os << "d" << e.direction << ": " << to_string(e.component, F) << '\n';
            os << "  witness a = " << to_string(e.witness, F) << '\n';
            os << "  -> " << to_string(e.result, F) << '\n';
        }
        os << "representative: " << to_string(tr.representative, F) << '\n';
        emit(cfg, os.str());
    }
    return 0;
}

int cmd_oracle_compare(const RunConfig& cfg)
{
    require_format(cfg, {"text", "json"});
    auto ctx = make_context(cfg);
    auto win = make_window(ctx, cfg);
    check_budget(ctx, win, cfg);
    json diffs = json::array(), edge = json::array();
    std::size_t weights = 0;
    for (std::int64_t w = 0; w <= win.w_max; w += 2 * ctx.p(), ++weights) {
        auto chart = chart_from_homology(weight_homology(ctx, w, win.s_max));
        auto oracle = ext_dimensions(module_from_weight(ctx, w), win.s_max);
        std::map<std::pair<int, std::int64_t>, std::pair<std::size_t, std::size_t>> rows;
        for (const auto& [k, d] : chart.entries)
            rows[{k.s, k.stem}].first = d;
        for (const auto& [st, d] : oracle)
            rows[{st.first, st.second - st.first}].second = d;
        for (const auto& [k, v] : rows)
            if (v.first != v.second) {
                json row = {{"w", w}, {"s", k.first}, {"stem", k.second}, {"koszul", v.first}, {"oracle", v.second}};
                (k.first >= win.s_max ? edge : diffs).push_back(row);
            }
    }
    if (cfg.format == "json") {
        emit(cfg, json_text({{"p", ctx.p()}, {"n", ctx.n()}, {"w_max", win.w_max}, {"s_max", win.s_max},
                             {"weights", weights}, {"diff", diffs}, {"edge", edge}}));
    } else {
        std::ostringstream os;
        os << "p=" << ctx.p() << " n=" << ctx.n() << " w_max=" << win.w_max << " s_max=" << win.s_max << ": "
           << weights << " weights, " << diffs.size() << " differing rows, " << edge.size() << " edge rows\n";
        for (const auto& r : diffs)
            os << "diff w=" << r["w"] << " s=" << r["s"] << " stem=" << r["stem"] << " koszul=" << r["koszul"]
               << " oracle=" << r["oracle"] << '\n';
        for (const auto& r : edge)
            os << "edge w=" << r["w"] << " s=" << r["s"] << " stem=" << r["stem"] << " koszul=" << r["koszul"]
               << " oracle=" << r["oracle"] << '\n';
        emit(cfg, os.str());
    }
    return diffs.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Koszul-complex Ext charts for H^*(BP<n>) over E(Q_0..Q_n)"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-p,--prime", cfg.prime, "prime p")->capture_default_str();
        sub->add_option("-n,--height", cfg.height, "height n of BP<n>")->capture_default_str();
        sub->add_option("-w,--max-weight", cfg.w_max, "largest weight (default 2p^(n+2))");
        sub->add_option("-s,--max-s", cfg.s_max, "largest Adams filtration (default 2 + w_max/(2p-2))");
        sub->add_option("-f,--format", cfg.format, "json, csv, svg or text")
            ->check(CLI::IsMember({"json", "csv", "svg", "text"}))
            ->capture_default_str();
        sub->add_option("-o,--out", cfg.out, "write output here instead of stdout");
        sub->add_option("--seed", cfg.seed, "seed for randomized checks")->capture_default_str();
        sub->add_option("--max-cells", cfg.max_cells, "refuse windows above this many cells")->capture_default_str();
        sub->add_flag("--any-prime", cfg.any_prime, "allow primes outside {2,3,5,7}");
    };

    auto* basis = app.add_subcommand("basis", "list weight-graded basis monomials");
    auto* chart = app.add_subcommand("chart", "compute the Ext chart");
    auto* verify = app.add_subcommand("verify", "run the vanishing checks, or validate --complex-file");
    auto* trace = app.add_subcommand("trace", "improve a Koszul representative step by step");
    auto* oracle = app.add_subcommand("oracle-compare", "compare the Koszul chart with the resolution oracle");
    for (auto* sub : {basis, chart, verify, trace, oracle})
        common(sub);
    verify->add_option("--complex-file", cfg.complex_file, "multicomplex fixture to validate");
    trace->add_option("--start", cfg.start, "start element, e.g. 'v0^2 v1 * xi1^18 tau3'")->required();
    trace->add_option("--order", cfg.order, "comma-separated direction order (default n,...,0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*basis)
            return cmd_basis(cfg);
        if (*chart)
            return cmd_chart(cfg);
        if (*verify)
            return cmd_verify(cfg);
        if (*trace)
            return cmd_trace(cfg);
        if (*oracle)
            return cmd_oracle_compare(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
