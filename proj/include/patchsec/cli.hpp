#pragma once

// Command-line front end: security, availability, compare, solve-srn.
// Exit codes: 0 success, 1 usage or validation error, 2 solver error.

#include <patchsec/availability.hpp>
#include <patchsec/design_eval.hpp>
#include <patchsec/errors.hpp>
#include <patchsec/harm.hpp>
#include <patchsec/model.hpp>
#include <patchsec/srn/ctmc.hpp>
#include <patchsec/srn/text_format.hpp>
#include <patchsec/version.hpp>

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace patchsec::cli {

enum class Format { table, csv, json };

/// One --rate-override. `param` is a duration field in model-file units,
/// "lambda_eq"/"mu_eq" (per hour, replacing the aggregated rate), or
/// "interval_hours" with tier "policy".
struct RateOverride {
    std::string tier;
    std::string param;
    double value = 0.0;
};

namespace detail {

using nlohmann::json;

inline double num6(double v) { return std::stod(sig6(v)); }

/// "phi=0.2,psi=0.9962[,xi=9,omega=2,kappa=1]". Count bounds come all
/// together or not at all.
inline Bounds parse_bounds_arg(const std::string& text) {
    json obj = json::object();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ModelError("--bounds", "expected key=value, got '" + item + "'");
        const auto key = item.substr(0, eq);
        const auto val = item.substr(eq + 1);
        if (obj.contains(key)) throw ModelError("--bounds", "duplicate bound '" + key + "'");
        try {
            std::size_t used = 0;
            if (key == "xi" || key == "omega" || key == "kappa") {
                long v = std::stol(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
                obj[key] = v;
            } else {
                double v = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
                obj[key] = v;
            }
        } catch (const std::logic_error&) {
            throw ModelError("--bounds." + key, "not a number: '" + val + "'");
        }
    }
    Bounds b = patchsec::detail::parse_bounds(obj, "--bounds");
    if (b.has_count_bounds() && !b.has_all_count_bounds())
        throw ModelError("--bounds", "xi, omega and kappa must be given together");
    return b;
}

inline RateOverride parse_override(const std::string& text) {
    const auto dot = text.find('.');
    const auto eq = text.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot == 0 || eq < dot + 2)
        throw ModelError("--rate-override", "expected tier.param=value, got '" + text + "'");
    RateOverride o{text.substr(0, dot), text.substr(dot + 1, eq - dot - 1), 0.0};
    const auto val = text.substr(eq + 1);
    try {
        std::size_t used = 0;
        o.value = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
        throw ModelError("--rate-override", "not a number: '" + val + "'");
    }
    if (!(o.value > 0.0)) throw ModelError("--rate-override", text + ": value must be > 0");
    return o;
}

/// Applies duration and policy overrides to the model. Aggregated-rate
/// overrides are returned for apply_rate_overrides.
inline std::vector<RateOverride> apply_model_overrides(Model& m, const std::vector<RateOverride>& overrides) {
    std::vector<RateOverride> rate_level;
    for (const auto& o : overrides) {
        const std::string where = "--rate-override " + o.tier + "." + o.param;
        if (o.tier == "policy") {
            if (o.param != "interval_hours") throw ModelError(where, "policy only has interval_hours");
            m.policy.interval = Hours{o.value};
            continue;
        }
        if (!m.reachability.tier_index(o.tier)) throw ModelError(where, "unknown tier '" + o.tier + "'");
        if (o.param == "lambda_eq" || o.param == "mu_eq") {
            rate_level.push_back(o);
            continue;
        }
        const auto* f = find_duration_field(o.param);
        if (!f) throw ModelError(where, "unknown parameter '" + o.param + "'");
        m.server(o.tier).*(f->member) = to_hours(o.value, f->unit);
    }
    return rate_level;
}

inline void apply_rate_overrides(TierRates& rates, const std::vector<RateOverride>& overrides) {
    for (const auto& o : overrides) (o.param == "lambda_eq" ? rates[o.tier].lambda_eq : rates[o.tier].mu_eq) = o.value;
}

inline std::vector<DesignSpec> select_designs(const Model& m, const std::string& selector) {
    if (selector == "all") return m.designs;
    return {m.design(selector)};
}

/// Left-aligned columns separated by two spaces.
inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            line += r[i];
            if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
        }
        out += line + "\n";
    }
    return out;
}

inline std::string render_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
        out += "\n";
    }
    return out;
}

/// Writes to a sibling temporary file, then renames it into place.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ModelError("--out", "cannot write '" + tmp.string() + "'");
        f << content;
        f.close();
        if (!f) throw ModelError("--out", "cannot write '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ModelError("--out", "cannot rename into '" + path.string() + "'");
    }
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir))
        throw ModelError("--out", "cannot create directory '" + dir.string() + "'");
}

inline const char* extension(Format f) {
    return f == Format::json ? ".json" : f == Format::csv ? ".csv" : ".txt";
}

struct Options {
    std::string model;
    std::string design = "all";
    bool patched = false;
    bool unpatched = false;
    std::vector<std::string> bounds;
    Format format = Format::table;
    std::string out;
    std::vector<std::string> overrides;
    std::string net_file;
};

/// Result text goes to `out`, or to <dir>/<name><ext> when --out is set.
inline void emit(const Options& o, std::ostream& out, const std::string& name, const std::string& text) {
    if (o.out.empty()) {
        out << text;
        return;
    }
    ensure_dir(o.out);
    write_file(std::filesystem::path(o.out) / (name + extension(o.format)), text);
}

inline std::vector<bool> patch_states(const Options& o) {
    if (o.patched) return {true};
    if (o.unpatched) return {false};
    return {false, true};
}

inline int security(const Options& o, std::ostream& out) {
    const Model m = load_model_file(o.model);
    const auto designs = select_designs(m, o.design);
    std::vector<std::vector<std::string>> rows;
    json arr = json::array();
    const bool table = o.format == Format::table;
    rows.push_back({"design", "patched", table ? "AIM" : "aim", table ? "ASP" : "asp", table ? "NoEV" : "noev",
                    table ? "NoAP" : "noap", table ? "NoEP" : "noep"});
    for (const auto& d : designs) {
        for (bool p : patch_states(o)) {
            const auto s = network_metrics(build_harm(m, d, p));
            const std::string state = table ? (p ? "after" : "before") : (p ? "true" : "false");
            rows.push_back({d.label, state, sig6(s.aim), sig6(s.asp), std::to_string(s.noev),
                            std::to_string(s.noap), std::to_string(s.noep)});
            arr.push_back({{"design", d.label},
                           {"tiers", counts_label(d, m.reachability.tiers)},
                           {"patched", p},
                           {"aim", num6(s.aim)},
                           {"asp", num6(s.asp)},
                           {"noev", s.noev},
                           {"noap", s.noap},
                           {"noep", s.noep}});
        }
    }
    const std::string text = o.format == Format::json ? arr.dump(2) + "\n"
                             : o.format == Format::csv ? render_csv(rows)
                                                       : render_table(rows);
    emit(o, out, "security", text);
    return 0;
}

inline int availability(const Options& o, std::ostream& out) {
    Model m = load_model_file(o.model);
    std::vector<RateOverride> ov;
    for (const auto& s : o.overrides) ov.push_back(parse_override(s));
    const auto rate_level = apply_model_overrides(m, ov);
    const auto designs = select_designs(m, o.design);
    TierRates rates = tier_rates(m);
    apply_rate_overrides(rates, rate_level);

    std::vector<std::vector<std::string>> tiers{{"tier", "mttp_h", "lambda_eq", "mttr_h", "mu_eq"}};
    if (o.format == Format::table) tiers[0] = {"tier", "MTTP (h)", "lambda_eq", "MTTR (h)", "mu_eq"};
    json jt = json::array();
    for (const auto& t : m.reachability.tiers) {
        const auto& r = rates.at(t);
        tiers.push_back({t, sig6(r.mttp()), sig6(r.lambda_eq), sig6(r.mttr()), sig6(r.mu_eq)});
        jt.push_back({{"tier", t},
                      {"mttp_h", num6(r.mttp())},
                      {"lambda_eq", num6(r.lambda_eq)},
                      {"mttr_h", num6(r.mttr())},
                      {"mu_eq", num6(r.mu_eq)}});
    }
    std::vector<std::vector<std::string>> coa{{"design", "tiers", "coa"}};
    json jc = json::array();
    for (const auto& d : designs) {
        const double c = compute_coa(d, m.reachability.tiers, rates);
        coa.push_back({d.label, counts_label(d, m.reachability.tiers), sig6(c)});
        jc.push_back({{"design", d.label}, {"tiers", counts_label(d, m.reachability.tiers)}, {"coa", num6(c)}});
    }
    std::string text;
    if (o.format == Format::json) {
        text = json{{"tiers", jt}, {"designs", jc}}.dump(2) + "\n";
    } else if (o.format == Format::csv) {
        text = render_csv(tiers) + "\n" + render_csv(coa);
    } else {
        text = render_table(tiers) + "\n";
        for (std::size_t i = 1; i < coa.size(); ++i)
            text += "COA " + coa[i][0] + " (" + coa[i][1] + ") = " + coa[i][2] + "\n";
    }
    emit(o, out, "availability", text);
    return 0;
}

inline int compare(const Options& o, std::ostream& out) {
    Model m = load_model_file(o.model);
    std::vector<RateOverride> ov;
    for (const auto& s : o.overrides) ov.push_back(parse_override(s));
    const auto rate_level = apply_model_overrides(m, ov);
    std::vector<Bounds> bounds;
    for (const auto& b : o.bounds) bounds.push_back(parse_bounds_arg(b));
    if (o.bounds.empty()) bounds = m.bounds;
    const auto designs = select_designs(m, o.design);
    TierRates rates = tier_rates(m);
    apply_rate_overrides(rates, rate_level);

    const auto result = sweep(m, designs, bounds, !o.unpatched, rates);
    const auto scatter = scatter_csv(result);
    const auto radar = radar_csv(result);
    const auto regions = regions_json(result).dump(2) + "\n";

    const std::filesystem::path dir = o.out.empty() ? "." : o.out;
    ensure_dir(dir);
    write_file(dir / "scatter.csv", scatter);
    write_file(dir / "radar.csv", radar);
    write_file(dir / "regions.json", regions);

    if (o.format == Format::json) {
        out << regions;
    } else if (o.format == Format::csv) {
        out << radar;
    } else {
        std::vector<std::vector<std::string>> rows{{"design", "patched", "AIM", "ASP", "NoEV", "NoAP", "NoEP", "COA"}};
        for (const auto& r : result.rows)
            rows.push_back({r.label, r.patched ? "after" : "before", sig6(r.metrics.aim), sig6(r.metrics.asp),
                            std::to_string(r.metrics.noev), std::to_string(r.metrics.noap),
                            std::to_string(r.metrics.noep), sig6(r.coa)});
        out << render_table(rows);
        for (const auto& r : result.regions) {
            std::string line = "region " + bounds_to_json(r.bounds).dump() + ":";
            for (const auto& a : r.accepted) line += " " + a;
            if (r.accepted.empty()) line += " (none)";
            out << line << "\n";
        }
    }
    return 0;
}

inline int solve_srn(const Options& o, std::ostream& out) {
    std::ifstream f(o.net_file, std::ios::binary);
    if (!f) throw ModelError("solve-srn", "cannot open net file '" + o.net_file + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    const auto net = srn::parse_net(buf.str());
    const auto sol = srn::solve(net);

    // Most probable states first; ties in marking order.
    std::vector<std::size_t> order(sol.states.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sol.pi[a] > sol.pi[b]; });
    const std::size_t shown = std::min<std::size_t>(order.size(), 10);

    if (o.format == Format::json) {
        json states = json::array();
        for (std::size_t k = 0; k < shown; ++k)
            states.push_back({{"marking", net.describe(sol.states[order[k]])}, {"probability", num6(sol.pi[order[k]])}});
        json rewards = json::object();
        for (const auto& r : net.rewards()) rewards[r.name] = num6(srn::expected_reward(sol, r));
        out << json{{"states", sol.states.size()}, {"residual", num6(sol.residual)}, {"top_states", states},
                    {"rewards", rewards}}
                       .dump(2)
            << "\n";
        return 0;
    }
    std::vector<std::vector<std::string>> rows{{"marking", "probability"}};
    for (std::size_t k = 0; k < shown; ++k)
        rows.push_back({net.describe(sol.states[order[k]]), sig6(sol.pi[order[k]])});
    std::vector<std::vector<std::string>> rewards{{"reward", "value"}};
    for (const auto& r : net.rewards()) rewards.push_back({r.name, sig6(srn::expected_reward(sol, r))});
    if (o.format == Format::csv) {
        out << render_csv(rows) << "\n" << render_csv(rewards);
    } else {
        out << "tangible states: " << sol.states.size() << "\n";
        out << "residual: " << sig6(sol.residual) << "\n\n";
        out << render_table(rows) << "\n" << render_table(rewards);
    }
    return 0;
}

} // namespace detail

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using detail::Options;
    Options o;
    CLI::App app{"Security and availability evaluation of server redundancy designs under patching", "patchsec"};
    app.set_version_flag("--version", std::string("patchsec ") + version);
    app.require_subcommand(1);

    const std::map<std::string, Format> formats{{"table", Format::table}, {"csv", Format::csv}, {"json", Format::json}};

    auto common = [&](CLI::App* sub, bool patch_flags, bool overrides) {
        sub->add_option("--model", o.model, "Model file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--design", o.design, "Design label, or 'all'")->capture_default_str();
        if (patch_flags) {
            auto* p = sub->add_flag("--patched", o.patched, "Only the patched state");
            auto* u = sub->add_flag("--unpatched", o.unpatched, "Only the unpatched state");
            p->excludes(u);
        }
        sub->add_option("--format", o.format, "table, csv or json")
            ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
        sub->add_option("--out", o.out, "Output directory");
        if (overrides)
            sub->add_option("--rate-override", o.overrides, "tier.param=value (model-file units)")->take_all();
    };

    auto* sec = app.add_subcommand("security", "Attack impact, success probability and count metrics");
    common(sec, true, false);
    auto* avail = app.add_subcommand("availability", "Aggregated per-tier rates and capacity-oriented availability");
    common(avail, false, true);
    auto* cmp = app.add_subcommand("compare", "Design sweep with scatter, radar and region outputs");
    common(cmp, true, true);
    cmp->add_option("--bounds", o.bounds, "phi=..,psi=..[,xi=..,omega=..,kappa=..]; repeatable")->take_all();
    auto* solve = app.add_subcommand("solve-srn", "Steady-state solution of a textual net");
    solve->add_option("file", o.net_file, "Net file")->required();
    solve->add_option("--format", o.format, "table, csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

    if (args.empty()) {
        err << app.help();
        return 1;
    }
    std::vector<const char*> argv{"patchsec"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sec) return detail::security(o, out);
        if (*avail) return detail::availability(o, out);
        if (*cmp) return detail::compare(o, out);
        return detail::solve_srn(o, out);
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace patchsec::cli
