// strata-csl: command-line front end for the CSL model checker.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strata/strata.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace strata;

struct RunConfig {
    std::string command;
    std::string tra;
    std::string lab;
    std::string formula;
    std::string formula_file;
    double epsilon = 1e-6;
    std::string policy = "strict";
    std::uint64_t seed = 1;
    std::size_t samples = 100000;
    std::string output = "text";
    std::optional<std::size_t> init;
    std::string init_label;
    std::string out_prefix;
};

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIndeterminate = 2;

// Numbers as 12 significant digits; infinity as the string "inf".
json number(double x) {
    if (std::isinf(x))
        return "inf";
    return json::parse(format_g12(x));
}

std::string formula_text(const RunConfig& cfg) {
    if (cfg.formula_file.empty())
        return cfg.formula;
    std::ifstream in(cfg.formula_file);
    if (!in)
        throw IoError("cannot open " + cfg.formula_file);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
        text.pop_back();
    return text;
}

// Initial states with their weights: --init, uniform over --init-label, or state 0.
std::vector<std::pair<State, double>> initial_states(const Ctmc& c, const RunConfig& cfg) {
    std::vector<std::pair<State, double>> out;
    if (!cfg.init_label.empty()) {
        const auto set = c.labels().states_with(cfg.init_label);
        std::vector<State> picked;
        for (State s = 0; s < c.num_states(); ++s)
            if (set[s])
                picked.push_back(s);
        if (picked.empty())
            throw ParameterError("no state carries the initial label '" + cfg.init_label + "'");
        for (State s : picked)
            out.emplace_back(s, 1.0 / static_cast<double>(picked.size()));
        return out;
    }
    const std::size_t s = cfg.init.value_or(0);
    if (s >= c.num_states())
        throw IndexError("initial state " + std::to_string(s) + " out of range");
    out.emplace_back(static_cast<State>(s), 1.0);
    return out;
}

std::vector<Letter> operand_letters(const Ctmc& c, const PathFormula& phi, const CheckOptions& opt) {
    std::vector<StateSet> sets;
    for (const auto& op : phi.operands)
        sets.push_back(check(c, op, opt).sat);
    return letters_from_sets(sets, c.num_states());
}

CheckOptions check_options(const RunConfig& cfg) {
    CheckOptions opt;
    opt.epsilon = cfg.epsilon;
    opt.policy = cfg.policy == "closed" ? VerdictPolicy::ClosedWorld : VerdictPolicy::Strict;
    return opt;
}

json base_report(const RunConfig& cfg, const std::string& formula) {
    json j;
    j["command"] = cfg.command;
    j["model"] = {{"transitions", cfg.tra}, {"labels", cfg.lab}};
    j["formula"] = formula;
    j["epsilon"] = number(cfg.epsilon);
    j["result"] = nullptr;
    j["error_bound"] = nullptr;
    j["timing_ms"] = 0;
    j["product_states"] = nullptr;
    j["product_transitions"] = nullptr;
    return j;
}

std::string state_list(const std::vector<State>& states) {
    std::string out = "{";
    for (std::size_t i = 0; i < states.size(); ++i)
        out += (i ? ", " : "") + std::to_string(states[i]);
    return out + "}";
}

int run_check(const RunConfig& cfg, const Ctmc& c, json& report, std::ostream& text) {
    const auto f = parse(formula_text(cfg));
    report["formula"] = f.str();
    const auto r = check(c, f, check_options(cfg));
    const auto sat = r.states();
    json res;
    res["sat"] = sat;
    double bound = 0.0;
    if (r.probs) {
        json probs = json::array();
        for (State s = 0; s < r.probs->size(); ++s) {
            probs.push_back({{"state", s}, {"probability", number((*r.probs)[s].probability)},
                             {"error", number((*r.probs)[s].error)}});
            bound = std::max(bound, (*r.probs)[s].error);
        }
        res["outermost"] = r.probs_formula;
        res["probabilities"] = probs;
        report["product_states"] = r.product_states;
        report["product_transitions"] = r.product_transitions;
    }
    json ind = json::array();
    for (const auto& v : r.indeterminate)
        ind.push_back({{"formula", v.formula}, {"states", v.states}});
    res["indeterminate"] = ind;
    report["result"] = res;
    report["error_bound"] = number(bound);

    text << "formula: " << f.str() << "\n";
    text << "sat: " << state_list(sat) << "\n";
    if (r.probs) {
        text << "probabilities of " << r.probs_formula << ":\n";
        for (State s = 0; s < r.probs->size(); ++s)
            text << "  " << s << ": " << format_g12((*r.probs)[s].probability) << " +- "
                 << format_g12((*r.probs)[s].error) << "\n";
        text << "product: " << r.product_states << " states, " << r.product_transitions << " transitions\n";
    }
    for (const auto& v : r.indeterminate)
        text << "indeterminate: " << v.formula << " in " << state_list(v.states) << "\n";
    return kExitOk;
}

int run_prob(const RunConfig& cfg, const Ctmc& c, json& report, std::ostream& text) {
    const auto phi = parse_path(formula_text(cfg));
    report["formula"] = phi.str();
    const auto init = initial_states(c, cfg);
    const auto letters = operand_letters(c, phi, check_options(cfg));
    StateSet needed(c.num_states(), false);
    for (const auto& [s, w] : init)
        needed[s] = true;
    PathProbability size;
    const auto v = until_values(c, letters, phi.k(), phi.intervals, needed, cfg.epsilon, &size);
    double p = 0.0;
    double e = 0.0;
    for (const auto& [s, w] : init) {
        p += w * v.value[s];
        e += w * v.error[s];
    }
    p = std::clamp(p, 0.0, 1.0);
    report["result"] = {{"probability", number(p)}};
    report["probability"] = number(p);
    report["error_bound"] = number(e);
    report["product_states"] = size.product_states;
    report["product_transitions"] = size.product_transitions;
    report["stratified_product_states"] = size.product_states;

    text << "formula: " << phi.str() << "\n";
    text << "probability: " << format_g12(p) << "\n";
    text << "error bound: " << format_g12(e) << "\n";
    text << "product: " << size.product_states << " states, " << size.product_transitions << " transitions\n";
    return kExitOk;
}

int run_simulate(const RunConfig& cfg, const Ctmc& c, json& report, std::ostream& text) {
    const auto phi = parse_path(formula_text(cfg));
    report["formula"] = phi.str();
    report["seed"] = cfg.seed;
    const auto init = initial_states(c, cfg);
    const auto letters = operand_letters(c, phi, check_options(cfg));
    EstimateOptions opt;
    opt.on_product = std::isinf(phi.intervals.back().hi);

    // Each initial state gets an equal share of the samples and its own seed.
    std::uint64_t sm = cfg.seed;
    double mean = 0.0;
    double var = 0.0;
    std::size_t total = 0;
    const std::size_t per = std::max<std::size_t>(1, cfg.samples / init.size());
    for (const auto& [s, w] : init) {
        const std::uint64_t seed = init.size() == 1 ? cfg.seed : splitmix64(sm);
        const auto est = estimate(c, s, letters, phi.k(), phi.intervals, per, seed, opt);
        mean += w * est.mean;
        var += w * w * est.mean * (1.0 - est.mean) / static_cast<double>(est.samples);
        total += est.samples;
    }
    const double hw = 1.96 * std::sqrt(var);
    report["result"] = {{"mean", number(mean)},
                        {"half_width", number(hw)},
                        {"samples", total},
                        {"rng", kRngName},
                        {"on_product", opt.on_product}};
    report["error_bound"] = number(hw);

    text << "formula: " << phi.str() << "\n";
    text << "estimate: " << format_g12(mean) << " +- " << format_g12(hw) << " (95%)\n";
    text << "samples: " << total << "\n";
    text << "rng: " << kRngName << " seed " << cfg.seed << "\n";
    return kExitOk;
}

int run_product(const RunConfig& cfg, const Ctmc& c, json& report, std::ostream& text) {
    const auto phi = parse_path(formula_text(cfg));
    report["formula"] = phi.str();
    const auto init = initial_states(c, cfg);
    const auto letters = operand_letters(c, phi, check_options(cfg));
    std::vector<State> starts;
    for (const auto& [s, w] : init)
        starts.push_back(s);
    const auto p = build_product(c, letters, phi.k(), starts, &phi);
    report["product_states"] = p.num_states();
    report["product_transitions"] = p.chain.num_transitions();
    report["error_bound"] = number(0.0);

    json states = json::array();
    for (State x = 0; x < p.num_states(); ++x)
        states.push_back({{"index", x}, {"name", product_state_name(p, x)}, {"origin", p.origin[x]},
                          {"automaton", p.tag[x].str()}});
    json res;
    res["states"] = states;
    res["stratified"] = static_cast<bool>(is_stratified(p.chain, p.letters, p.k));

    std::ostringstream tra;
    std::ostringstream lab;
    write_tra(tra, p.chain);
    write_lab(lab, p.chain);
    if (!cfg.out_prefix.empty()) {
        for (const auto& [ext, body] : {std::pair{".tra", tra.str()}, std::pair{".lab", lab.str()}}) {
            const std::string path = cfg.out_prefix + ext;
            std::ofstream f(path, std::ios::binary);
            if (!f || !(f << body))
                throw IoError("cannot write " + path);
        }
        res["files"] = {cfg.out_prefix + ".tra", cfg.out_prefix + ".lab"};
    } else {
        res["tra"] = tra.str();
        res["lab"] = lab.str();
    }
    report["result"] = res;

    text << "formula: " << phi.str() << "\n";
    text << "product: " << p.num_states() << " states, " << p.chain.num_transitions() << " transitions\n";
    for (State x = 0; x < p.num_states(); ++x)
        text << "  " << x << " " << product_state_name(p, x) << "\n";
    if (cfg.out_prefix.empty())
        text << "-- tra\n" << tra.str() << "-- lab\n" << lab.str();
    else
        text << "wrote " << cfg.out_prefix << ".tra and " << cfg.out_prefix << ".lab\n";
    return kExitOk;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--model", cfg.tra, "transition file (.tra)")->required();
    sub->add_option("--labels", cfg.lab, "label file (.lab)")->required();
    auto* f = sub->add_option("--formula", cfg.formula, "formula text");
    auto* ff = sub->add_option("--formula-file", cfg.formula_file, "file holding the formula");
    f->excludes(ff);
    sub->add_option("--epsilon", cfg.epsilon, "error bound in (0,0.5)")
        ->check(CLI::Validator(
            [](std::string& v) {
                double x = 0.0;
                if (!CLI::detail::lexical_cast(v, x) || !(x > 0.0 && x < 0.5))
                    return std::string("epsilon must lie in (0,0.5)");
                return std::string();
            },
            "(0,0.5)"));
    sub->add_option("--policy", cfg.policy, "verdict policy")->check(CLI::IsMember({"strict", "closed"}));
    sub->add_option("--output", cfg.output, "output format")->check(CLI::IsMember({"text", "json"}));
    auto* i = sub->add_option("--init", cfg.init, "initial state index");
    auto* il = sub->add_option("--init-label", cfg.init_label, "uniform initial distribution over a label");
    i->excludes(il);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model checking of CSL multiple-until formulas on labeled CTMCs"};
    app.require_subcommand(1);
    RunConfig cfg;
    auto* check_cmd = app.add_subcommand("check", "satisfaction set of a state formula");
    auto* prob_cmd = app.add_subcommand("prob", "probability of a path formula");
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of a path formula");
    auto* prod_cmd = app.add_subcommand("product", "dump the product with the formula automaton");
    for (auto* sub : {check_cmd, prob_cmd, sim_cmd, prod_cmd})
        add_common(sub, cfg);
    sim_cmd->add_option("--seed", cfg.seed, "random seed");
    sim_cmd->add_option("--samples", cfg.samples, "number of sampled paths")->check(CLI::PositiveNumber);
    prod_cmd->add_option("--out", cfg.out_prefix, "write PREFIX.tra and PREFIX.lab");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    for (auto* sub : app.get_subcommands())
        cfg.command = sub->get_name();

    json report = base_report(cfg, cfg.formula);
    std::ostringstream text;
    const auto start = std::chrono::steady_clock::now();
    int status = kExitOk;
    try {
        if (cfg.formula.empty() && cfg.formula_file.empty())
            throw ParameterError("a formula is required (--formula or --formula-file)");
        const auto c = load_model(cfg.tra, cfg.lab);
        if (cfg.command == "check")
            status = run_check(cfg, c, report, text);
        else if (cfg.command == "prob")
            status = run_prob(cfg, c, report, text);
        else if (cfg.command == "simulate")
            status = run_simulate(cfg, c, report, text);
        else
            status = run_product(cfg, c, report, text);
    } catch (const IndeterminateError& e) {
        report["result"] = {{"indeterminate", {{"formula", e.formula()}, {"states", e.states()}}}};
        report["error"] = e.what();
        text << "indeterminate: " << e.what() << "\n";
        status = kExitIndeterminate;
    } catch (const std::exception& e) {
        report["error"] = e.what();
        status = kExitError;
    }
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report["timing_ms"] = number(ms);

    if (status == kExitError)
        std::cerr << "error: " << report["error"].get<std::string>() << "\n";
    if (cfg.output == "json") {
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << text.str();
        if (status != kExitError)
            std::cout << "time: " << format_g12(ms) << " ms\n";
    }
    return status;
}
