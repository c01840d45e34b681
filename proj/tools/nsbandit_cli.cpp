// nsbandit command-line front end.
//
// Exit codes: 0 success, 1 user error (bad flags, config, output path),
// 2 numeric or internal failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsbandit/nsbandit.hpp"

using namespace nsbandit;

namespace {

struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string env;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> T;
    std::optional<std::size_t> S;
    std::size_t threads = 0;
    std::string format = "csv";
    bool dry_run = false;
};

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw UserError("malformed JSON in '" + path + "': " + e.what());
    }
}

// --config holds a full experiment; --env may hold a bare environment object
// or a full experiment whose "env" is used.
ExperimentConfig load_config(const Common& c, bool need_config) {
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = config_from_json(read_json_file(c.config));
    } else if (need_config && c.env.empty()) {
        throw UserError("--config is required");
    }
    if (!c.env.empty()) {
        Json j = read_json_file(c.env);
        if (j.contains("env") && c.config.empty()) cfg = config_from_json(j);
        else if (j.contains("env")) cfg.env = config_from_json(j).env;
        else cfg.env = env_from_json(j);
    }
    if (c.seed) cfg.master_seed = c.seed;
    if (c.T) cfg.T = *c.T;
    if (c.S) cfg.S = *c.S;
    cfg.validate();
    return cfg;
}

std::uint64_t require_seed(const ExperimentConfig& cfg) {
    if (!cfg.master_seed) throw UserError("a seed is required (--seed or \"seed\" in the config)");
    return *cfg.master_seed;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (ch == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else {
            cell += ch;
        }
    }
    return rows;
}

Json csv_to_json(const std::string& text) {
    const auto rows = parse_csv(text);
    Json arr = Json::array();
    if (rows.empty()) return arr;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        Json obj = Json::object();
        for (std::size_t c = 0; c < rows[0].size(); ++c) {
            const auto& cell = rows[r][c];
            try {
                const double v = csv::parse_double(cell);
                obj[rows[0][c]] = std::isfinite(v) ? Json(v) : Json(cell);
            } catch (const std::invalid_argument&) {
                obj[rows[0][c]] = cell;
            }
        }
        arr.push_back(obj);
    }
    return arr;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write '" + path + "'");
    out << text;
    if (!out) throw UserError("failed writing '" + path + "'");
}

void emit(const Common& c, const std::string& csv_text, const Json* meta = nullptr) {
    write_text(c.out, c.format == "json" ? csv_to_json(csv_text).dump(2) + "\n" : csv_text);
    if (meta && !c.out.empty() && c.out != "-") write_text(c.out + ".meta.json", meta->dump(2) + "\n");
}

std::string sibling(const std::string& out, const std::string& suffix) {
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void print_resolved(const ExperimentConfig& cfg) {
    std::cout << config_to_json(resolve_config(cfg)).dump(2) << "\n";
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : csv::split(s)) {
        try {
            out.push_back(csv::parse_double(part));
        } catch (const std::invalid_argument&) {
            throw UserError("not a number in list: '" + part + "'");
        }
    }
    return out;
}

// Closed-form effective horizon, when the environment has one.
std::optional<double> closed_form_tau_eff(const EnvSpec& env) {
    if (const auto* g = std::get_if<env::GPTwoType>(&env); g && g->k == 2) return rice_effective_horizon(g->tau_id);
    if (const auto* m = std::get_if<env::MarkovSwitch>(&env)) return 1.0 / m->spec.delta;
    if (const auto* r = std::get_if<env::RenewalLB>(&env)) return r->spec.tau_eff;
    if (const auto* a = std::get_if<env::ArticlePool>(&env)) return news_effective_horizon(a->spec.k, a->spec.tau);
    return std::nullopt;
}

std::string inputs_json(const std::vector<std::pair<std::string, double>>& in) {
    Json j = Json::object();
    for (const auto& [k, v] : in) j[k] = std::isfinite(v) ? Json(v) : Json(csv::fmt(v));
    return j.dump();
}

int cmd_simulate(const Common& c) {
    auto cfg = load_config(c, false);
    if (c.dry_run) return print_resolved(cfg), 0;
    Rng rng(derive_seed(require_seed(cfg), 0));
    const auto path = realize(cfg.env, cfg.T, rng);
    Json meta = {{"version", kVersion}, {"master_seed", *cfg.master_seed}, {"cholesky_jitter", path.meta.jitter}};
    emit(c, path_to_csv(path), &meta);
    return 0;
}

int cmd_run(const Common& c) {
    auto cfg = load_config(c, true);
    if (c.dry_run) return print_resolved(cfg), 0;
    require_seed(cfg);
    const auto res = run_experiment(cfg, {.threads = c.threads});
    Json meta = result_metadata(res);
    meta["config"] = config_to_json(resolve_config(cfg));
    emit(c, regret_csv(res), &meta);
    if (cfg.trace) {
        if (c.out.empty() || c.out == "-") throw UserError("trace output needs --out");
        write_text(sibling(c.out, ".trace.csv"), trace_csv(res));
    }
    return 0;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& values) {
    auto cfg = load_config(c, true);
    const auto vals = parse_list(values);
    for (double v : vals) (void)with_value(cfg, axis, v);  // validates the axis before any work
    if (c.dry_run) return print_resolved(cfg), 0;
    require_seed(cfg);
    const auto res = sweep(cfg, axis, vals, {.threads = c.threads});
    Json meta = {{"version", kVersion}, {"axis", axis}, {"values", vals}, {"runs", Json::array()}};
    for (const auto& r : res.runs) meta["runs"].push_back(result_metadata(r));
    emit(c, sweep_csv(res), &meta);
    return 0;
}

int cmd_bounds(const Common& c, std::optional<double> sigma_flag, const std::string& d_grid) {
    auto cfg = load_config(c, false);
    if (c.dry_run) return print_resolved(cfg), 0;
    const std::uint64_t seed = require_seed(cfg);
    const std::size_t k = num_arms(cfg.env);
    const double T = static_cast<double>(cfg.T);
    const double sigma = sigma_flag ? *sigma_flag : std::sqrt(variance_proxy(reward_model_for(cfg.env)));
    const double kk = static_cast<double>(k);

    double tau_eff = 0.0;
    std::string tau_source;
    if (auto cf = closed_form_tau_eff(cfg.env)) {
        tau_eff = *cf;
        tau_source = "closed_form";
    } else {
        Rng rng(derive_seed(seed, 1));
        tau_eff = estimate_tau_eff(cfg.env, cfg.T, std::min<std::size_t>(cfg.S, 100), rng).value;
        tau_source = "monte_carlo";
    }
    tau_eff = std::max(1.0, tau_eff);

    // Expected variation budget by Monte Carlo over sampled paths.
    const std::size_t nv = std::min<std::size_t>(cfg.S, 100);
    double v_bar = 0.0;
    {
        const EnvironmentSampler sampler(cfg.env, cfg.T);
        Rng rng(derive_seed(seed, 2));
        for (std::size_t s = 0; s < nv; ++s) v_bar += variation_budget(sampler.realize(rng));
        v_bar /= static_cast<double>(nv);
    }

    const double h_cond = std::log(kk - 1.0);
    const double h_first = std::log(kk);
    const double prop51 = effective_horizon_bound(tau_eff, h_cond, h_first, T);
    const double s_bar = std::min(1.0, (1.0 + (T - 1.0) / tau_eff) / T);
    const double prop52 = combinatorial_entropy_bound(s_bar, T, k);
    const double h = std::min({prop51, prop52, std::log(kk)});
    const double gamma_u = gamma_karmed(sigma * sigma, k);

    csv::Writer w({"name", "value", "inputs"});
    auto row = [&](const std::string& name, double v, const std::vector<std::pair<std::string, double>>& in) {
        w.row({name, csv::fmt(v), inputs_json(in)});
    };
    if (const auto* g = std::get_if<env::GPTwoType>(&cfg.env)) row("rice", rice_effective_horizon(g->tau_id), {{"tau_id", g->tau_id}});
    row("tau_eff", tau_eff, {{"closed_form", tau_source == "closed_form" ? 1.0 : 0.0}});
    row("prop5.1", prop51, {{"tau_eff", tau_eff}, {"h_cond", h_cond}, {"h_first", h_first}, {"T", T}});
    row("prop5.2", prop52, {{"s_bar", s_bar}, {"T", T}, {"k", kk}});
    row("cor6.1", regret_bound_karmed(sigma, k, h), {{"sigma", sigma}, {"k", kk}, {"h_rate", h}});
    row("cor6.2", regret_bound_fullinfo(sigma, h), {{"sigma", sigma}, {"h_rate", h}});
    row("variation_budget", v_bar, {{"paths", static_cast<double>(nv)}});
    for (double D : parse_list(d_grid)) {
        if (!(D > 0.0)) throw UserError("distortion levels must be > 0");
        row("ratedist_D" + csv::fmt(D), rate_distortion_bound(v_bar, D, T, k), {{"v_bar", v_bar}, {"D", D}, {"T", T}, {"k", kk}});
    }
    row("a8.variation", regret_bound_variation(gamma_u, v_bar, k, T), {{"gamma_u", gamma_u}, {"v_bar", v_bar}, {"k", kk}, {"T", T}});
    emit(c, w.str());
    return 0;
}

int cmd_entropy(const Common& c, const std::string& method, std::size_t order, std::size_t paths) {
    auto cfg = load_config(c, false);
    if (c.dry_run) return print_resolved(cfg), 0;
    const std::size_t k = num_arms(cfg.env);
    csv::Writer w({"method", "order", "entropy_rate_nats", "stderr", "low_data", "approximate"});
    if (method == "closed_form") {
        const auto* m = std::get_if<env::MarkovSwitch>(&cfg.env);
        if (!m) throw UserError("closed_form entropy is available for markov_switch environments only");
        w.row({method, "", csv::fmt(entropy_rate_markov_switch(m->spec.k, m->spec.delta)), "0", "0", "0"});
    } else if (method == "bruteforce") {
        const auto* m = std::get_if<env::MarkovSwitch>(&cfg.env);
        if (!m) throw UserError("bruteforce entropy is available for markov_switch environments only");
        if (std::pow(static_cast<double>(k), static_cast<double>(cfg.T)) > 1e7)
            throw UserError("bruteforce entropy: k^T too large to enumerate; lower --T");
        const auto law = markov_switch_path_law(k, m->spec.delta, cfg.T);
        w.row({method, "", csv::fmt(entropy_rate_bruteforce(law, cfg.T)), "0", "0", "0"});
    } else if (method == "plugin") {
        const std::uint64_t seed = require_seed(cfg);
        const EnvironmentSampler sampler(cfg.env, cfg.T);
        std::vector<ActionSeq> seqs;
        for (std::size_t s = 0; s < paths; ++s) {
            Rng rng(derive_seed(seed, s));
            seqs.push_back(sampler.realize(rng).opt);
        }
        const auto est = entropy_rate_plugin(seqs, order, k);
        const bool markov = std::holds_alternative<env::MarkovSwitch>(cfg.env);
        w.row({method, std::to_string(order), csv::fmt(est.value), csv::fmt(est.stderr_), est.low_data ? "1" : "0",
               markov ? "0" : "1"});
    } else {
        throw UserError("unknown entropy method '" + method + "'");
    }
    emit(c, w.str());
    return 0;
}

int cmd_tau_eff(const Common& c) {
    auto cfg = load_config(c, false);
    if (c.dry_run) return print_resolved(cfg), 0;
    Rng rng(derive_seed(require_seed(cfg), 0));
    const auto est = estimate_tau_eff(cfg.env, cfg.T, cfg.S, rng);
    const auto cf = closed_form_tau_eff(cfg.env);
    csv::Writer w({"tau_eff_hat", "switches", "paths", "T", "censored", "tau_eff_closed_form"});
    w.row({csv::fmt(est.value), std::to_string(est.switches), std::to_string(est.paths), std::to_string(cfg.T),
           est.censored ? "1" : "0", cf ? csv::fmt(*cf) : ""});
    emit(c, w.str());
    return 0;
}

int cmd_figure(const Common& c, const std::string& id) {
    auto cfg = load_config(c, false);
    if (c.dry_run) return print_resolved(cfg), 0;
    require_seed(cfg);
    const auto fig = emit_figure_data(cfg, id, {.threads = c.threads});
    emit(c, fig.csv, &fig.meta);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and information-theoretic analysis of nonstationary bandits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON)");
        sub->add_option("--out", common.out, "Output path (default: stdout)");
        sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
        sub->add_option("--T", common.T, "Horizon")->check(CLI::PositiveNumber);
        sub->add_option("--S", common.S, "Replications / sample paths")->check(CLI::PositiveNumber);
        sub->add_option("--threads", common.threads, "Worker threads (default: available parallelism)");
        sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("--dry-run", common.dry_run, "Print the resolved config and exit");
    };

    auto* simulate = app.add_subcommand("simulate", "Realize one latent path");
    add_common(simulate);
    simulate->add_option("--env", common.env, "Environment JSON");

    auto* run = app.add_subcommand("run", "Run an experiment and report per-period regret");
    add_common(run);

    std::string axis, values;
    auto* sw = app.add_subcommand("sweep", "Run one experiment per value of a config field");
    add_common(sw);
    sw->add_option("--axis", axis, "Dotted path of a numeric field, e.g. env.tau_id")->required();
    sw->add_option("--values", values, "Comma-separated values")->required();

    std::optional<double> sigma;
    std::string d_grid = "0.05,0.1,0.2,0.5";
    auto* bounds = app.add_subcommand("bounds", "Evaluate entropy-rate and regret bounds");
    add_common(bounds);
    bounds->add_option("--env", common.env, "Environment JSON");
    bounds->add_option("--sigma", sigma, "Sub-Gaussian reward scale (default: from the noise model)");
    bounds->add_option("--D", d_grid, "Comma-separated distortion levels");

    std::string method = "closed_form";
    std::size_t order = 1, paths = 10;
    auto* entropy = app.add_subcommand("entropy", "Entropy rate of the optimal action process");
    add_common(entropy);
    entropy->add_option("--env", common.env, "Environment JSON");
    entropy->add_option("--method", method)->check(CLI::IsMember({"closed_form", "plugin", "bruteforce"}));
    entropy->add_option("--order", order, "Markov order of the plug-in estimator");
    entropy->add_option("--paths", paths, "Number of sampled paths for the plug-in estimator")->check(CLI::PositiveNumber);

    auto* tau = app.add_subcommand("tau-eff", "Estimate the effective horizon from switch counts");
    add_common(tau);
    tau->add_option("--env", common.env, "Environment JSON");

    std::string fig_id;
    auto* figure = app.add_subcommand("figure", "Emit figure data as CSV");
    add_common(figure);
    figure->add_option("--id", fig_id, "fig2_left, fig2_right, figC1, figC2, figC4 or figC5")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(common);
        if (*run) return cmd_run(common);
        if (*sw) return cmd_sweep(common, axis, values);
        if (*bounds) return cmd_bounds(common, sigma, d_grid);
        if (*entropy) return cmd_entropy(common, method, order, paths);
        if (*tau) return cmd_tau_eff(common);
        if (*figure) return cmd_figure(common, fig_id);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
