// wrf: weighted renewal sums — exact engines, asymptotic predictors, and
// convergence experiments from JSON scenario files.
//
// Exit codes: 0 success (all pass flags true), 1 scenario/computation
// failure, 2 config or argument schema violation.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wrf/harness.hpp"
#include "wrf/report_io.hpp"
#include "wrf/scenario_json.hpp"

namespace fs = std::filesystem;
using namespace wrf;

namespace {

// Inline JSON or @file reference.
json json_arg(const std::string& s) {
    if (!s.empty() && s[0] == '@') return load_json_file(s.substr(1));
    try {
        return json::parse(s);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("inline JSON: ") + e.what());
    }
}

std::vector<double> parse_grid_arg(const std::string& s) {
    // "from:to[:step]" or comma-separated points
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        double from = 0, to = 0, step = 1;
        if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &from, &to, &step) < 2)
            throw SchemaError("grid: expected from:to[:step]");
        if (step <= 0 || to < from) throw SchemaError("grid: bad range");
        for (double x = from; x <= to + 1e-9; x += step) out.push_back(x);
        return out;
    }
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        out.push_back(std::stod(s.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (out.empty()) throw SchemaError("grid: empty");
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            long seed_override, double tol_override, unsigned jobs) {
    json cj = load_json_file(config_path);
    std::string base_dir = fs::path(config_path).parent_path().string();
    RunConfig cfg = config_from_json(cj, base_dir);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (tol_override > 0.0) cfg.tolerance_override = tol_override;
    for (auto& s : cfg.scenarios) {
        if (seed_override >= 0) s.seed = static_cast<std::uint64_t>(seed_override);
        else if (cfg.seed != 0 && s.seed == 0) s.seed = cfg.seed;
        if (cfg.tolerance_override) s.tolerance = *cfg.tolerance_override;
    }

    std::vector<Report> reports(cfg.scenarios.size());
    std::vector<std::string> errors(cfg.scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cfg.scenarios.size()) return;
            try {
                reports[i] = run_comparison(cfg.scenarios[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    bool any_error = false, all_pass = true;
    std::vector<Report> ok;
    for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
        const std::string& id = cfg.scenarios[i].id;
        if (!errors[i].empty()) {
            any_error = true;
            std::cerr << "scenario '" << id << "': " << errors[i] << "\n";
            continue;
        }
        write_report_csv(cfg.out_dir + "/" + id + ".csv", reports[i]);
        all_pass = all_pass && reports[i].all_pass;
        std::cout << id << ": " << (reports[i].all_pass ? "pass" : "FAIL")
                  << "  max|ratio-1| (top half) = " << reports[i].max_ratio_err_top_half << "\n";
        ok.push_back(reports[i]);
    }
    write_summary_json(cfg.out_dir + "/summary.json", ok);
    std::cout << "wrote " << cfg.out_dir << "/summary.json\n";
    return any_error || !all_pass ? 1 : 0;
}

int cmd_list(const std::string& dir) {
    if (!fs::is_directory(dir)) throw SchemaError(dir + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            json j = load_json_file(f.string());
            if (!j.contains("id")) continue;  // run configs, not scenarios
            std::string desc = j.value("description", "");
            std::cout << f.filename().string() << "  " << j["id"].get<std::string>()
                      << (desc.empty() ? "" : "  — " + desc) << "\n";
        } catch (const std::exception& e) {
            std::cout << f.filename().string() << "  (unreadable: " << e.what() << ")\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted renewal sums: exact engines, predictors, experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run every scenario in a config file");
    std::string run_config, run_out;
    long run_seed = -1;
    double run_tol = 0.0;
    unsigned run_jobs = 1;
    run->add_option("--config", run_config, "run config JSON")->required();
    run->add_option("--out", run_out, "output directory (overrides config)");
    run->add_option("--seed", run_seed, "root seed override");
    run->add_option("--tolerance", run_tol, "tolerance override for all scenarios");
    run->add_option("--jobs", run_jobs, "parallel scenario workers");

    auto* list = app.add_subcommand("list-scenarios", "print the bundled scenario catalogue");
    std::string list_dir = "scenarios";
    list->add_option("--scenarios-dir", list_dir, "catalogue directory");

    // dist-info
    auto* dist = app.add_subcommand("dist-info", "describe a jump model");
    std::string dist_model;
    dist->add_option("--model", dist_model, "model JSON (inline or @file)")->required();

    // weights-info
    auto* winfo = app.add_subcommand("weights-info", "describe a weight sequence");
    std::string wi_weights, wi_window;
    long wi_n = 16;
    winfo->add_option("--weights", wi_weights, "weights JSON")->required();
    winfo->add_option("--window", wi_window, "averaging window JSON");
    winfo->add_option("--n", wi_n, "table size to print");

    // exact
    auto* ex = app.add_subcommand("exact", "exact h(x,delta) or H(x) with certified residual");
    std::string ex_model, ex_weights, ex_grid, ex_mode = "direct";
    double ex_delta = 1.0;
    bool ex_cumulative = false;
    long ex_paths = 200000, ex_horizon = 0, ex_seed = 0;
    ex->add_option("--model", ex_model)->required();
    ex->add_option("--weights", ex_weights)->required();
    ex->add_option("--x", ex_grid, "x values: from:to[:step] or comma list")->required();
    ex->add_option("--delta", ex_delta);
    ex->add_flag("--cumulative", ex_cumulative, "evaluate H(x) instead of h(x,delta)");
    ex->add_option("--mode", ex_mode, "direct|tilted|mc");
    ex->add_option("--paths", ex_paths);
    ex->add_option("--horizon", ex_horizon);
    ex->add_option("--seed", ex_seed);

    // predict
    auto* pr = app.add_subcommand("predict", "evaluate one asymptotic predictor");
    std::string pr_formula, pr_model, pr_weights, pr_window;
    double pr_x = 0, pr_delta = 1.0, pr_r = 2.0, pr_cm = 0.0, pr_cp = 0.0, pr_q = 0.0,
           pr_width = 1.0;
    pr->add_option("--formula", pr_formula,
                   "blackwell|weighted|H_rvf|lrv_sum|h_plus|cramer_nonlattice|cramer_arith")
        ->required();
    pr->add_option("--model", pr_model)->required();
    pr->add_option("--weights", pr_weights)->required();
    pr->add_option("--window", pr_window);
    pr->add_option("--x", pr_x)->required();
    pr->add_option("--delta", pr_delta);
    pr->add_option("--r", pr_r);
    pr->add_option("--c-minus", pr_cm);
    pr->add_option("--c-plus", pr_cp);
    pr->add_option("--q", pr_q);
    pr->add_option("--lrv-width", pr_width);

    // compare
    auto* cmp = app.add_subcommand("compare", "run one scenario file and report");
    std::string cmp_scenario, cmp_out;
    long cmp_seed = -1;
    cmp->add_option("--scenario", cmp_scenario, "scenario JSON (inline or @file)")->required();
    cmp->add_option("--out", cmp_out, "write the row CSV here");
    cmp->add_option("--seed", cmp_seed, "seed override");

    // scan
    auto* sc = app.add_subcommand("scan", "integro-local approximation error scan");
    std::string sc_model, sc_ns = "25,100,400";
    double sc_delta = 0.0;
    sc->add_option("--model", sc_model)->required();
    sc->add_option("--n", sc_ns, "comma list of walk lengths");
    sc->add_option("--delta", sc_delta, "window width (default: the span)");

    // check
    auto* ch = app.add_subcommand("check", "side-condition or inequality checks");
    std::string ch_condition, ch_model, ch_weights, ch_window, ch_grid = "32:4096:x2";
    bool ch_lemma3 = false;
    long ch_n = 100, ch_seed = 1;
    double ch_x = 30.0, ch_delta = 1.0, ch_r = 2.0;
    ch->add_option("--condition", ch_condition, "lin|VaA|VaA+|aW|aW+|F+o");
    ch->add_flag("--lemma3", ch_lemma3, "first-passage inequality check");
    ch->add_option("--model", ch_model)->required();
    ch->add_option("--weights", ch_weights);
    ch->add_option("--window", ch_window);
    ch->add_option("--grid", ch_grid, "x grid: from:to[:step] or comma list");
    ch->add_option("--n", ch_n);
    ch->add_option("--x", ch_x);
    ch->add_option("--delta", ch_delta);
    ch->add_option("--r", ch_r);
    ch->add_option("--seed", ch_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_config, run_out, run_seed, run_tol, run_jobs);
        if (*list) return cmd_list(list_dir);

        if (*dist) {
            JumpModel m = model_from_json(json_arg(dist_model));
            json out{{"describe", m.describe()},
                     {"mean", m.mean()},
                     {"variance", m.variance_finite() ? json(m.variance()) : json("infinite")},
                     {"mgf_domain", {m.mgf_lo() == -kInf ? json("-inf") : json(m.mgf_lo()),
                                     m.mgf_hi() == kInf ? json("inf") : json(m.mgf_hi())}}};
            if (m.is_lattice()) {
                out["span"] = m.span();
                out["support"] = {m.min_support(), m.max_support()};
                if (m.cut_mass() > 0.0) out["cut_mass"] = m.cut_mass();
            }
            if (m.right_tail())
                out["right_tail"] = {{"index", m.right_tail()->index},
                                     {"const", m.right_tail()->constant}};
            if (m.left_tail())
                out["left_tail"] = {{"index", m.left_tail()->index},
                                    {"const", m.left_tail()->constant}};
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (*winfo) {
            WeightSeq w = weights_from_json(json_arg(wi_weights));
            AveragingWindow win = wi_window.empty() ? default_window(w)
                                                    : window_from_json(json_arg(wi_window));
            AveragedSeq avg(w, win);
            json rows = json::array();
            for (long n = 0; n <= wi_n; ++n) {
                auto s = avg.partial_sums(static_cast<std::size_t>(n));
                rows.push_back({{"n", n},
                                {"a", avg.a(static_cast<std::size_t>(n))},
                                {"avg", avg.avg(static_cast<std::size_t>(n))},
                                {"A_tilde", s.a_tilde},
                                {"A", s.a},
                                {"A_abs", s.a_abs},
                                {"B", s.b}});
            }
            std::cout << json{{"describe", w.describe()}, {"window", win.describe()},
                              {"rows", rows}}
                             .dump(2)
                      << "\n";
            return 0;
        }

        if (*ex) {
            JumpModel m = model_from_json(json_arg(ex_model));
            WeightSeq w = weights_from_json(json_arg(ex_weights));
            auto xs = parse_grid_arg(ex_grid);
            std::printf("x,delta,value,residual_bound,n_max,method\n");
            if (ex_cumulative) {
                for (double x : xs) {
                    auto e = H_exact(m, w, x);
                    std::printf("%.17g,,%.17g,%.17g,%zu,%s\n", x, e.value, e.residual, e.n_max,
                                e.method.c_str());
                }
            } else if (ex_mode == "mc") {
                for (double x : xs) {
                    std::size_t horizon = ex_horizon > 0
                                              ? static_cast<std::size_t>(ex_horizon)
                                              : default_mc_horizon(m, x, ex_delta);
                    auto e = h_mc(m, w, x, ex_delta, static_cast<std::size_t>(ex_paths), horizon,
                                  static_cast<std::uint64_t>(ex_seed));
                    std::printf("%.17g,%.17g,%.17g,%.17g,%zu,mc\n", x, ex_delta, e.estimate,
                                e.std_error, e.horizon);
                }
            } else if (ex_mode == "tilted") {
                if (w.kind() != WeightSeq::Kind::Exp)
                    throw SchemaError("exact --mode tilted expects exp-modulated weights");
                for (double x : xs) {
                    auto e = h_exact_tilted(m, w.q(), w.base(), x, ex_delta);
                    std::printf("%.17g,%.17g,%.17g,%.17g,%zu,%s\n", x, ex_delta, e.value,
                                e.residual, e.n_max, e.method.c_str());
                }
            } else {
                auto ev = h_exact(m, w, xs, ex_delta);
                for (std::size_t i = 0; i < xs.size(); ++i)
                    std::printf("%.17g,%.17g,%.17g,%.17g,%zu,%s\n", xs[i], ex_delta, ev[i].value,
                                ev[i].residual, ev[i].n_max, ev[i].method.c_str());
            }
            return 0;
        }

        if (*pr) {
            JumpModel m = model_from_json(json_arg(pr_model));
            WeightSeq w = weights_from_json(json_arg(pr_weights));
            AveragingWindow win = pr_window.empty() ? default_window(w)
                                                    : window_from_json(json_arg(pr_window));
            AveragedSeq avg(w.kind() == WeightSeq::Kind::Exp ? w.base() : w, win);
            double mu = m.mean();
            Prediction p;
            if (pr_formula == "weighted" || pr_formula == "blackwell") {
                p = predict_weighted(pr_x, pr_delta, mu, avg);
            } else if (pr_formula == "H_rvf") {
                double gamma = w.kind() == WeightSeq::Kind::Power ? w.gamma() : 0.0;
                p = predict_H_rvf(pr_x, mu, gamma, w);
            } else if (pr_formula == "lrv_sum") {
                double cm = pr_cm > 0 ? pr_cm : 1.0 / (2.0 * mu);
                double cp = pr_cp > 0 ? pr_cp : 2.0 / mu;
                p = predict_lrv_sum(m, w, pr_x, pr_delta, cm, cp, pr_width);
            } else if (pr_formula == "h_plus") {
                p = predict_h_plus(m, avg, pr_x, pr_delta, pr_r);
            } else if (pr_formula == "cramer_nonlattice" || pr_formula == "cramer_arith") {
                double q = w.kind() == WeightSeq::Kind::Exp ? w.q() : pr_q;
                TiltContext ctx = solve_lambda_q(m, q);
                p = predict_cramer(pr_x, pr_delta, ctx, avg,
                                   pr_formula == "cramer_arith" ? CramerForm::Arithmetic
                                                                : CramerForm::NonLattice);
            } else {
                throw SchemaError("predict: unknown formula '" + pr_formula + "'");
            }
            std::cout << to_json(p).dump(2) << "\n";
            return 0;
        }

        if (*cmp) {
            json sj = json_arg(cmp_scenario);
            Scenario s = scenario_from_json(sj);
            if (cmp_seed >= 0) s.seed = static_cast<std::uint64_t>(cmp_seed);
            Report rep = run_comparison(s);
            if (!cmp_out.empty()) write_report_csv(cmp_out, rep);
            std::cout << summary_json(rep).dump(2) << "\n";
            return rep.all_pass ? 0 : 1;
        }

        if (*sc) {
            JumpModel m = model_from_json(json_arg(sc_model));
            std::vector<std::size_t> ns;
            for (double v : parse_grid_arg(sc_ns)) ns.push_back(static_cast<std::size_t>(v));
            auto rows = stone_shepp_scan(m, ns, sc_delta);
            std::cout << scan_csv(rows);
            return 0;
        }

        if (*ch) {
            JumpModel m = model_from_json(json_arg(ch_model));
            if (ch_lemma3) {
                auto rec = lemma3_check(m, static_cast<std::size_t>(ch_n), ch_x, ch_delta,
                                        static_cast<std::uint64_t>(ch_seed));
                json out{{"x", rec.x},
                         {"delta", rec.delta},
                         {"delta_used", rec.delta_used},
                         {"n", rec.n},
                         {"gamma", rec.gamma},
                         {"gamma_error", rec.gamma_error},
                         {"fplus_delta", rec.fplus_delta},
                         {"head", {{"lhs", rec.lhs_head}, {"rhs", rec.rhs_head},
                                   {"margin", rec.margin_head}}},
                         {"tail", {{"lhs", rec.lhs_tail}, {"lhs_bound", rec.lhs_tail_bound},
                                   {"rhs", rec.rhs_tail}, {"rhs_error", rec.rhs_tail_error},
                                   {"margin", rec.margin_tail}}},
                         {"refined", rec.refined},
                         {"seed", rec.seed},
                         {"pass", rec.pass}};
                std::cout << out.dump(2) << "\n";
                return rec.pass ? 0 : 1;
            }
            if (ch_condition.empty())
                throw SchemaError("check: need --condition or --lemma3");
            if (ch_weights.empty())
                throw SchemaError("check: --condition requires --weights");
            WeightSeq w = weights_from_json(json_arg(ch_weights));
            AveragingWindow win = ch_window.empty() ? default_window(w)
                                                    : window_from_json(json_arg(ch_window));
            AveragedSeq avg(w, win);
            std::vector<double> grid;
            if (ch_grid.find(":x2") != std::string::npos) {
                double from = 32, to = 4096;
                std::sscanf(ch_grid.c_str(), "%lf:%lf", &from, &to);
                for (double g = from; g <= to + 1e-9; g *= 2.0) grid.push_back(g);
            } else {
                grid = parse_grid_arg(ch_grid);
            }
            auto rep = check_condition(m, avg, condition_from_string(ch_condition), grid, ch_r);
            std::cout << to_json(rep).dump(2) << "\n";
            return rep.pass ? 0 : 1;
        }
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
