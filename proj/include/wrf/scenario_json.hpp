#pragma once

// JSON parsing and serialization for models, weights, scenarios and run
// configs. Validation is strict: unknown keys are rejected and every error
// names the offending field by path.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wrf/asym.hpp"
#include "wrf/harness.hpp"
#include "wrf/jump_model.hpp"
#include "wrf/weights.hpp"

namespace wrf {

using json = nlohmann::json;

// Schema violations are reported separately from computational failures so
// the CLI can map them to its own exit code.
class SchemaError : public std::runtime_error {
  public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace schema {

[[noreturn]] inline void bad(const std::string& path, const std::string& what) {
    throw SchemaError(path + ": " + what);
}

inline void require_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional) {
    if (!j.is_object()) bad(path, "expected an object");
    for (const char* k : required)
        if (!j.contains(k)) bad(path, std::string("missing required key '") + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : required) known = known || it.key() == k;
        for (const char* k : optional) known = known || it.key() == k;
        if (!known) bad(path + "." + it.key(), "unknown key");
    }
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

inline long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<long>();
}

inline std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

inline std::vector<double> num_array(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace schema

inline TailMajorant tail_from_json(const json& j, const std::string& path) {
    schema::require_keys(j, path, {"index", "const"}, {});
    TailMajorant t{schema::num(j.at("index"), path + ".index"),
                   schema::num(j.at("const"), path + ".const")};
    if (!(t.index > 0.0)) schema::bad(path + ".index", "must be > 0");
    if (!(t.constant > 0.0)) schema::bad(path + ".const", "must be > 0");
    return t;
}

inline JumpModel model_from_json(const json& j, const std::string& path = "model") {
    if (!j.is_object() || !j.contains("kind")) schema::bad(path, "expected an object with 'kind'");
    std::string kind = schema::str(j.at("kind"), path + ".kind");
    try {
        if (kind == "lattice") {
            schema::require_keys(j, path, {"kind", "offset", "probs"},
                                 {"right_tail", "left_tail"});
            auto m = JumpModel::lattice(schema::integer(j.at("offset"), path + ".offset"),
                                        schema::num_array(j.at("probs"), path + ".probs"));
            if (j.contains("right_tail"))
                m.declare_right_tail(tail_from_json(j.at("right_tail"), path + ".right_tail"));
            if (j.contains("left_tail"))
                m.declare_left_tail(tail_from_json(j.at("left_tail"), path + ".left_tail"));
            return m;
        }
        if (kind == "pareto_lattice") {
            schema::require_keys(j, path, {"kind", "alpha", "cut"}, {"left_tail"});
            auto m = JumpModel::pareto_lattice(schema::num(j.at("alpha"), path + ".alpha"),
                                               schema::integer(j.at("cut"), path + ".cut"));
            if (j.contains("left_tail"))
                m.declare_left_tail(tail_from_json(j.at("left_tail"), path + ".left_tail"));
            return m;
        }
        if (kind == "normal") {
            schema::require_keys(j, path, {"kind", "mu", "sigma"}, {});
            return JumpModel::normal(schema::num(j.at("mu"), path + ".mu"),
                                     schema::num(j.at("sigma"), path + ".sigma"));
        }
        if (kind == "shifted_exponential") {
            schema::require_keys(j, path, {"kind", "rate", "shift"}, {});
            return JumpModel::shifted_exponential(schema::num(j.at("rate"), path + ".rate"),
                                                  schema::num(j.at("shift"), path + ".shift"));
        }
        if (kind == "pareto_shifted") {
            schema::require_keys(j, path, {"kind", "alpha", "shift"}, {});
            return JumpModel::pareto_shifted(schema::num(j.at("alpha"), path + ".alpha"),
                                             schema::num(j.at("shift"), path + ".shift"));
        }
    } catch (const std::invalid_argument& e) {
        schema::bad(path, e.what());
    }
    schema::bad(path + ".kind", "unknown model kind '" + kind + "'");
}

inline WeightSeq weights_from_json(const json& j, const std::string& path = "weights") {
    if (!j.is_object() || !j.contains("kind")) schema::bad(path, "expected an object with 'kind'");
    std::string kind = schema::str(j.at("kind"), path + ".kind");
    try {
        if (kind == "constant") {
            schema::require_keys(j, path, {"kind", "c"}, {});
            return WeightSeq::constant(schema::num(j.at("c"), path + ".c"));
        }
        if (kind == "power") {
            schema::require_keys(j, path, {"kind", "gamma"}, {"scale"});
            double scale = j.contains("scale") ? schema::num(j.at("scale"), path + ".scale") : 1.0;
            return WeightSeq::power(schema::num(j.at("gamma"), path + ".gamma"), scale);
        }
        if (kind == "harmonic") {
            schema::require_keys(j, path, {"kind"}, {"scale"});
            double scale = j.contains("scale") ? schema::num(j.at("scale"), path + ".scale") : 1.0;
            return WeightSeq::harmonic(scale);
        }
        if (kind == "periodic") {
            schema::require_keys(j, path, {"kind", "pattern"}, {});
            return WeightSeq::periodic(schema::num_array(j.at("pattern"), path + ".pattern"));
        }
        if (kind == "table") {
            schema::require_keys(j, path, {"kind", "values"}, {});
            return WeightSeq::table(schema::num_array(j.at("values"), path + ".values"));
        }
        if (kind == "exp") {
            schema::require_keys(j, path, {"kind", "q", "base"}, {});
            return WeightSeq::exp_modulated(schema::num(j.at("q"), path + ".q"),
                                            weights_from_json(j.at("base"), path + ".base"));
        }
    } catch (const std::invalid_argument& e) {
        schema::bad(path, e.what());
    }
    schema::bad(path + ".kind", "unknown weight kind '" + kind + "'");
}

inline AveragingWindow window_from_json(const json& j, const std::string& path = "window") {
    if (!j.is_object() || !j.contains("kind")) schema::bad(path, "expected an object with 'kind'");
    std::string kind = schema::str(j.at("kind"), path + ".kind");
    try {
        if (kind == "constant") {
            schema::require_keys(j, path, {"kind", "d"}, {});
            return AveragingWindow::constant(schema::integer(j.at("d"), path + ".d"));
        }
        if (kind == "power") {
            schema::require_keys(j, path, {"kind", "delta"}, {});
            return AveragingWindow::power(schema::num(j.at("delta"), path + ".delta"));
        }
    } catch (const std::invalid_argument& e) {
        schema::bad(path, e.what());
    }
    schema::bad(path + ".kind", "unknown window kind '" + kind + "'");
}

inline std::vector<double> grid_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) schema::bad(path, "expected an object");
    if (j.contains("points")) {
        schema::require_keys(j, path, {"points"}, {});
        auto pts = schema::num_array(j.at("points"), path + ".points");
        std::sort(pts.begin(), pts.end());
        return pts;
    }
    schema::require_keys(j, path, {"from", "to"}, {"step"});
    double from = schema::num(j.at("from"), path + ".from");
    double to = schema::num(j.at("to"), path + ".to");
    double step = j.contains("step") ? schema::num(j.at("step"), path + ".step") : 1.0;
    if (!(step > 0.0)) schema::bad(path + ".step", "must be > 0");
    if (to < from) schema::bad(path + ".to", "must be >= from");
    std::vector<double> out;
    for (double x = from; x <= to + 1e-9; x += step) out.push_back(x);
    return out;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "scenario") {
    schema::require_keys(j, path, {"id", "model", "weights", "formula", "grid", "delta"},
                         {"description", "window", "method", "tolerance", "pass_region", "seed",
                          "r", "c_minus", "c_plus", "q", "lrv_width", "mc_paths", "mc_horizon",
                          "conditions"});
    Scenario s;
    s.id = schema::str(j.at("id"), path + ".id");
    if (j.contains("description")) s.description = schema::str(j.at("description"), path + ".description");
    s.model = model_from_json(j.at("model"), path + ".model");
    s.weights = weights_from_json(j.at("weights"), path + ".weights");
    s.window = j.contains("window") ? window_from_json(j.at("window"), path + ".window")
                                    : default_window(s.weights);
    s.formula = schema::str(j.at("formula"), path + ".formula");
    s.grid = grid_from_json(j.at("grid"), path + ".grid");
    s.delta = schema::num(j.at("delta"), path + ".delta");
    if (!(s.delta > 0.0)) schema::bad(path + ".delta", "must be > 0");
    if (j.contains("method")) {
        std::string m = schema::str(j.at("method"), path + ".method");
        if (m == "direct") s.method = EvalMethod::Direct;
        else if (m == "tilted") s.method = EvalMethod::Tilted;
        else if (m == "mc") s.method = EvalMethod::Mc;
        else schema::bad(path + ".method", "expected direct|tilted|mc");
    }
    if (j.contains("tolerance")) {
        s.tolerance = schema::num(j.at("tolerance"), path + ".tolerance");
        if (!(s.tolerance > 0.0)) schema::bad(path + ".tolerance", "must be > 0");
    }
    if (j.contains("pass_region")) {
        std::string r = schema::str(j.at("pass_region"), path + ".pass_region");
        if (r == "all") s.region = PassRegion::All;
        else if (r == "top_half") s.region = PassRegion::TopHalf;
        else if (r == "last") s.region = PassRegion::Last;
        else schema::bad(path + ".pass_region", "expected all|top_half|last");
    }
    if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(schema::integer(j.at("seed"), path + ".seed"));
    if (j.contains("r")) s.r = schema::num(j.at("r"), path + ".r");
    if (j.contains("c_minus")) s.c_minus = schema::num(j.at("c_minus"), path + ".c_minus");
    if (j.contains("c_plus")) s.c_plus = schema::num(j.at("c_plus"), path + ".c_plus");
    if (j.contains("q")) s.q = schema::num(j.at("q"), path + ".q");
    if (j.contains("lrv_width")) s.lrv_width = schema::num(j.at("lrv_width"), path + ".lrv_width");
    if (j.contains("mc_paths"))
        s.mc_paths = static_cast<std::size_t>(schema::integer(j.at("mc_paths"), path + ".mc_paths"));
    if (j.contains("mc_horizon"))
        s.mc_horizon = static_cast<std::size_t>(schema::integer(j.at("mc_horizon"), path + ".mc_horizon"));
    if (j.contains("conditions")) {
        const json& c = j.at("conditions");
        if (!c.is_array()) schema::bad(path + ".conditions", "expected an array");
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::string id = schema::str(c[i], path + ".conditions[" + std::to_string(i) + "]");
            try {
                s.conditions.push_back(condition_from_string(id));
            } catch (const std::invalid_argument& e) {
                schema::bad(path + ".conditions[" + std::to_string(i) + "]", e.what());
            }
        }
    }
    static const char* known[] = {"blackwell", "weighted", "H_rvf", "lrv_sum",
                                  "h_plus",    "cramer_nonlattice", "cramer_arith"};
    bool ok = false;
    for (const char* k : known) ok = ok || s.formula == k;
    if (!ok) schema::bad(path + ".formula", "unknown formula '" + s.formula + "'");
    return s;
}

struct RunConfig {
    std::vector<Scenario> scenarios;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::optional<double> tolerance_override;
};

inline json load_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw SchemaError(file + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError(file + ": " + e.what());
    }
    return j;
}

// Scenario entries may be inline objects or strings naming scenario files,
// resolved relative to `base_dir` when given.
inline RunConfig config_from_json(const json& j, const std::string& base_dir = "") {
    schema::require_keys(j, "config", {"scenarios"}, {"out_dir", "seed", "tolerance"});
    RunConfig cfg;
    const json& arr = j.at("scenarios");
    if (!arr.is_array() || arr.empty())
        schema::bad("config.scenarios", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string path = "config.scenarios[" + std::to_string(i) + "]";
        if (arr[i].is_string()) {
            std::string file = arr[i].get<std::string>();
            if (!base_dir.empty() && file.find('/') != 0) file = base_dir + "/" + file;
            cfg.scenarios.push_back(scenario_from_json(load_json_file(file), path + "<" + file + ">"));
        } else {
            cfg.scenarios.push_back(scenario_from_json(arr[i], path));
        }
    }
    if (j.contains("out_dir")) cfg.out_dir = schema::str(j.at("out_dir"), "config.out_dir");
    if (j.contains("seed"))
        cfg.seed = static_cast<std::uint64_t>(schema::integer(j.at("seed"), "config.seed"));
    if (j.contains("tolerance")) {
        cfg.tolerance_override = schema::num(j.at("tolerance"), "config.tolerance");
        if (!(*cfg.tolerance_override > 0.0)) schema::bad("config.tolerance", "must be > 0");
    }
    return cfg;
}

// ---- serialization -------------------------------------------------------------

inline json to_json(const Prediction& p) {
    json inputs{{"x", p.x}, {"delta", p.delta}, {"mu", p.mu}, {"avg", p.avg}};
    if (p.lambda_q) inputs["lambda_q"] = *p.lambda_q;
    if (p.mu_q) inputs["mu_q"] = *p.mu_q;
    if (p.q) inputs["q"] = *p.q;
    if (p.gamma) inputs["gamma"] = *p.gamma;
    if (p.r) inputs["r"] = *p.r;
    if (p.c_minus) inputs["c_minus"] = *p.c_minus;
    if (p.c_plus) inputs["c_plus"] = *p.c_plus;
    if (p.second_term) inputs["second_term"] = *p.second_term;
    return json{{"formula", p.formula}, {"value", p.value}, {"inputs", inputs}};
}

inline json to_json(const ConditionReport& r) {
    json j{{"condition", to_string(r.id)}, {"verdict", r.verdict}, {"pass", r.pass}};
    if (!r.xs.empty()) {
        j["x"] = r.xs;
        j["ratio"] = r.ratios;
    } else {
        j["partial_sum"] = r.partial_sum;
        j["remainder_bound"] = std::isfinite(r.remainder_bound)
                                   ? json(r.remainder_bound)
                                   : json("infinite");
    }
    return j;
}

inline json to_json(const StableCalibration& c) {
    return json{{"scale_factor", c.scale_factor}, {"empirical_mad", c.empirical_mad},
                {"stable_mad", c.stable_mad},     {"n_cal", c.n_cal},
                {"absorbed", c.absorbed}};
}

inline json summary_json(const Report& r) {
    json j{{"scenario", r.scenario_id},
           {"rows", r.rows.size()},
           {"max_ratio_err_top_half", r.max_ratio_err_top_half},
           {"trend", r.trend_pass ? "pass" : "fail"},
           {"pass", r.all_pass},
           {"delta", r.delta},
           {"tolerance", r.tolerance},
           {"seed", r.seed}};
    if (r.calibration) j["calibration"] = to_json(*r.calibration);
    if (!r.conditions.empty()) {
        json cs = json::array();
        for (const auto& c : r.conditions) cs.push_back(to_json(c));
        j["conditions"] = cs;
    }
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

}  // namespace wrf
