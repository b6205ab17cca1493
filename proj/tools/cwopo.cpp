#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwopo/degenerate.hpp"
#include "cwopo/errors.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/heralding_rates.hpp"
#include "cwopo/io.hpp"
#include "cwopo/mode_optimizer.hpp"
#include "cwopo/oracles.hpp"
#include "cwopo/parallel.hpp"

using namespace cwopo;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    double epsilon = 0.02;
    double T = 0.0;
    double dtc = 0.02;
    double eta_t = 1.0;
    double eta_s = 1.0;
    std::optional<double> box_width;
    double half_width = 10.0;
    std::size_t samples = 801;
    std::string output = "-";
    unsigned threads = 0;

    OpoParams params() const { return OpoParams(epsilon, eta_t, eta_s, dtc); }
    ClickMode click() const { return {0.0, dtc}; }
    WindowSpec window() const { return T > 0.0 ? WindowSpec::symmetric(T, box_width) : WindowSpec{}; }
    OptimizerConfig config() const {
        OptimizerConfig cfg;
        cfg.half_width = half_width;
        cfg.samples = samples;
        return cfg;
    }
};

void add_physics(CLI::App* app, Common& c, bool with_epsilon = true, bool with_T = true) {
    if (with_epsilon) app->add_option("--epsilon", c.epsilon, "Nonlinear gain epsilon/gamma")->capture_default_str();
    if (with_T) app->add_option("--T", c.T, "Dark window T*gamma (0 = none)")->capture_default_str();
    app->add_option("--dtc", c.dtc, "Click box width dt_c*gamma")->capture_default_str();
    app->add_option("--eta-t", c.eta_t, "Trigger detector efficiency")->capture_default_str();
    app->add_option("--eta-s", c.eta_s, "Signal detector efficiency")->capture_default_str();
    app->add_option("--box-width", c.box_width, "Vacuum box width (defaults to dtc)");
    app->add_option("--half-width", c.half_width, "Signal grid half width")->capture_default_str();
    app->add_option("--samples", c.samples, "Signal grid samples (odd)")->capture_default_str();
    app->add_option("-o,--output", c.output, "Output file, - for stdout")->capture_default_str();
}

void emit(const std::string& path, const CsvTable& table) {
    if (path == "-") {
        write_csv(std::cout, table);
        return;
    }
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open " + path);
    write_csv(out, table);
}

void emit_json(const std::string& path, const nlohmann::json& j) {
    if (path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open " + path);
    out << j.dump(2) << '\n';
}

void add_physics_meta(CsvTable& t, const Common& c) {
    t.add_meta("epsilon_over_gamma", c.epsilon);
    t.add_meta("T_gamma", c.T);
    t.add_meta("dtc_gamma", c.dtc);
    t.add_meta("eta_t", c.eta_t);
    t.add_meta("eta_s", c.eta_s);
}

enum class Method { automatic, fixed_point, gradient };

struct Optimized {
    OptimizationResult result;
    std::string method;
};

// Fixed-point iteration at T = 0, projected ascent otherwise. In automatic
// mode a fixed-point run that does not converge is continued by ascent.
Optimized run_optimizer(const OpoParams& p, const ClickMode& click, const WindowSpec& window, OptimizerConfig cfg,
                        Method method) {
    const bool dark = !window.boxes(click).empty();
    if (method == Method::gradient || dark) {
        if (method == Method::fixed_point) throw UsageError("fixed-point method needs --T 0");
        cfg.mode = ObjectiveMode::gradient_ascent;
        return {optimize_general(p, click, window, cfg), "gradient_ascent"};
    }
    try {
        return {optimize_fixed_point(p, click, cfg), "fixed_point"};
    } catch (const OptimizerNotConverged& e) {
        if (method == Method::fixed_point) throw;
        cfg.start = e.last().mode;
        cfg.mode = ObjectiveMode::gradient_ascent;
        return {optimize_general(p, click, window, cfg), "fixed_point+gradient_ascent"};
    }
}

const std::map<std::string, Method> kMethods{
    {"auto", Method::automatic}, {"fixed-point", Method::fixed_point}, {"gradient", Method::gradient}};

std::vector<double> linspace(double from, double to, int steps) {
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        v[static_cast<std::size_t>(i)] = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return v;
}

// ---- wigner-surface

struct WignerArgs {
    Common c;
    std::string mode = "exp";
    std::string mode_file;
    std::optional<double> reflectivity;
    double x_min = -3.0, x_max = 3.0;
    int points = 121;
    std::string json;
    Method method = Method::automatic;
};

int cmd_wigner(const WignerArgs& a) {
    const OpoParams p = a.c.params();
    const ClickMode click = a.c.click();
    const WindowSpec window = a.c.window();
    if (a.points < 2) throw UsageError("--points must be at least 2");
    if (a.reflectivity && a.c.T > 0.0) throw UsageError("the beam-splitter variant has no dark window");
    if (a.mode == "file" && a.mode_file.empty()) throw UsageError("--mode file needs --mode-file");
    std::optional<ModeGrid> loaded;
    if (a.mode == "file") {
        std::ifstream in(a.mode_file);
        if (!in) throw UsageError("cannot open " + a.mode_file);
        loaded = mode_from_table(read_csv(in));
    }

    ModeGrid f = exp_mode(click.t_c, a.c.half_width, a.c.samples);
    if (loaded) f = normalize(*loaded);
    if (a.mode == "optimized") f = run_optimizer(p, click, window, a.c.config(), a.method).result.mode;

    CsvTable t;
    t.kind = "wigner";
    add_physics_meta(t, a.c);
    t.add_meta("mode", a.mode);
    nlohmann::json debug;
    std::function<double(double, double)> w;
    if (a.reflectivity) {
        const Cov cov = build_cov_degenerate({p, *a.reflectivity}, f, click);
        const AxialWigner aw = click_condition_degenerate(cov);
        t.add_meta("F1", fidelity_degenerate(cov));
        t.add_meta("W00", aw(0.0, 0.0));
        t.add_meta("R", *a.reflectivity);
        debug = {{"covariance", to_json(cov)}, {"wigner", to_json(aw)}, {"F1", fidelity_degenerate(cov)}};
        w = aw;
    } else {
        const Cov cov = conditioned_covariance(p, f, click, window);
        const RadialWigner rw = click_condition(cov);
        t.add_meta("F1", fidelity_one_photon(cov));
        t.add_meta("W00", rw(0.0, 0.0));
        debug = {{"covariance", to_json(cov)}, {"wigner", to_json(rw)}, {"F1", fidelity_one_photon(cov)}};
        w = rw;
    }
    t.columns = {"x", "p", "W"};
    if (a.reflectivity) t.columns.emplace_back("R");
    const auto grid = linspace(a.x_min, a.x_max, a.points);
    for (double x : grid) {
        for (double q : grid) {
            std::vector<double> row{x, q, w(x, q)};
            if (a.reflectivity) row.push_back(*a.reflectivity);
            t.rows.push_back(std::move(row));
        }
    }
    emit(a.c.output, t);
    if (!a.json.empty()) emit_json(a.json, debug);
    return 0;
}

// ---- fidelity-sweep

struct SweepArgs {
    Common c;
    std::string param = "epsilon";
    double from = 0.0, to = 0.0;
    int steps = 2;
    bool optimize = true;
    Method method = Method::automatic;
};

int cmd_fidelity_sweep(const SweepArgs& a) {
    if (a.steps < 2) throw UsageError("--steps must be at least 2");
    const auto values = linspace(a.from, a.to, a.steps);
    std::vector<Common> points;
    for (double v : values) {
        Common c = a.c;
        if (a.param == "epsilon") c.epsilon = v;
        else if (a.param == "T") c.T = v;
        else if (a.param == "eta_t") c.eta_t = v;
        else if (a.param == "eta_s") c.eta_s = v;
        else throw UsageError("unknown sweep parameter " + a.param);
        c.params();  // validates
        c.window().boxes(c.click());
        points.push_back(c);
    }

    struct Row {
        double exp = NAN, opt = NAN;
        std::string failure, method;
    };
    std::vector<Row> rows(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const Common& c = points[i];
        Row& r = rows[i];
        try {
            r.exp = conditioned_fidelity(c.params(), exp_mode(0.0, c.half_width, c.samples), c.click(), c.window());
        } catch (const std::exception& e) {
            r.failure = std::string("exp_mode: ") + e.what();
        }
        if (!a.optimize) return;
        try {
            auto o = run_optimizer(c.params(), c.click(), c.window(), c.config(), a.method);
            r.opt = o.result.fidelity;
            r.method = o.method;
        } catch (const std::exception& e) {
            r.failure += (r.failure.empty() ? "" : "; ") + std::string("optimizer: ") + e.what();
        }
    }, a.c.threads);

    CsvTable t;
    t.kind = "fidelity_sweep";
    add_physics_meta(t, a.c);
    t.add_meta("param", a.param);
    t.add_meta("optimized", a.optimize ? "yes" : "no");
    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].failure.empty()) {
            ++failed;
            t.add_meta("failed_row", format_number(values[i]) + " " + rows[i].failure);
        } else if (rows[i].method == "fixed_point+gradient_ascent") {
            t.add_meta("fallback_row", format_number(values[i]) + " fixed point did not converge, finished by ascent");
        }
    }
    t.columns = {"param", "F1_exp_mode", "F1_optimized"};
    for (std::size_t i = 0; i < rows.size(); ++i) t.rows.push_back({values[i], rows[i].exp, rows[i].opt});
    emit(a.c.output, t);
    if (failed > 0) std::cerr << "warning: " << failed << " row(s) failed and are flagged in the header\n";
    return 0;
}

// ---- rate-sweep

struct RateArgs {
    Common c;
    double from = 0.01, to = 0.45;
    int steps = 45;
    std::vector<double> eta_t{1.0};
    std::vector<double> T{0.0};
};

int cmd_rate_sweep(const RateArgs& a) {
    if (a.steps < 2) throw UsageError("--steps must be at least 2");
    struct Point {
        OpoParams params;
        WindowSpec window;
        double T;
    };
    std::vector<Point> points;
    for (double eta : a.eta_t)
        for (double T : a.T)
            for (double e : linspace(a.from, a.to, a.steps)) {
                Common c = a.c;
                c.epsilon = e;
                c.eta_t = eta;
                c.T = T;
                points.push_back({c.params(), c.window(), T});
                points.back().window.boxes(c.click());
            }
    std::vector<double> rates(points.size(), NAN);
    std::vector<std::string> errors(points.size());
    const ClickMode click = a.c.click();
    parallel_for(points.size(), [&](std::size_t i) {
        try {
            rates[i] = production_rate_windowed(points[i].params, points[i].window, click);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }, a.c.threads);

    CsvTable t;
    t.kind = "rate_sweep";
    t.add_meta("dtc_gamma", a.c.dtc);
    t.add_meta("eta_s", a.c.eta_s);
    int failed = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!errors[i].empty()) {
            ++failed;
            t.add_meta("failed_row", format_number(points[i].params.epsilon()) + " " + errors[i]);
        }
    t.columns = {"epsilon_over_gamma", "T_gamma", "eta_t", "rate_over_gamma"};
    for (std::size_t i = 0; i < points.size(); ++i)
        t.rows.push_back({points[i].params.epsilon(), points[i].T, points[i].params.eta_t(), rates[i]});
    emit(a.c.output, t);
    return failed > 0 ? kExitNumerical : 0;
}

// ---- optimize-mode

struct OptimizeArgs {
    Common c;
    Method method = Method::automatic;
    std::string trace;
    double tol = 1e-9;
    double alpha = 0.5;
    int max_iter = 10000;
};

CsvTable trace_table(const std::vector<TraceEntry>& trace) {
    CsvTable t;
    t.kind = "optimizer_trace";
    t.columns = {"iteration", "fidelity", "residual"};
    for (const auto& e : trace) t.rows.push_back({static_cast<double>(e.iteration), e.fidelity, e.residual});
    return t;
}

int cmd_optimize(const OptimizeArgs& a) {
    const OpoParams p = a.c.params();
    const ClickMode click = a.c.click();
    const WindowSpec window = a.c.window();
    window.boxes(click);
    OptimizerConfig cfg = a.c.config();
    cfg.tol = a.tol;
    cfg.alpha = a.alpha;
    cfg.max_iter = a.max_iter;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    try {
        const auto o = run_optimizer(p, click, window, cfg, a.method);
        CsvTable t = mode_table(o.result.mode);
        add_physics_meta(t, a.c);
        t.add_meta("method", o.method);
        t.add_meta("fidelity", o.result.fidelity);
        t.add_meta("iterations", std::to_string(o.result.iterations));
        t.add_meta("residual", o.result.residual);
        emit(a.c.output, t);
        if (!a.trace.empty()) emit(a.trace, trace_table(o.result.trace));
        return 0;
    } catch (const OptimizerNotConverged& e) {
        const std::string path = !a.trace.empty() ? a.trace : (a.c.output == "-" ? "cwopo-trace.csv" : a.c.output + ".trace.csv");
        emit(path, trace_table(e.last().trace));
        std::cerr << "error: optimizer did not converge (residual " << format_number(e.residual())
                  << "); trace written to " << path << '\n';
        return kExitNumerical;
    }
}

// ---- covariance / oracle-mc

int cmd_covariance(const Common& c) {
    const OpoParams p = c.params();
    const ClickMode click = c.click();
    const WindowSpec window = c.window();
    const ModeGrid f = exp_mode(click.t_c, c.half_width, c.samples);
    CovOptions options;
    if (p.eta_t() == 0.0) options.click_efficiency = 1.0;
    const Cov ext = build_extended_cov(p, f, click, window, options);
    const Cov cond = vacuum_condition(ext);
    nlohmann::json j{{"extended", to_json(ext)}, {"conditioned", to_json(cond)}};
    if (cond(0, 0) - 1.0 > 1e-12) {
        j["wigner"] = to_json(click_condition(cond));
        j["F1"] = fidelity_one_photon(cond);
    }
    emit_json(c.output, j);
    return 0;
}

int cmd_oracle_mc(const Common& c, const oracle::McConfig& mc) {
    const Cov trig = build_trigger_cov(c.params(), c.click(), c.window());
    const double det = vac_click_probability(trig);
    const auto est = oracle::mc_vac_click(trig, mc);
    auto j = oracle::report(est, mc, det);
    j["boxes"] = trig.modes() - 1;
    emit_json(c.output, j);
    return est.agrees_with(det, mc.sigma_multiplier) ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heralded single-photon states from a cw OPO: Wigner functions, fidelities, rates, optimal modes"};
    app.require_subcommand(1);

    WignerArgs wa;
    auto* wig = app.add_subcommand("wigner-surface", "Click-conditioned Wigner function on an (x, p) grid");
    add_physics(wig, wa.c);
    wig->add_option("--mode", wa.mode, "Signal mode: exp, optimized or file")
        ->check(CLI::IsMember({"exp", "optimized", "file"}))->capture_default_str();
    wig->add_option("--mode-file", wa.mode_file, "Mode CSV for --mode file");
    wig->add_option("--method", wa.method, "Optimizer: auto, fixed-point, gradient")
        ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
    wig->add_option("--reflectivity", wa.reflectivity, "Degenerate source with beam splitter reflectivity R")
        ->check(CLI::Range(0.0, 1.0));
    wig->add_option("--x-min", wa.x_min)->capture_default_str();
    wig->add_option("--x-max", wa.x_max)->capture_default_str();
    wig->add_option("--points", wa.points, "Grid points per axis")->capture_default_str();
    wig->add_option("--json", wa.json, "Write covariance and Wigner coefficients as JSON");

    SweepArgs sa;
    auto* fid = app.add_subcommand("fidelity-sweep", "Fidelity of exp mode and optimized mode along a parameter");
    add_physics(fid, sa.c);
    fid->add_option("--param", sa.param, "epsilon, T, eta_t or eta_s")
        ->check(CLI::IsMember({"epsilon", "T", "eta_t", "eta_s"}))->capture_default_str();
    fid->add_option("--from", sa.from)->required();
    fid->add_option("--to", sa.to)->required();
    fid->add_option("--steps", sa.steps)->capture_default_str();
    fid->add_flag("--optimize,!--no-optimize", sa.optimize, "Optimize the mode at every point");
    fid->add_option("--method", sa.method, "Optimizer: auto, fixed-point, gradient")
        ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
    fid->add_option("--threads", sa.c.threads, "Worker threads (0 = all cores)");

    RateArgs ra;
    auto* rate = app.add_subcommand("rate-sweep", "Production rate versus epsilon");
    add_physics(rate, ra.c, false, false);
    rate->add_option("--from", ra.from)->capture_default_str();
    rate->add_option("--to", ra.to)->capture_default_str();
    rate->add_option("--steps", ra.steps)->capture_default_str();
    rate->remove_option(rate->get_option("--eta-t"));
    rate->add_option("--eta-t", ra.eta_t, "Trigger efficiencies (repeatable)")->capture_default_str();
    rate->add_option("--T", ra.T, "Dark windows T*gamma (repeatable)")->capture_default_str();
    rate->add_option("--threads", ra.c.threads, "Worker threads (0 = all cores)");

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize-mode", "Optimal signal mode function");
    add_physics(opt, oa.c);
    opt->add_option("--method", oa.method, "auto, fixed-point, gradient")
        ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
    opt->add_option("--trace", oa.trace, "Write the iteration trace here");
    opt->add_option("--tol", oa.tol)->capture_default_str();
    opt->add_option("--alpha", oa.alpha)->capture_default_str();
    opt->add_option("--max-iter", oa.max_iter)->capture_default_str();

    Common cc;
    auto* cov = app.add_subcommand("covariance", "Extended and conditioned covariance of the exp mode as JSON");
    add_physics(cov, cc);

    Common mc_common;
    oracle::McConfig mc;
    auto* orc = app.add_subcommand("oracle-mc", "Monte Carlo check of the click-and-vacuum probability");
    add_physics(orc, mc_common);
    orc->add_option("--seed", mc.seed)->capture_default_str();
    orc->add_option("--mc-samples", mc.samples)->capture_default_str();
    orc->add_option("--shards", mc.shards)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    set_warning_handler([](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; });
    try {
        if (*wig) return cmd_wigner(wa);
        if (*fid) return cmd_fidelity_sweep(sa);
        if (*rate) return cmd_rate_sweep(ra);
        if (*opt) return cmd_optimize(oa);
        if (*cov) return cmd_covariance(cc);
        if (*orc) return cmd_oracle_mc(mc_common, mc);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NoClickInformation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DegenerateModeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
