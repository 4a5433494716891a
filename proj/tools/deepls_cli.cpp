// deepls: command-line front end.
//
//   deepls solve --config run.json
//   deepls benchmark cylinder --epochs 500
//   deepls sweep --case cylinder --depths 2,4,6 --widths 8,16,32,64
//   deepls betti --config1 a.json --config2 b.json
//   deepls export-field --analytic cylinder --grid 100
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "deepls/deepls.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace deepls;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> lbfgs_iters;
    bool quiet = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--seed", f.seed, "Seed for network initialisation and sampling");
    app->add_option("--out-dir", f.out_dir, "Output directory (overrides the config)");
    app->add_option("--epochs", f.epochs, "Adam epochs");
    app->add_option("--lbfgs-iters", f.lbfgs_iters, "L-BFGS iterations");
    app->add_flag("--quiet", f.quiet, "Suppress progress output");
}

void apply(RunConfig& c, const CommonFlags& f) {
    if (f.seed) c.set_seed(*f.seed);
    if (!f.out_dir.empty()) c.output.directory = f.out_dir;
    if (f.epochs) c.adam.epochs = *f.epochs;
    if (f.lbfgs_iters) c.lbfgs.max_iters = *f.lbfgs_iters;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const auto& t : split(s)) {
        try {
            out.push_back(std::stoi(t));
        } catch (const std::exception&) {
            throw ConfigError(std::string("--") + what + ": '" + t + "' is not an integer");
        }
    }
    if (out.empty()) throw ConfigError(std::string("--") + what + " needs at least one value");
    return out;
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir.empty() ? "out" : dir);
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

json loss_json(const LossBreakdown& lb) {
    return {{"pi", lb.pi}, {"lambda", lb.lambda}, {"total", lb.total}};
}

json error_json(const ErrorReport& r) {
    return {{"l2_p", r.l2_p}, {"l2_u", r.l2_u}, {"rel_l2_p", r.rel_p}, {"rel_l2_u", r.rel_u}, {"n_mc", r.n_mc},
            {"seed", r.seed}};
}

json betti_json(const BettiReport& b) {
    json j = {{"I12", b.I12}, {"I21", b.I21}, {"R_B", b.R_B}, {"eta_B", b.eta_B}, {"n_quad", b.n_quad}};
    if (b.degenerate) {
        j["eta_B"] = nullptr;
        j["status"] = "degenerate";
    }
    return j;
}

std::optional<Reference> reference_for(const RunConfig& c) {
    if (c.benchmark == "cylinder") return make_reference(cylinder_solution({}));
    if (c.benchmark == "sphere") return make_reference(sphere_solution({}));
    if (c.benchmark == "layered") return make_reference(layered_solution({}));
    return std::nullopt;
}

struct SolveOutput {
    TrainResult result;
    json summary;
};

// Trains one configuration and writes the resolved config, loss history,
// checkpoints, summary and field export into c.output.directory.
SolveOutput run_solve(const RunConfig& c, bool quiet, const std::string& tag = "") {
    const fs::path dir = prepare_dir(c.output.directory);
    const std::string pre = tag.empty() ? "" : tag + "_";
    write_json(dir / (pre + "resolved_config.json"), to_json(c));

    TrainSpec spec = c.train_spec();
    spec.verbose = !quiet;
    const Network probe(spec.network);
    const fs::path ck = dir / (pre + "checkpoint.dlsp");
    EpochCallback cb;
    if (c.output.checkpoint_interval > 0)
        cb = [&](std::size_t epoch, const TrainerState& st) {
            if ((epoch + 1) % c.output.checkpoint_interval == 0)
                write_checkpoint(ck.string(), probe, st.theta, {{"stage", "adam"}, {"epoch", epoch + 1}});
        };
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult r = train(spec, cb);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const TrainerState& st = r.state;

    write_checkpoint((dir / (pre + "final.dlsp")).string(), r.network, st.theta,
                     {{"adam_iterations", st.adam_iterations}, {"lbfgs_iterations", st.lbfgs_iterations}});
    {
        std::ofstream h(dir / (pre + "loss_history.csv"));
        st.history.write_csv(h);
    }
    {
        const Matrix X = export_grid(c.problem.domain, c.output.export_grid);
        std::ofstream f(dir / (pre + "field.csv"));
        write_field_csv(f, X, r.network.evaluate(st.theta, X, false), c.problem.material);
    }
    json summary = {{"adam_epochs", st.adam_epochs},
                    {"adam_iterations", st.adam_iterations},
                    {"lbfgs_iterations", st.lbfgs_iterations},
                    {"lbfgs_status", to_string(st.lbfgs_status)},
                    {"recoveries", st.recoveries},
                    {"final_learning_rate", st.learning_rate},
                    {"loss_after_adam", loss_json(st.loss_after_adam)},
                    {"loss_final", loss_json(st.loss_after_lbfgs)},
                    {"parameters", r.network.parameter_count()},
                    {"wall_seconds", secs},
                    {"status", "ok"}};
    if (auto ref = reference_for(c))
        summary["errors"] = error_json(error_report(network_field(r.network, st.theta), c.problem.material,
                                                   c.problem.domain, *ref, c.output.n_mc, mix_seed(c.network.seed, 77)));
    write_json(dir / (pre + "summary.json"), summary);
    return {std::move(r), summary};
}

int cmd_solve(const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("solve needs --config");
    RunConfig c = load_config(f.config);
    apply(c, f);
    const auto out = run_solve(c, f.quiet);
    std::cout << out.summary.dump(2) << '\n';
    return 0;
}

int cmd_benchmark(const std::string& name, const CommonFlags& f) {
    RunConfig c = f.config.empty() ? benchmark_config(name) : load_config(f.config);
    c.benchmark = name;
    apply(c, f);
    if (f.out_dir.empty()) c.output.directory = "out/" + name;
    if (name != "footing") {
        const auto out = run_solve(c, f.quiet);
        std::cout << out.summary.at("errors").dump(2) << '\n';
        return 0;
    }
    // Two load patterns for reciprocity plus a finer run for cross-resolution
    // consistency, since the footing problem has no closed form.
    RunConfig mirrored = c;
    std::vector<std::size_t> loaded;
    for (std::size_t i = 0; i < c.problem.segments.size(); ++i)
        if (c.problem.segments[i].is_pressure()) loaded.push_back(i);
    if (loaded.size() != 2) throw ConfigError("footing benchmark expects exactly two pressure segments");
    std::swap(mirrored.problem.segments[loaded[0]].value, mirrored.problem.segments[loaded[1]].value);
    RunConfig fine = c;
    fine.sampling.n_interior *= 2;
    fine.sampling.n_boundary *= 2;
    const auto a = run_solve(c, f.quiet, "pattern1");
    const auto b = run_solve(mirrored, f.quiet, "pattern2");
    const auto h = run_solve(fine, f.quiet, "pattern1_fine");
    const BettiReport br = betti_residual({network_field(a.result.network, a.result.state.theta), c.problem.segments},
                                          {network_field(b.result.network, b.result.state.theta), mirrored.problem.segments},
                                          c.problem.material);
    const ErrorReport xr = field_difference(network_field(a.result.network, a.result.state.theta),
                                            network_field(h.result.network, h.result.state.theta), c.problem.material,
                                            c.problem.domain, c.output.n_mc, 99);
    json report = betti_json(br);
    report["cross_resolution"] = {{"rel_l2_p", xr.rel_p}, {"rel_l2_u", xr.rel_u},
                                  {"n_interior", {c.sampling.n_interior, fine.sampling.n_interior}}};
    write_json(prepare_dir(c.output.directory) / "betti.json", report);
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_sweep(const std::string& which, const std::string& depths, const std::string& widths, const std::string& seeds,
              const CommonFlags& f) {
    RunConfig c = f.config.empty() ? benchmark_config(which) : load_config(f.config);
    c.benchmark = which;
    apply(c, f);
    auto ref = reference_for(c);
    if (!ref) throw ConfigError("sweep needs a benchmark with a closed-form reference (cylinder, sphere, layered)");
    SweepSpec s;
    s.base = c.train_spec();
    s.reference = *ref;
    s.depths = parse_ints(depths, "depths");
    s.widths = parse_ints(widths, "widths");
    for (int v : parse_ints(seeds, "seeds")) s.seeds.push_back(static_cast<std::uint64_t>(v));
    s.n_mc = c.output.n_mc;
    const auto rows = capacity_sweep(s);
    const fs::path dir = prepare_dir(f.out_dir.empty() ? "out/sweep" : f.out_dir);
    std::ofstream csv(dir / "sweep.csv");
    write_sweep_csv(rows, csv);
    if (!f.quiet) write_sweep_csv(rows, std::cout);
    return 0;
}

int cmd_betti(const std::string& cfg1, const std::string& cfg2, const std::string& ck1, const std::string& ck2,
              std::size_t n_quad, const CommonFlags& f) {
    if (cfg1.empty() || cfg2.empty()) throw ConfigError("betti needs --config1 and --config2");
    RunConfig c1 = load_config(cfg1), c2 = load_config(cfg2);
    apply(c1, f);
    apply(c2, f);
    auto state = [&](RunConfig& c, const std::string& ck, const char* tag) -> std::pair<Network, Vector> {
        if (!ck.empty()) {
            Checkpoint k = read_checkpoint(ck);
            return {Network(k.network), k.theta};
        }
        if (f.out_dir.empty()) c.output.directory = "out/betti";
        auto r = run_solve(c, f.quiet, tag).result;
        return {r.network, r.state.theta};
    };
    const auto s1 = state(c1, ck1, "state1");
    const auto s2 = state(c2, ck2, "state2");
    const BettiReport br = betti_residual({network_field(s1.first, s1.second), c1.problem.segments},
                                          {network_field(s2.first, s2.second), c2.problem.segments},
                                          c1.problem.material, n_quad);
    const json report = betti_json(br);
    write_json(prepare_dir(f.out_dir.empty() ? "out/betti" : f.out_dir) / "betti.json", report);
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_export(const std::string& analytic, const std::string& checkpoint, std::size_t grid, const std::string& output,
               const CommonFlags& f) {
    Matrix X;
    FieldBatch fb;
    MaterialModel mat;
    if (!analytic.empty()) {
        RunConfig c = benchmark_config(analytic);
        X = export_grid(c.problem.domain, grid);
        mat = c.problem.material;
        if (analytic == "cylinder") fb = analytic_field(cylinder_solution({}))(X);
        else if (analytic == "sphere") fb = analytic_field(sphere_solution({}))(X);
        else if (analytic == "layered") fb = analytic_field(layered_solution({}))(X);
        else throw ConfigError("no closed form for '" + analytic + "'");
    } else {
        if (checkpoint.empty() || f.config.empty())
            throw ConfigError("export-field needs --analytic NAME, or --checkpoint FILE with --config");
        const RunConfig c = load_config(f.config);
        const Checkpoint k = read_checkpoint(checkpoint);
        if (k.network.dim != c.problem.dim()) throw ConfigError("checkpoint dimension does not match the config domain");
        X = export_grid(c.problem.domain, grid);
        mat = c.problem.material;
        fb = Network(k.network).evaluate(k.theta, X, false);
    }
    if (output.empty() || output == "-") {
        write_field_csv(std::cout, X, fb, mat);
    } else {
        std::ofstream out(output);
        if (!out) throw ConfigError("cannot write " + output);
        write_field_csv(out, X, fb, mat);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Klinkenberg gas flow by deep least squares"};
    app.require_subcommand(1);

    CommonFlags solve_f;
    auto* solve = app.add_subcommand("solve", "Train on a configured problem");
    solve->add_option("--config", solve_f.config, "JSON run configuration")->required();
    add_common(solve, solve_f);

    CommonFlags bench_f;
    std::string bench_name;
    auto* bench = app.add_subcommand("benchmark", "Run a built-in benchmark");
    bench->add_option("name", bench_name, "cylinder, sphere, layered or footing")
        ->required()
        ->check(CLI::IsMember(benchmark_names()));
    bench->add_option("--config", bench_f.config, "JSON overrides replacing the built-in preset");
    add_common(bench, bench_f);

    CommonFlags sweep_f;
    std::string sweep_case = "cylinder", depths = "2,4,6", widths = "8,16,32,64", seeds = "1,2,3";
    auto* sweep = app.add_subcommand("sweep", "Depth/width capacity sweep");
    sweep->add_option("--case", sweep_case, "Benchmark with a closed form")->check(CLI::IsMember({"cylinder", "sphere", "layered"}));
    sweep->add_option("--depths", depths, "Comma-separated depths");
    sweep->add_option("--widths", widths, "Comma-separated widths");
    sweep->add_option("--seeds", seeds, "Comma-separated seeds");
    sweep->add_option("--config", sweep_f.config, "JSON configuration replacing the preset");
    add_common(sweep, sweep_f);

    CommonFlags betti_f;
    std::string cfg1, cfg2, ck1, ck2;
    std::size_t n_quad = 2000;
    auto* betti = app.add_subcommand("betti", "Betti reciprocity check between two states");
    betti->add_option("--config1", cfg1, "Configuration of state 1")->required();
    betti->add_option("--config2", cfg2, "Configuration of state 2")->required();
    betti->add_option("--checkpoint1", ck1, "Trained parameters of state 1 (skips training)");
    betti->add_option("--checkpoint2", ck2, "Trained parameters of state 2 (skips training)");
    betti->add_option("--n-quad", n_quad, "Quadrature points per segment");
    add_common(betti, betti_f);

    CommonFlags exp_f;
    std::string analytic, checkpoint, output;
    std::size_t grid = 100;
    auto* exp = app.add_subcommand("export-field", "Sample a field on a grid to CSV");
    exp->add_option("--analytic", analytic, "Closed-form solution name")->check(CLI::IsMember({"cylinder", "sphere", "layered"}));
    exp->add_option("--checkpoint", checkpoint, "Trained .dlsp parameters");
    exp->add_option("--config", exp_f.config, "Configuration the checkpoint was trained on");
    exp->add_option("--grid", grid, "Points per axis");
    exp->add_option("--output,-o", output, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*solve) return cmd_solve(solve_f);
        if (*bench) return cmd_benchmark(bench_name, bench_f);
        if (*sweep) return cmd_sweep(sweep_case, depths, widths, seeds, sweep_f);
        if (*betti) return cmd_betti(cfg1, cfg2, ck1, ck2, n_quad, betti_f);
        if (*exp) return cmd_export(analytic, checkpoint, grid, output, exp_f);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
