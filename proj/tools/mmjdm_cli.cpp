// Command-line front end: simulate paths, estimate parameters from prices,
// and suggest jump thresholds.
//
// Exit codes: 0 success, 2 validation or input error, 3 numerical failure.

#include "mmjdm/mmjdm.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace mmjdm;

namespace
{

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_output(const fs::path &path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<double> prices_of(const std::vector<PriceRecord> &records)
{
    std::vector<double> prices;
    prices.reserve(records.size());
    for (const auto &r : records)
        prices.push_back(r.price);
    return prices;
}

struct SimulateArgs
{
    std::string params;
    std::string out = "prices.csv";
    std::string latent_out;
    bool with_latent = false;
    std::uint64_t seed = 1;
    std::optional<double> delta;
    std::optional<int> steps;
};

int cmd_simulate(const SimulateArgs &args)
{
    ParameterFile file = load_parameters(args.params, VolatilityRule::nonnegative);
    if (args.delta)
        file.grid.delta = *args.delta;
    if (args.steps)
        file.grid.intervals = *args.steps;
    validate(file.grid);

    Rng rng = split_stream(args.seed, {static_cast<std::uint64_t>(Stage::simulate)});
    const SimulatedPath path = simulate_mmjdm(file.params, file.grid, rng);

    auto out = open_output(args.out);
    write_price_csv(out, path.prices, file.grid);

    json echo = parameters_to_json(file.params, file.grid);
    echo["seed"] = args.seed;
    echo["prices_csv"] = args.out;
    echo["latent_jumps"] = path.latent.jumps();
    if (args.with_latent)
    {
        fs::path latent = args.latent_out;
        if (latent.empty())
            latent = fs::path(args.out).replace_extension(".latent.csv");
        auto lout = open_output(latent);
        write_latent_csv(lout, path);
        echo["latent_csv"] = latent.string();
    }
    std::cout << echo.dump(2) << '\n';
    return 0;
}

struct EstimateArgs
{
    std::string prices;
    CsvColumns columns;
    int states = 0;
    std::optional<double> threshold;
    std::optional<double> threshold_sq;
    bool suggest = false;
    double multiplier = 5.0;
    double delta = 1.0;
    EmOptions em;
    std::string em_init;
    int sem_iters = 1000;
    std::optional<int> sem_burn_in;
    double ci_level = 0.95;
    std::string q_init;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

json suggestion_json(const ThresholdSuggestion &s, double multiplier)
{
    return json{{"threshold", s.threshold},
                {"threshold_sq", s.threshold * s.threshold},
                {"robust_scale", s.robust_scale},
                {"multiplier", multiplier},
                {"degenerate", s.degenerate}};
}

int cmd_estimate(const EstimateArgs &args)
{
    const auto records = ingest_csv(args.prices, args.columns);
    const auto prices = prices_of(records);

    if (args.suggest)
    {
        const auto s = suggest_threshold(log_yields(prices, args.delta), args.multiplier);
        std::cout << suggestion_json(s, args.multiplier).dump(2) << '\n';
        if (s.degenerate)
            std::cerr << "warning: yields have zero robust scale; no usable threshold\n";
        return 0;
    }

    EstimateConfig config;
    config.states = args.states;
    if (args.threshold)
        config.threshold = *args.threshold;
    else if (args.threshold_sq)
    {
        if (!(*args.threshold_sq > 0.0))
            throw ValidationError("--threshold-sq must be positive");
        config.threshold = std::sqrt(*args.threshold_sq);
    }
    else
        throw ValidationError("a jump threshold is required: pass --threshold or --threshold-sq "
                              "(see --suggest-threshold for an advisory value)");
    config.delta = args.delta;
    config.em = args.em;
    if (!args.em_init.empty())
        config.em_init = load_mixture_init(args.em_init);
    config.sem.iterations = args.sem_iters;
    if (args.sem_burn_in)
        config.sem.burn_in = *args.sem_burn_in;
    config.sem.ci_level = args.ci_level;
    if (!args.q_init.empty())
        config.q_init = load_generator(args.q_init);
    config.seed = args.seed;

    const EstimateReport rep = run_estimate(prices, config);

    const fs::path dir(args.out_dir);
    json report = report_to_json(rep);
    report["input"] = {{"prices", args.prices}, {"records", records.size()}, {"seed", args.seed}};
    {
        auto out = open_output(dir / "report.json");
        out << report.dump(2) << '\n';
    }
    {
        auto out = open_output(dir / "em_trace.csv");
        write_em_trace_csv(out, rep.em.loglik_trace);
    }
    {
        auto out = open_output(dir / "sem_trace.csv");
        write_sem_trace_csv(out, rep.sem.trace);
    }
    {
        auto out = open_output(dir / "segments.csv");
        write_segments_csv(out, rep.partial);
    }
    std::cout << report.dump(2) << '\n';
    for (const auto &w : rep.warnings)
        std::cerr << "warning: " << w << '\n';
    return 0;
}

struct CalibrateArgs
{
    std::string prices;
    CsvColumns columns;
    double multiplier = 5.0;
    double delta = 1.0;
};

int cmd_calibrate(const CalibrateArgs &args)
{
    const auto prices = prices_of(ingest_csv(args.prices, args.columns));
    const auto s = suggest_threshold(log_yields(prices, args.delta), args.multiplier);
    std::cout << suggestion_json(s, args.multiplier).dump(2) << '\n';
    if (s.degenerate)
        std::cerr << "warning: yields have zero robust scale; no usable threshold\n";
    return 0;
}

void add_columns(CLI::App *cmd, CsvColumns &columns)
{
    cmd->add_option("--date-col", columns.date, "Name of the date/index column")->capture_default_str();
    cmd->add_option("--price-col", columns.price, "Name of the price column")->capture_default_str();
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Markov-modulated jump-diffusion simulation and estimation"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "Simulate a price path from a parameter file");
    simulate->add_option("--params", sim.params, "Parameter file (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out, "Price CSV (t,price)")->capture_default_str();
    simulate->add_flag("--with-latent", sim.with_latent, "Also write the latent trajectory (tau,state,jump_log_size)");
    simulate->add_option("--latent-out", sim.latent_out, "Latent CSV path (default: <out>.latent.csv)");
    simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    simulate->add_option("--delta", sim.delta, "Override the sampling interval");
    simulate->add_option("--steps", sim.steps, "Override the number of intervals M");

    EstimateArgs est;
    auto *estimate = app.add_subcommand("estimate", "Estimate all parameters from a price CSV");
    estimate->add_option("--prices", est.prices, "Price CSV")->required()->check(CLI::ExistingFile);
    add_columns(estimate, est.columns);
    estimate->add_option("--states", est.states, "Number of environment states m");
    auto *thr = estimate->add_option("--threshold", est.threshold, "Jump threshold U on |log-yield|");
    auto *thr_sq = estimate->add_option("--threshold-sq", est.threshold_sq, "Jump threshold on squared log-yields (U^2)");
    thr->excludes(thr_sq);
    estimate->add_flag("--suggest-threshold", est.suggest, "Print an advisory threshold and exit");
    estimate->add_option("--multiplier", est.multiplier, "Robust-scale multiplier for --suggest-threshold")
        ->capture_default_str();
    estimate->add_option("--delta", est.delta, "Sampling interval between consecutive rows")->capture_default_str();
    estimate->add_option("--em-eps", est.em.eps, "Mixture EM tolerance")->capture_default_str();
    estimate->add_option("--em-max-iter", est.em.max_iter, "Mixture EM iteration cap")->capture_default_str();
    estimate->add_option("--em-init", est.em_init, "Initial mixture (JSON: mu, sigma, optional pi)")
        ->check(CLI::ExistingFile);
    estimate->add_option("--sem-iters", est.sem_iters, "Stochastic EM iterations")->capture_default_str();
    estimate->add_option("--sem-burn-in", est.sem_burn_in, "Iterations discarded before averaging (default 20%)");
    estimate->add_option("--ci-level", est.ci_level, "Confidence level for generator intervals")->capture_default_str();
    estimate->add_option("--q-init", est.q_init, "Initial generator (JSON: m, Q)")->check(CLI::ExistingFile);
    estimate->add_option("--seed", est.seed, "Master seed")->capture_default_str();
    estimate->add_option("--out-dir", est.out_dir, "Directory for report.json and trace CSVs")->capture_default_str();

    CalibrateArgs cal;
    auto *calibrate = app.add_subcommand("calibrate-threshold", "Suggest a jump threshold from the yields' robust scale");
    calibrate->add_option("--prices", cal.prices, "Price CSV")->required()->check(CLI::ExistingFile);
    add_columns(calibrate, cal.columns);
    calibrate->add_option("--multiplier", cal.multiplier, "Robust-scale multiplier")->capture_default_str();
    calibrate->add_option("--delta", cal.delta, "Sampling interval")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try
    {
        if (*simulate)
            return cmd_simulate(sim);
        if (*estimate)
        {
            if (!est.suggest && est.states < 1)
                throw ValidationError("--states is required");
            return cmd_estimate(est);
        }
        return cmd_calibrate(cal);
    }
    catch (const ValidationError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const NumericalError &e)
    {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
