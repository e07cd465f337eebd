#include "gkin/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "gkin/checkpoint.hpp"
#include "gkin/config.hpp"
#include "gkin/cross_section.hpp"
#include "gkin/errors.hpp"
#include "gkin/theory_checks.hpp"

namespace gkin {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_series(const fs::path& path, const ObservableSeries& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, s);
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"std_err", e.std_err}}; }

json tail_json(const TailFit& f) {
    return {{"p_hat", f.p_hat},
            {"a_hat", f.a_hat},
            {"c_hat", f.c_hat},
            {"window", {f.v_lo, f.v_hi}},
            {"window_bins", f.window_bins},
            {"residuals", {{"p_hat", f.residual}, {"1.5", f.residual_1_5}, {"2.0", f.residual_2_0}}}};
}

json suite_json(const SuiteReport& r) {
    return {{"suite", r.name},
            {"samples", r.samples},
            {"violations", r.violations},
            {"worst_margin", r.worst_margin}};
}

class Manifest {
public:
    Manifest(std::string command, const SimConfig& cfg, fs::path out)
        : out_(std::move(out)), start_(utc_now()) {
        j_["command"] = std::move(command);
        j_["version"] = kVersion;
        j_["seed"] = cfg.seed;
        j_["threads"] = cfg.threads;
        j_["config"] = to_config_text(cfg);
    }
    void output(const fs::path& file) { files_.push_back(file); }
    void set(const std::string& key, json value) { j_[key] = std::move(value); }
    void write() {
        j_["start"] = start_;
        j_["end"] = utc_now();
        json digests = json::object();
        for (const auto& f : files_) digests[f.filename().string()] = sha256_file(f);
        j_["outputs"] = digests;
        write_json(out_ / "manifest.json", j_);
    }

private:
    fs::path out_;
    std::string start_;
    json j_;
    std::vector<fs::path> files_;
};

double weighted_speed_sum(const Ensemble& e) {
    CompensatedSum s;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double v2 = 0.0;
        for (double c : e.particle(i)) v2 += c * c;
        s.add(std::sqrt(v2));
    }
    return e.weight() * s.value();
}

Estimate window_average(const std::vector<double>& y) {
    if (y.size() < 2) return {y.empty() ? 0.0 : y.front(), 0.0};
    return time_average(y, std::min<std::size_t>(10, y.size()));
}

int simulate_command(const SimConfig& cfg_in, const CommandOptions& opts, std::ostream& log) {
    SimConfig cfg = cfg_in;
    std::optional<Simulation> sim;
    if (opts.checkpoint) {
        auto cp = read_checkpoint(*opts.checkpoint);
        const auto& h = cp.header;
        cfg.dimension = static_cast<int>(h.dimension);
        cfg.n_particles = h.particles;
        cfg.alpha = h.alpha;
        cfg.mu = h.mu;
        cfg.rho0 = h.rho0;
        cfg.seed = h.seed;
        cfg.validate();
        log << "resuming from " << opts.checkpoint->string() << " at t=" << h.time << " step=" << h.step
            << '\n';
        sim.emplace(cfg, std::move(cp.ensemble), h.step, h.dt);
    } else {
        sim.emplace(cfg);
    }
    Manifest manifest("simulate", cfg, opts.out);
    const fs::path fail_snapshot = opts.out / "failure_snapshot.bin";

    double next_checkpoint = cfg.checkpoint_every > 0.0 ? sim->time() + cfg.checkpoint_every : 0.0;
    std::vector<fs::path> checkpoints;
    auto observer = [&](const Simulation& s, const ObservableRecord&) {
        if (cfg.checkpoint_every > 0.0 && s.time() >= next_checkpoint - 0.5 * s.dt()) {
            const auto p = opts.out / ("checkpoint_" + std::to_string(s.step_index()) + ".bin");
            write_checkpoint(p, s.ensemble(), CheckpointHeader::from(s));
            checkpoints.push_back(p);
            next_checkpoint += cfg.checkpoint_every;
        }
        return true;
    };
    const auto result = run(*sim, observer, fail_snapshot);

    const auto series_path = opts.out / "series.csv";
    write_series(series_path, result.series);
    const auto final_path = opts.out / "checkpoint_final.bin";
    write_checkpoint(final_path, result.final_state, CheckpointHeader::from(*sim));
    manifest.output(series_path);
    for (const auto& p : checkpoints) manifest.output(p);
    manifest.output(final_path);
    manifest.set("dt", result.dt);
    manifest.set("steps", result.steps);
    manifest.write();
    log << "simulate: " << result.series.records.size() << " records, " << result.steps
        << " steps, dt=" << result.dt << ", collisions=" << result.totals.accepted
        << ", majorant raises=" << result.totals.majorant_raises << '\n';
    return kExitOk;
}

int steady_command(const SimConfig& cfg, const CommandOptions& opts, std::ostream& log) {
    Manifest manifest("steady", cfg, opts.out);
    const auto outcome = steady_state(cfg);
    const int n = cfg.dimension;
    const double eps = epsilon_N(n);
    const double heating = 2.0 * n * cfg.mu * cfg.rho0 * cfg.rho0;
    const double cooling = eps * (1.0 - cfg.alpha * cfg.alpha) / 4.0 * outcome.d3.value;

    const auto series_path = opts.out / "series.csv";
    write_series(series_path, outcome.run.series);
    const auto hist_path = opts.out / "histogram.csv";
    {
        std::ofstream out(hist_path, std::ios::binary);
        write_histogram_csv(out, outcome.histogram);
    }
    const auto final_path = opts.out / "checkpoint_final.bin";
    write_checkpoint(final_path, outcome.run.final_state, CheckpointHeader{
        static_cast<std::uint32_t>(n), outcome.run.final_state.size(), cfg.alpha, cfg.mu, cfg.rho0,
        outcome.run.final_state.time, cfg.seed, outcome.run.steps, outcome.run.dt});

    json fit = json::object();
    if (outcome.tail) {
        fit = tail_json(*outcome.tail);
    } else {
        fit["error"] = outcome.tail_error;
    }
    const auto fit_path = opts.out / "tailfit.json";
    write_json(fit_path, fit);

    const double a = barrier_coefficient(cfg.rho0, outcome.rho1.value, 1.0, n);
    json lower = json::object();
    try {
        const auto cal = calibrate_lower_bound(outcome.histogram, a);
        const auto rep = verify_lower_bound(outcome.histogram, cal.K, a);
        lower = {{"a", a}, {"K", cal.K}, {"c0", cal.c0}, {"v0", cal.v0}, {"r0", cal.r0},
                 {"verdict", to_string(rep.verdict)}, {"qualifying_bins", rep.qualifying_bins},
                 {"failures", rep.failures}, {"min_log_margin", rep.min_log_margin}};
    } catch (const AnalysisUnavailable& e) {
        lower["verdict"] = "inconclusive";
        lower["error"] = e.what();
    }
    const auto temp = outcome.energy.value / (n * cfg.rho0);
    const auto over = overpopulation_witness(outcome.histogram, temp);

    json summary = {
        {"t_steady", *outcome.detection.time},
        {"t_average", cfg.t_average},
        {"D3", estimate_json(outcome.d3)},
        {"Y2", estimate_json(outcome.y2)},
        {"energy", estimate_json(outcome.energy)},
        {"rho1", estimate_json(outcome.rho1)},
        {"temperature", temp},
        {"balance", {{"heating", heating}, {"cooling", cooling},
                     {"relative_difference", (cooling - heating) / heating}}},
        {"lower_bound", lower},
        {"overpopulation", {{"pairs", over.pairs}, {"decreases", over.decreases},
                            {"ratio_first", over.ratio_first}, {"ratio_last", over.ratio_last},
                            {"pass", over.pass()}}},
    };
    const auto summary_path = opts.out / "steady.json";
    write_json(summary_path, summary);

    for (const auto& p : {series_path, hist_path, fit_path, summary_path, final_path}) manifest.output(p);
    manifest.write();
    log << "steady: detected at t=" << *outcome.detection.time << ", heating " << heating
        << ", cooling " << cooling << '\n';
    if (outcome.tail) {
        log << "tail: p_hat=" << outcome.tail->p_hat << " residual(1.5)=" << outcome.tail->residual_1_5
            << " residual(2.0)=" << outcome.tail->residual_2_0 << '\n';
    } else {
        log << "tail: " << outcome.tail_error << '\n';
    }
    return kExitOk;
}

int checks_command(const SimConfig& cfg, const CommandOptions& opts, std::ostream& log) {
    Manifest manifest("checks", cfg, opts.out);
    std::vector<SuiteReport> reports = {
        run_elementary_suite(cfg.seed, opts.samples),
        run_split_suite(cfg.seed, opts.samples),
        run_integrated_suite(cfg.seed, opts.samples),
        run_truncated_function_checks(cfg.seed, opts.samples),
    };
    json suites = json::array();
    bool ok = true;
    for (const auto& r : reports) {
        log << "suite " << r.name << " samples=" << r.samples << " violations=" << r.violations
            << " worst_margin=" << r.worst_margin;
        if (r.unconverged) log << " unconverged=" << r.unconverged;
        if (!r.pass()) log << " worst=" << r.worst_case;
        log << '\n';
        suites.push_back(suite_json(r));
        ok = ok && r.pass();
    }
    const auto path = opts.out / "checks.json";
    write_json(path, {{"seed", cfg.seed}, {"suites", suites}});
    manifest.output(path);
    manifest.write();
    return ok ? kExitOk : kExitViolation;
}

int tailfit_command(const SimConfig& cfg, const CommandOptions& opts, std::ostream& log) {
    if (!opts.checkpoint) throw ConfigError("checkpoint", "tailfit needs --checkpoint");
    const auto cp = read_checkpoint(*opts.checkpoint);
    const auto& e = cp.ensemble;
    SpeedHistogram h(e.dimension, e.rho0, thermal_speed(e));
    h.accumulate(e);
    Manifest manifest("tailfit", cfg, opts.out);
    const auto hist_path = opts.out / "histogram.csv";
    {
        std::ofstream out(hist_path, std::ios::binary);
        write_histogram_csv(out, h);
    }
    const auto fit = fit_tail(h);
    const auto fit_path = opts.out / "tailfit.json";
    write_json(fit_path, tail_json(fit));
    manifest.output(hist_path);
    manifest.output(fit_path);
    manifest.set("input", opts.checkpoint->string());
    manifest.write();
    log << "tail: p_hat=" << fit.p_hat << " a_hat=" << fit.a_hat << " window=[" << fit.v_lo << ", "
        << fit.v_hi << "]\n";
    return kExitOk;
}

int rescale_command(const SimConfig& cfg, const CommandOptions& opts, std::ostream& log) {
    SimConfig base = cfg;
    base.rho0 = 1.0;
    base.mu = 1.0;
    const auto r = rescale_compare(base, cfg.rho0, cfg.mu, opts.replicas);
    Manifest manifest("rescale-compare", cfg, opts.out);
    const auto path = opts.out / "rescale.json";
    write_json(path, {{"rho0", r.rho0}, {"mu", r.mu}, {"eta", r.eta}, {"tau", r.tau},
                      {"replicas", r.replicas},
                      {"temperature_ratio", estimate_json(r.temperature_ratio)},
                      {"expected_temperature_ratio", r.eta * r.eta},
                      {"relaxation_ratio", estimate_json(r.relaxation_ratio)},
                      {"expected_relaxation_ratio", r.tau},
                      {"temperature_ok", r.temperature_ok},
                      {"relaxation_ok", r.relaxation_ok}});
    manifest.output(path);
    manifest.write();
    log << "rescale: temperature ratio " << r.temperature_ratio.value << " +- "
        << r.temperature_ratio.std_err << " (eta^2 = " << r.eta * r.eta << "), relaxation ratio "
        << r.relaxation_ratio.value << " +- " << r.relaxation_ratio.std_err << " (tau = " << r.tau
        << ")\n";
    return r.temperature_ok && r.relaxation_ok ? kExitOk : kExitViolation;
}

}  // namespace

SimConfig resolve_config(const CommandOptions& opts) {
    SimConfig cfg = opts.config ? parse_config(*opts.config) : SimConfig{};
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.threads) cfg.threads = *opts.threads;
    if (opts.t_end) cfg.t_end = *opts.t_end;
    if (opts.particles) cfg.n_particles = *opts.particles;
    if (opts.alpha) cfg.alpha = *opts.alpha;
    if (opts.mu) cfg.mu = *opts.mu;
    if (opts.rho0) cfg.rho0 = *opts.rho0;
    cfg.validate();
    return cfg;
}

int run_command(const std::string& sub, const CommandOptions& opts, std::ostream& log) {
    try {
        const auto cfg = resolve_config(opts);
        fs::create_directories(opts.out);
        if (sub == "simulate") return simulate_command(cfg, opts, log);
        if (sub == "steady") return steady_command(cfg, opts, log);
        if (sub == "checks") return checks_command(cfg, opts, log);
        if (sub == "tailfit") return tailfit_command(cfg, opts, log);
        if (sub == "rescale-compare") return rescale_command(cfg, opts, log);
        log << "error: unknown subcommand '" << sub << "'\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        log << "config error";
        if (!e.key().empty()) log << " [" << e.key() << "]";
        log << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        log << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const AnalysisUnavailable& e) {
        log << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

SteadyOutcome steady_state(const SimConfig& cfg_in, const RunObserver& progress) {
    SimConfig cfg = cfg_in;
    cfg.t_end = cfg.t_max + cfg.t_average;
    Simulation sim(cfg);

    ObservableSeries seen;
    seen.dimension = cfg.dimension;
    seen.rho0 = cfg.rho0;
    seen.orders = measure_options(cfg).orders;

    SteadyOutcome out;
    std::optional<double> t_steady;
    std::vector<double> rho1;
    double t_stop = 0.0;
    bool timed_out = false;

    auto observer = [&](const Simulation& s, const ObservableRecord& r) {
        seen.records.push_back(r);
        if (progress && !progress(s, r)) return false;
        if (!t_steady) {
            out.detection = detect_steady(seen, cfg.steady_window, cfg.steady_tol);
            if (!out.detection.time) {
                if (s.time() >= cfg.t_max - 0.5 * s.dt()) {
                    timed_out = true;
                    return false;
                }
                return true;
            }
            t_steady = out.detection.time;
            t_stop = *t_steady + cfg.t_average;
            out.histogram = SpeedHistogram(cfg.dimension, cfg.rho0, thermal_speed(s.ensemble()));
        }
        out.histogram.accumulate(s.ensemble());
        rho1.push_back(weighted_speed_sum(s.ensemble()));
        return s.time() < t_stop - 0.5 * s.dt();
    };
    out.run = run(sim, observer);
    if (!t_steady || timed_out) {
        const bool heating = cfg.alpha == 1.0;
        throw NumericalFailure(heating ? "no steady state: elastic heating"
                                       : "no steady state detected by t_max: " + out.detection.diagnostic);
    }

    std::vector<double> d3, y2, energy;
    const auto k2 = out.run.series.order_index(2.0);
    for (const auto& r : out.run.series.records) {
        if (r.t < *t_steady - 1e-9) continue;
        d3.push_back(r.d3.value);
        y2.push_back(r.moments[k2].value);
        energy.push_back(r.energy);
    }
    out.d3 = window_average(d3);
    out.y2 = window_average(y2);
    out.energy = window_average(energy);
    out.rho1 = window_average(rho1);
    try {
        out.tail = fit_tail(out.histogram);
    } catch (const AnalysisUnavailable& e) {
        out.tail_error = e.what();
    }
    return out;
}

double relaxation_time(const std::vector<double>& t, const std::vector<double>& temp, double t_ss,
                       double t_cut) {
    if (t.size() != temp.size() || t.size() < 2) throw InvalidParameter("relaxation series too short");
    const double span = t_ss - temp.front();
    if (span == 0.0) throw InvalidParameter("initial temperature equals the steady temperature");
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size() && t[i] <= t_cut + 1e-12 * t_cut; ++i) {
        const double a = (t_ss - temp[i - 1]) / span;
        const double b = (t_ss - temp[i]) / span;
        acc += 0.5 * (a + b) * (t[i] - t[i - 1]);
    }
    return acc;
}

RescaleComparison rescale_compare(const SimConfig& base_in, double rho0, double mu, int replicas) {
    if (!(rho0 > 0.0) || !(mu > 0.0)) throw InvalidParameter("rescale-compare needs rho0, mu > 0");
    if (replicas < 2) throw InvalidParameter("rescale-compare needs at least two replicas");
    const auto* init = std::get_if<Maxwellian>(&base_in.init.shape);
    if (!init) throw InvalidParameter("rescale-compare needs a Maxwellian initial state");

    RescaleComparison out;
    out.rho0 = rho0;
    out.mu = mu;
    out.eta = std::cbrt(mu / rho0);
    out.tau = 1.0 / std::cbrt(rho0 * rho0 * mu);
    out.replicas = replicas;

    SimConfig base = base_in;
    base.rho0 = 1.0;
    base.mu = 1.0;
    base.dt.reset();
    base.entropy = false;
    SimConfig scaled = base;
    scaled.rho0 = rho0;
    scaled.mu = mu;
    scaled.init.shape = Maxwellian{init->temperature * out.eta * out.eta};
    scaled.t_end = base.t_end * out.tau;
    scaled.output_every = base.output_every * out.tau;

    auto temperature_stats = [](const RunResult& r, int n, double rho, double t_end) {
        std::vector<double> t, temp, late;
        for (const auto& rec : r.series.records) {
            t.push_back(rec.t);
            temp.push_back(rec.energy / (n * rho));
            if (rec.t >= 0.5 * t_end) late.push_back(temp.back());
        }
        double mean = 0.0;
        for (double x : late) mean += x;
        mean /= static_cast<double>(late.size());
        return std::pair{mean, relaxation_time(t, temp, mean, 0.5 * t_end)};
    };

    std::vector<double> temp_ratio, relax_ratio;
    for (int k = 0; k < replicas; ++k) {
        base.seed = base_in.seed + 1000003ull * static_cast<std::uint64_t>(k);
        scaled.seed = base.seed;
        const auto rb = run(base);
        const auto rs = run(scaled);
        const auto [tb, lb] = temperature_stats(rb, base.dimension, base.rho0, base.t_end);
        const auto [ts, ls] = temperature_stats(rs, scaled.dimension, scaled.rho0, scaled.t_end);
        temp_ratio.push_back(ts / tb);
        relax_ratio.push_back(ls / lb);
    }
    auto mean_se = [](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        const double n = static_cast<double>(x.size());
        return Estimate{m, std::sqrt(ss / (n - 1.0) / n)};
    };
    out.temperature_ratio = mean_se(temp_ratio);
    out.relaxation_ratio = mean_se(relax_ratio);
    const double e2 = out.eta * out.eta;
    out.temperature_ok = std::abs(out.temperature_ratio.value - e2) <=
                         3.0 * out.temperature_ratio.std_err + 1e-9 * e2;
    out.relaxation_ok = std::abs(out.relaxation_ratio.value - out.tau) <=
                        3.0 * out.relaxation_ratio.std_err + 1e-9 * out.tau;
    return out;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

}  // namespace gkin
