// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "lorentz/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "lorentz/estimators.hpp"
#include "lorentz/io.hpp"
#include "lorentz/lemmas.hpp"

namespace lorentz {

namespace {

using nlohmann::json;

// Harness-level stream role tags (estimators use 2..6, lemmas 7..8).
constexpr std::uint64_t kTagJumpProcess = 9;
constexpr std::uint64_t kTagTubeSweep = 10;
constexpr std::uint64_t kTagColinearity = 11;
constexpr std::uint64_t kTagSeriesMc = 12;
constexpr std::uint64_t kTagCheckScatter = 13;
constexpr std::uint64_t kTagCheckFlow = 14;

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("invalid value for " + key + ": '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) bad_value(key, value);
        return x;
    } catch (const std::invalid_argument&) {
        bad_value(key, value);
    } catch (const std::out_of_range&) {
        bad_value(key, value);
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(value, &pos, 0);
        if (pos != value.size()) bad_value(key, value);
        return x;
    } catch (const std::invalid_argument&) {
        bad_value(key, value);
    } catch (const std::out_of_range&) {
        bad_value(key, value);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(value, &pos, 0);
        if (pos != value.size()) bad_value(key, value);
        return x;
    } catch (const std::invalid_argument&) {
        bad_value(key, value);
    } catch (const std::out_of_range&) {
        bad_value(key, value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string cell =
            trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
        if (cell.empty()) bad_value(key, value);
        out.push_back(parse_double(key, cell));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) bad_value(key, value);
    return out;
}

std::array<double, 3> parse_vec3(const std::string& key, const std::string& value) {
    const auto list = parse_list(key, value);
    if (list.size() < 2 || list.size() > 3) bad_value(key, value);
    std::array<double, 3> out{{0.0, 0.0, 0.0}};
    for (std::size_t i = 0; i < list.size(); ++i) out[i] = list[i];
    return out;
}

std::string join_g17(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt_g17(xs[i]);
    }
    return out;
}

std::string join_g17(const std::array<double, 3>& xs) {
    return fmt_g17(xs[0]) + "," + fmt_g17(xs[1]) + "," + fmt_g17(xs[2]);
}

template <int d>
Vec<d> take(const std::array<double, 3>& a) {
    Vec<d> v{};
    for (int k = 0; k < d; ++k) v[k] = a[static_cast<std::size_t>(k)];
    return v;
}

template <int d>
json vec_json(const Vec<d>& v) {
    json arr = json::array();
    for (int k = 0; k < d; ++k) arr.push_back(v[k]);
    return arr;
}

json estimate_json(const EstimateWithCI& e) {
    return json{{"mean", e.mean},
                {"std_error", e.std_error},
                {"ci95_halfwidth", e.ci95_halfwidth},
                {"n", e.n}};
}

json tally_json(const FlagTally& f) {
    const double inv = f.n ? 1.0 / static_cast<double>(f.n) : 0.0;
    return json{{"n", f.n},
                {"frozen", f.frozen},
                {"collapse_resolved", f.resolved},
                {"collapse", f.collapse},
                {"simultaneous", f.simultaneous},
                {"recollision", f.recollision},
                {"interference", f.interference},
                {"frozen_rate", static_cast<double>(f.frozen) * inv},
                {"recollision_rate", static_cast<double>(f.recollision) * inv},
                {"interference_rate", static_cast<double>(f.interference) * inv}};
}

json series_json(const SeriesResult& s) {
    return json{{"value", s.value},
                {"tail_estimate", s.tail_estimate},
                {"mc_std_error", s.mc_std_error},
                {"K_used", s.K_used},
                {"truncated", s.truncated},
                {"ill_conditioned", s.ill_conditioned},
                {"terms", s.terms}};
}

KineticParams make_params(const ExperimentConfig& cfg) {
    if (cfg.bg_locked && cfg.mu == 0.0) return KineticParams::bg(cfg.d, cfg.r, cfg.eps);
    KineticParams p;
    p.d = cfg.d;
    p.r = cfg.r;
    p.eps = cfg.eps;
    p.mu = cfg.mu;
    p.bg_locked = cfg.bg_locked;
    return p;
}

SeriesConfig series_for_run(const ExperimentConfig& cfg) {
    SeriesConfig s = cfg.series;
    s.threads = cfg.threads;
    s.seed = stream_key(cfg.seed, kTagSeriesMc, 0);
    return s;
}

template <int d>
Observable<d> build_observable(const ExperimentConfig& cfg) {
    if (cfg.phi == "constant") return constant_observable<d>(1.0);
    Vec<d> center;
    if (cfg.bump_center_set) {
        center = take<d>(cfg.bump_center);
    } else {
        center = take<d>(cfg.x0) + cfg.t * take<d>(cfg.v0);
    }
    return make_bump<d>(center, cfg.bump_width);
}

// ---------------------------------------------------------------------------
// Experiment pipelines. Each writes `csv` and `summary`; extra files go
// through `outdir`/`outputs`.
// ---------------------------------------------------------------------------

template <int d>
void run_simulate(const ExperimentConfig& cfg, std::string& csv, json& summary,
                  const std::string& outdir, std::vector<std::string>& outputs) {
    const auto params = make_params(cfg);
    const Vec<d> x0 = take<d>(cfg.x0);
    const Vec<d> v0 = take<d>(cfg.v0);
    const Guards guards;
    const auto [center, radius] = dynamical_ball(x0, v0, cfg.t, params.eps);

    std::vector<std::string> header{"seed_index", "events", "final_speed"};
    for (int k = 0; k < d; ++k) header.push_back("x_end_" + std::to_string(k));
    for (int k = 0; k < d; ++k) header.push_back("v_end_" + std::to_string(k));
    for (const char* f :
         {"frozen", "resolved", "collapse", "simultaneous", "recollision", "interference"})
        header.emplace_back(f);
    CsvBuilder builder("lorentz-simulate-v1", header);

    const std::int64_t n_dump = std::min<std::int64_t>(cfg.n_seeds, 64);
    std::string jsonl;
    std::vector<std::uint64_t> histogram;
    std::vector<double> pooled_gaps;
    FlagTally tally;
    double count_sum = 0.0, pathlen_sum = 0.0;

    for (std::int64_t i = 0; i < cfg.n_seeds; ++i) {
        const auto field = sample_field<d>(center, radius, params,
                                           stream_key(cfg.seed, 1, static_cast<std::uint64_t>(i)));
        const auto traj = evolve(x0, v0, field, cfg.t, guards);
        tally.add(traj.flags);
        const std::size_t k = traj.events.size();
        if (histogram.size() <= k) histogram.resize(k + 1, 0);
        ++histogram[k];
        count_sum += static_cast<double>(k);
        pathlen_sum += speed_pathlen(traj);
        pooled_gaps.insert(pooled_gaps.end(), traj.free_flight_gaps.begin(),
                           traj.free_flight_gaps.end());

        std::vector<std::string> row{std::to_string(i), std::to_string(k),
                                     fmt_g17(norm(traj.v_final))};
        for (int c = 0; c < d; ++c) row.push_back(fmt_g17(traj.x_final[c]));
        for (int c = 0; c < d; ++c) row.push_back(fmt_g17(traj.v_final[c]));
        for (bool f : {traj.flags.frozen_overlap, traj.flags.collapse_resolved,
                       traj.flags.collapse_guard_tripped, traj.flags.simultaneous_collision,
                       traj.flags.recollision_detected, traj.flags.interference_detected})
            row.emplace_back(f ? "1" : "0");
        builder.append_row(row);

        if (i < n_dump) {
            json line{{"seed_index", i},
                      {"x0", vec_json<d>(traj.x0)},
                      {"v0", vec_json<d>(traj.v0)},
                      {"elapsed", traj.elapsed},
                      {"flags",
                       {{"frozen_overlap", traj.flags.frozen_overlap},
                        {"collapse_resolved", traj.flags.collapse_resolved},
                        {"collapse_guard_tripped", traj.flags.collapse_guard_tripped},
                        {"simultaneous_collision", traj.flags.simultaneous_collision},
                        {"recollision_detected", traj.flags.recollision_detected},
                        {"interference_detected", traj.flags.interference_detected}}}};
            json events = json::array();
            for (const auto& ev : traj.events)
                events.push_back(json{{"time", ev.time},
                                      {"scatterer", ev.scatterer_index},
                                      {"omega", vec_json<d>(ev.omega)},
                                      {"v_pre", vec_json<d>(ev.v_pre)},
                                      {"v_post", vec_json<d>(ev.v_post)}});
            line["events"] = std::move(events);
            jsonl += line.dump();
            jsonl += '\n';
        }
    }
    csv = builder.str();

    const double inv = cfg.n_seeds > 0 ? 1.0 / static_cast<double>(cfg.n_seeds) : 0.0;
    summary["mean_events"] = count_sum * inv;
    summary["mean_speed_pathlen"] = pathlen_sum * inv;
    summary["event_histogram"] = histogram;
    summary["flags"] = tally_json(tally);
    if (const auto gaps = min_gap_statistics(std::move(pooled_gaps))) {
        summary["free_flight_gaps"] = json{{"n", gaps->n},       {"min", gaps->min},
                                           {"q05", gaps->q05},   {"median", gaps->median},
                                           {"q95", gaps->q95},   {"max", gaps->max}};
    } else {
        summary["free_flight_gaps"] = nullptr;
    }
    summary["mu"] = params.mu;

    write_file(outdir + "/trajectories.jsonl", jsonl);
    outputs.push_back("trajectories.jsonl");
}

template <int d>
void run_adjoint(const ExperimentConfig& cfg, std::string& csv, json& summary,
                 const std::string&, std::vector<std::string>&) {
    const auto params = make_params(cfg);
    const Vec<d> x0 = take<d>(cfg.x0);
    const Vec<d> v0 = take<d>(cfg.v0);
    const auto phi = build_observable<d>(cfg);
    const auto series = adjoint_series_psi<d>(phi, cfg.t, x0, v0, params, series_for_run(cfg));

    CsvBuilder builder("lorentz-adjoint-v1", {"k", "term", "partial_sum"});
    double partial = 0.0;
    for (std::size_t k = 0; k < series.terms.size(); ++k) {
        partial += series.terms[k];
        builder.append_row({std::to_string(k), fmt_g17(series.terms[k]), fmt_g17(partial)});
    }
    csv = builder.str();

    // Independent cross-check: the velocity-jump process sampled directly.
    const Restitution rr = params.restitution();
    auto blocks = parallel_blocks<MomentAccumulator>(
        static_cast<std::uint64_t>(cfg.n_seeds), cfg.threads,
        [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
            MomentAccumulator acc;
            for (std::uint64_t i = lo; i < hi; ++i) {
                Stream rng(stream_key(cfg.seed, kTagJumpProcess, i));
                const auto [xe, ve] = limit_process_endpoint<d>(x0, v0, cfg.t, rr, rng);
                acc.add(phi.f(xe, ve));
            }
            return acc;
        });
    MomentAccumulator total;
    for (const auto& b : blocks) total.merge(b);
    const auto jump = total.estimate();

    summary["series"] = series_json(series);
    summary["jump_process_cross_check"] = estimate_json(jump);
    summary["cross_check_gap"] = std::abs(jump.mean - series.value);
}

template <int d>
void run_converge(const ExperimentConfig& cfg, std::string& csv, json& summary,
                  const std::string&, std::vector<std::string>&) {
    const Vec<d> x0 = take<d>(cfg.x0);
    const Vec<d> v0 = take<d>(cfg.v0);
    const auto phi = build_observable<d>(cfg);
    ExperimentOptions opt;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.series = series_for_run(cfg);
    const auto rep =
        convergence_experiment<d>(phi, cfg.t, x0, v0, cfg.r, cfg.eps_grid, cfg.n_seeds, opt);

    CsvBuilder builder("lorentz-converge-v1",
                       {"eps", "mu", "I_eps_mean", "I_eps_std_error", "I_eps_ci95", "I_0",
                        "abs_gap", "recollision_rate", "overlap_rate", "noise_limited"});
    for (const auto& row : rep.rows)
        builder.append_row({fmt_g17(row.eps), fmt_g17(row.mu), fmt_g17(row.I_eps.mean),
                            fmt_g17(row.I_eps.std_error), fmt_g17(row.I_eps.ci95_halfwidth),
                            fmt_g17(row.I_0), fmt_g17(row.abs_gap),
                            fmt_g17(row.recollision_rate), fmt_g17(row.overlap_rate),
                            row.noise_limited ? "1" : "0"});
    csv = builder.str();

    summary["series"] = series_json(rep.series);
    summary["fitted_slope"] = rep.fitted_slope;
    summary["fitted_intercept"] = rep.fitted_intercept;
    summary["envelope_C"] = rep.envelope_C;
    summary["n_excluded"] = rep.n_excluded;
    json rows = json::array();
    for (const auto& row : rep.rows)
        rows.push_back(json{{"eps", row.eps},
                            {"mu", row.mu},
                            {"I_eps", estimate_json(row.I_eps)},
                            {"I_0", row.I_0},
                            {"abs_gap", row.abs_gap},
                            {"recollision_rate", row.recollision_rate},
                            {"overlap_rate", row.overlap_rate},
                            {"noise_limited", row.noise_limited}});
    summary["rows"] = std::move(rows);
}

template <int d>
void run_haff(const ExperimentConfig& cfg, std::string& csv, json& summary, const std::string&,
              std::vector<std::string>&) {
    const auto params = make_params(cfg);
    const Vec<d> x0 = take<d>(cfg.x0);
    const double speed = norm(take<d>(cfg.v0));
    const double E0 = speed * speed;
    const std::function<std::pair<Vec<d>, Vec<d>>(Stream&)> sampler =
        [x0, speed](Stream& rng) {
            return std::make_pair(x0, speed * sample_unit_sphere<d>(rng));
        };
    const auto curve = ensemble_energy<d>(params, sampler, cfg.t_grid, cfg.n_seeds, cfg.seed,
                                          cfg.threads);

    CsvBuilder builder("lorentz-haff-v1", {"t", "energy_mean", "energy_std_error", "energy_ci95",
                                           "bound", "excess_sigmas"});
    int violations = 0;
    double max_excess = 0.0;
    for (std::size_t g = 0; g < curve.t_grid.size(); ++g) {
        const auto& e = curve.energy[g];
        const double bound = haff_energy_bound(E0, cfg.r, d, curve.t_grid[g]);
        const double excess =
            e.std_error > 0.0 ? (e.mean - bound) / e.std_error
                              : (e.mean > bound ? std::numeric_limits<double>::infinity() : 0.0);
        max_excess = std::max(max_excess, excess);
        if (e.mean > bound + 4.0 * e.std_error) ++violations;
        builder.append_row({fmt_g17(curve.t_grid[g]), fmt_g17(e.mean), fmt_g17(e.std_error),
                            fmt_g17(e.ci95_halfwidth), fmt_g17(bound), fmt_g17(excess)});
    }
    csv = builder.str();

    summary["E0"] = E0;
    summary["bound_violations"] = violations;
    summary["max_excess_sigmas"] = max_excess;
    summary["flags"] = tally_json(curve.flags);
}

template <int d>
void run_lemmas(const ExperimentConfig& cfg, std::string& csv, json& summary, const std::string&,
                std::vector<std::string>&) {
    const auto tube = verify_tube_lemma<d>(1.0, 1.0, cfg.eps, 16, cfg.n_seeds,
                                           stream_key(cfg.seed, kTagTubeSweep, 0), cfg.threads);

    CsvBuilder builder("lorentz-lemmas-v1",
                       {"angle", "volume_mean", "volume_std_error", "volume_ci95"});
    for (const auto& row : tube.rows)
        builder.append_row({fmt_g17(row.angle), fmt_g17(row.volume.mean),
                            fmt_g17(row.volume.std_error), fmt_g17(row.volume.ci95_halfwidth)});
    csv = builder.str();

    summary["tube"] = json{{"collinear_closed_form", tube.collinear_closed_form},
                           {"aligned_maximal", tube.aligned_maximal},
                           {"closed_form_matched", tube.closed_form_matched},
                           {"worst_violation_sigmas", tube.worst_violation_sigmas}};

    const Restitution rr(cfg.r);
    json coli = json::array();
    for (int pair = 0; pair < 4; ++pair) {
        const std::uint64_t pair_seed =
            stream_key(cfg.seed, kTagColinearity, static_cast<std::uint64_t>(pair));
        Stream pr(pair_seed);
        const Vec<d> v = (0.5 + 1.5 * pr.uniform()) * sample_unit_sphere<d>(pr);
        const Vec<d> p = sample_unit_sphere<d>(pr);
        for (double delta : {1e-2, 1e-3}) {
            const auto m1 = colinearity_pathological_measure<d>(v, p, delta, rr, cfg.n_seeds,
                                                                stream_key(pair_seed, 0, 0),
                                                                cfg.threads);
            const auto m4 = colinearity_pathological_measure<d>(v, p, delta / 4.0, rr,
                                                                cfg.n_seeds,
                                                                stream_key(pair_seed, 1, 0),
                                                                cfg.threads);
            coli.push_back(json{{"pair", pair},
                                {"delta", delta},
                                {"measure", estimate_json(m1)},
                                {"measure_quarter", estimate_json(m4)},
                                {"ratio", m4.mean > 0.0 ? m1.mean / m4.mean : 0.0}});
        }
    }
    summary["colinearity"] = std::move(coli);
}

template <int d>
void run_compare(const ExperimentConfig& cfg, std::string& csv, json& summary, const std::string&,
                 std::vector<std::string>&) {
    const auto params = make_params(cfg);
    const Vec<d> x0 = take<d>(cfg.x0);
    const Vec<d> v0 = take<d>(cfg.v0);
    const auto phi = build_observable<d>(cfg);

    const auto series = adjoint_series_psi<d>(phi, cfg.t, x0, v0, params, series_for_run(cfg));
    const auto mc = estimate_phi_eps_detailed<d>(phi, cfg.t, x0, v0, params, cfg.n_seeds,
                                                 cfg.seed, cfg.threads);

    const double gap = std::abs(mc.estimate.mean - series.value);
    const double sigma = mc.estimate.std_error + series.mc_std_error;
    const double tolerance = std::max(4.0 * sigma, 5e-2 * std::abs(series.value));

    CsvBuilder builder("lorentz-compare-v1", {"method", "value", "std_error", "ci95"});
    builder.append_row({"mc_eps", fmt_g17(mc.estimate.mean), fmt_g17(mc.estimate.std_error),
                        fmt_g17(mc.estimate.ci95_halfwidth)});
    builder.append_row({"series_limit", fmt_g17(series.value), fmt_g17(series.mc_std_error),
                        fmt_g17(0.0)});
    csv = builder.str();

    summary["mc"] = estimate_json(mc.estimate);
    summary["mc_flags"] = tally_json(mc.flags);
    summary["series"] = series_json(series);
    summary["gap"] = gap;
    summary["tolerance"] = tolerance;
    summary["agree"] = gap <= tolerance;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tmv{};
    gmtime_r(&now, &tmv);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tmv);
    return buf;
}

// ---------------------------------------------------------------------------
// Check suites.
// ---------------------------------------------------------------------------

template <int d>
std::pair<double, double> scatter_law_errors(std::uint64_t seed, int n, double r, bool corrupt) {
    const double sign = corrupt ? 1.0 : -1.0;
    double norm_err = 0.0, energy_err = 0.0;
    for (int i = 0; i < n; ++i) {
        Stream rng(stream_key(seed, kTagCheckScatter + d, static_cast<std::uint64_t>(i)));
        const Vec<d> v = (0.25 + 2.0 * rng.uniform()) * sample_unit_sphere<d>(rng);
        const Vec<d> omega = sample_unit_sphere<d>(rng);
        const Vec<d> vp = v + (sign * (1.0 + r) * dot(v, omega)) * omega;
        const double speed = norm(v);
        norm_err = std::max(
            norm_err, std::abs(std::abs(dot(vp, omega)) - r * std::abs(dot(v, omega))) / speed);
        const double expected2 =
            norm2(v) - (1.0 - r * r) * dot(v, omega) * dot(v, omega);
        energy_err = std::max(energy_err, std::abs(norm2(vp) - expected2) / norm2(v));
    }
    return {norm_err, energy_err};
}

void suite_elastic_conservation(const CheckOptions& opt, CheckReport& rep) {
    {
        const auto [ne2, ee2] = scatter_law_errors<2>(opt.seed, 5000, 1.0,
                                                      opt.corrupt_scatter_sign);
        const auto [ne3, ee3] = scatter_law_errors<3>(opt.seed, 5000, 1.0,
                                                      opt.corrupt_scatter_sign);
        const double ne = std::max(ne2, ne3);
        const double ee = std::max(ee2, ee3);
        CheckLine line;
        line.name = "scatter-normal-law";
        line.passed = ne <= 1e-12 && ee <= 1e-12;
        line.detail = "max normal-law error " + fmt_g6(ne) + ", max energy-identity error " +
                      fmt_g6(ee) + " (tol 1e-12)";
        rep.lines.push_back(line);
    }
    {
        const auto params = KineticParams::bg(2, 1.0, 0.05);
        Vec<2> x0{};
        Vec<2> v0{};
        v0[0] = 1.0;
        const double t = 2.0;
        const auto [center, radius] = dynamical_ball(x0, v0, t, params.eps);
        double max_dev = 0.0;
        std::uint64_t collapse = 0;
        for (std::uint64_t i = 0; i < 200; ++i) {
            const auto field =
                sample_field<2>(center, radius, params, stream_key(opt.seed, kTagCheckFlow, i));
            const auto traj = evolve(x0, v0, field, t);
            for (const auto& ev : traj.events)
                max_dev = std::max(max_dev, std::abs(norm(ev.v_post) - norm(ev.v_pre)));
            if (!traj.flags.frozen_overlap)
                max_dev = std::max(max_dev, std::abs(norm(traj.v_final) - 1.0));
            collapse += traj.flags.collapse_guard_tripped ? 1 : 0;
        }
        CheckLine line;
        line.name = "trajectory-speed-conservation";
        line.passed = max_dev <= 1e-12 && collapse == 0;
        line.detail = "max |v| drift " + fmt_g6(max_dev) + " over 200 elastic trajectories (tol "
                      "1e-12), " + std::to_string(collapse) + " collapse-guard trips";
        rep.lines.push_back(line);
    }
}

void suite_mass_conservation(const CheckOptions& opt, CheckReport& rep) {
    const auto params = KineticParams::bg(2, 0.5, 0.05);
    Vec<2> x0{};
    Vec<2> v0{};
    v0[0] = 1.0;
    {
        SeriesConfig scfg;
        scfg.K_max = 16;
        scfg.threads = opt.threads;
        scfg.seed = stream_key(opt.seed, kTagSeriesMc, 0);
        const auto res =
            adjoint_series_psi<2>(constant_observable<2>(1.0), 1.0, x0, v0, params, scfg);
        const double err = std::abs(res.value - 1.0);
        CheckLine line;
        line.name = "adjoint-constant-observable";
        line.passed = err <= scfg.tail_tol && !res.truncated;
        line.detail = "psi = " + fmt_g17(res.value) + ", |psi - 1| = " + fmt_g6(err) + " (tol " +
                      fmt_g6(scfg.tail_tol) + "), K_used = " + std::to_string(res.K_used);
        rep.lines.push_back(line);
    }
    {
        const auto est = estimate_phi_eps<2>(constant_observable<2>(1.0), 1.0, x0, v0, params,
                                             500, opt.seed, opt.threads);
        CheckLine line;
        line.name = "mc-constant-observable";
        line.passed = est.mean == 1.0 && est.std_error == 0.0;
        line.detail = "mean = " + fmt_g17(est.mean) + ", std_error = " + fmt_g17(est.std_error) +
                      " (constant observable must average to exactly 1)";
        rep.lines.push_back(line);
    }
}

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::simulate: return "simulate";
        case Experiment::adjoint: return "adjoint";
        case Experiment::converge: return "converge";
        case Experiment::haff: return "haff";
        case Experiment::lemmas: return "lemmas";
        case Experiment::compare: return "compare";
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
    if (name == "simulate") return Experiment::simulate;
    if (name == "adjoint") return Experiment::adjoint;
    if (name == "converge") return Experiment::converge;
    if (name == "haff") return Experiment::haff;
    if (name == "lemmas") return Experiment::lemmas;
    if (name == "compare") return Experiment::compare;
    throw std::invalid_argument("unknown experiment: " + name);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config: " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        try {
            cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
    if (key == "experiment") experiment = experiment_from_string(value);
    else if (key == "d") d = static_cast<int>(parse_int(key, value));
    else if (key == "r") r = parse_double(key, value);
    else if (key == "eps") eps = parse_double(key, value);
    else if (key == "eps_grid") eps_grid = parse_list(key, value);
    else if (key == "t") t = parse_double(key, value);
    else if (key == "t_grid") t_grid = parse_list(key, value);
    else if (key == "x0") x0 = parse_vec3(key, value);
    else if (key == "v0") v0 = parse_vec3(key, value);
    else if (key == "n_seeds") n_seeds = parse_int(key, value);
    else if (key == "seed") seed = parse_u64(key, value);
    else if (key == "threads") threads = static_cast<int>(parse_int(key, value));
    else if (key == "output_path") output_path = value;
    else if (key == "mu") mu = parse_double(key, value);
    else if (key == "bg_locked") bg_locked = parse_bool(key, value);
    else if (key == "phi") {
        if (value != "constant" && value != "bump") bad_value(key, value);
        phi = value;
    } else if (key == "bump_center") {
        bump_center = parse_vec3(key, value);
        bump_center_set = true;
    } else if (key == "bump_width") bump_width = parse_double(key, value);
    else if (key == "check") check_suite = value;
    else if (key == "series.k_max") series.K_max = static_cast<int>(parse_int(key, value));
    else if (key == "series.tail_tol") series.tail_tol = parse_double(key, value);
    else if (key == "series.time_nodes") series.time_nodes = static_cast<int>(parse_int(key, value));
    else if (key == "series.sphere_panel_nodes")
        series.sphere_panel_nodes = static_cast<int>(parse_int(key, value));
    else if (key == "series.quad_k_max")
        series.quad_k_max = static_cast<int>(parse_int(key, value));
    else if (key == "series.mc_samples") series.mc_samples = parse_int(key, value);
    else throw std::invalid_argument("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("experiment", to_string(experiment));
    out.emplace_back("d", std::to_string(d));
    out.emplace_back("r", fmt_g17(r));
    out.emplace_back("eps", fmt_g17(eps));
    out.emplace_back("eps_grid", join_g17(eps_grid));
    out.emplace_back("t", fmt_g17(t));
    out.emplace_back("t_grid", join_g17(t_grid));
    out.emplace_back("x0", join_g17(x0));
    out.emplace_back("v0", join_g17(v0));
    out.emplace_back("n_seeds", std::to_string(n_seeds));
    out.emplace_back("seed", std::to_string(seed));
    out.emplace_back("threads", std::to_string(threads));
    out.emplace_back("output_path", output_path);
    out.emplace_back("mu", fmt_g17(mu));
    out.emplace_back("bg_locked", bg_locked ? "true" : "false");
    out.emplace_back("phi", phi);
    if (bump_center_set) out.emplace_back("bump_center", join_g17(bump_center));
    out.emplace_back("bump_width", fmt_g17(bump_width));
    if (!check_suite.empty()) out.emplace_back("check", check_suite);
    out.emplace_back("series.k_max", std::to_string(series.K_max));
    out.emplace_back("series.tail_tol", fmt_g17(series.tail_tol));
    out.emplace_back("series.time_nodes", std::to_string(series.time_nodes));
    out.emplace_back("series.sphere_panel_nodes", std::to_string(series.sphere_panel_nodes));
    out.emplace_back("series.quad_k_max", std::to_string(series.quad_k_max));
    out.emplace_back("series.mc_samples", std::to_string(series.mc_samples));
    return out;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> v;
    const auto add = [&v](const std::string& msg) { v.push_back(msg); };

    const bool dim_ok = cfg.d == 2 || cfg.d == 3;
    if (!dim_ok) add("dimension must be 2 or 3");
    if (!(cfg.r > 0.0) || cfg.r > 1.0) add("restitution must be in (0,1]");
    if (cfg.output_path.empty()) add("output_path must be set");
    if (cfg.threads < 0) add("threads must be nonnegative");
    if (cfg.n_seeds < 2) add("n_seeds must be at least 2");

    double speed = 0.0;
    if (dim_ok)
        for (int k = 0; k < cfg.d; ++k)
            speed += cfg.v0[static_cast<std::size_t>(k)] * cfg.v0[static_cast<std::size_t>(k)];
    speed = std::sqrt(speed);

    const bool uses_eps = cfg.experiment != Experiment::converge;
    if (uses_eps && !(cfg.eps > 0.0)) add("eps must be positive");
    if (cfg.bg_locked && cfg.mu != 0.0 && uses_eps && dim_ok &&
        std::abs(cfg.mu * std::pow(cfg.eps, cfg.d - 1) - 1.0) > 1e-12)
        add("bg-locked field requires mu * eps^(d-1) = 1");
    if (!cfg.bg_locked && !(cfg.mu > 0.0)) add("mu must be positive when the scaling lock is off");

    const bool uses_series = cfg.experiment == Experiment::adjoint ||
                             cfg.experiment == Experiment::converge ||
                             cfg.experiment == Experiment::compare;
    if (uses_series) {
        if (!(speed > 0.0)) add("initial speed must be positive");
        if (cfg.series.K_max < 0) add("series.k_max must be nonnegative");
        if (!(cfg.series.tail_tol > 0.0)) add("series.tail_tol must be positive");
        if (cfg.series.time_nodes < 2) add("series.time_nodes must be at least 2");
        if (cfg.series.sphere_panel_nodes < 2)
            add("series.sphere_panel_nodes must be at least 2");
        if (cfg.series.quad_k_max < 0) add("series.quad_k_max must be nonnegative");
        if (cfg.series.mc_samples < 2) add("series.mc_samples must be at least 2");
        if (cfg.phi != "constant" && cfg.phi != "bump") add("phi must be constant or bump");
        if (!(cfg.bump_width > 0.0)) add("bump width must be positive");
    }

    switch (cfg.experiment) {
        case Experiment::simulate:
            if (!(cfg.t > 0.0)) add("t must be positive");
            break;
        case Experiment::adjoint:
        case Experiment::compare:
            if (!(cfg.t > 0.0)) add("t must be positive");
            break;
        case Experiment::converge: {
            if (!(cfg.t > 0.0)) add("t must be positive");
            if (cfg.eps_grid.size() < 2) {
                add("converge needs an eps_grid with at least two radii");
            } else {
                bool ok = cfg.eps_grid.back() > 0.0;
                for (std::size_t i = 0; i + 1 < cfg.eps_grid.size(); ++i)
                    if (!(cfg.eps_grid[i + 1] < cfg.eps_grid[i])) ok = false;
                if (!ok) add("eps_grid must be positive and strictly decreasing");
            }
            break;
        }
        case Experiment::haff: {
            if (!(speed > 0.0)) add("initial speed must be positive");
            if (cfg.t_grid.empty()) {
                add("haff needs a t_grid");
            } else {
                bool ok = cfg.t_grid.front() >= 0.0;
                for (std::size_t i = 0; i + 1 < cfg.t_grid.size(); ++i)
                    if (cfg.t_grid[i + 1] < cfg.t_grid[i]) ok = false;
                if (!ok) add("t_grid must be nondecreasing and nonnegative");
            }
            break;
        }
        case Experiment::lemmas:
            if (cfg.n_seeds < 1000) add("lemmas needs n_seeds >= 1000 Monte Carlo points");
            break;
    }
    return v;
}

int run(const ExperimentConfig& cfg) {
    const auto violations = validate(cfg);
    if (!violations.empty()) {
        for (const auto& msg : violations) std::fprintf(stderr, "config error: %s\n", msg.c_str());
        return 2;
    }

    try {
        std::filesystem::create_directories(cfg.output_path);
        const auto started = utc_timestamp();
        const auto t0 = std::chrono::steady_clock::now();

        std::string csv;
        json summary;
        std::vector<std::string> outputs{"results.csv", "summary.json", "manifest.json"};
        summary["experiment"] = to_string(cfg.experiment);
        summary["d"] = cfg.d;
        summary["r"] = cfg.r;
        summary["n_seeds"] = cfg.n_seeds;

        const auto dispatch = [&](auto dim) {
            constexpr int d = decltype(dim)::value;
            switch (cfg.experiment) {
                case Experiment::simulate:
                    run_simulate<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
                case Experiment::adjoint:
                    run_adjoint<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
                case Experiment::converge:
                    run_converge<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
                case Experiment::haff:
                    run_haff<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
                case Experiment::lemmas:
                    run_lemmas<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
                case Experiment::compare:
                    run_compare<d>(cfg, csv, summary, cfg.output_path, outputs);
                    break;
            }
        };
        if (cfg.d == 2) dispatch(std::integral_constant<int, 2>{});
        else dispatch(std::integral_constant<int, 3>{});

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        write_file(cfg.output_path + "/results.csv", csv);
        write_file(cfg.output_path + "/summary.json", summary.dump(2) + "\n");

        json manifest;
        manifest["version"] = kLibraryVersion;
        manifest["experiment"] = to_string(cfg.experiment);
        manifest["seed"] = cfg.seed;
        manifest["threads_requested"] = cfg.threads;
        manifest["threads_resolved"] = resolve_thread_count(cfg.threads);
        manifest["started_utc"] = started;
        manifest["wall_time_seconds"] = wall;
        manifest["outputs"] = outputs;
        json echo_obj;
        for (const auto& [k, val] : cfg.echo()) echo_obj[k] = val;
        manifest["config"] = std::move(echo_obj);
        write_file(cfg.output_path + "/manifest.json", manifest.dump(2) + "\n");

        for (const auto& f : outputs)
            std::printf("wrote %s/%s\n", cfg.output_path.c_str(), f.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return 1;
    }
}

CheckReport check_mode(const ExperimentConfig& cfg, const CheckOptions& opt) {
    CheckReport rep;
    rep.suite = cfg.check_suite;
    if (rep.suite == "elastic-conservation") suite_elastic_conservation(opt, rep);
    else if (rep.suite == "mass-conservation") suite_mass_conservation(opt, rep);
    else throw std::invalid_argument("unknown check suite: " + rep.suite);
    return rep;
}

}  // namespace lorentz
