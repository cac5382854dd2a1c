#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rfs/bootstrap.hpp"
#include "rfs/io.hpp"
#include "rfs/metrics.hpp"
#include "rfs/simulator.hpp"

/// Subcommands behind the rfs_track executable.
namespace rfs::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kFilterError = 3, kIoError = 4 };

namespace fs = std::filesystem;

// ---- running one tracker over one sequence ---------------------------------------

struct RunResult {
    std::vector<FrameEstimate> estimates;
    std::vector<double> frame_ms;
    Diagnostics diagnostics;
};

namespace detail {

template <class Filter>
RunResult timed_run(Filter& filter, const std::vector<MeasurementSet>& frames) {
    RunResult r;
    r.estimates.reserve(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.estimates.push_back(filter.step(frames[k], &r.diagnostics));
        } catch (const std::exception& e) {
            throw SequenceError(k + 1, e.what(), std::move(r.estimates));
        }
        r.frame_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return r;
}

} // namespace detail

/// Runs the chosen variant from an empty start. Throws SequenceError naming the frame.
[[nodiscard]] inline RunResult run_variant(const io::ExperimentConfig& cfg, io::Variant variant,
                                           const std::vector<MeasurementSet>& frames) {
    const SystemModel sys = cfg.system();
    const BootstrapConfig boot = cfg.bootstrap();
    switch (variant) {
    case io::Variant::bootstrap: {
        BootstrapFilter<> f(sys, boot);
        return detail::timed_run(f, frames);
    }
    case io::Variant::mm_cphd: {
        FixedRateTracker f(sys, boot.tracker, cfg.tracker.fixed_lambda.value(), cfg.tracker.fixed_p_d.value());
        return detail::timed_run(f, frames);
    }
    case io::Variant::mm_lambda_cphd: {
        EstimatorTracker f(sys, boot.estimator);
        return detail::timed_run(f, frames);
    }
    }
    throw std::logic_error("unhandled variant");
}

// ---- metric plumbing -------------------------------------------------------------

[[nodiscard]] inline metrics::LabeledTrackSet labeled_truth(const sim::GroundTruth& truth, std::size_t frames) {
    metrics::LabeledTrackSet out(frames);
    const auto by_frame = sim::truth_by_frame(truth, frames);
    for (std::size_t k = 0; k < frames; ++k) {
        for (const auto& [label, x] : by_frame[k]) out[k].push_back({label, x.head(2)});
    }
    return out;
}

[[nodiscard]] inline metrics::LabeledTrackSet labeled_tracks(const std::vector<FrameEstimate>& est) {
    metrics::LabeledTrackSet out(est.size());
    for (std::size_t k = 0; k < est.size(); ++k) {
        for (const auto& t : est[k].tracks) out[k].push_back({t.tag, t.state.head(2)});
    }
    return out;
}

struct Evaluation {
    std::vector<metrics::OspaResult> ospa;
    metrics::OspaTResult ospa_t;
};

[[nodiscard]] inline Evaluation evaluate(const metrics::LabeledTrackSet& gt, const metrics::LabeledTrackSet& est,
                                         double c, double p, double ell) {
    Evaluation e;
    for (std::size_t k = 0; k < gt.size(); ++k) {
        metrics::PointSet x, y;
        for (const auto& g : gt[k]) x.push_back(g.position);
        for (const auto& h : est[k]) y.push_back(h.position);
        e.ospa.push_back(metrics::ospa(x, y, c, p));
    }
    e.ospa_t = metrics::ospa_t(gt, est, c, p, ell);
    return e;
}

/// RFS_TRACK_THREADS when set to a positive integer, else the hardware count.
[[nodiscard]] inline std::size_t worker_count() {
    if (const char* env = std::getenv("RFS_TRACK_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on a bounded pool; job must not throw.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) job(i);
        });
    }
}

// ---- shared error handling --------------------------------------------------------

namespace detail {

inline int guarded(const std::string& cmd, std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const io::ConfigError& e) {
        err << cmd << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const io::IoError& e) {
        err << cmd << ": " << e.what() << '\n';
        return kIoError;
    } catch (const FilterError& e) {
        err << cmd << ": filter failed at " << e.what() << '\n';
        return kFilterError;
    } catch (const fs::filesystem_error& e) {
        err << cmd << ": " << e.what() << '\n';
        return kIoError;
    }
}

inline io::ExperimentConfig load_unvalidated(const fs::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const io::IoError& e) {
        throw io::ConfigError(e.what());
    }
    return io::parse_config(text);
}

inline void report_diagnostics(const Diagnostics& d, std::ostream& err, const std::string& cmd) {
    constexpr std::size_t shown = 5;
    for (std::size_t i = 0; i < std::min(shown, d.messages.size()); ++i) err << cmd << ": note: " << d.messages[i] << '\n';
    if (d.messages.size() > shown) err << cmd << ": " << d.messages.size() - shown << " more notes\n";
}

} // namespace detail

// ---- subcommands ------------------------------------------------------------------

/// Writes ground_truth.csv and detections.csv.
inline int cmd_simulate(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed,
                        std::ostream& err) {
    return detail::guarded("simulate", err, [&] {
        auto cfg = detail::load_unvalidated(config);
        if (seed) cfg.seed = *seed;
        cfg.validate();
        auto scenario = cfg.scenario;
        scenario.seed = cfg.seed;
        const auto sim_out = sim::simulate(scenario);
        const auto gt = io::format_truth(sim_out.truth, scenario.frames);
        const auto det = io::format_detections(sim_out.measurement_sets());
        io::write_file(out / "ground_truth.csv", gt);
        io::write_file(out / "detections.csv", det);
        return int{kOk};
    });
}

/// Writes tracks.csv and rates.csv for one variant.
inline int cmd_track(const fs::path& detections, const fs::path& config, const fs::path& out,
                     std::optional<std::string> variant, std::ostream& err) {
    return detail::guarded("track", err, [&] {
        auto cfg = detail::load_unvalidated(config);
        if (variant) cfg.variants = {io::parse_variant(*variant)};
        cfg.validate();
        const auto frames = io::parse_detections(io::read_file(detections), detections.string());
        const auto result = run_variant(cfg, cfg.variants.front(), frames);
        detail::report_diagnostics(result.diagnostics, err, "track");
        io::write_file(out / "tracks.csv", io::format_tracks(result.estimates));
        io::write_file(out / "rates.csv", io::format_rates(result.estimates));
        return int{kOk};
    });
}

/// Writes metrics.csv: per-frame OSPA and OSPA-T plus a mean row.
inline int cmd_evaluate(const fs::path& gt_path, const fs::path& tracks_path, const fs::path& out, double c, double p,
                        std::optional<double> ell, std::ostream& err) {
    return detail::guarded("evaluate", err, [&] {
        const double l = ell.value_or(c);
        if (!(c > 0.0) || !(p >= 1.0) || !(l >= 0.0 && l <= c)) {
            throw io::ConfigError("need c > 0, p >= 1 and 0 <= ell <= c");
        }
        const auto truth = io::parse_truth(io::read_file(gt_path), gt_path.string());
        const auto tracks = io::parse_tracks(io::read_file(tracks_path), tracks_path.string());
        if (truth.frames != tracks.size()) {
            auto range = [](std::size_t n) { return n == 0 ? std::string("no frames") : "frames 1-" + std::to_string(n); };
            throw io::IoError("frame ranges differ: ground truth covers " + range(truth.frames) + ", tracks cover " +
                              range(tracks.size()));
        }
        const auto e = evaluate(labeled_truth(truth.truth, truth.frames), labeled_tracks(tracks), c, p, l);
        io::write_file(out / "metrics.csv", io::format_metrics(e.ospa, e.ospa_t));
        return int{kOk};
    });
}

/// Seeded replicates of every configured variant; see README for the layout.
inline int cmd_experiment(const fs::path& config, const fs::path& out, std::optional<std::size_t> runs,
                          std::optional<std::uint64_t> seed, std::ostream& err) {
    return detail::guarded("experiment", err, [&] {
        auto cfg = detail::load_unvalidated(config);
        if (runs) cfg.runs = *runs;
        if (seed) cfg.seed = *seed;
        cfg.validate();

        std::vector<sim::ScenarioOutput> scenes;
        std::vector<std::uint64_t> seeds;
        for (std::size_t r = 0; r < cfg.runs; ++r) {
            auto s = cfg.scenario;
            s.seed = cfg.seed + r;
            seeds.push_back(s.seed);
            scenes.push_back(sim::simulate(s));
        }
        const std::size_t frames = cfg.scenario.frames;

        struct Job {
            std::optional<RunResult> result;
            std::optional<Evaluation> eval;
            std::string error;
        };
        const std::size_t nv = cfg.variants.size();
        std::vector<Job> jobs(cfg.runs * nv);
        parallel_for(jobs.size(), worker_count(), [&](std::size_t i) {
            const std::size_t r = i / nv;
            const auto v = cfg.variants[i % nv];
            try {
                auto res = run_variant(cfg, v, scenes[r].measurement_sets());
                jobs[i].eval = evaluate(labeled_truth(scenes[r].truth, frames), labeled_tracks(res.estimates), cfg.c,
                                        cfg.p, cfg.ell_or_c());
                jobs[i].result = std::move(res);
            } catch (const std::exception& e) {
                jobs[i].error = e.what();
            }
        });

        auto run_dir = [](std::size_t r) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "run_%03zu", r + 1);
            return fs::path("runs") / buf;
        };

        using nlohmann::json;
        json manifest;
        manifest["schema_version"] = io::kSchemaVersion;
        manifest["config_hash"] = io::config_hash(cfg);
        manifest["config"] = io::canonical_json(cfg);
        manifest["seeds"] = seeds;
        manifest["timings"] = "timings.csv";
        manifest["runs"] = json::array();

        std::string traces =
            "variant,run,seed,frame,lambda_hat,p_d_hat,lambda_true,p_d_true,n_hat,n_true,ospa,ospa_t\n";
        std::string timings = "variant,run,seed,frames,total_ms,ms_per_frame\n";
        std::string summary = "variant,runs_ok,runs_failed,location,cardinality,ospa,ospa_t,ospa_t_location,ospa_t_cardinality\n";
        std::vector<std::pair<fs::path, std::string>> files;
        std::size_t ok_total = 0;

        for (std::size_t r = 0; r < cfg.runs; ++r) {
            const auto dir = run_dir(r);
            files.emplace_back(dir / "ground_truth.csv", io::format_truth(scenes[r].truth, frames));
            files.emplace_back(dir / "detections.csv", io::format_detections(scenes[r].measurement_sets()));
            json entry = {{"run", r + 1},
                          {"seed", seeds[r]},
                          {"ground_truth", (dir / "ground_truth.csv").generic_string()},
                          {"detections", (dir / "detections.csv").generic_string()},
                          {"variants", json::object()}};
            for (std::size_t vi = 0; vi < nv; ++vi) {
                const auto& job = jobs[r * nv + vi];
                const auto name = io::to_string(cfg.variants[vi]);
                if (!job.result) {
                    entry["variants"][name] = {{"status", "failed"}, {"error", job.error}};
                    continue;
                }
                ++ok_total;
                const auto vdir = dir / name;
                const auto& est = job.result->estimates;
                files.emplace_back(vdir / "tracks.csv", io::format_tracks(est));
                files.emplace_back(vdir / "rates.csv", io::format_rates(est, scenes[r].lambda_true, scenes[r].p_d_true));
                files.emplace_back(vdir / "metrics.csv", io::format_metrics(job.eval->ospa, job.eval->ospa_t));
                entry["variants"][name] = {{"status", "ok"},
                                           {"tracks", (vdir / "tracks.csv").generic_string()},
                                           {"rates", (vdir / "rates.csv").generic_string()},
                                           {"metrics", (vdir / "metrics.csv").generic_string()}};
            }
            manifest["runs"].push_back(entry);
        }

        for (std::size_t vi = 0; vi < nv; ++vi) {
            const auto name = io::to_string(cfg.variants[vi]);
            std::vector<metrics::OspaResult> pooled, pooled_t;
            std::size_t ok = 0;
            double ms_sum = 0.0;
            std::size_t ms_frames = 0;
            for (std::size_t r = 0; r < cfg.runs; ++r) {
                const auto& job = jobs[r * nv + vi];
                if (!job.result) continue;
                ++ok;
                const auto& est = job.result->estimates;
                const auto truth = sim::truth_by_frame(scenes[r].truth, frames);
                double run_ms = 0.0;
                for (double ms : job.result->frame_ms) run_ms += ms;
                ms_sum += run_ms;
                ms_frames += est.size();
                std::string line = name + ',';
                io::append_number(line, static_cast<std::uint64_t>(r + 1));
                line += ',';
                io::append_number(line, seeds[r]);
                line += ',';
                io::append_number(line, static_cast<std::uint64_t>(est.size()));
                line += ',';
                io::append_number(line, run_ms);
                line += ',';
                io::append_number(line, est.empty() ? 0.0 : run_ms / static_cast<double>(est.size()));
                timings += line + '\n';
                for (std::size_t k = 0; k < est.size(); ++k) {
                    pooled.push_back(job.eval->ospa[k]);
                    pooled_t.push_back(job.eval->ospa_t.per_frame[k]);
                    std::string row = name + ',';
                    io::append_number(row, static_cast<std::uint64_t>(r + 1));
                    row += ',';
                    io::append_number(row, seeds[r]);
                    row += ',';
                    io::append_number(row, static_cast<std::uint64_t>(k + 1));
                    for (double v : {est[k].lambda_hat, est[k].p_d_hat, scenes[r].lambda_true[k], scenes[r].p_d_true[k]}) {
                        row += ',';
                        io::append_number(row, v);
                    }
                    row += ',';
                    io::append_number(row, static_cast<std::uint64_t>(est[k].tracks.size()));
                    row += ',';
                    io::append_number(row, static_cast<std::uint64_t>(truth[k].size()));
                    row += ',';
                    io::append_number(row, job.eval->ospa[k].total);
                    row += ',';
                    io::append_number(row, job.eval->ospa_t.per_frame[k].total);
                    traces += row + '\n';
                }
            }
            std::string line = name + ',';
            io::append_number(line, static_cast<std::uint64_t>(ok));
            line += ',';
            io::append_number(line, static_cast<std::uint64_t>(cfg.runs - ok));
            if (!pooled.empty()) {
                const auto a = metrics::summarize(pooled);
                const auto b = metrics::summarize(pooled_t);
                for (double v : {a.location, a.cardinality, a.total, b.total, b.location, b.cardinality}) {
                    line += ',';
                    io::append_number(line, v);
                }
            } else {
                line += ",,,,,,";
            }
            summary += line + '\n';
            if (ms_frames > 0) {
                std::string mean = name + ",mean,,";
                io::append_number(mean, static_cast<std::uint64_t>(ms_frames));
                mean += ',';
                io::append_number(mean, ms_sum);
                mean += ',';
                io::append_number(mean, ms_sum / static_cast<double>(ms_frames));
                timings += mean + '\n';
            }
        }

        for (const auto& [path, text] : files) io::write_file(out / path, text);
        io::write_file(out / "summary.csv", summary);
        io::write_file(out / "traces.csv", traces);
        io::write_file(out / "timings.csv", timings);
        io::write_file(out / "manifest.json", manifest.dump(2) + '\n');

        for (const auto& job : jobs) {
            if (!job.error.empty()) err << "experiment: " << job.error << '\n';
        }
        if (ok_total == 0) {
            err << "experiment: every run failed\n";
            return int{kFilterError};
        }
        return int{kOk};
    });
}

} // namespace rfs::cli
