#pragma once

#include <charconv>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "rfs/bootstrap.hpp"
#include "rfs/metrics.hpp"
#include "rfs/simulator.hpp"
#include "rfs/tracks.hpp"

/// File formats: CSV data files and the JSON experiment config.
namespace rfs::io {

/// Unreadable or unwritable file, or a data file that does not parse.
class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config that parses as JSON but violates the schema or an invariant.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- numbers ----------------------------------------------------------------

/// Shortest text that reads back to the identical double; '.' separator always.
inline void append_number(std::string& out, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline void append_number(std::string& out, std::uint64_t v) {
    char buf[24];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

template <class T>
[[nodiscard]] T parse_number(std::string_view s, const std::string& where) {
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
        throw IoError(where + ": cannot parse '" + std::string(s) + "' as a number");
    }
    return v;
}

// ---- files ------------------------------------------------------------------

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace detail {

struct CsvTable {
    std::optional<std::size_t> frames;  // from a "# frames: N" line
    std::vector<std::vector<std::string_view>> rows;
    std::vector<std::size_t> line_numbers;
};

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Views point into `text`, which must outlive the table.
inline CsvTable parse_csv(std::string_view text, std::string_view header, const std::string& name) {
    CsvTable t;
    bool seen_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    const auto columns = split(header).size();
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view key = "# frames:";
            if (line.substr(0, key.size()) == key) {
                auto v = line.substr(key.size());
                while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
                t.frames = parse_number<std::size_t>(v, name + ":" + std::to_string(line_no));
            }
            continue;
        }
        if (!seen_header) {
            if (line != header) {
                throw IoError(name + ":" + std::to_string(line_no) + ": expected header '" + std::string(header) + "'");
            }
            seen_header = true;
            continue;
        }
        auto fields = split(line);
        if (fields.size() != columns) {
            throw IoError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) + " fields, got " +
                          std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (!seen_header && !text.empty() && text.find_first_not_of(" \r\n") != std::string_view::npos && t.rows.empty() &&
        !t.frames) {
        throw IoError(name + ": missing header '" + std::string(header) + "'");
    }
    return t;
}

// Frame count: header line when present, else the largest frame index seen.
inline std::size_t frame_count(const CsvTable& t, const std::vector<std::size_t>& frames_in_rows, const std::string& name) {
    std::size_t max_frame = 0;
    for (std::size_t i = 0; i < frames_in_rows.size(); ++i) {
        if (frames_in_rows[i] < 1) {
            throw IoError(name + ":" + std::to_string(t.line_numbers[i]) + ": frame indices start at 1");
        }
        max_frame = std::max(max_frame, frames_in_rows[i]);
    }
    if (t.frames) {
        if (max_frame > *t.frames) {
            throw IoError(name + ": frame " + std::to_string(max_frame) + " beyond declared count " +
                          std::to_string(*t.frames));
        }
        return *t.frames;
    }
    return max_frame;
}

inline void append_frames_line(std::string& out, std::size_t frames) {
    out += "# frames: ";
    append_number(out, static_cast<std::uint64_t>(frames));
    out += '\n';
}

} // namespace detail

// ---- detections: frame,x,y ----------------------------------------------------

inline constexpr std::string_view kDetectionsHeader = "frame,x,y";

[[nodiscard]] inline std::string format_detections(const std::vector<MeasurementSet>& frames) {
    std::string out;
    detail::append_frames_line(out, frames.size());
    out += kDetectionsHeader;
    out += '\n';
    for (std::size_t k = 0; k < frames.size(); ++k) {
        for (const auto& z : frames[k]) {
            append_number(out, static_cast<std::uint64_t>(k + 1));
            out += ',';
            append_number(out, z(0));
            out += ',';
            append_number(out, z(1));
            out += '\n';
        }
    }
    return out;
}

[[nodiscard]] inline std::vector<MeasurementSet> parse_detections(std::string_view text,
                                                                  const std::string& name = "detections") {
    const auto t = detail::parse_csv(text, kDetectionsHeader, name);
    std::vector<std::size_t> frame_of;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        frame_of.push_back(parse_number<std::size_t>(t.rows[i][0], name + ":" + std::to_string(t.line_numbers[i])));
    }
    std::vector<MeasurementSet> out(detail::frame_count(t, frame_of, name));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = name + ":" + std::to_string(t.line_numbers[i]);
        Vector z(2);
        z << parse_number<double>(t.rows[i][1], where), parse_number<double>(t.rows[i][2], where);
        out[frame_of[i] - 1].push_back(std::move(z));
    }
    return out;
}

// ---- ground truth: frame,label,x,y,vx,vy,model -------------------------------

inline constexpr std::string_view kTruthHeader = "frame,label,x,y,vx,vy,model";
inline constexpr std::string_view kTracksHeader = "frame,tag,x,y,vx,vy,model";

namespace detail {

inline void append_state_row(std::string& out, std::size_t frame, std::uint64_t id, const Vector& x, std::size_t model) {
    append_number(out, static_cast<std::uint64_t>(frame));
    out += ',';
    append_number(out, id);
    for (Eigen::Index i = 0; i < 4; ++i) {
        out += ',';
        append_number(out, i < x.size() ? x(i) : 0.0);
    }
    out += ',';
    append_number(out, static_cast<std::uint64_t>(model));
    out += '\n';
}

struct StateRow {
    std::size_t frame;
    std::uint64_t id;
    Vector state;
    std::size_t model;
};

inline std::vector<StateRow> parse_state_rows(const CsvTable& t, const std::string& name) {
    std::vector<StateRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = name + ":" + std::to_string(t.line_numbers[i]);
        const auto& f = t.rows[i];
        StateRow r;
        r.frame = parse_number<std::size_t>(f[0], where);
        r.id = parse_number<std::uint64_t>(f[1], where);
        r.state = Vector(4);
        for (Eigen::Index j = 0; j < 4; ++j) r.state(j) = parse_number<double>(f[2 + static_cast<std::size_t>(j)], where);
        r.model = parse_number<std::size_t>(f[6], where);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace detail

[[nodiscard]] inline std::string format_truth(const sim::GroundTruth& truth, std::size_t frames) {
    std::string out;
    detail::append_frames_line(out, frames);
    out += kTruthHeader;
    out += '\n';
    for (std::size_t k = 1; k <= frames; ++k) {
        for (const auto& t : truth.tracks) {
            if (!t.alive_at(k)) continue;
            detail::append_state_row(out, k, t.label, t.states[k - t.birth_frame], t.models[k - t.birth_frame]);
        }
    }
    return out;
}

struct TruthFile {
    sim::GroundTruth truth;
    std::size_t frames = 0;
};

[[nodiscard]] inline TruthFile parse_truth(std::string_view text, const std::string& name = "ground truth") {
    const auto t = detail::parse_csv(text, kTruthHeader, name);
    const auto rows = detail::parse_state_rows(t, name);
    std::vector<std::size_t> frame_of;
    for (const auto& r : rows) frame_of.push_back(r.frame);
    TruthFile out;
    out.frames = detail::frame_count(t, frame_of, name);

    std::map<std::uint64_t, std::size_t> index;  // label -> track position, first appearance order
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        auto [it, fresh] = index.try_emplace(r.id, out.truth.tracks.size());
        if (fresh) {
            sim::TruthTrack track;
            track.label = r.id;
            track.birth_frame = track.death_frame = r.frame;
            out.truth.tracks.push_back(std::move(track));
        } else {
            auto& track = out.truth.tracks[it->second];
            if (r.frame != track.death_frame + 1) {
                throw IoError(name + ":" + std::to_string(t.line_numbers[i]) + ": label " + std::to_string(r.id) +
                              " is not contiguous in time");
            }
            track.death_frame = r.frame;
        }
        auto& track = out.truth.tracks[it->second];
        track.states.push_back(r.state);
        track.models.push_back(r.model);
    }
    return out;
}

// ---- tracks: frame,tag,x,y,vx,vy,model ----------------------------------------

[[nodiscard]] inline std::string format_tracks(const std::vector<FrameEstimate>& estimates) {
    std::string out;
    detail::append_frames_line(out, estimates.size());
    out += kTracksHeader;
    out += '\n';
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        for (const auto& t : estimates[k].tracks) detail::append_state_row(out, k + 1, t.tag, t.state, t.model);
    }
    return out;
}

/// Rates are not part of the track file; they come back as zero.
[[nodiscard]] inline std::vector<FrameEstimate> parse_tracks(std::string_view text, const std::string& name = "tracks") {
    const auto t = detail::parse_csv(text, kTracksHeader, name);
    const auto rows = detail::parse_state_rows(t, name);
    std::vector<std::size_t> frame_of;
    for (const auto& r : rows) frame_of.push_back(r.frame);
    std::vector<FrameEstimate> out(detail::frame_count(t, frame_of, name));
    for (std::size_t k = 0; k < out.size(); ++k) out[k].frame = k + 1;
    for (const auto& r : rows) out[r.frame - 1].tracks.push_back({r.id, r.state, r.model});
    return out;
}

// ---- rates: frame,lambda_hat,p_d_hat,lambda_true,p_d_true ----------------------

inline constexpr std::string_view kRatesHeader = "frame,lambda_hat,p_d_hat,lambda_true,p_d_true";

/// Truth columns stay empty when the true rates are unknown.
[[nodiscard]] inline std::string format_rates(const std::vector<FrameEstimate>& estimates,
                                              const std::vector<double>& lambda_true = {},
                                              const std::vector<double>& p_d_true = {}) {
    std::string out = std::string(kRatesHeader) + '\n';
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        append_number(out, static_cast<std::uint64_t>(k + 1));
        out += ',';
        append_number(out, estimates[k].lambda_hat);
        out += ',';
        append_number(out, estimates[k].p_d_hat);
        out += ',';
        if (k < lambda_true.size()) append_number(out, lambda_true[k]);
        out += ',';
        if (k < p_d_true.size()) append_number(out, p_d_true[k]);
        out += '\n';
    }
    return out;
}

// ---- metrics ------------------------------------------------------------------

inline constexpr std::string_view kMetricsHeader =
    "frame,ospa,location,cardinality,ospa_t,ospa_t_location,ospa_t_cardinality";

/// Per-frame rows, then one row with frame "mean".
[[nodiscard]] inline std::string format_metrics(const std::vector<metrics::OspaResult>& ospa,
                                                const metrics::OspaTResult& ospa_t) {
    std::string out = std::string(kMetricsHeader) + '\n';
    auto row = [&out](const metrics::OspaResult& a, const metrics::OspaResult& b) {
        for (double v : {a.total, a.location, a.cardinality, b.total, b.location, b.cardinality}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    };
    for (std::size_t k = 0; k < ospa.size(); ++k) {
        append_number(out, static_cast<std::uint64_t>(k + 1));
        row(ospa[k], ospa_t.per_frame[k]);
    }
    if (!ospa.empty()) {
        out += "mean";
        row(metrics::summarize(ospa), ospa_t.average);
    }
    return out;
}

// ---- experiment config (JSON) --------------------------------------------------

inline constexpr int kSchemaVersion = 1;

enum class Variant { bootstrap, mm_cphd, mm_lambda_cphd };

[[nodiscard]] inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::bootstrap: return "bootstrap";
    case Variant::mm_cphd: return "mm-cphd";
    case Variant::mm_lambda_cphd: return "mm-lambda-cphd";
    }
    return "?";
}

[[nodiscard]] inline Variant parse_variant(const std::string& s) {
    if (s == "bootstrap") return Variant::bootstrap;
    if (s == "mm-cphd") return Variant::mm_cphd;
    if (s == "mm-lambda-cphd") return Variant::mm_lambda_cphd;
    throw ConfigError("unknown tracker variant '" + s + "' (bootstrap, mm-cphd, mm-lambda-cphd)");
}

struct TrackerParams {
    double birth_rate = 0.5;  // filter-side expected births per frame
    std::size_t max_cardinality = 40;
    ReductionConfig reduction;
    std::optional<double> fixed_lambda;  // mm-cphd only
    std::optional<double> fixed_p_d;
};

struct ExperimentConfig {
    std::string scenario_name = "custom";
    sim::ScenarioConfig scenario;
    double measurement_sigma = 1.0;
    std::vector<Variant> variants{Variant::bootstrap};
    TrackerParams tracker;
    lambda_cphd::EstimatorConfig estimator;
    std::size_t window = 3;
    double lambda_floor = 0.5;
    double p_d_min = 0.05;
    double p_d_max = 0.999;
    double c = 10.0;
    double p = 1.0;
    std::optional<double> ell;  // defaults to c
    std::size_t runs = 1;
    std::uint64_t seed = 1;

    [[nodiscard]] double ell_or_c() const { return ell.value_or(c); }

    [[nodiscard]] SystemModel system() const {
        return sim::filter_system(scenario, tracker.birth_rate, tracker.max_cardinality);
    }

    [[nodiscard]] BootstrapConfig bootstrap() const {
        BootstrapConfig b;
        b.tracker.reduction = tracker.reduction;
        b.tracker.max_cardinality = tracker.max_cardinality;
        b.estimator = estimator;
        b.window = window;
        b.lambda_floor = lambda_floor;
        b.p_d_min = p_d_min;
        b.p_d_max = p_d_max;
        return b;
    }

    /// Throws ConfigError listing every violated invariant.
    void validate() const {
        std::vector<std::string> bad = scenario.violations();
        if (runs < 1) bad.emplace_back("runs must be >= 1");
        if (variants.empty()) bad.emplace_back("at least one variant required");
        if (!(c > 0.0)) bad.emplace_back("metrics.c must be > 0");
        if (!(p >= 1.0)) bad.emplace_back("metrics.p must be >= 1");
        if (!(ell_or_c() >= 0.0 && ell_or_c() <= c)) bad.emplace_back("metrics.ell must lie in [0, c]");
        if (!(measurement_sigma >= 0.0)) bad.emplace_back("scenario.measurement_sigma must be >= 0");
        if (!(tracker.birth_rate > 0.0)) bad.emplace_back("tracker.birth_rate must be > 0");
        if (tracker.max_cardinality < 1) bad.emplace_back("tracker.max_cardinality must be >= 1");
        if (window < 1) bad.emplace_back("bootstrap.window must be >= 1");
        if (!(lambda_floor >= 0.0)) bad.emplace_back("bootstrap.lambda_floor must be >= 0");
        if (!(p_d_min > 0.0 && p_d_min <= p_d_max && p_d_max <= 1.0)) {
            bad.emplace_back("bootstrap p_D bounds must satisfy 0 < p_d_min <= p_d_max <= 1");
        }
        if (!(estimator.k_beta >= 1.0)) bad.emplace_back("estimator.k_beta must be >= 1");
        if (!(estimator.clutter_survival >= 0.0 && estimator.clutter_survival <= 1.0)) {
            bad.emplace_back("estimator.clutter_survival outside [0,1]");
        }
        for (Variant v : variants) {
            if (v != Variant::mm_cphd) continue;
            if (!tracker.fixed_lambda || !tracker.fixed_p_d) {
                bad.emplace_back("variant mm-cphd needs tracker.lambda and tracker.p_d");
            } else if (!(*tracker.fixed_lambda >= 0.0) || !(*tracker.fixed_p_d > 0.0 && *tracker.fixed_p_d <= 1.0)) {
                bad.emplace_back("tracker.lambda must be >= 0 and tracker.p_d in (0, 1]");
            }
        }
        if (!bad.empty()) {
            std::string msg = "invalid config:";
            for (const auto& b : bad) msg += "\n  " + b;
            throw ConfigError(msg);
        }
    }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || k == key;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

inline json schedule_to_json(const sim::Schedule& s) {
    switch (s.kind) {
    case sim::Schedule::Kind::constant: return {{"constant", s.value}};
    case sim::Schedule::Kind::step: return {{"step", {s.before, s.after, s.at_frame}}};
    case sim::Schedule::Kind::linear_ramp: return {{"ramp", {s.start, s.end}}};
    case sim::Schedule::Kind::piecewise: {
        json knots = json::array();
        for (const auto& [f, v] : s.knots) knots.push_back({f, v});
        return {{"piecewise", knots}};
    }
    }
    return {};
}

inline sim::Schedule schedule_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return sim::Schedule::constant(j.get<double>());
    if (!j.is_object() || j.size() != 1) {
        throw ConfigError(where + ": schedule must be a number or one of {constant, step, ramp, piecewise}");
    }
    try {
        const auto& [kind, v] = *j.items().begin();
        if (kind == "constant") return sim::Schedule::constant(v.get<double>());
        if (kind == "step") {
            if (v.size() != 3) throw ConfigError(where + ".step: expected [before, after, at_frame]");
            return sim::Schedule::step(v[0].get<double>(), v[1].get<double>(), v[2].get<std::size_t>());
        }
        if (kind == "ramp") {
            if (v.size() != 2) throw ConfigError(where + ".ramp: expected [start, end]");
            return sim::Schedule::ramp(v[0].get<double>(), v[1].get<double>());
        }
        if (kind == "piecewise") {
            std::vector<std::pair<double, double>> knots;
            for (const auto& k : v) {
                if (k.size() != 2) throw ConfigError(where + ".piecewise: knots are [frame, value]");
                knots.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            if (knots.empty()) throw ConfigError(where + ".piecewise: needs knots");
            return sim::Schedule::piecewise(std::move(knots));
        }
        throw ConfigError(where + ": unknown schedule kind '" + kind + "'");
    } catch (const json::exception&) {
        throw ConfigError(where + ": malformed schedule");
    }
}

inline void read_beta(const json& obj, const char* key, BetaDensity& into, const std::string& where) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + "." + key + ": expected [s, t]");
    }
    into = BetaDensity{v[0].get<double>(), v[1].get<double>()};
}

} // namespace detail

namespace detail {

inline ExperimentConfig parse_config_unchecked(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                           {"schema_version", "scenario", "variant", "variants", "tracker", "estimator", "bootstrap",
                            "metrics", "runs", "seed"},
                           "config");
    if (!j.contains("schema_version")) throw ConfigError("config: schema_version missing");
    if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }

    ExperimentConfig cfg;
    read(j, "runs", cfg.runs, "config");
    read(j, "seed", cfg.seed, "config");

    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        if (s.is_string()) {
            cfg.scenario_name = s.get<std::string>();
            try {
                cfg.scenario = sim::preset_scenario(cfg.scenario_name);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (s.is_object()) {
            const std::string w = "scenario";
            reject_unknown(s,
                                   {"preset", "frames", "initial_targets", "birth_rate", "p_survival", "region",
                                    "measurement_sigma", "clutter", "detection"},
                                   w);
            if (s.contains("preset")) {
                cfg.scenario_name = s["preset"].get<std::string>();
                try {
                    cfg.scenario = sim::preset_scenario(cfg.scenario_name);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            }
            read(s, "frames", cfg.scenario.frames, w);
            read(s, "initial_targets", cfg.scenario.initial_targets, w);
            read(s, "birth_rate", cfg.scenario.birth_rate, w);
            read(s, "p_survival", cfg.scenario.p_survival, w);
            read(s, "measurement_sigma", cfg.measurement_sigma, w);
            if (s.contains("region")) {
                const auto& r = s["region"];
                if (!r.is_array() || r.size() != 4) throw ConfigError("scenario.region: expected [x_min, x_max, y_min, y_max]");
                cfg.scenario.region = Region{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
            }
            if (s.contains("clutter")) cfg.scenario.clutter = schedule_from_json(s["clutter"], "scenario.clutter");
            if (s.contains("detection")) {
                cfg.scenario.detection = schedule_from_json(s["detection"], "scenario.detection");
            }
        } else {
            throw ConfigError("scenario: expected a preset name or an object");
        }
    }
    cfg.scenario.measurement = default_measurement_model(cfg.measurement_sigma);

    if (j.contains("variant") && j.contains("variants")) throw ConfigError("config: give either variant or variants");
    if (j.contains("variant")) cfg.variants = {parse_variant(j["variant"].get<std::string>())};
    if (j.contains("variants")) {
        if (!j["variants"].is_array()) throw ConfigError("config.variants: expected an array");
        cfg.variants.clear();
        for (const auto& v : j["variants"]) cfg.variants.push_back(parse_variant(v.get<std::string>()));
    }

    if (j.contains("tracker")) {
        const auto& t = j["tracker"];
        const std::string w = "tracker";
        reject_unknown(t, {"birth_rate", "max_cardinality", "prune", "merge", "max_components", "lambda", "p_d"}, w);
        read(t, "birth_rate", cfg.tracker.birth_rate, w);
        read(t, "max_cardinality", cfg.tracker.max_cardinality, w);
        read(t, "prune", cfg.tracker.reduction.prune_threshold, w);
        read(t, "merge", cfg.tracker.reduction.merge_threshold, w);
        read(t, "max_components", cfg.tracker.reduction.max_components, w);
        if (t.contains("lambda")) cfg.tracker.fixed_lambda = t["lambda"].get<double>();
        if (t.contains("p_d")) cfg.tracker.fixed_p_d = t["p_d"].get<double>();
    }
    if (j.contains("estimator")) {
        const auto& e = j["estimator"];
        const std::string w = "estimator";
        reject_unknown(e,
                               {"target_birth_beta", "clutter_birth_components", "clutter_birth_rate",
                                "clutter_birth_beta", "clutter_survival", "k_beta", "max_cardinality"},
                               w);
        read_beta(e, "target_birth_beta", cfg.estimator.target_birth_beta, w);
        read_beta(e, "clutter_birth_beta", cfg.estimator.clutter_birth_beta, w);
        read(e, "clutter_birth_components", cfg.estimator.clutter_birth_components, w);
        read(e, "clutter_birth_rate", cfg.estimator.clutter_birth_rate, w);
        read(e, "clutter_survival", cfg.estimator.clutter_survival, w);
        read(e, "k_beta", cfg.estimator.k_beta, w);
        read(e, "max_cardinality", cfg.estimator.max_cardinality, w);
    }
    if (j.contains("bootstrap")) {
        const auto& b = j["bootstrap"];
        const std::string w = "bootstrap";
        reject_unknown(b, {"window", "lambda_floor", "p_d_min", "p_d_max"}, w);
        read(b, "window", cfg.window, w);
        read(b, "lambda_floor", cfg.lambda_floor, w);
        read(b, "p_d_min", cfg.p_d_min, w);
        read(b, "p_d_max", cfg.p_d_max, w);
    }
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        reject_unknown(m, {"c", "p", "ell"}, "metrics");
        read(m, "c", cfg.c, "metrics");
        read(m, "p", cfg.p, "metrics");
        if (m.contains("ell")) cfg.ell = m["ell"].get<double>();
    }
    return cfg;
}

} // namespace detail

/// Schema check only; `validate()` covers the value invariants.
[[nodiscard]] inline ExperimentConfig parse_config(std::string_view text) {
    try {
        return detail::parse_config_unchecked(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: wrong value type (") + e.what() + ")");
    }
}

/// Fully resolved config; keys come out sorted, so field order in the input
/// file never matters.
[[nodiscard]] inline nlohmann::json canonical_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    const auto& s = cfg.scenario;
    json variants = json::array();
    for (Variant v : cfg.variants) variants.push_back(to_string(v));
    json tracker = {{"birth_rate", cfg.tracker.birth_rate},
                    {"max_cardinality", cfg.tracker.max_cardinality},
                    {"prune", cfg.tracker.reduction.prune_threshold},
                    {"merge", cfg.tracker.reduction.merge_threshold},
                    {"max_components", cfg.tracker.reduction.max_components}};
    if (cfg.tracker.fixed_lambda) tracker["lambda"] = *cfg.tracker.fixed_lambda;
    if (cfg.tracker.fixed_p_d) tracker["p_d"] = *cfg.tracker.fixed_p_d;
    const auto& e = cfg.estimator;
    return {
        {"schema_version", kSchemaVersion},
        {"scenario",
         {{"preset", cfg.scenario_name},
          {"frames", s.frames},
          {"initial_targets", s.initial_targets},
          {"birth_rate", s.birth_rate},
          {"p_survival", s.p_survival},
          {"region", {s.region.x_min, s.region.x_max, s.region.y_min, s.region.y_max}},
          {"measurement_sigma", cfg.measurement_sigma},
          {"clutter", detail::schedule_to_json(s.clutter)},
          {"detection", detail::schedule_to_json(s.detection)}}},
        {"variants", variants},
        {"tracker", tracker},
        {"estimator",
         {{"target_birth_beta", {e.target_birth_beta.s, e.target_birth_beta.t}},
          {"clutter_birth_components", e.clutter_birth_components},
          {"clutter_birth_rate", e.clutter_birth_rate},
          {"clutter_birth_beta", {e.clutter_birth_beta.s, e.clutter_birth_beta.t}},
          {"clutter_survival", e.clutter_survival},
          {"k_beta", e.k_beta},
          {"max_cardinality", e.max_cardinality}}},
        {"bootstrap",
         {{"window", cfg.window}, {"lambda_floor", cfg.lambda_floor}, {"p_d_min", cfg.p_d_min}, {"p_d_max", cfg.p_d_max}}},
        {"metrics", {{"c", cfg.c}, {"p", cfg.p}, {"ell", cfg.ell_or_c()}}},
        {"runs", cfg.runs},
        {"seed", cfg.seed},
    };
}

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
[[nodiscard]] inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    auto cfg = parse_config(text);
    cfg.validate();
    return cfg;
}

} // namespace rfs::io
