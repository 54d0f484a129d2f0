#include "metabias/harness.hpp"

#include "metabias/error.hpp"
#include "metabias/estimators.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

namespace metabias::harness {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigError, path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) config_error(path + "." + key, "unknown key");
    }
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) config_error(path, "expected a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) config_error(path, "expected an integer");
    return v.get<int>();
}

template <class T, class F>
std::vector<T> get_list(const json& v, const std::string& path, F&& one) {
    if (!v.is_array()) config_error(path, "expected an array");
    if (v.empty()) config_error(path, "must not be empty");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(one(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) config_error(path, "expected a string");
    return v.get<std::string>();
}

template <class T, class Parse>
T parse_enum(const json& v, const std::string& path, Parse&& parse) {
    const std::string s = get_string(v, path);
    try {
        return parse(s);
    } catch (const Error& e) {
        config_error(path, e.what());
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, std::size_t line, const char* field) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        parse_error(line, std::string("field '") + field + "' is not a finite number: '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s, std::size_t line, const char* field) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        // Accept integral values written as reals, e.g. "15.0".
        const double d = parse_double(s, line, field);
        if (d != std::floor(d)) parse_error(line, std::string("field '") + field + "' is not an integer: '" + s + "'");
        return static_cast<int>(d);
    }
    return v;
}

const std::vector<std::string> kRawHeader{"study_id", "n1", "mean1", "sd1", "n0", "mean0", "sd0"};
const std::vector<std::string> kEffectHeader{"study_id", "effect", "variance", "n1", "n0", "kind"};

const sim::CriticalValues& critical_values_for(double alpha) {
    thread_local std::optional<sim::CriticalValues> cache;
    if (!cache || cache->alpha() != alpha) cache.emplace(alpha);
    return *cache;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        config_error("config", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) config_error("config", "expected a JSON object");
    reject_unknown(root, "config",
                   {"grid", "eta", "alpha", "replicates", "seed", "pi_pub", "target_rate", "calib_reps", "methods",
                    "output", "threads"});

    RunConfig cfg;
    if (root.contains("grid")) {
        const json& g = root["grid"];
        if (!g.is_object()) config_error("config.grid", "expected an object");
        reject_unknown(g, "config.grid", {"m", "n", "tau2", "variance_scenario", "effect_kind"});
        if (g.contains("m")) {
            cfg.m = get_list<int>(g["m"], "config.grid.m", [](const json& v, const std::string& p) {
                const int m = get_int(v, p);
                if (m < 2) config_error(p, "m must be >= 2");
                return m;
            });
        }
        if (g.contains("n")) {
            cfg.n = get_list<double>(g["n"], "config.grid.n", [](const json& v, const std::string& p) {
                const double n = get_number(v, p);
                if (!(n > 0.0)) config_error(p, "n must be > 0");
                return n;
            });
        }
        if (g.contains("tau2")) {
            cfg.tau2 = get_list<double>(g["tau2"], "config.grid.tau2", [](const json& v, const std::string& p) {
                const double t = get_number(v, p);
                if (!(t >= 0.0)) config_error(p, "tau2 must be >= 0");
                return t;
            });
        }
        if (g.contains("variance_scenario")) {
            cfg.variance_scenario = get_list<sim::VarianceScenario>(
                g["variance_scenario"], "config.grid.variance_scenario", [](const json& v, const std::string& p) {
                    return parse_enum<sim::VarianceScenario>(v, p, sim::parse_variance_scenario);
                });
        }
        if (g.contains("effect_kind")) {
            cfg.effect_kind = get_list<EffectKind>(g["effect_kind"], "config.grid.effect_kind",
                                                   [](const json& v, const std::string& p) {
                                                       return parse_enum<EffectKind>(v, p, parse_effect_kind);
                                                   });
        }
    }
    if (root.contains("eta")) cfg.eta = get_number(root["eta"], "config.eta");
    if (root.contains("alpha")) {
        cfg.alpha = get_number(root["alpha"], "config.alpha");
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) config_error("config.alpha", "must lie in (0,1)");
    }
    if (root.contains("replicates")) {
        cfg.replicates = get_int(root["replicates"], "config.replicates");
        if (cfg.replicates < 1) config_error("config.replicates", "must be >= 1");
    }
    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
            config_error("config.seed", "expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }
    if (root.contains("pi_pub") && !root["pi_pub"].is_null()) {
        const double p = get_number(root["pi_pub"], "config.pi_pub");
        if (!(p >= 0.0 && p <= 1.0)) config_error("config.pi_pub", "must lie in [0,1]");
        cfg.pi_pub = p;
    }
    if (root.contains("target_rate")) {
        cfg.target_rate = get_number(root["target_rate"], "config.target_rate");
        if (!(cfg.target_rate > 0.0 && cfg.target_rate <= 1.0)) config_error("config.target_rate", "must lie in (0,1]");
    }
    if (root.contains("calib_reps")) {
        cfg.calib_reps = get_int(root["calib_reps"], "config.calib_reps");
        if (cfg.calib_reps < 1) config_error("config.calib_reps", "must be >= 1");
    }
    if (root.contains("methods")) {
        cfg.methods = get_list<Method>(root["methods"], "config.methods", [](const json& v, const std::string& p) {
            return parse_enum<Method>(v, p, parse_method);
        });
    }
    if (root.contains("output")) cfg.output = get_string(root["output"], "config.output");
    if (root.contains("threads")) {
        cfg.threads = get_int(root["threads"], "config.threads");
        if (cfg.threads < 0) config_error("config.threads", "must be >= 0");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::vector<ScenarioCell> expand_grid(const RunConfig& cfg) {
    std::vector<ScenarioCell> cells;
    for (int m : cfg.m)
        for (double n : cfg.n)
            for (double t : cfg.tau2)
                for (auto v : cfg.variance_scenario)
                    for (auto k : cfg.effect_kind) cells.push_back({m, n, t, v, k});
    return cells;
}

sim::SimConfig cell_config(const RunConfig& cfg, const ScenarioCell& cell, std::size_t) {
    sim::SimConfig s;
    s.m = cell.m;
    s.delta = cell.n;
    s.eta = cfg.eta;
    s.tau2 = cell.tau2;
    s.variance_scenario = cell.variance_scenario;
    s.effect_kind = cell.effect_kind;
    s.alpha = cfg.alpha;
    s.pi_pub = cfg.pi_pub.value_or(0.0);
    s.replicates = cfg.replicates;
    s.seed = cfg.seed;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("METABIAS_THREADS"); env != nullptr) {
        int v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto work = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, ptr);
}

std::string format_exact(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

CalibrationRow calibrate_cell(const RunConfig& cfg, const ScenarioCell& cell, std::size_t cell_index, int threads) {
    CalibrationRow row;
    row.cell = cell;
    sim::SimConfig sc = cell_config(cfg, cell, cell_index);
    sim::Rng calib_rng = sim::make_stream(cfg.seed, cell_index, 0);
    row.p_significant = sim::estimate_p_significant(sc, cfg.calib_reps, calib_rng);
    try {
        row.pi_pub = cfg.pi_pub ? *cfg.pi_pub : sim::pi_pub_for_rate(row.p_significant, cfg.target_rate);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::TargetUnreachable) throw;
        return row;
    }
    sc.pi_pub = *row.pi_pub;

    std::vector<int> counts(static_cast<std::size_t>(cfg.replicates));
    parallel_for(counts.size(), threads, [&](std::size_t r) {
        sim::Rng rng = sim::make_stream(cfg.seed, cell_index, r + 1);
        counts[r] = static_cast<int>(sim::generate_meta(sc, rng, critical_values_for(sc.alpha)).published.size());
    });
    double sum = 0.0;
    for (int c : counts) sum += c;
    row.mean_published = sum / static_cast<double>(counts.size());
    return row;
}

std::vector<CalibrationRow> run_calibration(const RunConfig& cfg, int threads) {
    const auto cells = expand_grid(cfg);
    std::vector<CalibrationRow> rows;
    rows.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) rows.push_back(calibrate_cell(cfg, cells[c], c, threads));
    return rows;
}

namespace {

std::string cell_prefix(const ScenarioCell& c) {
    return std::to_string(c.m) + "," + format_number(c.n) + "," + format_number(c.tau2) + "," +
           std::string(sim::variance_scenario_name(c.variance_scenario)) + "," +
           std::string(effect_kind_name(c.effect_kind));
}

}  // namespace

std::string calibration_csv(const std::vector<CalibrationRow>& rows) {
    std::string out = "m,n,tau2,variance_scenario,effect_kind,pi_pub,mean_published\n";
    for (const auto& r : rows) {
        out += cell_prefix(r.cell) + ",";
        if (r.pi_pub) {
            out += format_number(*r.pi_pub) + "," + format_number(r.mean_published) + "\n";
        } else {
            out += "TargetUnreachable,NA\n";
        }
    }
    return out;
}

std::vector<SimulationRow> run_simulation(const RunConfig& cfg, int threads) {
    if (cfg.methods.empty()) config_error("config.methods", "must not be empty");
    const auto cells = expand_grid(cfg);
    if (cells.empty()) config_error("config.grid", "grid is empty");

    struct Estimate {
        bool ok = false;
        double estimate = 0.0, lo = 0.0, hi = 0.0;
    };

    std::vector<SimulationRow> rows;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const ScenarioCell& cell = cells[c];
        sim::SimConfig sc = cell_config(cfg, cell, c);
        if (!cfg.pi_pub) {
            sim::Rng calib_rng = sim::make_stream(cfg.seed, c, 0);
            sc.pi_pub = sim::calibrate_pi_pub(sc, cfg.target_rate, cfg.calib_reps, calib_rng);
        }
        const double truth = sim::true_smd(sc.eta, sc.variance_scenario);
        const std::size_t nm = cfg.methods.size();
        const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
        std::vector<Estimate> table(reps * nm);
        std::vector<int> published(reps);

        parallel_for(reps, threads, [&](std::size_t r) {
            sim::Rng rng = sim::make_stream(cfg.seed, c, r + 1);
            const sim::MetaSample sample = sim::generate_meta(sc, rng, critical_values_for(sc.alpha));
            published[r] = static_cast<int>(sample.published.size());
            for (std::size_t k = 0; k < nm; ++k) {
                const MethodOutcome o = run_method(cfg.methods[k], sample.published, sc.alpha);
                if (o.ok()) table[r * nm + k] = {true, o.result->estimate, o.result->ci_low, o.result->ci_high};
            }
        });

        double pub_sum = 0.0;
        for (int p : published) pub_sum += p;
        const double mean_pub = pub_sum / static_cast<double>(reps);
        for (std::size_t k = 0; k < nm; ++k) {
            MetricsAccumulator acc;
            for (std::size_t r = 0; r < reps; ++r) {
                const Estimate& e = table[r * nm + k];
                if (e.ok) acc.add(e.estimate, e.lo, e.hi, truth);
                else acc.add_failure();
            }
            SimulationRow row;
            row.cell = cell;
            if (acc.n == 0) {
                row.all_failed = true;
                row.metrics.method = cfg.methods[k];
                row.metrics.n_failures = acc.failures;
            } else {
                row.metrics = acc.finish(cfg.methods[k]);
            }
            row.metrics.mean_published = mean_pub;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string simulation_csv(const std::vector<SimulationRow>& rows) {
    std::string out = "m,n,tau2,variance_scenario,effect_kind,method,amse,bias,coverage,power,mean_published,failures\n";
    for (const auto& r : rows) {
        const ScenarioMetrics& s = r.metrics;
        out += cell_prefix(r.cell) + "," + std::string(method_name(s.method)) + ",";
        if (r.all_failed) {
            out += "NA,NA,NA,NA,";
        } else {
            out += format_number(s.amse) + "," + format_number(s.bias) + "," + format_number(s.coverage) + "," +
                   format_number(s.power) + ",";
        }
        out += format_number(s.mean_published) + "," + std::to_string(s.n_failures) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------

Dataset read_dataset(std::istream& in) {
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_csv_line(line);
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (!have_header) {
            if (fields == kRawHeader) {
                ds.raw_arms = true;
            } else if (fields == kEffectHeader) {
                ds.raw_arms = false;
            } else {
                parse_error(lineno, "unrecognized header '" + line + "'");
            }
            have_header = true;
            continue;
        }
        const std::size_t want = ds.raw_arms ? kRawHeader.size() : kEffectHeader.size();
        if (fields.size() != want) {
            parse_error(lineno, "expected " + std::to_string(want) + " fields, found " + std::to_string(fields.size()));
        }
        ds.study_ids.push_back(fields[0]);
        if (ds.raw_arms) {
            StudySummary s;
            s.n1 = parse_int(fields[1], lineno, "n1");
            s.mean1 = parse_double(fields[2], lineno, "mean1");
            s.sd1 = parse_double(fields[3], lineno, "sd1");
            s.n0 = parse_int(fields[4], lineno, "n0");
            s.mean0 = parse_double(fields[5], lineno, "mean0");
            s.sd0 = parse_double(fields[6], lineno, "sd0");
            try {
                validate(s);
            } catch (const Error& e) {
                parse_error(lineno, e.what());
            }
            ds.summaries.push_back(s);
        } else {
            StudyRecord r;
            r.study_id = fields[0];
            r.effect.value = parse_double(fields[1], lineno, "effect");
            r.effect.variance = parse_double(fields[2], lineno, "variance");
            r.effect.n1 = parse_int(fields[3], lineno, "n1");
            r.effect.n0 = parse_int(fields[4], lineno, "n0");
            if (!(r.effect.variance > 0.0)) parse_error(lineno, "variance must be positive");
            if (r.effect.n1 < 2 || r.effect.n0 < 2) parse_error(lineno, "arm sizes must be >= 2");
            try {
                r.effect.kind = parse_effect_kind(fields[5]);
            } catch (const Error& e) {
                parse_error(lineno, e.what());
            }
            r.effect.df = r.effect.n1 + r.effect.n0 - 2;
            ds.precomputed.push_back(r);
        }
    }
    if (!have_header) parse_error(lineno == 0 ? 1 : lineno, "missing header");
    return ds;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open dataset '" + path + "'");
    return read_dataset(in);
}

std::vector<std::pair<EffectKind, std::vector<StudyRecord>>> dataset_effects(const Dataset& ds) {
    std::vector<std::pair<EffectKind, std::vector<StudyRecord>>> groups;
    if (ds.raw_arms) {
        for (EffectKind k : {EffectKind::cohen_d, EffectKind::hedges_g}) {
            std::vector<StudyRecord> recs;
            for (std::size_t i = 0; i < ds.summaries.size(); ++i) {
                recs.push_back({ds.study_ids[i], compute_effect(ds.summaries[i], k)});
            }
            groups.emplace_back(k, std::move(recs));
        }
        return groups;
    }
    for (const auto& r : ds.precomputed) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == r.effect.kind; });
        if (it == groups.end()) {
            groups.emplace_back(r.effect.kind, std::vector<StudyRecord>{});
            it = std::prev(groups.end());
        }
        it->second.push_back(r);
    }
    return groups;
}

std::vector<AnalysisRow> analyze(const Dataset& ds, const std::vector<Method>& methods, double alpha) {
    std::vector<AnalysisRow> rows;
    for (const auto& [kind, recs] : dataset_effects(ds)) {
        std::vector<EffectEstimate> effects;
        effects.reserve(recs.size());
        for (const auto& r : recs) effects.push_back(r.effect);
        for (Method m : methods) {
            AnalysisRow row;
            row.method = m;
            row.kind = kind;
            MethodOutcome o = run_method(m, effects, alpha);
            if (o.ok()) row.result = std::move(o.result);
            else row.error = std::string(error_name(*o.error));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string analysis_csv(const std::vector<AnalysisRow>& rows) {
    std::string out = "method,effect_kind,estimate,ci_low,ci_high\n";
    for (const auto& r : rows) {
        out += std::string(method_name(r.method)) + "," + std::string(effect_kind_name(r.kind)) + ",";
        if (r.result) {
            out += format_number(r.result->estimate) + "," + format_number(r.result->ci_low) + "," +
                   format_number(r.result->ci_high) + "\n";
        } else {
            out += "NA,NA,NA\n";
        }
    }
    return out;
}

std::string effects_csv(const Dataset& ds) {
    std::string out = "study_id,effect,variance,n1,n0,kind\n";
    for (const auto& [kind, recs] : dataset_effects(ds)) {
        for (const auto& r : recs) {
            out += r.study_id + "," + format_exact(r.effect.value) + "," + format_exact(r.effect.variance) + "," +
                   std::to_string(r.effect.n1) + "," + std::to_string(r.effect.n0) + "," +
                   std::string(effect_kind_name(kind)) + "\n";
        }
    }
    return out;
}

}  // namespace metabias::harness
