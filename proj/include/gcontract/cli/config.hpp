#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcontract/graphon.hpp"
#include "gcontract/montecarlo.hpp"
#include "gcontract/population.hpp"
#include "gcontract/profile.hpp"

namespace gcontract::cli {

using json = nlohmann::json;

/// Invalid configuration; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what) : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Every key with its default. Profile-valued keys (model.graphon.profile,
/// population.mean, population.std, reservation) accept a number or an object
/// {"kind": "constant"|"affine"|"table", ...}.
inline const json& default_config()
{
    static const json d = json::parse(R"({
      "model": {
        "graphon": {"family": "constant", "value": 0.0, "theta": 10.0, "blocks": 5, "profile": 1.0, "file": ""},
        "horizon": 1.0
      },
      "population": {"kind": "point-mass", "mean": 0.0, "std": 0.0},
      "reservation": 0.0,
      "solver": {"time_steps": 256, "type_cells": 256, "agents": 64},
      "sim": {"paths": 10000, "steps": 256, "seed": 0, "particles": 1024, "buckets": 8, "type": 0.5},
      "analysis": {
        "sizes": [8, 16, 32, 64, 128, 256, 512],
        "replications": 30,
        "reference_factor": 4,
        "time_steps": 256,
        "stability": {"epsilons": [0.1, 0.01, 0.001], "graphon": null, "type": 0.5},
        "compare": {"types": [0.1, 0.3, 0.5, 0.7, 0.9]}
      },
      "output": {"directory": "gcontract-out", "formats": ["csv"]}
    })");
    return d;
}

namespace detail {

inline bool is_leaf_path(const std::string& path)
{
    static const std::set<std::string> leaves{"model.graphon", "model.graphon.profile", "population.mean", "population.std",
                                              "reservation", "analysis.stability.graphon"};
    return leaves.count(path) > 0;
}

inline std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

/// Overlays `user` on `base`; unknown keys are rejected.
inline void overlay(json& base, const json& user, const std::string& prefix)
{
    if (!user.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string path = join(prefix, it.key());
        if (!base.contains(it.key())) throw ConfigError(path, "unknown key");
        json& slot = base[it.key()];
        if (path == "model.graphon") {
            const json& g = it.value();
            if (!g.is_object()) throw ConfigError(path, "expected an object");
            if (!g.contains("family") && !(g.contains("file") && g["file"].is_string() && !g["file"].get<std::string>().empty()))
                throw ConfigError(path + ".family", "required (or give a step-graphon file)");
            for (auto f = g.begin(); f != g.end(); ++f) {
                if (!slot.contains(f.key())) throw ConfigError(join(path, f.key()), "unknown key");
                slot[f.key()] = f.value();
            }
            if (!g.contains("family")) slot["family"] = "step";
        } else if (slot.is_object() && !is_leaf_path(path)) {
            overlay(slot, it.value(), path);
        } else {
            slot = it.value();
        }
    }
}

inline void collect_leaves(const json& j, const std::string& prefix, std::vector<std::string>& out)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string path = join(prefix, it.key());
        if (it.value().is_object() && !is_leaf_path(path) && path != "model.graphon") collect_leaves(it.value(), path, out);
        else if (path == "model.graphon") collect_leaves(it.value(), path, out);
        else out.push_back(path);
    }
}

inline json* find_path(json& j, const std::string& path)
{
    json* cur = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) return cur;
        start = dot + 1;
    }
}

inline const json& at_path(const json& j, const std::string& path)
{
    const json* cur = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) throw ConfigError(path, "missing");
        cur = &(*cur)[key];
        if (dot == std::string::npos) return *cur;
        start = dot + 1;
    }
}

inline double number(const json& j, const std::string& path)
{
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
}

inline std::uint64_t unsigned_integer(const json& j, const std::string& path)
{
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        if (j.get<std::int64_t>() < 0) throw ConfigError(path, "must be nonnegative");
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    throw ConfigError(path, "expected a nonnegative integer");
}

inline std::size_t count(const json& j, const std::string& path, std::size_t min)
{
    const auto v = unsigned_integer(j, path);
    if (v < min) throw ConfigError(path, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

inline std::string text(const json& j, const std::string& path)
{
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& path)
{
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline double unit_type(const json& j, const std::string& path)
{
    const double u = number(j, path);
    if (u < 0.0 || u > 1.0) throw ConfigError(path, "type must lie in [0, 1]");
    return u;
}

} // namespace detail

/// constant c | {"kind":"constant","value":c} | {"kind":"affine","intercept":a,"slope":b}
/// | {"kind":"table","breakpoints":[...],"values":[...]}
inline Profile parse_profile(const json& j, const std::string& path)
{
    using namespace detail;
    try {
        if (j.is_number()) return Profile::constant(number(j, path));
        if (!j.is_object()) throw ConfigError(path, "expected a number or a profile object");
        auto field = [&](const char* k) -> const json& {
            if (!j.contains(k)) throw ConfigError(path + "." + k, "missing");
            return j[k];
        };
        const std::string kind = text(field("kind"), path + ".kind");
        if (kind == "constant") return Profile::constant(number(field("value"), path + ".value"));
        if (kind == "affine")
            return Profile::affine(number(field("intercept"), path + ".intercept"), number(field("slope"), path + ".slope"));
        if (kind == "table")
            return Profile::table(numbers(field("breakpoints"), path + ".breakpoints"), numbers(field("values"), path + ".values"));
        throw ConfigError(path + ".kind", "unknown profile kind '" + kind + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

struct GraphonConfig {
    std::string family;
    FamilyParams params;
    std::string file;
    std::string key = "model.graphon";  // config path, for error messages

    InteractionFunction build() const
    {
        try {
            if (family == "step") return load_step_graphon(file, true);
            return builtin(family, params);
        } catch (const std::exception& e) {
            throw ConfigError(key + (family == "step" ? ".file" : ".family"), e.what());
        }
    }
};

inline GraphonConfig parse_graphon(const json& j, const std::string& path)
{
    using namespace detail;
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    if (!j.contains("family")) throw ConfigError(path + ".family", "required");
    GraphonConfig g;
    g.key = path;
    g.family = text(j["family"], path + ".family");
    if (j.contains("theta")) g.params.theta = number(j["theta"], path + ".theta");
    if (j.contains("blocks")) g.params.blocks = static_cast<long>(count(j["blocks"], path + ".blocks", 1));
    if (j.contains("value")) g.params.value = number(j["value"], path + ".value");
    if (j.contains("profile")) g.params.profile = parse_profile(j["profile"], path + ".profile");
    if (j.contains("file")) g.file = text(j["file"], path + ".file");
    static const std::set<std::string> families{"constant", "row-separable", "column-separable", "sine-distance", "logistic",
                                                "block-product", "block-logistic", "G1", "G2", "G3", "G4", "step"};
    if (!families.count(g.family)) throw ConfigError(path + ".family", "unknown graphon family '" + g.family + "'");
    if (!(g.params.theta > 0.0)) throw ConfigError(path + ".theta", "must be positive");
    if (g.family == "step" && g.file.empty()) throw ConfigError(path + ".file", "step graphons need a file");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!default_config()["model"]["graphon"].contains(it.key())) throw ConfigError(path + "." + it.key(), "unknown key");
    return g;
}

/// Typed view of a resolved configuration.
struct RunConfig {
    json resolved;

    GraphonConfig graphon;
    double horizon = 1.0;
    InitialLaw law = InitialLaw::point_mass();
    ReservationUtility reservation{Profile::constant(0.0)};

    std::size_t time_steps = 256;
    std::size_t type_cells = 256;
    std::size_t agents = 64;

    SimConfig sim;
    double sim_type = 0.5;

    std::vector<std::size_t> sizes;
    std::size_t replications = 30;
    std::size_t reference_factor = 4;
    std::size_t analysis_time_steps = 256;
    std::vector<double> epsilons;
    std::optional<GraphonConfig> stability_graphon;
    double stability_type = 0.5;
    std::vector<double> compare_types;

    std::string output_directory;
    char delimiter = ',';
    std::string extension = "csv";

    /// Canonical text of the resolved configuration (sorted keys, two-space indent).
    std::string echo() const { return resolved.dump(2); }
};

using EnvLookup = std::function<const char*(const char*)>;

/// GC_ + the upper-cased key path with '.' replaced by '_', e.g. GC_MODEL_HORIZON.
inline std::string env_name(const std::string& path)
{
    std::string s = "GC_";
    for (char c : path) s += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

/// Applies environment overrides for every known key. Values are read as JSON
/// when they parse, else as plain strings.
inline void apply_env_overrides(json& cfg, const EnvLookup& lookup)
{
    std::vector<std::string> paths;
    detail::collect_leaves(default_config(), "", paths);
    for (const auto& path : paths) {
        const char* raw = lookup(env_name(path).c_str());
        if (!raw) continue;
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = std::string(raw);
        json* slot = detail::find_path(cfg, path);
        if (!slot) throw ConfigError(path, "cannot override");
        *slot = std::move(value);
    }
}

/// Resolves the typed configuration from an already merged JSON document.
inline RunConfig interpret(json resolved)
{
    using namespace detail;
    RunConfig c;
    const json& r = resolved;
    c.graphon = parse_graphon(at_path(r, "model.graphon"), "model.graphon");
    c.horizon = number(at_path(r, "model.horizon"), "model.horizon");
    if (!(c.horizon > 0.0)) throw ConfigError("model.horizon", "must be positive");

    const std::string kind = text(at_path(r, "population.kind"), "population.kind");
    Profile mean = parse_profile(at_path(r, "population.mean"), "population.mean");
    Profile sd = parse_profile(at_path(r, "population.std"), "population.std");
    if (kind == "point-mass") c.law = InitialLaw::point_mass(mean);
    else if (kind == "gaussian") {
        if (sd.min_value() < 0.0) throw ConfigError("population.std", "must be nonnegative");
        c.law = InitialLaw::gaussian(mean, sd);
    } else throw ConfigError("population.kind", "expected 'point-mass' or 'gaussian'");
    c.reservation = ReservationUtility{parse_profile(at_path(r, "reservation"), "reservation")};

    c.time_steps = count(at_path(r, "solver.time_steps"), "solver.time_steps", 1);
    c.type_cells = count(at_path(r, "solver.type_cells"), "solver.type_cells", 1);
    c.agents = count(at_path(r, "solver.agents"), "solver.agents", 1);

    c.sim.paths = count(at_path(r, "sim.paths"), "sim.paths", 1);
    c.sim.steps = count(at_path(r, "sim.steps"), "sim.steps", 1);
    c.sim.seed = unsigned_integer(at_path(r, "sim.seed"), "sim.seed");
    c.sim.population = count(at_path(r, "sim.particles"), "sim.particles", 1);
    c.sim.buckets = count(at_path(r, "sim.buckets"), "sim.buckets", 1);
    c.sim.horizon = c.horizon;
    c.sim_type = unit_type(at_path(r, "sim.type"), "sim.type");

    const json& sizes = at_path(r, "analysis.sizes");
    if (!sizes.is_array() || sizes.size() < 2) throw ConfigError("analysis.sizes", "expected at least two sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const std::string p = "analysis.sizes[" + std::to_string(i) + "]";
        c.sizes.push_back(count(sizes[i], p, 1));
        if (i > 0 && c.sizes[i] <= c.sizes[i - 1]) throw ConfigError(p, "sizes must increase strictly");
    }
    c.replications = count(at_path(r, "analysis.replications"), "analysis.replications", 1);
    c.reference_factor = count(at_path(r, "analysis.reference_factor"), "analysis.reference_factor", 4);
    c.analysis_time_steps = count(at_path(r, "analysis.time_steps"), "analysis.time_steps", 2);
    if (c.analysis_time_steps % 2) throw ConfigError("analysis.time_steps", "must be even");
    c.epsilons = numbers(at_path(r, "analysis.stability.epsilons"), "analysis.stability.epsilons");
    const json& sg = at_path(r, "analysis.stability.graphon");
    if (!sg.is_null()) {
        json g = default_config()["model"]["graphon"];
        if (!sg.is_object()) throw ConfigError("analysis.stability.graphon", "expected an object or null");
        if (!sg.contains("family")) throw ConfigError("analysis.stability.graphon.family", "required");
        for (auto it = sg.begin(); it != sg.end(); ++it) g[it.key()] = it.value();
        c.stability_graphon = parse_graphon(g, "analysis.stability.graphon");
    }
    c.stability_type = unit_type(at_path(r, "analysis.stability.type"), "analysis.stability.type");
    const json& types = at_path(r, "analysis.compare.types");
    if (!types.is_array()) throw ConfigError("analysis.compare.types", "expected an array");
    for (std::size_t i = 0; i < types.size(); ++i)
        c.compare_types.push_back(unit_type(types[i], "analysis.compare.types[" + std::to_string(i) + "]"));

    c.output_directory = text(at_path(r, "output.directory"), "output.directory");
    const json& formats = at_path(r, "output.formats");
    if (!formats.is_array() || formats.size() != 1) throw ConfigError("output.formats", "expected exactly one of [\"csv\"], [\"tsv\"]");
    const std::string fmt = text(formats[0], "output.formats[0]");
    if (fmt == "csv") c.delimiter = ',';
    else if (fmt == "tsv") {
        c.delimiter = '\t';
        c.extension = "tsv";
    } else throw ConfigError("output.formats[0]", "unknown format '" + fmt + "'");

    c.resolved = std::move(resolved);
    return c;
}

/// Defaults, then the user document, then environment overrides.
inline RunConfig load_config(const json& user, const EnvLookup& lookup = [](const char* k) { return std::getenv(k); })
{
    json merged = default_config();
    if (!user.is_null()) detail::overlay(merged, user, "");
    apply_env_overrides(merged, lookup);
    return interpret(std::move(merged));
}

inline json read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("--config", "'" + path + "' is not valid JSON");
    return j;
}

/// Sets a key in a resolved configuration and re-interprets it (used for command-line overrides).
inline RunConfig with_override(const RunConfig& c, const std::string& path, json value)
{
    json r = c.resolved;
    json* slot = detail::find_path(r, path);
    if (!slot) throw ConfigError(path, "unknown key");
    *slot = std::move(value);
    return interpret(std::move(r));
}

} // namespace gcontract::cli
