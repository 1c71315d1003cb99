#include "fuzzreg/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

namespace {

enum class Kind { Real, Count, Seed, Text, Mode, Truncation, Jacobian, Backend, Fractions };

struct KeyInfo {
    Kind kind;
    const char* help;
};

const std::map<std::string, KeyInfo>& table() {
    static const std::map<std::string, KeyInfo> t = {
        {"mode", {Kind::Mode, "rigid | similarity | rays"}},
        {"sigma0", {Kind::Real, "initial kernel width (unit-cube units)"}},
        {"sigma_final", {Kind::Real, "final kernel width"}},
        {"sigma_factor", {Kind::Real, "ladder reduction factor (> 1)"}},
        {"k", {Kind::Real, "sigmoid steepness"}},
        {"alpha", {Kind::Real, "proximity weight in [0, 1]"}},
        {"truncation", {Kind::Truncation, "exact | cutoff"}},
        {"cutoff", {Kind::Real, "cutoff radius in sigmas (>= 3)"}},
        {"lambda0", {Kind::Real, "initial LM damping"}},
        {"lambda_up", {Kind::Real, "damping increase factor"}},
        {"lambda_down", {Kind::Real, "damping decrease factor"}},
        {"max_iters", {Kind::Count, "LM iterations per level"}},
        {"step_tol", {Kind::Real, "minimum step norm"}},
        {"energy_tol", {Kind::Real, "minimum relative energy decrease"}},
        {"jacobian", {Kind::Jacobian, "analytic | fd"}},
        {"backend", {Kind::Backend, "parallel | serial"}},
        {"resolution_fractions", {Kind::Fractions, "comma separated fractions, last = 1"}},
        {"min_points", {Kind::Count, "lower bound on subsampled sizes"}},
        {"seed", {Kind::Seed, "subsampling seed"}},
        {"voxel_resolution", {Kind::Count, "voxels along the largest mesh extent"}},
        {"source", {Kind::Text, "source path"}},
        {"target", {Kind::Text, "target path"}},
        {"out", {Kind::Text, "output path"}},
        {"mesh", {Kind::Text, "mesh path"}},
        {"intrinsics", {Kind::Text, "camera intrinsics path"}},
        {"mask", {Kind::Text, "mask path"}},
        {"stride", {Kind::Count, "mask sampling stride"}},
    };
    return t;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x)) {
        throw InvalidParameter(key + ": expected a number, got '" + v + "'");
    }
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw InvalidParameter(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return x;
}

std::vector<double> to_fractions(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(key, trim(item)));
    if (out.empty()) throw InvalidParameter(key + ": empty list");
    return out;
}

void check_value(const std::string& key, Kind kind, const std::string& v) {
    switch (kind) {
        case Kind::Real: to_real(key, v); break;
        case Kind::Count:
        case Kind::Seed: to_u64(key, v); break;
        case Kind::Text:
            if (v.empty()) throw InvalidParameter(key + ": empty value");
            break;
        case Kind::Mode:
            if (v != "rigid" && v != "similarity" && v != "rays") throw InvalidParameter("mode: rigid, similarity or rays");
            break;
        case Kind::Truncation:
            if (v != "exact" && v != "cutoff") throw InvalidParameter("truncation: exact or cutoff");
            break;
        case Kind::Jacobian:
            if (v != "analytic" && v != "fd") throw InvalidParameter("jacobian: analytic or fd");
            break;
        case Kind::Backend:
            if (v != "parallel" && v != "serial") throw InvalidParameter("backend: parallel or serial");
            break;
        case Kind::Fractions: to_fractions(key, v); break;
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Rigid: return "rigid";
        case RunMode::Similarity: return "similarity";
        case RunMode::Rays: return "rays";
    }
    return "?";
}

const std::map<std::string, std::string>& RunConfig::known_keys() {
    static const std::map<std::string, std::string> keys = [] {
        std::map<std::string, std::string> k;
        for (const auto& [name, info] : table()) k[name] = info.help;
        return k;
    }();
    return keys;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    RunConfig cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path, number, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (cfg.has(key)) throw ParseError(path, number, "duplicate key " + key);
        try {
            cfg.set(key, value);
        } catch (const InvalidParameter& e) {
            throw ParseError(path, number, e.what());
        }
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = table().find(key);
    if (it == table().end()) throw InvalidParameter("unknown key " + key);
    check_value(key, it->second.kind, value);
    values_[key] = value;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

RunMode RunConfig::mode() const {
    const auto m = get("mode");
    if (!m || *m == "rigid") return RunMode::Rigid;
    return *m == "similarity" ? RunMode::Similarity : RunMode::Rays;
}

RegistrationOptions RunConfig::registration_options() const {
    const RunMode m = mode();
    RegistrationOptions o = m == RunMode::Rays ? default_ray_options()
                                               : default_options(m == RunMode::Similarity ? TransformMode::Similarity
                                                                                          : TransformMode::Rigid);
    for (const auto& [key, v] : values_) {
        if (key == "sigma0") o.schedule.sigma0 = to_real(key, v);
        else if (key == "sigma_final") o.schedule.sigma_final = to_real(key, v);
        else if (key == "sigma_factor") o.schedule.sigma_factor = to_real(key, v);
        else if (key == "k") o.kernel.k = to_real(key, v);
        else if (key == "alpha") o.kernel.alpha = to_real(key, v);
        else if (key == "truncation") o.kernel.truncation = v == "exact" ? Truncation::Exact : Truncation::Cutoff;
        else if (key == "cutoff") o.kernel.cutoff = to_real(key, v);
        else if (key == "lambda0") o.lm.lambda0 = to_real(key, v);
        else if (key == "lambda_up") o.lm.lambda_up = to_real(key, v);
        else if (key == "lambda_down") o.lm.lambda_down = to_real(key, v);
        else if (key == "max_iters") o.lm.max_iters = to_u64(key, v);
        else if (key == "step_tol") o.lm.step_tol = to_real(key, v);
        else if (key == "energy_tol") o.lm.energy_tol = to_real(key, v);
        else if (key == "jacobian") o.lm.jacobian_mode = v == "fd" ? JacobianMode::FiniteDifference : JacobianMode::Analytic;
        else if (key == "backend") o.backend = v == "serial" ? KernelBackend::Serial : KernelBackend::Parallel;
        else if (key == "resolution_fractions") o.schedule.resolution_fractions = to_fractions(key, v);
        else if (key == "min_points") o.schedule.min_points = to_u64(key, v);
        else if (key == "seed") o.schedule.seed = to_u64(key, v);
    }
    o.schedule.validate();
    o.lm.validate();
    KernelConfig probe = o.kernel;
    probe.sigma = o.schedule.sigma_final;
    probe.validate();
    return o;
}

int RunConfig::voxel_resolution() const {
    const auto v = get("voxel_resolution");
    if (!v) return 64;
    const auto r = to_u64("voxel_resolution", *v);
    if (r < 2 || r > 4096) throw InvalidParameter("voxel_resolution must be in [2, 4096]");
    return static_cast<int>(r);
}

std::map<std::string, std::string> RunConfig::echo() const {
    const RegistrationOptions o = registration_options();
    std::map<std::string, std::string> e = values_;
    e["mode"] = to_string(mode());
    e["sigma0"] = fmt(o.schedule.sigma0);
    e["sigma_final"] = fmt(o.schedule.sigma_final);
    e["sigma_factor"] = fmt(o.schedule.sigma_factor);
    e["k"] = fmt(o.kernel.k);
    e["alpha"] = fmt(o.kernel.alpha);
    e["truncation"] = o.kernel.truncation == Truncation::Exact ? "exact" : "cutoff";
    e["cutoff"] = fmt(o.kernel.cutoff);
    e["lambda0"] = fmt(o.lm.lambda0);
    e["lambda_up"] = fmt(o.lm.lambda_up);
    e["lambda_down"] = fmt(o.lm.lambda_down);
    e["max_iters"] = std::to_string(o.lm.max_iters);
    e["step_tol"] = fmt(o.lm.step_tol);
    e["energy_tol"] = fmt(o.lm.energy_tol);
    e["jacobian"] = o.lm.jacobian_mode == JacobianMode::FiniteDifference ? "fd" : "analytic";
    e["backend"] = o.backend == KernelBackend::Serial ? "serial" : "parallel";
    std::string fr;
    for (double f : o.schedule.resolution_fractions) fr += (fr.empty() ? "" : ",") + fmt(f);
    e["resolution_fractions"] = fr;
    e["min_points"] = std::to_string(o.schedule.min_points);
    e["seed"] = std::to_string(o.schedule.seed);
    return e;
}

}  // namespace fuzzreg
