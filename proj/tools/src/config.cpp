#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "charflux/tools/experiment.hpp"

namespace charflux::tools {

namespace {

using nlohmann::json;

const std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::rw_covariance, "rw-covariance"},
    {ExperimentKind::rw_scaling, "rw-scaling"},
    {ExperimentKind::rw_independence, "rw-independence"},
    {ExperimentKind::rw_hydro, "rw-hydro"},
    {ExperimentKind::brownian_current, "brownian-current"},
    {ExperimentKind::fbm_sample, "fbm-sample"},
    {ExperimentKind::hammersley_tightness, "hammersley-tightness"},
    {ExperimentKind::hopf_lax_map, "hopf-lax-map"},
};

bool is_walk_kind(ExperimentKind k) {
    return k == ExperimentKind::rw_covariance || k == ExperimentKind::rw_scaling || k == ExperimentKind::rw_independence || k == ExperimentKind::rw_hydro;
}

template <typename T>
T get(const json& doc, const std::string& key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
}

std::vector<double> number_list(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (v.is_number()) return {v.get<double>()};
    return get<std::vector<double>>(doc, key);
}

JumpKernel kernel_from_json(const json& spec) {
    if (!spec.is_object()) throw ConfigError("kernel", "must be a table");
    try {
        if (spec.contains("steps")) {
            std::vector<KernelStep> steps;
            for (const auto& row : spec.at("steps")) steps.push_back({row.at(0).get<std::int64_t>(), row.at(1).get<double>()});
            return JumpKernel(std::move(steps));
        }
        const auto type = spec.value("type", std::string("nearest_neighbour"));
        if (type != "nearest_neighbour") throw ConfigError("kernel.type", "unknown kernel type '" + type + "'");
        return JumpKernel::nearest_neighbour(spec.value("p_right", 0.7));
    } catch (const json::exception& e) {
        throw ConfigError("kernel", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kernel", e.what());
    }
}

Profile profile_from_json(const json& spec) {
    if (!spec.is_object()) throw ConfigError("profile", "must be a table");
    try {
        const auto shape = spec.value("shape", std::string("linear"));
        const double ratio = spec.value("variance_ratio", 1.0);
        if (shape == "zero") return Profile::zero();
        if (shape == "linear") return Profile::linear(spec.value("slope", 1.0), ratio);
        if (shape == "smoothstep")
            return Profile::smoothstep(spec.value("base", 0.5), spec.value("height", 1.0), spec.value("left", -0.5), spec.value("right", 0.5), ratio);
        if (shape == "gaussian_bump")
            return Profile::gaussian_bump(spec.value("base", 0.5), spec.value("amplitude", 1.0), spec.value("center", 0.0), spec.value("width", 0.2), ratio);
        if (shape == "wedge") return Profile::wedge();
        throw ConfigError("profile.shape", "unknown profile shape '" + shape + "'");
    } catch (const json::exception& e) {
        throw ConfigError("profile", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("profile", e.what());
    }
}

json toml_node_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_node_to_json(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_node_to_json(v));
        return out;
    }
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    if (const auto* v = node.as_string()) return v->get();
    throw ConfigError("<toml>", "unsupported TOML value type (dates are not accepted)");
}

void require_sorted_times(const std::vector<double>& times, bool strictly_positive) {
    if (times.empty()) throw ConfigError("times", "must not be empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0 || (strictly_positive && times[i] == 0.0))
            throw ConfigError("times", strictly_positive ? "entries must be > 0" : "entries must be >= 0");
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("times", "must be strictly increasing");
    }
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message) : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

ExperimentKind parse_kind(const std::string& name) {
    for (const auto& [k, n] : kKindNames)
        if (name == n) return k;
    throw ConfigError("kind", "unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
    for (const auto& [k, n] : kKindNames)
        if (k == kind) return n;
    return "?";
}

nlohmann::json ExperimentConfig::to_json() const {
    json kernel_steps = json::array();
    for (const auto& s : kernel.support()) kernel_steps.push_back({s.step, s.prob});
    json doc = {
        {"kind", to_string(kind)},
        {"kernel", {{"steps", kernel_steps}, {"drift", kernel.drift()}, {"kappa2", kernel.kappa2()}}},
        {"profile", profile.describe()},
        {"ic", ic == IcKind::random ? "random" : "staircase"},
        {"law", std::string(charflux::to_string(law))},
        {"n", ns},
        {"replicates", replicates},
        {"times", times},
        {"base_points", base_points},
        {"height_points", height_points},
        {"seed", seed},
    };
    if (window_radius) doc["window_radius"] = *window_radius;
    switch (kind) {
        case ExperimentKind::brownian_current: doc["lambda"] = lambda; break;
        case ExperimentKind::fbm_sample: doc["cov_variant"] = cov_variant; break;
        case ExperimentKind::hammersley_tightness:
            doc["x"] = x;
            doc["t"] = t;
            doc["bootstrap"] = bootstrap;
            break;
        case ExperimentKind::hopf_lax_map:
            doc["xs"] = xs;
            doc["t"] = t;
            doc["delta"] = delta;
            break;
        default: break;
    }
    return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "config must be a table/object");
    static const std::set<std::string> known{"kind", "kernel", "profile", "ic", "law", "n", "replicates", "times", "base_points", "height_points",
                                             "window_radius", "lambda", "cov_variant", "x", "t", "xs", "delta", "bootstrap", "seed", "workers",
                                             "out", "raw", "checkpoint_every"};
    for (const auto& [k, v] : doc.items())
        if (!known.contains(k)) throw ConfigError(k, "unknown key");
    if (!doc.contains("kind")) throw ConfigError("kind", "missing");

    ExperimentConfig c;
    c.kind = parse_kind(get<std::string>(doc, "kind"));
    if (c.kind == ExperimentKind::hammersley_tightness) {
        c.profile = Profile::wedge();
        c.ns = {250, 500, 1000};
        c.replicates = 500;
    }
    if (c.kind == ExperimentKind::rw_scaling) c.ns = {200, 800, 3200};
    if (c.kind == ExperimentKind::rw_hydro) c.ns = {400, 1600, 6400};
    if (c.kind == ExperimentKind::fbm_sample) c.times = {0.5, 1.0, 2.0, 4.0};

    if (doc.contains("kernel")) c.kernel = kernel_from_json(doc.at("kernel"));
    if (doc.contains("profile")) c.profile = profile_from_json(doc.at("profile"));
    if (doc.contains("ic")) {
        const auto ic = get<std::string>(doc, "ic");
        if (ic == "random") c.ic = IcKind::random;
        else if (ic == "staircase" || ic == "deterministic") c.ic = IcKind::staircase;
        else throw ConfigError("ic", "expected 'random' or 'staircase'");
    }
    if (doc.contains("law")) {
        try {
            c.law = parse_occupation_law(get<std::string>(doc, "law"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("law", e.what());
        }
    }
    if (doc.contains("n")) {
        const json& v = doc.at("n");
        c.ns = v.is_array() ? get<std::vector<std::int64_t>>(doc, "n") : std::vector<std::int64_t>{get<std::int64_t>(doc, "n")};
    }
    if (doc.contains("replicates")) c.replicates = get<std::int64_t>(doc, "replicates");
    if (doc.contains("times")) c.times = number_list(doc, "times");
    if (doc.contains("base_points")) c.base_points = number_list(doc, "base_points");
    if (doc.contains("height_points")) c.height_points = number_list(doc, "height_points");
    if (doc.contains("window_radius")) c.window_radius = get<std::int64_t>(doc, "window_radius");
    if (doc.contains("lambda")) c.lambda = get<double>(doc, "lambda");
    if (doc.contains("cov_variant")) c.cov_variant = get<std::string>(doc, "cov_variant");
    if (doc.contains("x")) c.x = get<double>(doc, "x");
    if (doc.contains("t")) c.t = get<double>(doc, "t");
    if (doc.contains("xs")) c.xs = number_list(doc, "xs");
    if (doc.contains("delta")) c.delta = get<double>(doc, "delta");
    if (doc.contains("bootstrap")) c.bootstrap = get<std::int64_t>(doc, "bootstrap");
    if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed");
    if (doc.contains("workers")) c.workers = get<int>(doc, "workers");
    if (doc.contains("out")) c.out = get<std::string>(doc, "out");
    if (doc.contains("raw")) c.raw = get<bool>(doc, "raw");
    if (doc.contains("checkpoint_every")) c.checkpoint_every = get<std::int64_t>(doc, "checkpoint_every");
    return c;
}

nlohmann::json toml_to_json(const std::string& text) {
    try {
        return toml_node_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " at line " << e.source().begin.line;
        throw ConfigError("<toml>", os.str());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return config_from_json(json::parse(buf.str()));
        } catch (const json::parse_error& e) {
            throw ConfigError("<json>", e.what());
        }
    }
    return config_from_json(toml_to_json(buf.str()));
}

void validate(const ExperimentConfig& c) {
    if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
    if (c.checkpoint_every < 1) throw ConfigError("checkpoint_every", "must be >= 1");
    if (c.kind != ExperimentKind::hopf_lax_map && c.replicates < 1) throw ConfigError("replicates", "must be >= 1");
    if (c.bootstrap < 1) throw ConfigError("bootstrap", "must be >= 1");

    const bool walk = is_walk_kind(c.kind);
    if (walk || c.kind == ExperimentKind::hammersley_tightness) {
        if (c.ns.empty()) throw ConfigError("n", "must not be empty");
        for (auto n : c.ns)
            if (n < 1) throw ConfigError("n", "entries must be >= 1");
    }
    if (c.kind == ExperimentKind::rw_scaling || c.kind == ExperimentKind::rw_hydro) {
        if (std::set<std::int64_t>(c.ns.begin(), c.ns.end()).size() < 3) throw ConfigError("n", "needs at least 3 distinct values");
    }

    if (walk) {
        require_sorted_times(c.times, false);
        if (c.base_points.empty()) throw ConfigError("base_points", "must not be empty");
        if (c.profile.shape() == ProfileShape::wedge) throw ConfigError("profile.shape", "wedge is only valid for Hammersley experiments");
        if (c.kind == ExperimentKind::rw_independence && c.base_points.size() < 2) throw ConfigError("base_points", "independence needs at least 2 base points");
        if (c.kind == ExperimentKind::rw_independence && c.replicates < 3) throw ConfigError("replicates", "independence needs at least 3 replicates");
        if (c.kind == ExperimentKind::rw_hydro && c.height_points.empty()) throw ConfigError("height_points", "hydro needs at least one x");
        for (auto n : c.ns) {
            SimConfig sc;
            sc.n = n;
            sc.times = c.times;
            sc.base_points = c.base_points;
            sc.kernel = c.kernel;
            sc.profile = c.profile;
            sc.ic = c.ic;
            sc.law = c.law;
            sc.window_radius = c.window_radius;
            sc.height_points = c.height_points;
            try {
                const WalkSimulator sim(sc);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("n=" + std::to_string(n), e.what());
            }
        }
    }
    if (c.kind == ExperimentKind::brownian_current) {
        require_sorted_times(c.times, true);
        if (!(c.lambda > 0.0)) throw ConfigError("lambda", "must be > 0");
        if (c.base_points.empty()) throw ConfigError("base_points", "must not be empty");
    }
    if (c.kind == ExperimentKind::fbm_sample) {
        require_sorted_times(c.times, false);
        if (c.times.size() > 64) throw ConfigError("times", "at most 64 grid points");
        if (c.cov_variant != "general" && c.cov_variant != "equilibrium" && c.cov_variant != "deterministic_ic" && c.cov_variant != "brownian")
            throw ConfigError("cov_variant", "expected general, equilibrium, deterministic_ic or brownian");
        if (c.profile.shape() == ProfileShape::wedge) throw ConfigError("profile.shape", "wedge has no density for the kernel");
    }
    if (c.kind == ExperimentKind::hammersley_tightness || c.kind == ExperimentKind::hopf_lax_map) {
        if (!(c.t > 0.0 && std::isfinite(c.t))) throw ConfigError("t", "must be > 0");
        if (!(c.delta > 0.0)) throw ConfigError("delta", "must be > 0");
    }
    if (c.kind == ExperimentKind::hammersley_tightness) {
        if (!std::isfinite(c.x)) throw ConfigError("x", "must be finite");
        if (c.ic == IcKind::random && c.profile.shape() != ProfileShape::wedge) {
            try {
                const OccupationSampler probe(c.law, c.profile.rho0(c.x), c.profile.v0(c.x));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("law", e.what());
            }
        }
    }
    if (c.kind == ExperimentKind::hopf_lax_map && c.xs.empty()) throw ConfigError("xs", "must not be empty");
}

}  // namespace charflux::tools
