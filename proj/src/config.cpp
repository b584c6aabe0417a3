#include "infodesign/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace infodesign {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void range_error(const std::string& key, const std::string& msg) {
    throw ConfigError(ConfigErrorKind::OutOfRange, key, "config: '" + key + "' " + msg);
}

[[noreturn]] void type_error(const std::string& key, const std::string& expected) {
    throw ConfigError(ConfigErrorKind::TypeMismatch, key, "config: '" + key + "' must be " + expected);
}

// One JSON object; every key must be claimed before finish().
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) type_error(path_.empty() ? "<root>" : path_, "an object");
    }

    [[nodiscard]] std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json* find(const std::string& k) {
        seen_.insert(k);
        auto it = j_.find(k);
        if (it == j_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    double number(const std::string& k, double def) {
        const json* v = find(k);
        if (!v) return def;
        if (!v->is_number()) type_error(key(k), "a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& k, std::int64_t def) {
        const json* v = find(k);
        if (!v) return def;
        if (!v->is_number_integer()) type_error(key(k), "an integer");
        if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX)) {
            range_error(key(k), "is too large");
        }
        return v->get<std::int64_t>();
    }

    std::uint64_t seed(const std::string& k, std::uint64_t def) {
        const json* v = find(k);
        if (!v) return def;
        if (!v->is_number_integer()) type_error(key(k), "an integer");
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->get<std::int64_t>() < 0) range_error(key(k), "must be non-negative");
        return static_cast<std::uint64_t>(v->get<std::int64_t>());
    }

    std::string string(const std::string& k, const std::string& def) {
        const json* v = find(k);
        if (!v) return def;
        if (!v->is_string()) type_error(key(k), "a string");
        return v->get<std::string>();
    }

    // Scalar broadcast or array of length `size`; null entries become `null_value`.
    std::optional<Vector> vector(const std::string& k, Index size, double null_value) {
        const json* v = find(k);
        if (!v) return std::nullopt;
        if (v->is_number()) return Vector::Constant(size, v->get<double>());
        if (!v->is_array()) type_error(key(k), "a number or an array");
        if (static_cast<Index>(v->size()) != size) {
            range_error(key(k), "must have " + std::to_string(size) + " entries");
        }
        Vector out(size);
        for (Index i = 0; i < size; ++i) {
            const json& e = (*v)[static_cast<std::size_t>(i)];
            if (e.is_null()) {
                out(i) = null_value;
            } else if (e.is_number()) {
                out(i) = e.get<double>();
            } else {
                type_error(key(k), "an array of numbers");
            }
        }
        return out;
    }

    Section child(const std::string& k) {
        const json* v = find(k);
        static const json empty = json::object();
        return Section(v ? *v : empty, key(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(ConfigErrorKind::UnknownKey, key(it.key()),
                                  "config: unknown key '" + key(it.key()) + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json vector_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        if (std::isfinite(v(i))) {
            a.push_back(v(i));
        } else {
            a.push_back(nullptr);
        }
    }
    return a;
}

void check_box(const std::string& key, const std::optional<Vector>& lo, const std::optional<Vector>& hi) {
    if (lo && hi && ((*hi - *lo).array() < 0.0).any()) range_error(key, "lower bound exceeds upper bound");
}

void validate(const ExperimentConfig& c) {
    const PlantConfig& p = c.plant;
    const ExperimentSettings& s = c.settings;
    if (p.n < 1) range_error("plant.n", "must be at least 1");
    if (p.m < 1) range_error("plant.m", "must be at least 1");
    if (!(p.sigma >= 0.0)) range_error("plant.sigma", "must be non-negative");
    if (p.kind == PlantKind::LtiHighDim && (p.latent_rank < 1 || p.latent_rank > p.n)) {
        range_error("plant.latent_rank", "must lie in [1, n]");
    }
    if (!(p.spectral_radius > 0.0)) range_error("plant.spectral_radius", "must be positive");
    if (c.methods.empty()) range_error("methods", "must name at least one method");
    if (c.seeds < 1) range_error("seeds", "must be at least 1");
    if (c.output_dir.empty()) range_error("output_dir", "must not be empty");
    if (s.horizon < 1) range_error("horizon", "must be at least 1");
    if (s.epochs < 0) range_error("epochs", "must be non-negative");
    if (!(s.dt > 0.0)) range_error("dt", "must be positive");
    if (!(s.beta >= 0.0)) range_error("constraints.beta", "must be non-negative");
    if (s.sigma && !(*s.sigma > 0.0)) range_error("noise_sigma", "must be positive");
    if (!(s.energy > 0.0 && s.energy <= 1.0)) range_error("dmdc.energy", "must lie in (0, 1]");
    if (s.dmdc_cutoff < 1) range_error("dmdc.cutoff", "must be at least 1");
    if (!(s.ccp_tol > 0.0)) range_error("ccp.tol", "must be positive");
    if (s.ccp_max_iter < 1) range_error("ccp.max_iter", "must be at least 1");
    if (s.initial_excitation != 0 && s.initial_excitation < p.n + p.m) {
        range_error("initial_excitation", "must be 0 (automatic) or at least n + m");
    }
    if (s.multisine.num_components < 1) range_error("multisine.num_components", "must be at least 1");
    if (s.multisine.rpf_iters < 0) range_error("multisine.rpf_iters", "must be non-negative");
    const bool auto_band = s.multisine.band_lo_hz == 0.0 && s.multisine.band_hi_hz == 0.0;
    if (!auto_band && !(s.multisine.band_lo_hz > 0.0 && s.multisine.band_lo_hz <= s.multisine.band_hi_hz &&
                        s.multisine.band_hi_hz < 0.5 / s.dt)) {
        range_error("multisine.band_hz", "must satisfy 0 < lo <= hi < 1/(2 dt)");
    }
    if (s.prbs_hold < 1) range_error("prbs.hold_steps", "must be at least 1");
    if (s.prbs_bits < 2 || s.prbs_bits > 16) range_error("prbs.register_bits", "must lie in [2, 16]");
    if (!s.u_lo.allFinite() || !s.u_hi.allFinite()) range_error("constraints.u_lo", "input bounds must be finite");
    check_box("constraints.u_hi", s.u_lo, s.u_hi);
    if (s.du_max && (s.du_max->array() < 0.0).any()) range_error("constraints.du_max", "must be non-negative");
    check_box("constraints.x_hi", s.x_lo, s.x_hi);
    check_box("constraints.xr_hi", s.xr_lo, s.xr_hi);
}

ExperimentConfig from_json(const json& root) {
    ExperimentConfig c;
    Section top(root, "");

    Section plant = top.child("plant");
    const std::string kind = plant.string("kind", "lti");
    if (kind == "lti") {
        c.plant.kind = PlantKind::Lti;
    } else if (kind == "lti_highdim") {
        c.plant.kind = PlantKind::LtiHighDim;
    } else {
        range_error("plant.kind", "must be 'lti' or 'lti_highdim'");
    }
    c.plant.n = plant.integer("n", c.plant.n);
    c.plant.m = plant.integer("m", c.plant.m);
    c.plant.sigma = plant.number("sigma", c.plant.sigma);
    c.plant.seed = plant.seed("seed", c.plant.seed);
    c.plant.latent_rank = plant.integer("latent_rank", c.plant.latent_rank);
    c.plant.spectral_radius = plant.number("spectral_radius", c.plant.spectral_radius);
    plant.finish();
    const Index n = c.plant.n;
    const Index m = c.plant.m;
    if (n < 1) range_error("plant.n", "must be at least 1");
    if (m < 1) range_error("plant.m", "must be at least 1");

    if (const json* methods = top.find("methods")) {
        if (!methods->is_array()) type_error("methods", "an array of method names");
        c.methods.clear();
        for (const json& e : *methods) {
            if (!e.is_string()) type_error("methods", "an array of method names");
            try {
                c.methods.push_back(parse_method(e.get<std::string>()));
            } catch (const Error&) {
                range_error("methods", "has unknown method '" + e.get<std::string>() + "'");
            }
        }
    }

    ExperimentSettings& s = c.settings;
    s.horizon = static_cast<int>(top.integer("horizon", s.horizon));
    s.epochs = static_cast<int>(top.integer("epochs", s.epochs));
    s.dt = top.number("dt", s.dt);
    c.seeds = static_cast<int>(top.integer("seeds", c.seeds));
    s.seed = top.seed("seed", 0);
    if (top.find("noise_sigma")) s.sigma = top.number("noise_sigma", 0.0);
    s.initial_excitation = static_cast<int>(top.integer("initial_excitation", 0));
    c.output_dir = top.string("output_dir", c.output_dir);

    Section con = top.child("constraints");
    s.u_lo = con.vector("u_lo", m, -kInf).value_or(Vector::Constant(m, -1.0));
    s.u_hi = con.vector("u_hi", m, kInf).value_or(Vector::Constant(m, 1.0));
    if (const json* du = con.find("du_max")) {
        if (du->is_string()) {
            if (du->get<std::string>() != "derive") range_error("constraints.du_max", "must be numeric or \"derive\"");
        } else {
            s.du_max = con.vector("du_max", m, kInf);
        }
    }
    s.x_lo = con.vector("x_lo", n, -kInf);
    s.x_hi = con.vector("x_hi", n, kInf);
    s.terminal_target = con.vector("terminal_target", n, 0.0);
    if (s.terminal_target && !s.terminal_target->allFinite()) {
        range_error("constraints.terminal_target", "must be finite");
    }
    const Index latent = c.plant.kind == PlantKind::LtiHighDim ? c.plant.latent_rank : n;
    if (con.find("xr_lo") || con.find("xr_hi")) {
        // reduced bounds: dimension only known at run time, accept any array length
        auto reduced = [&](const std::string& k, double null_value) -> std::optional<Vector> {
            const json* v = con.find(k);
            if (!v) return std::nullopt;
            const Index len = v->is_array() ? static_cast<Index>(v->size()) : latent;
            return con.vector(k, len, null_value);
        };
        s.xr_lo = reduced("xr_lo", -kInf);
        s.xr_hi = reduced("xr_hi", kInf);
    }
    s.beta = con.number("beta", s.beta);
    con.finish();

    Section dmdc = top.child("dmdc");
    s.dmdc_cutoff = dmdc.integer("cutoff", s.dmdc_cutoff);
    s.energy = dmdc.number("energy", s.energy);
    dmdc.finish();

    Section ccp = top.child("ccp");
    s.ccp_tol = ccp.number("tol", s.ccp_tol);
    s.ccp_max_iter = static_cast<int>(ccp.integer("max_iter", s.ccp_max_iter));
    ccp.finish();

    Section ms = top.child("multisine");
    s.multisine.num_components = static_cast<int>(ms.integer("num_components", s.multisine.num_components));
    s.multisine.rpf_iters = static_cast<int>(ms.integer("rpf_iters", s.multisine.rpf_iters));
    if (const auto band = ms.vector("band_hz", 2, 0.0)) {
        s.multisine.band_lo_hz = (*band)(0);
        s.multisine.band_hi_hz = (*band)(1);
    }
    ms.finish();

    Section pr = top.child("prbs");
    s.prbs_hold = static_cast<int>(pr.integer("hold_steps", s.prbs_hold));
    s.prbs_bits = static_cast<int>(pr.integer("register_bits", s.prbs_bits));
    pr.finish();

    top.finish();
    validate(c);
    return c;
}

} // namespace

Plant ExperimentConfig::make_plant() const {
    if (plant.kind == PlantKind::LtiHighDim) {
        return make_highdim_plant(plant.n, plant.latent_rank, plant.m, plant.sigma, plant.seed, plant.spectral_radius);
    }
    return make_lti_plant(plant.n, plant.m, plant.sigma, plant.seed, plant.spectral_radius);
}

ExperimentConfig default_config(Index m) {
    ExperimentConfig c;
    c.plant.m = m;
    c.settings.u_lo = Vector::Constant(m, -1.0);
    c.settings.u_hi = Vector::Constant(m, 1.0);
    return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigErrorKind::Syntax, "", std::string("config: malformed JSON: ") + e.what());
    }
    return from_json(root);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrorKind::MissingFile, "", "config: cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_string(os.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    const ExperimentSettings& s = c.settings;
    json j;
    j["plant"] = {
        {"kind", c.plant.kind == PlantKind::LtiHighDim ? "lti_highdim" : "lti"},
        {"n", c.plant.n},
        {"m", c.plant.m},
        {"sigma", c.plant.sigma},
        {"seed", c.plant.seed},
        {"latent_rank", c.plant.latent_rank},
        {"spectral_radius", c.plant.spectral_radius},
    };
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    j["horizon"] = s.horizon;
    j["epochs"] = s.epochs;
    j["dt"] = s.dt;
    j["seeds"] = c.seeds;
    j["seed"] = s.seed;
    j["noise_sigma"] = s.sigma ? json(*s.sigma) : json(nullptr);
    j["initial_excitation"] = s.initial_excitation;
    j["output_dir"] = c.output_dir;

    json con;
    con["u_lo"] = vector_json(s.u_lo);
    con["u_hi"] = vector_json(s.u_hi);
    con["du_max"] = s.du_max ? vector_json(*s.du_max) : json("derive");
    con["x_lo"] = s.x_lo ? vector_json(*s.x_lo) : json(nullptr);
    con["x_hi"] = s.x_hi ? vector_json(*s.x_hi) : json(nullptr);
    con["xr_lo"] = s.xr_lo ? vector_json(*s.xr_lo) : json(nullptr);
    con["xr_hi"] = s.xr_hi ? vector_json(*s.xr_hi) : json(nullptr);
    con["terminal_target"] = s.terminal_target ? vector_json(*s.terminal_target) : json(nullptr);
    con["beta"] = s.beta;
    j["constraints"] = con;

    j["dmdc"] = {{"cutoff", s.dmdc_cutoff}, {"energy", s.energy}};
    j["ccp"] = {{"tol", s.ccp_tol}, {"max_iter", s.ccp_max_iter}};
    j["multisine"] = {
        {"num_components", s.multisine.num_components},
        {"band_hz", {s.multisine.band_lo_hz, s.multisine.band_hi_hz}},
        {"rpf_iters", s.multisine.rpf_iters},
    };
    j["prbs"] = {{"hold_steps", s.prbs_hold}, {"register_bits", s.prbs_bits}};
    return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write config '" + path + "'");
    out << serialize_config(config);
    if (!out) throw Error(ErrorKind::Io, "failed writing config '" + path + "'");
}

} // namespace infodesign
