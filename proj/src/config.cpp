#include "gkin/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gkin/errors.hpp"

namespace gkin {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

const std::map<std::string, std::set<std::string>, std::less<>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>, std::less<>> keys = {
        {"simulation",
         {"dimension", "alpha", "mu", "rho0", "particles", "dt", "t_end", "seed", "threads",
          "collision_fraction", "majorant_factor", "steady_window", "steady_tol", "t_average",
          "t_max"}},
        {"kernel", {"type", "m", "M"}},
        {"init",
         {"shape", "temperature", "radius", "va", "vb", "tail_index", "scale", "remove_mean"}},
        {"output", {"every", "checkpoint_every", "moments", "d3_pairs", "entropy"}},
    };
    return keys;
}

struct Entries {
    // section -> key -> value
    std::map<std::string, std::map<std::string, std::string>> values;

    const std::string* find(const std::string& section, const std::string& key) const {
        auto s = values.find(section);
        if (s == values.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
};

double to_real(const std::string& key, const std::string& text) {
    double x = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc{} || ptr != end) throw ConfigError(key, key + ": expected a number, got '" + text + "'");
    return x;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t x = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, x);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError(key, key + ": expected a nonnegative integer, got '" + text + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        if (item.empty()) throw ConfigError(key, key + ": empty list item");
        out.push_back(to_real(key, std::string(item)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

std::string list_text(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += fmt(xs[i]);
    }
    return s;
}

Entries tokenize(std::string_view text) {
    Entries out;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("", "line " + std::to_string(line_no) + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!allowed_keys().contains(section))
                throw ConfigError(section, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty()) throw ConfigError(key, key + ": key outside any section");
        if (!allowed_keys().at(section).contains(key))
            throw ConfigError(key, "unknown key '" + key + "' in [" + section + "]");
        if (value.empty()) throw ConfigError(key, key + ": missing value");
        out.values[section][key] = value;
    }
    return out;
}

InitSpec build_init(const Entries& en) {
    InitSpec spec;
    auto get = [&](const char* key) { return en.find("init", key); };
    auto real_or = [&](const char* key, double dflt) {
        const auto* v = get(key);
        return v ? to_real(key, *v) : dflt;
    };
    const std::string shape = get("shape") ? *get("shape") : "maxwellian";
    std::set<std::string> used = {"shape", "remove_mean"};
    if (shape == "maxwellian") {
        spec.shape = Maxwellian{real_or("temperature", 1.0)};
        used.insert("temperature");
    } else if (shape == "uniform_ball") {
        spec.shape = UniformBall{real_or("radius", 1.0)};
        used.insert("radius");
    } else if (shape == "two_delta") {
        if (!get("va") || !get("vb")) throw ConfigError("va", "two_delta needs va and vb");
        spec.shape = TwoDelta{to_list("va", *get("va")), to_list("vb", *get("vb"))};
        used.insert({"va", "vb"});
    } else if (shape == "pareto") {
        spec.shape = ParetoTail{real_or("tail_index", 4.5), real_or("scale", 1.0)};
        used.insert({"tail_index", "scale"});
    } else {
        throw ConfigError("shape", "shape must be one of maxwellian, uniform_ball, two_delta, pareto");
    }
    if (auto s = en.values.find("init"); s != en.values.end()) {
        for (const auto& [k, v] : s->second) {
            if (!used.contains(k)) throw ConfigError(k, k + " does not apply to shape " + shape);
        }
    }
    if (const auto* v = get("remove_mean")) spec.remove_mean = to_bool("remove_mean", *v);

    // shape parameters are checked here so the key can be named
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Maxwellian>) {
                if (!(s.temperature > 0.0)) throw ConfigError("temperature", "temperature must be > 0");
            } else if constexpr (std::is_same_v<T, UniformBall>) {
                if (!(s.radius > 0.0)) throw ConfigError("radius", "radius must be > 0");
            } else if constexpr (std::is_same_v<T, ParetoTail>) {
                if (!(s.tail_index > 0.0)) throw ConfigError("tail_index", "tail_index must be > 0");
                if (!(s.scale > 0.0)) throw ConfigError("scale", "scale must be > 0");
            }
        },
        spec.shape);
    return spec;
}

}  // namespace

SimConfig parse_config_text(std::string_view text) {
    const auto en = tokenize(text);
    SimConfig c;
    auto real = [&](const char* section, const char* key, double& out) {
        if (const auto* v = en.find(section, key)) out = to_real(key, *v);
    };
    auto uint = [&](const char* section, const char* key, auto& out) {
        if (const auto* v = en.find(section, key)) {
            const auto x = to_unsigned(key, *v);
            using T = std::decay_t<decltype(out)>;
            if (x > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))
                throw ConfigError(key, std::string(key) + ": value too large");
            out = static_cast<T>(x);
        }
    };

    uint("simulation", "dimension", c.dimension);
    real("simulation", "alpha", c.alpha);
    real("simulation", "mu", c.mu);
    real("simulation", "rho0", c.rho0);
    uint("simulation", "particles", c.n_particles);
    if (const auto* v = en.find("simulation", "dt"); v && *v != "auto") c.dt = to_real("dt", *v);
    real("simulation", "t_end", c.t_end);
    uint("simulation", "seed", c.seed);
    uint("simulation", "threads", c.threads);
    real("simulation", "collision_fraction", c.collision_fraction);
    real("simulation", "majorant_factor", c.majorant_factor);
    real("simulation", "steady_window", c.steady_window);
    real("simulation", "steady_tol", c.steady_tol);
    real("simulation", "t_average", c.t_average);
    real("simulation", "t_max", c.t_max);

    const std::string type = en.find("kernel", "type") ? *en.find("kernel", "type") : "hard_sphere";
    if (type == "hard_sphere") {
        if (en.find("kernel", "m") || en.find("kernel", "M"))
            throw ConfigError("m", "m and M apply only to the truncated kernel");
    } else if (type == "truncated") {
        double m = 0.0, M = std::numeric_limits<double>::infinity();
        real("kernel", "m", m);
        real("kernel", "M", M);
        if (!(m >= 0.0)) throw ConfigError("m", "m must be >= 0");
        if (!(M > 0.0)) throw ConfigError("M", "M must be > 0");
        c.kernel = KernelSpec::truncated(m, M);
    } else {
        throw ConfigError("type", "kernel type must be hard_sphere or truncated");
    }

    c.init = build_init(en);

    real("output", "every", c.output_every);
    real("output", "checkpoint_every", c.checkpoint_every);
    if (const auto* v = en.find("output", "moments")) c.moment_orders = to_list("moments", *v);
    uint("output", "d3_pairs", c.d3_pairs);
    if (const auto* v = en.find("output", "entropy")) c.entropy = to_bool("entropy", *v);

    c.validate();
    return c;
}

SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string to_config_text(const SimConfig& c) {
    std::ostringstream os;
    os << "[simulation]\n"
       << "dimension = " << c.dimension << '\n'
       << "alpha = " << fmt(c.alpha) << '\n'
       << "mu = " << fmt(c.mu) << '\n'
       << "rho0 = " << fmt(c.rho0) << '\n'
       << "particles = " << c.n_particles << '\n'
       << "dt = " << (c.dt ? fmt(*c.dt) : std::string("auto")) << '\n'
       << "t_end = " << fmt(c.t_end) << '\n'
       << "seed = " << c.seed << '\n'
       << "threads = " << c.threads << '\n'
       << "collision_fraction = " << fmt(c.collision_fraction) << '\n'
       << "majorant_factor = " << fmt(c.majorant_factor) << '\n'
       << "steady_window = " << fmt(c.steady_window) << '\n'
       << "steady_tol = " << fmt(c.steady_tol) << '\n'
       << "t_average = " << fmt(c.t_average) << '\n'
       << "t_max = " << fmt(c.t_max) << '\n';
    os << "\n[kernel]\n";
    if (c.kernel.variant == KernelSpec::Variant::hard_sphere) {
        os << "type = hard_sphere\n";
    } else {
        os << "type = truncated\nm = " << fmt(c.kernel.m) << "\nM = " << fmt(c.kernel.M) << '\n';
    }
    os << "\n[init]\n";
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Maxwellian>) {
                os << "shape = maxwellian\ntemperature = " << fmt(s.temperature) << '\n';
            } else if constexpr (std::is_same_v<T, UniformBall>) {
                os << "shape = uniform_ball\nradius = " << fmt(s.radius) << '\n';
            } else if constexpr (std::is_same_v<T, TwoDelta>) {
                os << "shape = two_delta\nva = " << list_text(s.va) << "\nvb = " << list_text(s.vb) << '\n';
            } else {
                os << "shape = pareto\ntail_index = " << fmt(s.tail_index) << "\nscale = " << fmt(s.scale)
                   << '\n';
            }
        },
        c.init.shape);
    os << "remove_mean = " << (c.init.remove_mean ? "true" : "false") << '\n';
    os << "\n[output]\n"
       << "every = " << fmt(c.output_every) << '\n'
       << "checkpoint_every = " << fmt(c.checkpoint_every) << '\n'
       << "moments = " << list_text(c.moment_orders) << '\n'
       << "d3_pairs = " << c.d3_pairs << '\n'
       << "entropy = " << (c.entropy ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace gkin
