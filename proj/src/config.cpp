#include "nchhs/config.hpp"

#include "nchhs/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace nchhs {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, RawEntry>;

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

class Extractor {
public:
    Extractor(std::map<std::string, Section>& raw, std::vector<ConfigViolation>& errs)
        : raw_(raw), errs_(errs) {}

    bool has(const std::string& sec, const std::string& key) {
        auto s = raw_.find(sec);
        if (s == raw_.end()) return false;
        return s->second.count(key) > 0;
    }

    template <class T>
    void get(const std::string& sec, const std::string& key, T& out) {
        auto s = raw_.find(sec);
        if (s == raw_.end()) return;
        auto e = s->second.find(key);
        if (e == s->second.end()) return;
        e->second.used = true;
        parse(sec, key, e->second, out);
    }

    void get_enum(const std::string& sec, const std::string& key,
                  const std::vector<std::pair<std::string, int>>& options, int& out) {
        auto s = raw_.find(sec);
        if (s == raw_.end()) return;
        auto e = s->second.find(key);
        if (e == s->second.end()) return;
        e->second.used = true;
        for (const auto& [name, val] : options)
            if (e->second.value == name) {
                out = val;
                return;
            }
        std::string opts;
        for (const auto& [name, val] : options) opts += (opts.empty() ? "" : "|") + name;
        fail(sec, key, e->second.line, "expected one of " + opts);
    }

    void fail(const std::string& sec, const std::string& key, int line, const std::string& msg) {
        errs_.push_back({sec, key, line, msg});
    }

    // every key must have been consumed
    void check_unknown() {
        for (auto& [sec, entries] : raw_)
            for (auto& [key, e] : entries)
                if (!e.used) fail(sec, key, e.line, "unknown key");
    }

private:
    void parse(const std::string& sec, const std::string& key, const RawEntry& e, double& out) {
        try {
            size_t pos = 0;
            out = std::stod(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("trailing");
        } catch (...) {
            fail(sec, key, e.line, "expected a real number, got '" + e.value + "'");
        }
    }
    void parse(const std::string& sec, const std::string& key, const RawEntry& e, int& out) {
        try {
            size_t pos = 0;
            out = std::stoi(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("trailing");
        } catch (...) {
            fail(sec, key, e.line, "expected an integer, got '" + e.value + "'");
        }
    }
    void parse(const std::string& sec, const std::string& key, const RawEntry& e,
               std::uint64_t& out) {
        try {
            size_t pos = 0;
            out = std::stoull(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument("trailing");
        } catch (...) {
            fail(sec, key, e.line, "expected an unsigned integer, got '" + e.value + "'");
        }
    }
    void parse(const std::string&, const std::string&, const RawEntry& e, std::string& out) {
        out = e.value;
    }

    std::map<std::string, Section>& raw_;
    std::vector<ConfigViolation>& errs_;
};

} // namespace

SimConfig parse_config(const std::string& text) {
    std::vector<ConfigViolation> errs;
    std::map<std::string, Section> raw;

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errs.push_back({section, "", lineno, "malformed section header '" + line + "'"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errs.push_back({section, "", lineno, "expected key = value, got '" + line + "'"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            errs.push_back({section, "", lineno, "empty key"});
            continue;
        }
        if (raw[section].count(key))
            errs.push_back({section, key, lineno, "duplicate key"});
        raw[section][key] = {value, lineno, false};
    }

    SimConfig cfg;
    Extractor ex(raw, errs);

    // global
    ex.get("", "seed", cfg.seed);
    ex.get("", "output_dir", cfg.output_dir);

    // [domain]
    ex.get("domain", "lx", cfg.domain.lx);
    ex.get("domain", "ly", cfg.domain.ly);
    ex.get("domain", "nx", cfg.domain.nx);
    ex.get("domain", "ny", cfg.domain.ny);
    {
        int mode = static_cast<int>(cfg.domain.boundary_mode);
        ex.get_enum("domain", "boundary_mode",
                    {{"neumann", 0}, {"periodic", 1}}, mode);
        cfg.domain.boundary_mode = static_cast<BoundaryMode>(mode);
    }
    if (cfg.domain.nx < 8 || cfg.domain.ny < 8)
        ex.fail("domain", "nx", 0, "nx, ny >= 8 required");
    if (!(cfg.domain.lx > 0) || !(cfg.domain.ly > 0))
        ex.fail("domain", "lx", 0, "lx, ly must be positive");

    // [material]
    ex.get("material", "theta", cfg.material.theta);
    ex.get("material", "theta0", cfg.material.theta0);
    ex.get("material", "nu1", cfg.material.nu1);
    ex.get("material", "nu2", cfg.material.nu2);
    ex.get("material", "eps", cfg.material.eps);
    if (!(cfg.material.theta > 0)) ex.fail("material", "theta", 0, "theta must be positive");
    if (!(cfg.material.theta0 > cfg.material.theta))
        ex.fail("material", "theta0", 0, "theta0 > theta required");
    if (!(cfg.material.nu1 > 0) || !(cfg.material.nu2 > 0))
        ex.fail("material", "nu1", 0, "nu1, nu2 must be positive");
    if (!(cfg.material.eps >= 0.0 && cfg.material.eps < 1.0))
        ex.fail("material", "eps", 0, "eps in [0,1) required");

    // [kernel]
    {
        int fam = static_cast<int>(cfg.kernel.family);
        ex.get_enum("kernel", "family", {{"newtonian2d", 0}, {"gaussian", 1}}, fam);
        cfg.kernel.family = static_cast<KernelFamily>(fam);
    }
    ex.get("kernel", "strength", cfg.kernel.strength);
    ex.get("kernel", "width", cfg.kernel.width);
    if (!(cfg.kernel.strength > 0)) ex.fail("kernel", "strength", 0, "strength must be positive");
    if (cfg.kernel.family == KernelFamily::gaussian && !(cfg.kernel.width > 0))
        ex.fail("kernel", "width", 0, "width must be positive");

    // [stepper]
    ex.get("stepper", "tau", cfg.stepper.tau);
    ex.get("stepper", "t_end", cfg.stepper.t_end);
    {
        int form = static_cast<int>(cfg.stepper.form);
        ex.get_enum("stepper", "form", {{"mu_form", 0}, {"b_form", 1}}, form);
        cfg.stepper.form = static_cast<SchemeForm>(form);
        int conv = static_cast<int>(cfg.stepper.convection);
        ex.get_enum("stepper", "convection", {{"upwind", 0}, {"centered", 1}}, conv);
        cfg.stepper.convection = static_cast<ConvectionScheme>(conv);
    }
    ex.get("stepper", "cfl_safety", cfg.stepper.cfl_safety);
    ex.get("stepper", "snapshot_every", cfg.stepper.snapshot_every);
    if (!(cfg.stepper.tau > 0)) ex.fail("stepper", "tau", 0, "tau must be positive");
    if (!(cfg.stepper.t_end > 0)) ex.fail("stepper", "t_end", 0, "t_end must be positive");
    if (!(cfg.stepper.cfl_safety > 0 && cfg.stepper.cfl_safety <= 1))
        ex.fail("stepper", "cfl_safety", 0, "cfl_safety in (0,1] required");
    if (cfg.stepper.snapshot_every < 0)
        ex.fail("stepper", "snapshot_every", 0, "snapshot_every must be >= 0");

    // [solver]
    ex.get("solver", "rel_tol", cfg.solver.rel_tol);
    ex.get("solver", "max_iter", cfg.solver.max_iter);
    ex.get("solver", "brinkman_nu", cfg.solver.brinkman_nu);
    ex.get("solver", "brinkman_tol", cfg.solver.brinkman_tol);
    if (!(cfg.solver.rel_tol >= 1e-14 && cfg.solver.rel_tol <= 1e-4))
        ex.fail("solver", "rel_tol", 0, "rel_tol in [1e-14, 1e-4] required");
    if (cfg.solver.brinkman_nu < 0)
        ex.fail("solver", "brinkman_nu", 0, "brinkman_nu must be >= 0 (0 selects Darcy)");

    // [initial]
    {
        int type = static_cast<int>(cfg.initial.type);
        ex.get_enum("initial", "type",
                    {{"uniform", 0}, {"spinodal", 1}, {"bubble", 2}, {"file", 3}}, type);
        cfg.initial.type = static_cast<IcType>(type);
    }
    ex.get("initial", "value", cfg.initial.value);
    ex.get("initial", "amplitude", cfg.initial.amplitude);
    ex.get("initial", "center_x", cfg.initial.center_x);
    ex.get("initial", "center_y", cfg.initial.center_y);
    ex.get("initial", "radius", cfg.initial.radius);
    ex.get("initial", "smoothing", cfg.initial.smoothing);
    ex.get("initial", "phi_in", cfg.initial.phi_in);
    ex.get("initial", "phi_out", cfg.initial.phi_out);
    ex.get("initial", "path", cfg.initial.path);

    const double head = 1.0 - 1e-3; // keep ||phi0||_inf <= 1 with headroom
    switch (cfg.initial.type) {
        case IcType::uniform:
            if (std::abs(cfg.initial.value) > head)
                ex.fail("initial", "value", 0, "|value| <= 1 - 1e-3 required");
            break;
        case IcType::spinodal:
            if (cfg.initial.amplitude < 0)
                ex.fail("initial", "amplitude", 0, "amplitude must be >= 0");
            if (std::abs(cfg.initial.value) + cfg.initial.amplitude > head)
                ex.fail("initial", "amplitude", 0, "|value| + amplitude <= 1 - 1e-3 required");
            break;
        case IcType::bubble:
            if (!(cfg.initial.radius > 0)) ex.fail("initial", "radius", 0, "radius must be positive");
            if (!(cfg.initial.smoothing > 0))
                ex.fail("initial", "smoothing", 0, "smoothing must be positive");
            if (std::abs(cfg.initial.phi_in) > head || std::abs(cfg.initial.phi_out) > head)
                ex.fail("initial", "phi_in", 0, "|phi_in|, |phi_out| <= 1 - 1e-3 required");
            break;
        case IcType::file:
            if (cfg.initial.path.empty())
                ex.fail("initial", "path", 0, "path required for type = file");
            else if (!std::filesystem::exists(cfg.initial.path))
                ex.fail("initial", "path", 0, "file does not exist: " + cfg.initial.path);
            break;
    }

    ex.check_unknown();
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return cfg;
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace nchhs
