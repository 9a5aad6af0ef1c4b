#include "wp/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wp/csv.hpp"

namespace wp {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config c;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(Errc::config_invalid,
                     "unterminated section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(Errc::config_invalid, "expected key = value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            fail(Errc::config_invalid, "empty key at line " + std::to_string(lineno));
        c.kv_[section.empty() ? key : section + "." + key] = val;
    }
    return c;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::config_invalid, "cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_string(text);
}

std::string Config::get_str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        fail(Errc::config_invalid, "not a number: " + key + " = " + it->second);
    }
}

int Config::get_int(const std::string& key, int dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        fail(Errc::config_invalid, "not an integer: " + key + " = " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(Errc::config_invalid, "not a boolean: " + key + " = " + it->second);
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string cell;
    while (std::getline(is, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            fail(Errc::config_invalid, "not a number list: " + key + " = " + it->second);
        }
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::io_failure, "cannot open for hashing: " + path);
    std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return sha256_hex(data);
}

std::string Config::digest() const { return sha256_hex(canonical()); }

ExperimentConfig ExperimentConfig::from(const Config& c) {
    ExperimentConfig e;
    std::string shape = c.get_str("domain.shape", "rectangle");
    if (shape == "rectangle") {
        e.domain.shape = Shape::rectangle;
        e.domain.x_min = c.get_double("domain.x_min", -1.0);
        e.domain.x_max = c.get_double("domain.x_max", 1.0);
        e.domain.y_min = c.get_double("domain.y_min", -1.0);
        e.domain.y_max = c.get_double("domain.y_max", 1.0);
    } else if (shape == "disk") {
        e.domain.shape = Shape::disk;
        e.domain.center = {c.get_double("domain.center_x", 0.0),
                           c.get_double("domain.center_y", 0.0)};
        e.domain.radius = c.get_double("domain.radius", 1.0);
    } else {
        fail(Errc::config_invalid, "domain.shape must be rectangle or disk");
    }
    e.nx = c.get_int("grid.nx", e.nx);
    e.T = c.get_double("grid.T", e.T);
    e.cfl = c.get_double("grid.cfl", e.cfl);

    e.omega0_angle = c.get_double("faces.omega0_angle", e.omega0_angle);
    e.epsilon = c.get_double("faces.epsilon", e.epsilon);
    e.face_r = c.get_double("faces.r", e.face_r);

    e.q1_expr = c.get_str("potential.q1", e.q1_expr);
    e.q2_expr = c.get_str("potential.q2", e.q2_expr);
    e.perturbation_expr = c.get_str("potential.perturbation", e.perturbation_expr);
    e.p_exponent = c.get_double("potential.p", e.p_exponent);

    e.lambdas = c.get_list("probe.lambdas", e.lambdas);
    e.delta_rule = c.get_str("probe.delta_rule", e.delta_rule);
    e.delta = c.get_double("probe.delta", e.delta);
    e.probe_angle = c.get_double("probe.omega_angle", e.probe_angle);
    e.anchor_x = c.get_double("probe.anchor_x", e.anchor_x);
    e.anchor_y = c.get_double("probe.anchor_y", e.anchor_y);

    e.recon_R = c.get_double("recon.R", e.recon_R);
    e.recon_fill = c.get_str("recon.fill", e.recon_fill);
    e.recon_mode = c.get_str("recon.mode", e.recon_mode);
    e.full_circle = c.get_bool("recon.full_circle", e.full_circle);
    e.recon_lambda = c.get_double("recon.lambda", e.recon_lambda);

    e.scales = c.get_list("stability.scales", e.scales);
    e.n_random = c.get_int("stability.n_random", e.n_random);
    e.gamma_star = c.get_double("stability.gamma_star", e.gamma_star);

    e.seed = static_cast<std::uint64_t>(c.get_double("run.seed", 1.0));
    e.workers = c.get_int("run.workers", 0);
    e.out_dir = c.get_str("run.out", e.out_dir);
    e.validate();
    return e;
}

void ExperimentConfig::validate() const {
    if (nx < 16) fail(Errc::config_invalid, "grid.nx: nx >= 16 required");
    if (!(T > 0.0)) fail(Errc::config_invalid, "grid.T: T > 0 required");
    if (!(cfl > 0.0 && cfl <= 0.9))
        fail(Errc::config_invalid, "grid.cfl: cfl in (0, 0.9] required");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        fail(Errc::config_invalid, "faces.epsilon: epsilon in (0,1) required");
    if (!(p_exponent > 3.0)) fail(Errc::config_invalid, "potential.p: p > n+1 = 3 required");
    if (delta_rule != "coupled" && delta_rule != "fixed")
        fail(Errc::config_invalid, "probe.delta_rule: coupled or fixed");
    if (delta_rule == "fixed" && !(delta > 0.0 && delta < 1.0))
        fail(Errc::config_invalid, "probe.delta: delta in (0,1) required");
    for (double l : lambdas)
        if (!(l > 1.0)) fail(Errc::config_invalid, "probe.lambdas: every lambda > 1 required");
    if (!(recon_R > 0.0)) fail(Errc::config_invalid, "recon.R: R > 0 required");
    if (recon_fill != "zero" && recon_fill != "extrapolate")
        fail(Errc::config_invalid, "recon.fill: zero or extrapolate");
    if (recon_mode != "measured" && recon_mode != "oracle")
        fail(Errc::config_invalid, "recon.mode: measured or oracle");
    if (n_random < 8) fail(Errc::config_invalid, "stability.n_random: at least 8 required");
    if (!(gamma_star > 0.0 && gamma_star < std::exp(-1.0)))
        fail(Errc::config_invalid, "stability.gamma_star: must lie in (0, 1/e)");
}

std::string config_reference_text() {
    ExperimentConfig d;
    std::ostringstream os;
    os << "# waveprobe experiment configuration, with defaults\n"
       << "# keys are grouped by section; every value shown is the default\n\n"
       << "[domain]\n"
       << "shape = rectangle        # rectangle | disk\n"
       << "x_min = -1\nx_max = 1\ny_min = -1\ny_max = 1\n"
       << "# center_x = 0          # disk only\n"
       << "# center_y = 0\n"
       << "# radius = 1\n\n"
       << "[grid]\n"
       << "nx = " << d.nx << "                 # spatial nodes per axis (>= 16)\n"
       << "T = " << format_double(d.T) << "                  # final time\n"
       << "cfl = " << format_double(d.cfl) << "              # CFL factor, at most 0.9\n\n"
       << "[faces]\n"
       << "omega0_angle = " << format_double(d.omega0_angle) << "       # probing axis\n"
       << "epsilon = " << format_double(d.epsilon) << "          # aperture half-width\n"
       << "r = " << format_double(d.face_r) << "                # shadow threshold\n\n"
       << "[potential]\n"
       << "q1 = " << d.q1_expr << "\n"
       << "q2 = " << d.q2_expr << "\n"
       << "perturbation = " << d.perturbation_expr << "\n"
       << "p = " << format_double(d.p_exponent) << "                # W^{1,p} exponent (> 3)\n\n"
       << "[probe]\n"
       << "lambdas = 8,16,32,64\n"
       << "delta_rule = coupled     # coupled | fixed\n"
       << "delta = " << format_double(d.delta) << "            # used when fixed\n"
       << "omega_angle = " << format_double(d.probe_angle) << "\n"
       << "anchor_x = " << format_double(d.anchor_x) << "\n"
       << "anchor_y = " << format_double(d.anchor_y) << "\n\n"
       << "[recon]\n"
       << "R = " << format_double(d.recon_R) << "\n"
       << "fill = zero              # zero | extrapolate (heuristic)\n"
       << "mode = measured          # measured | oracle\n"
       << "full_circle = true       # diagnostic aperture\n"
       << "lambda = " << format_double(d.recon_lambda) << "\n\n"
       << "[stability]\n"
       << "scales = 1,0.3,0.1,0.03,0.01\n"
       << "n_random = " << d.n_random << "\n"
       << "gamma_star = " << format_double(d.gamma_star) << "\n\n"
       << "[run]\n"
       << "seed = 1\n"
       << "workers = 0              # 0 = machine parallelism\n"
       << "out = out\n";
    return os.str();
}

}  // namespace wp
