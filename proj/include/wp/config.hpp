#pragma once

#include <map>
#include <string>
#include <vector>

#include "wp/geometry.hpp"

namespace wp {

// flat "[section] / key = value" text config; keys stored as "section.key"
class Config {
public:
    static Config parse_string(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    int get_int(const std::string& key, int dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<double> get_list(const std::string& key,
                                 const std::vector<double>& dflt) const;
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    std::string canonical() const;  // sorted key=value lines
    std::string digest() const;     // sha256 of the canonical form

    const std::map<std::string, std::string>& items() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// typed experiment description with every knob validated up front
struct ExperimentConfig {
    DomainSpec domain;
    int nx = 128;
    double T = 4.0;
    double cfl = 0.9;

    double omega0_angle = 0.0;
    double epsilon = 0.25;
    double face_r = 0.0;

    std::string q1_expr = "zero";
    std::string q2_expr = "static(xgauss(0,0,0.32))";
    std::string perturbation_expr = "gaussian_bump(0.5,0.1,-0.1,2.0,0.4,0.8)";
    double p_exponent = 6.0;

    std::vector<double> lambdas{8.0, 16.0, 32.0, 64.0};
    std::string delta_rule = "coupled";  // coupled | fixed
    double delta = 0.3;
    double probe_angle = 0.12;
    double anchor_x = -0.3, anchor_y = 0.0;

    double recon_R = 8.0;
    std::string recon_fill = "zero";
    std::string recon_mode = "measured";
    bool full_circle = true;
    double recon_lambda = 32.0;

    std::vector<double> scales{1.0, 0.3, 0.1, 0.03, 0.01};
    int n_random = 8;
    double gamma_star = 0.22313016014842982;  // exp(-1.5)

    std::uint64_t seed = 1;
    int workers = 0;  // 0 = machine parallelism
    std::string out_dir = "out";

    static ExperimentConfig from(const Config& c);
    void validate() const;  // names the violated precondition
};

// annotated default config text (the config-reference output)
std::string config_reference_text();

}  // namespace wp
