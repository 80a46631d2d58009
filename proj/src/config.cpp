// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace strf {

namespace {

struct KeySpec {
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key + " (" + why + ")");
}

int64_t to_int(const std::string& key, const std::string& v, int64_t lo, int64_t hi) {
    int64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        bad_value(key, v, "not an integer");
    if (out < lo || out > hi)
        bad_value(key, v, "range " + std::to_string(lo) + ".." + std::to_string(hi));
    return out;
}

double to_double(const std::string& key, const std::string& v, double lo, double hi) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) bad_value(key, v, "not a number");
        if (!(out >= lo && out <= hi)) bad_value(key, v, "out of range");
        return out;
    } catch (const std::invalid_argument&) {
        bad_value(key, v, "not a number");
    } catch (const std::out_of_range&) {
        bad_value(key, v, "out of range");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "expected true/false");
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    std::string a, b, c;
    char comma;
    double x, y, z;
    std::istringstream in2(v);
    if (!(in2 >> x >> comma >> y >> comma >> z)) bad_value(key, v, "expected x,y,z");
    return {x, y, z};
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string fmt(const Vec3& v) { return fmt(v.x) + "," + fmt(v.y) + "," + fmt(v.z); }

// Single source of truth: key order here is the serialization order.
const std::vector<std::pair<std::string, KeySpec>>& key_table() {
    static const std::vector<std::pair<std::string, KeySpec>> table = {
        {"seed",
         {[](Config& c, const std::string& v) {
              c.seed = uint64_t(to_int("seed", v, 0, int64_t(1) << 62));
          },
          [](const Config& c) { return std::to_string(c.seed); }}},
        {"threads",
         {[](Config& c, const std::string& v) { c.threads = int(to_int("threads", v, 1, 64)); },
          [](const Config& c) { return std::to_string(c.threads); }}},
        {"precision",
         {[](Config& c, const std::string& v) {
              if (v != "f32" && v != "f64") bad_value("precision", v, "f32|f64");
              c.precision = v;
          },
          [](const Config& c) { return c.precision; }}},
        {"data.dir",
         {[](Config& c, const std::string& v) { c.data_dir = v; },
          [](const Config& c) { return c.data_dir; }}},
        {"field.decomposition",
         {[](Config& c, const std::string& v) {
              if (v != "vm" && v != "cp") bad_value("field.decomposition", v, "vm|cp");
              c.field_decomp = v;
          },
          [](const Config& c) { return c.field_decomp; }}},
        {"field.levels",
         {[](Config& c, const std::string& v) {
              c.field_levels = int(to_int("field.levels", v, 1, 16));
          },
          [](const Config& c) { return std::to_string(c.field_levels); }}},
        {"field.rank",
         {[](Config& c, const std::string& v) {
              c.field_rank = int(to_int("field.rank", v, 1, 256));
          },
          [](const Config& c) { return std::to_string(c.field_rank); }}},
        {"field.channels",
         {[](Config& c, const std::string& v) {
              c.field_channels = int(to_int("field.channels", v, 1, 8));
          },
          [](const Config& c) { return std::to_string(c.field_channels); }}},
        {"field.base_res",
         {[](Config& c, const std::string& v) {
              c.field_base_res = int(to_int("field.base_res", v, 2, 512));
          },
          [](const Config& c) { return std::to_string(c.field_base_res); }}},
        {"field.max_res",
         {[](Config& c, const std::string& v) {
              c.field_max_res = int(to_int("field.max_res", v, 2, 512));
          },
          [](const Config& c) { return std::to_string(c.field_max_res); }}},
        {"field.ambient_res",
         {[](Config& c, const std::string& v) {
              c.ambient_res = int(to_int("field.ambient_res", v, 2, 512));
          },
          [](const Config& c) { return std::to_string(c.ambient_res); }}},
        {"field.ambient_rank",
         {[](Config& c, const std::string& v) {
              c.ambient_rank = int(to_int("field.ambient_rank", v, 1, 64));
          },
          [](const Config& c) { return std::to_string(c.ambient_rank); }}},
        {"lightfield.head_a_layers",
         {[](Config& c, const std::string& v) {
              c.lf_head_a_layers = int(to_int("lightfield.head_a_layers", v, 2, 8));
          },
          [](const Config& c) { return std::to_string(c.lf_head_a_layers); }}},
        {"lightfield.head_a_width",
         {[](Config& c, const std::string& v) {
              c.lf_head_a_width = int(to_int("lightfield.head_a_width", v, 4, 1024));
          },
          [](const Config& c) { return std::to_string(c.lf_head_a_width); }}},
        {"lightfield.head_bd_width",
         {[](Config& c, const std::string& v) {
              c.lf_head_bd_width = int(to_int("lightfield.head_bd_width", v, 4, 1024));
          },
          [](const Config& c) { return std::to_string(c.lf_head_bd_width); }}},
        {"lightfield.lobes",
         {[](Config& c, const std::string& v) {
              c.lf_lobes = int(to_int("lightfield.lobes", v, 1, 64));
          },
          [](const Config& c) { return std::to_string(c.lf_lobes); }}},
        {"lightfield.feature_dim",
         {[](Config& c, const std::string& v) {
              c.lf_feature_dim = int(to_int("lightfield.feature_dim", v, 1, 64));
          },
          [](const Config& c) { return std::to_string(c.lf_feature_dim); }}},
        {"lightfield.decoder",
         {[](Config& c, const std::string& v) {
              if (v != "asg" && v != "sh") bad_value("lightfield.decoder", v, "asg|sh");
              c.lf_decoder = v;
          },
          [](const Config& c) { return c.lf_decoder; }}},
        {"lightfield.sh_degree",
         {[](Config& c, const std::string& v) {
              c.lf_sh_degree = int(to_int("lightfield.sh_degree", v, 0, 3));
          },
          [](const Config& c) { return std::to_string(c.lf_sh_degree); }}},
        {"lightfield.lambertian",
         {[](Config& c, const std::string& v) {
              c.lf_lambertian = to_bool("lightfield.lambertian", v);
          },
          [](const Config& c) { return c.lf_lambertian ? "true" : "false"; }}},
        {"render.n_samples",
         {[](Config& c, const std::string& v) {
              c.render_n_samples = int(to_int("render.n_samples", v, 1, 4096));
          },
          [](const Config& c) { return std::to_string(c.render_n_samples); }}},
        {"render.stratified",
         {[](Config& c, const std::string& v) {
              c.render_stratified = to_bool("render.stratified", v);
          },
          [](const Config& c) { return c.render_stratified ? "true" : "false"; }}},
        {"render.background",
         {[](Config& c, const std::string& v) { c.render_background = to_vec3("render.background", v); },
          [](const Config& c) { return fmt(c.render_background); }}},
        {"render.weight_cutoff",
         {[](Config& c, const std::string& v) {
              c.render_weight_cutoff = to_double("render.weight_cutoff", v, 0.0, 1.0);
          },
          [](const Config& c) { return fmt(c.render_weight_cutoff); }}},
        {"render.max_shaded",
         {[](Config& c, const std::string& v) {
              c.render_max_shaded = int(to_int("render.max_shaded", v, 0, 4096));
          },
          [](const Config& c) { return std::to_string(c.render_max_shaded); }}},
        {"render.tr_cutoff",
         {[](Config& c, const std::string& v) {
              c.render_tr_cutoff = to_double("render.tr_cutoff", v, 0.0, 1.0);
          },
          [](const Config& c) { return fmt(c.render_tr_cutoff); }}},
        {"render.dsm_opacity_threshold",
         {[](Config& c, const std::string& v) {
              c.render_dsm_opacity = to_double("render.dsm_opacity_threshold", v, 0.0, 1.0);
          },
          [](const Config& c) { return fmt(c.render_dsm_opacity); }}},
        {"loss.w_rgb",
         {[](Config& c, const std::string& v) { c.loss.rgb = to_double("loss.w_rgb", v, 0, 1e6); },
          [](const Config& c) { return fmt(c.loss.rgb); }}},
        {"loss.w_tv",
         {[](Config& c, const std::string& v) { c.loss.tv = to_double("loss.w_tv", v, 0, 1e6); },
          [](const Config& c) { return fmt(c.loss.tv); }}},
        {"loss.w_normal",
         {[](Config& c, const std::string& v) {
              c.loss.normal = to_double("loss.w_normal", v, 0, 1e6);
          },
          [](const Config& c) { return fmt(c.loss.normal); }}},
        {"loss.w_lamb",
         {[](Config& c, const std::string& v) { c.loss.lamb = to_double("loss.w_lamb", v, 0, 1e6); },
          [](const Config& c) { return fmt(c.loss.lamb); }}},
        {"loss.w_ds",
         {[](Config& c, const std::string& v) { c.loss.ds = to_double("loss.w_ds", v, 0, 1e6); },
          [](const Config& c) { return fmt(c.loss.ds); }}},
        {"loss.w_l1",
         {[](Config& c, const std::string& v) { c.loss.l1 = to_double("loss.w_l1", v, 0, 1e6); },
          [](const Config& c) { return fmt(c.loss.l1); }}},
        {"loss.tv_all_planes",
         {[](Config& c, const std::string& v) {
              c.loss.tv_all_planes = to_bool("loss.tv_all_planes", v);
          },
          [](const Config& c) { return c.loss.tv_all_planes ? "true" : "false"; }}},
        {"optim.lr_tensor",
         {[](Config& c, const std::string& v) {
              c.optim_lr_tensor = to_double("optim.lr_tensor", v, 0, 1.0);
          },
          [](const Config& c) { return fmt(c.optim_lr_tensor); }}},
        {"optim.lr_mlp",
         {[](Config& c, const std::string& v) {
              c.optim_lr_mlp = to_double("optim.lr_mlp", v, 0, 1.0);
          },
          [](const Config& c) { return fmt(c.optim_lr_mlp); }}},
        {"optim.steps",
         {[](Config& c, const std::string& v) {
              c.optim_steps = int(to_int("optim.steps", v, 0, 100000000));
          },
          [](const Config& c) { return std::to_string(c.optim_steps); }}},
        {"optim.batch",
         {[](Config& c, const std::string& v) {
              c.optim_batch = int(to_int("optim.batch", v, 1, 1 << 22));
          },
          [](const Config& c) { return std::to_string(c.optim_batch); }}},
        {"optim.lr_floor",
         {[](Config& c, const std::string& v) {
              c.optim_lr_floor = to_double("optim.lr_floor", v, 1e-6, 1.0);
          },
          [](const Config& c) { return fmt(c.optim_lr_floor); }}},
        {"train.val_every",
         {[](Config& c, const std::string& v) {
              c.train_val_every = int(to_int("train.val_every", v, 1, 100000000));
          },
          [](const Config& c) { return std::to_string(c.train_val_every); }}},
    };
    return table;
}

}  // namespace

Config parse_config(const std::string& text) {
    Config cfg;
    std::map<std::string, const KeySpec*> lookup;
    for (const auto& [key, spec] : key_table()) lookup[key] = &spec;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t\r\n");
            if (a == std::string::npos) return std::string();
            const auto b = v.find_last_not_of(" \t\r\n");
            return v.substr(a, b - a + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = lookup.find(key);
        if (it == lookup.end())
            throw std::invalid_argument("config: unknown key '" + key + "'");
        it->second->set(cfg, value);
    }
    if (cfg.field_base_res > cfg.field_max_res)
        throw std::invalid_argument("config: field.base_res must be <= field.max_res");
    return cfg;
}

std::string serialize_config(const Config& cfg) {
    std::ostringstream out;
    for (const auto& [key, spec] : key_table()) out << key << " = " << spec.get(cfg) << "\n";
    return out.str();
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void save_config(const Config& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << serialize_config(cfg);
}

RenderOptions exact_render_options(const Config& cfg) {
    RenderOptions opts;
    opts.n_samples = cfg.render_n_samples;
    opts.stratified = false;
    opts.background = cfg.render_background;
    opts.weight_cutoff = 0.0;
    opts.max_shaded = 0;
    opts.tr_cutoff = 0.0;
    return opts;
}

RenderOptions train_render_options(const Config& cfg) {
    RenderOptions opts;
    opts.n_samples = cfg.render_n_samples;
    opts.stratified = cfg.render_stratified;
    opts.background = cfg.render_background;
    opts.weight_cutoff = cfg.render_weight_cutoff;
    opts.max_shaded = cfg.render_max_shaded;
    opts.tr_cutoff = cfg.render_tr_cutoff;
    return opts;
}

LossWeights loss_weights(const Config& cfg) { return cfg.loss; }

template <class Real>
Model<Real> build_model(const Config& cfg, const SceneBounds& bounds) {
    bounds.validate();
    Model<Real> model;
    model.bounds = bounds;
    const Decomp decomp = cfg.field_decomp == "vm" ? Decomp::VM : Decomp::CP;
    const auto res = level_resolutions(cfg.field_base_res, cfg.field_max_res, cfg.field_levels);

    // Independent deterministic streams per component.
    Rng rng_sigma(cfg.seed, 1), rng_ref(cfg.seed, 2), rng_camb(cfg.seed, 3),
        rng_lamb(cfg.seed, 4), rng_mlp(cfg.seed, 5);

    model.sigma_field = make_field<Real>(decomp, Aggregation::Mean, Activation::Softplus, res,
                                         cfg.field_rank, cfg.field_channels, rng_sigma);
    model.ref_field = make_field<Real>(decomp, Aggregation::Concat, Activation::None, res,
                                       cfg.field_rank, cfg.field_channels, rng_ref);
    const std::vector<int> amb_res = {cfg.ambient_res};
    model.c_amb_field = make_field<Real>(decomp, Aggregation::Mean, Activation::Sigmoid, amb_res,
                                         cfg.ambient_rank, 3, rng_camb);
    model.lambda_amb_field = make_field<Real>(decomp, Aggregation::Mean, Activation::Sigmoid,
                                              amb_res, cfg.ambient_rank, 2, rng_lamb);

    const int feature_in = cfg.field_levels * cfg.field_channels;
    model.lightfield = make_lightfield<Real>(
        feature_in, cfg.lf_head_a_layers, cfg.lf_head_a_width, cfg.lf_head_bd_width, cfg.lf_lobes,
        cfg.lf_feature_dim, cfg.lf_decoder == "asg" ? DecoderKind::Asg : DecoderKind::Sh,
        cfg.lf_sh_degree, cfg.lf_lambertian, rng_mlp);
    return model;
}

template Model<float> build_model<float>(const Config&, const SceneBounds&);
template Model<double> build_model<double>(const Config&, const SceneBounds&);

}  // namespace strf
