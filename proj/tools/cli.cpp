#include "cli.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuzzreg/camera.hpp"
#include "fuzzreg/config.hpp"
#include "fuzzreg/error.hpp"
#include "fuzzreg/io.hpp"
#include "fuzzreg/metrics.hpp"
#include "fuzzreg/registration.hpp"
#include "fuzzreg/voxelizer.hpp"

namespace fuzzreg {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flags that map one-to-one onto config keys.
struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> values;  // key, value (filled by callbacks)
};

void add_config_flags(CLI::App* sub, ConfigFlags& f, bool with_mode) {
    sub->add_option("--config", f.config_path, "key = value parameter file; flags override it");
    sub->add_option("--set", f.sets, "extra key=value overrides (repeatable)");
    const auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&f, key](const std::string& v) { f.values.emplace_back(key, v); }, help);
    };
    if (with_mode) bind("--mode", "mode", "rigid | similarity");
    bind("--sigma0", "sigma0", "initial kernel width (unit-cube units)");
    bind("--sigma-final", "sigma_final", "final kernel width");
    bind("--sigma-factor", "sigma_factor", "ladder factor");
    bind("--alpha", "alpha", "proximity weight");
    bind("--k", "k", "sigmoid steepness");
    bind("--seed", "seed", "subsampling seed");
    bind("--truncation", "truncation", "exact | cutoff");
    bind("--backend", "backend", "parallel | serial");
}

RunConfig build_config(const ConfigFlags& f) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : RunConfig::from_file(f.config_path);
    try {
        for (const auto& [k, v] : f.values) cfg.set(k, v);
        for (const auto& kv : f.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
    } catch (const InvalidParameter& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

// Positional value, else the config key, else a usage error.
std::string need_path(const std::string& given, const RunConfig& cfg, const std::string& key) {
    if (!given.empty()) return given;
    if (auto v = cfg.get(key)) return *v;
    throw UsageError("missing " + key);
}

RegistrationOptions options_or_usage(const RunConfig& cfg) {
    try {
        return cfg.registration_options();
    } catch (const InvalidParameter& e) {
        throw UsageError(e.what());
    }
}

TransformProvenance provenance(const RunConfig& cfg, const RegistrationResult& r) {
    TransformProvenance p;
    p.config = cfg.echo();
    p.levels = r.levels;
    p.has_result = true;
    p.converged = r.converged;
    p.degenerate = r.degenerate;
    return p;
}

void emit_transform(const std::string& out_path, const SimilarityTransform& theta, const TransformProvenance& prov,
                    std::ostream& out) {
    if (out_path.empty()) {
        out << format_transform(theta, prov);
    } else {
        write_transform(out_path, theta, prov);
    }
}

void summarize(const RegistrationResult& r, std::ostream& err) {
    err << "levels " << r.levels.size() << ", final energy "
        << (r.levels.empty() ? 0.0 : r.levels.back().final_energy) << ", "
        << (r.converged ? "converged" : r.degenerate ? "degenerate" : "not converged") << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fuzzy-correspondence shape registration"};
    app.require_subcommand(1);

    // register
    CLI::App* reg = app.add_subcommand("register", "align a source point set to a target point set");
    std::string reg_source, reg_target, reg_out, reg_init;
    ConfigFlags reg_flags;
    reg->add_option("source", reg_source, "source points (xyz, ply, obj)");
    reg->add_option("target", reg_target, "target points");
    reg->add_option("--out", reg_out, "transform document (stdout when omitted)");
    reg->add_option("--init", reg_init, "initial transform document (default: centroid alignment)");
    add_config_flags(reg, reg_flags, true);

    // register-rays
    CLI::App* rr = app.add_subcommand("register-rays", "align 3D points to camera rays from a pixel mask");
    std::string rr_points, rr_intr, rr_mask, rr_out, rr_init;
    int rr_stride = 0;
    ConfigFlags rr_flags;
    rr->add_option("points", rr_points, "3D points");
    rr->add_option("--intrinsics", rr_intr, "intrinsics key-value file");
    rr->add_option("--mask", rr_mask, "PGM mask, nonzero pixels become rays");
    rr->add_option("--stride", rr_stride, "mask sampling stride")->check(CLI::PositiveNumber);
    rr->add_option("--out", rr_out, "transform document (stdout when omitted)");
    rr->add_option("--init", rr_init, "initial transform document (default: identity)");
    add_config_flags(rr, rr_flags, false);

    // voxelize
    CLI::App* vox = app.add_subcommand("voxelize", "turn a mesh into exterior surface voxel centers");
    std::string vox_mesh, vox_out;
    int vox_res = 0;
    std::string vox_config;
    vox->add_option("mesh", vox_mesh, "mesh (obj, ply)");
    vox->add_option("--resolution", vox_res, "voxels along the largest extent (default 64)")->check(CLI::Range(2, 4096));
    vox->add_option("--out", vox_out, "output points (.xyz or .ply)");
    vox->add_option("--config", vox_config, "key = value parameter file");

    // evaluate
    CLI::App* ev = app.add_subcommand("evaluate", "error metrics");
    std::string ev_est, ev_gt, ev_model, ev_cloud, ev_mesh;
    ev->add_option("--est", ev_est, "estimated transform");
    ev->add_option("--gt", ev_gt, "ground-truth transform");
    ev->add_option("--model", ev_model, "points the transforms act on");
    ev->add_option("--cloud", ev_cloud, "points for cloud-to-mesh distance");
    ev->add_option("--mesh", ev_mesh, "mesh for cloud-to-mesh distance");

    // sweep
    CLI::App* sw = app.add_subcommand("sweep", "rotation robustness sweep");
    std::string sw_model, sw_scene, sw_gt, sw_axis = "x", sw_range = "0:120", sw_registrar = "fuzzy", sw_out,
                                              sw_summary, sw_eval;
    double sw_step = 5.0, sw_noise = 0.0, sw_outliers = 0.0, sw_threshold = 0.0;
    std::size_t sw_trials = 1;
    ConfigFlags sw_flags;
    sw->add_option("model", sw_model, "model (target) points");
    sw->add_option("scene", sw_scene, "scene (source) points");
    sw->add_option("--gt", sw_gt, "transform mapping scene onto model");
    sw->add_option("--axis", sw_axis, "x | y | z")->check(CLI::IsMember({"x", "y", "z"}));
    sw->add_option("--step", sw_step, "step in degrees");
    sw->add_option("--range", sw_range, "min:max in degrees");
    sw->add_option("--registrar", sw_registrar, "fuzzy | icp")->check(CLI::IsMember({"fuzzy", "icp"}));
    sw->add_option("--trials", sw_trials, "trials per angle");
    sw->add_option("--noise", sw_noise, "Gaussian noise, fraction of scene bbox diagonal");
    sw->add_option("--outliers", sw_outliers, "outlier count, fraction of scene size");
    sw->add_option("--threshold", sw_threshold, "success threshold (default 1% of model bbox diagonal)");
    sw->add_option("--eval", sw_eval, "points measuring the error (default: scene)");
    sw->add_option("--out", sw_out, "CSV report");
    sw->add_option("--summary", sw_summary, "JSON summary");
    add_config_flags(sw, sw_flags, true);

    CLI::App* active = &app;
    try {
        app.parse(argc, argv);
        for (CLI::App* s : {reg, rr, vox, ev, sw}) {
            if (s->parsed()) active = s;
        }

        if (reg->parsed()) {
            const RunConfig cfg = build_config(reg_flags);
            if (cfg.mode() == RunMode::Rays) throw UsageError("ray mode needs the register-rays subcommand");
            const std::string src = need_path(reg_source, cfg, "source");
            const std::string tgt = need_path(reg_target, cfg, "target");
            const RegistrationOptions opts = options_or_usage(cfg);
            const std::string out_path = reg_out.empty() ? cfg.get("out").value_or("") : reg_out;

            const PointSet source = read_pointset(src);
            const PointSet target = read_pointset(tgt);
            std::optional<SimilarityTransform> init;
            if (!reg_init.empty()) init = read_transform(reg_init);
            const RegistrationResult r = register_points(source, target, opts, init);
            TransformProvenance prov = provenance(cfg, r);
            prov.config["source"] = src;
            prov.config["target"] = tgt;
            emit_transform(out_path, r.theta, prov, out);
            summarize(r, err);
            return r.converged ? 0 : 1;
        }

        if (rr->parsed()) {
            ConfigFlags flags = rr_flags;
            RunConfig cfg = build_config(flags);
            if (cfg.has("mode") && cfg.mode() != RunMode::Rays) throw UsageError("register-rays is rigid ray mode only");
            cfg.set("mode", "rays");
            const std::string pts_path = need_path(rr_points, cfg, "source");
            const std::string intr_path = need_path(rr_intr, cfg, "intrinsics");
            const std::string mask_path = need_path(rr_mask, cfg, "mask");
            int stride = rr_stride;
            if (stride == 0) stride = cfg.get("stride") ? std::stoi(*cfg.get("stride")) : 1;
            if (stride < 1) throw UsageError("stride must be >= 1");
            const RegistrationOptions opts = options_or_usage(cfg);
            const std::string out_path = rr_out.empty() ? cfg.get("out").value_or("") : rr_out;

            const PointSet points = read_pointset(pts_path);
            const CameraIntrinsics K = read_intrinsics(intr_path);
            const PixelMask mask = read_mask(mask_path);
            const RayBundle rays = mask_to_rays(K, mask, stride);
            const SimilarityTransform init = rr_init.empty() ? SimilarityTransform::identity() : read_transform(rr_init);
            const RegistrationResult r = register_rays(points, rays, opts, init);
            TransformProvenance prov = provenance(cfg, r);
            prov.config["source"] = pts_path;
            prov.config["intrinsics"] = intr_path;
            prov.config["mask"] = mask_path;
            prov.config["stride"] = std::to_string(stride);
            emit_transform(out_path, r.theta, prov, out);
            summarize(r, err);
            return r.converged ? 0 : 1;
        }

        if (vox->parsed()) {
            RunConfig cfg = vox_config.empty() ? RunConfig{} : RunConfig::from_file(vox_config);
            const std::string mesh_path = need_path(vox_mesh, cfg, "mesh");
            const std::string out_path = need_path(vox_out, cfg, "out");
            int res = vox_res;
            PointFormat fmt;
            try {
                if (res == 0) res = cfg.voxel_resolution();  // config value or the default
                fmt = point_format_for(out_path);
            } catch (const InvalidParameter& e) {
                throw UsageError(e.what());
            }
            if (fmt == PointFormat::ObjVertices) throw UsageError("voxelize writes .xyz or .ply");
            const PointSet pts = mesh_to_pointset(read_mesh(mesh_path), res);
            write_pointset(out_path, pts, fmt);
            out << pts.size() << " points\n";
            return 0;
        }

        if (ev->parsed()) {
            const bool vertex_mode = !ev_est.empty() || !ev_gt.empty() || !ev_model.empty();
            const bool mesh_mode = !ev_cloud.empty() || !ev_mesh.empty();
            if (vertex_mode == mesh_mode) throw UsageError("use either --est/--gt/--model or --cloud/--mesh");
            nlohmann::json j;
            if (vertex_mode) {
                if (ev_est.empty() || ev_gt.empty() || ev_model.empty()) throw UsageError("--est, --gt and --model are all required");
                const double d = mean_vertex_distance(read_transform(ev_est), read_transform(ev_gt),
                                                      read_pointset(ev_model));
                j["mean_vertex_distance"] = d;
            } else {
                if (ev_cloud.empty() || ev_mesh.empty()) throw UsageError("--cloud and --mesh are both required");
                const auto d = cloud_to_mesh_distance(read_pointset(ev_cloud), read_mesh(ev_mesh));
                j["mean"] = d.mean;
                j["max"] = d.max;
                j["points"] = d.per_point.size();
            }
            out << j.dump(2) << '\n';
            return 0;
        }

        if (sw->parsed()) {
            const RunConfig cfg = build_config(sw_flags);
            if (cfg.mode() == RunMode::Rays) throw UsageError("sweep works on point targets");
            if (sw_model.empty() || sw_scene.empty()) throw UsageError("model and scene are required");
            if (sw_gt.empty()) throw UsageError("--gt is required");
            const std::string out_path = sw_out.empty() ? cfg.get("out").value_or("") : sw_out;
            if (out_path.empty()) throw UsageError("--out is required");
            SweepSpec spec;
            spec.axis = parse_axis(sw_axis);
            spec.step_degrees = sw_step;
            const auto colon = sw_range.find(':');
            if (colon == std::string::npos) throw UsageError("--range expects min:max");
            try {
                spec.min_degrees = std::stod(sw_range.substr(0, colon));
                spec.max_degrees = std::stod(sw_range.substr(colon + 1));
            } catch (const std::exception&) {
                throw UsageError("--range expects min:max");
            }
            spec.trials = sw_trials;
            spec.noise_fraction = sw_noise;
            spec.outlier_fraction = sw_outliers;
            const RegistrationOptions opts = options_or_usage(cfg);
            spec.seed = opts.schedule.seed;
            try {
                spec.validate();
            } catch (const InvalidParameter& e) {
                throw UsageError(e.what());
            }

            const PointSet model = read_pointset(sw_model);
            const PointSet scene = read_pointset(sw_scene);
            const PointSet eval = sw_eval.empty() ? scene : read_pointset(sw_eval);
            const SimilarityTransform gt = read_transform(sw_gt);

            Registrar registrar;
            if (sw_registrar == "icp") {
                registrar = [](std::span<const Point3> s, std::span<const Point3> t, const SimilarityTransform& th0) {
                    const IcpResult r = icp_baseline(s, t, {}, th0);
                    if (r.failed) throw NumericalFailure("ICP cross-covariance is degenerate");
                    return r.theta;
                };
            } else {
                registrar = [opts](std::span<const Point3> s, std::span<const Point3> t, const SimilarityTransform& th0) {
                    return register_points(s, t, opts, th0).theta;
                };
            }
            const SweepReport report = rotation_sweep(model, scene, gt, eval, spec, registrar, sw_threshold);
            write_sweep_csv(out_path, report);
            std::map<std::string, std::string> info = cfg.echo();
            info["registrar"] = sw_registrar;
            info["axis"] = sw_axis;
            if (!sw_summary.empty()) write_sweep_summary(sw_summary, report, info);
            out << "success_rate " << report.success_rate() << " over " << report.trials.size() << " trials\n";
            return 0;
        }
        throw UsageError("no subcommand");
    } catch (const CLI::CallForHelp&) {
        out << active->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        for (CLI::App* s : {reg, rr, vox, ev, sw}) {
            if (s->parsed()) active = s;
        }
        err << "error: " << e.what() << "\n\n" << active->help();
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << active->help();
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace fuzzreg
