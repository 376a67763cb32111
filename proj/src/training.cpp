#include "gpinn/training.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "gpinn/rng.hpp"

namespace gpinn {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> ExperimentConfig::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(mode == "gpinn" ? 3 : 2);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output_components());
    return sizes;
}

namespace {

json to_json(const GeometryConfig& g) {
    json j;
    j["h"] = g.h;
    j["house_side"] = g.house_side;
    j["wall_thickness"] = g.wall_thickness;
    j["left_wall"] = {g.left_wall_from.x(), g.left_wall_from.y(), g.left_wall_to.x(),
                      g.left_wall_to.y()};
    j["right_wall"] = {g.right_wall_from.x(), g.right_wall_from.y(), g.right_wall_to.x(),
                       g.right_wall_to.y()};
    j["source_center"] = {g.source_center.x(), g.source_center.y()};
    j["source_radius"] = g.source_radius;
    j["window"] = {g.window_x0, g.window_x1};
    j["plate_width"] = g.plate_width;
    j["plate_height"] = g.plate_height;
    j["crack_tip"] = {g.crack_tip.x(), g.crack_tip.y()};
    j["crack_mouth"] = g.crack_mouth == CrackMouth::left     ? "left"
                       : g.crack_mouth == CrackMouth::right  ? "right"
                       : g.crack_mouth == CrackMouth::bottom ? "bottom"
                                                             : "top";
    j["tip_refinement"] = g.tip_refinement;
    return j;
}

GeometryConfig geometry_from_json(const json& j) {
    GeometryConfig g;
    g.h = j.value("h", g.h);
    g.house_side = j.value("house_side", g.house_side);
    g.wall_thickness = j.value("wall_thickness", g.wall_thickness);
    if (j.contains("left_wall")) {
        auto w = j["left_wall"];
        g.left_wall_from = Vec2(w[0], w[1]);
        g.left_wall_to = Vec2(w[2], w[3]);
    }
    if (j.contains("right_wall")) {
        auto w = j["right_wall"];
        g.right_wall_from = Vec2(w[0], w[1]);
        g.right_wall_to = Vec2(w[2], w[3]);
    }
    if (j.contains("source_center"))
        g.source_center = Vec2(j["source_center"][0], j["source_center"][1]);
    g.source_radius = j.value("source_radius", g.source_radius);
    if (j.contains("window")) {
        g.window_x0 = j["window"][0];
        g.window_x1 = j["window"][1];
    }
    g.plate_width = j.value("plate_width", g.plate_width);
    g.plate_height = j.value("plate_height", g.plate_height);
    if (j.contains("crack_tip")) g.crack_tip = Vec2(j["crack_tip"][0], j["crack_tip"][1]);
    if (j.contains("crack_mouth")) {
        std::string m = j["crack_mouth"];
        g.crack_mouth = m == "left"     ? CrackMouth::left
                        : m == "right"  ? CrackMouth::right
                        : m == "bottom" ? CrackMouth::bottom
                                        : CrackMouth::top;
    }
    g.tip_refinement = j.value("tip_refinement", g.tip_refinement);
    return g;
}

} // namespace

std::string experiment_to_json_string(const ExperimentConfig& c) {
    json j;
    j["problem"] = c.problem;
    j["mode"] = c.mode;
    j["geometry"] = c.geometry;
    j["mesh_file"] = c.mesh_file;
    j["geo"] = to_json(c.geo);
    j["source_kind"] = c.source_kind;
    j["source_magnitude"] = c.source_magnitude;
    j["dirichlet_value"] = c.dirichlet_value;
    j["neumann_value"] = c.neumann_value;
    j["elasticity"] = {{"youngs_modulus", c.elasticity.youngs_modulus},
                       {"poisson_ratio", c.elasticity.poisson_ratio},
                       {"model", c.elasticity.model == ElasticModel::plane_stress ? "plane_stress"
                                                                                  : "plane_strain"},
                       {"traction", {c.elasticity.traction[0], c.elasticity.traction[1]}},
                       {"dirichlet_displacement",
                        {c.elasticity.dirichlet_displacement[0],
                         c.elasticity.dirichlet_displacement[1]}},
                       {"dirichlet_mode", c.elasticity.dirichlet_mode == DirichletMode::fix_both
                                              ? "fix_both"
                                              : "fix_y_pin_x"}};
    j["hidden"] = c.hidden;
    j["seed"] = c.seed;
    j["adam_lr"] = c.adam_lr;
    j["adam_iterations"] = c.adam_iterations;
    j["lbfgs_iterations"] = c.lbfgs_iterations;
    j["tol"] = c.tol;
    j["patience"] = c.patience;
    j["counts"] = {{"interior", c.counts.interior},
                   {"data", c.counts.data},
                   {"dirichlet", c.counts.dirichlet},
                   {"neumann", c.counts.neumann},
                   {"quad_domain_order", c.counts.quad_domain_order},
                   {"quad_boundary_order", c.counts.quad_boundary_order}};
    j["resample_every"] = c.resample_every;
    j["weights"] = {{"pde", c.weights.pde},
                    {"data", c.weights.data},
                    {"ic", c.weights.ic},
                    {"bc", c.weights.bc}};
    j["diff_mode"] = to_string(c.diff_mode);
    j["out_dir"] = c.out_dir;
    j["zero_embedding"] = c.zero_embedding;
    j["zero_z_weights"] = c.zero_z_weights;
    return j.dump(2);
}

ExperimentConfig experiment_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config parse failure: ") + e.what());
    }
    ExperimentConfig c;
    c.problem = j.value("problem", c.problem);
    c.mode = j.value("mode", c.mode);
    c.geometry = j.value("geometry", c.geometry);
    c.mesh_file = j.value("mesh_file", c.mesh_file);
    if (j.contains("geo")) c.geo = geometry_from_json(j["geo"]);
    c.source_kind = j.value("source_kind", c.source_kind);
    c.source_magnitude = j.value("source_magnitude", c.source_magnitude);
    c.dirichlet_value = j.value("dirichlet_value", c.dirichlet_value);
    c.neumann_value = j.value("neumann_value", c.neumann_value);
    if (j.contains("elasticity")) {
        const auto& e = j["elasticity"];
        c.elasticity.youngs_modulus = e.value("youngs_modulus", c.elasticity.youngs_modulus);
        c.elasticity.poisson_ratio = e.value("poisson_ratio", c.elasticity.poisson_ratio);
        if (e.contains("model"))
            c.elasticity.model = e["model"] == "plane_strain" ? ElasticModel::plane_strain
                                                              : ElasticModel::plane_stress;
        if (e.contains("traction"))
            c.elasticity.traction = Eigen::Vector2d(e["traction"][0], e["traction"][1]);
        if (e.contains("dirichlet_displacement"))
            c.elasticity.dirichlet_displacement = Eigen::Vector2d(
                e["dirichlet_displacement"][0], e["dirichlet_displacement"][1]);
        if (e.contains("dirichlet_mode"))
            c.elasticity.dirichlet_mode = e["dirichlet_mode"] == "fix_y_pin_x"
                                              ? DirichletMode::fix_y_pin_x
                                              : DirichletMode::fix_both;
    }
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<int>>();
    c.seed = j.value("seed", c.seed);
    c.adam_lr = j.value("adam_lr", c.adam_lr);
    c.adam_iterations = j.value("adam_iterations", c.adam_iterations);
    c.lbfgs_iterations = j.value("lbfgs_iterations", c.lbfgs_iterations);
    c.tol = j.value("tol", c.tol);
    c.patience = j.value("patience", c.patience);
    if (j.contains("counts")) {
        const auto& k = j["counts"];
        c.counts.interior = k.value("interior", c.counts.interior);
        c.counts.data = k.value("data", c.counts.data);
        c.counts.dirichlet = k.value("dirichlet", c.counts.dirichlet);
        c.counts.neumann = k.value("neumann", c.counts.neumann);
        c.counts.quad_domain_order = k.value("quad_domain_order", c.counts.quad_domain_order);
        c.counts.quad_boundary_order = k.value("quad_boundary_order", c.counts.quad_boundary_order);
    }
    c.resample_every = j.value("resample_every", c.resample_every);
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        c.weights.pde = w.value("pde", c.weights.pde);
        c.weights.data = w.value("data", c.weights.data);
        c.weights.ic = w.value("ic", c.weights.ic);
        c.weights.bc = w.value("bc", c.weights.bc);
    }
    if (j.contains("diff_mode")) c.diff_mode = diff_mode_from_string(j["diff_mode"]);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.zero_embedding = j.value("zero_embedding", c.zero_embedding);
    c.zero_z_weights = j.value("zero_z_weights", c.zero_z_weights);
    return c;
}

ExperimentConfig experiment_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("file not found: '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return experiment_from_json_string(buf.str());
}

std::uint64_t mesh_hash(const Mesh& mesh) {
    // FNV-1a over the raw geometry and connectivity bytes
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* data, std::size_t size) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& p : mesh.nodes) {
        double xy[2] = {p.x(), p.y()};
        mix_bytes(xy, sizeof xy);
    }
    for (const auto& t : mesh.elements) mix_bytes(t.data(), sizeof(int) * 3);
    for (const auto& be : mesh.boundary_edges) {
        int rec[3] = {be.a, be.b, static_cast<int>(be.tag)};
        mix_bytes(rec, sizeof rec);
    }
    return h;
}

std::string embedding_cache_dir(const ExperimentConfig&) {
    if (const char* env = std::getenv("GPINN_CACHE_DIR")) return env;
    return ".gpinn_cache";
}

EmbeddingField embedding_for_mesh(std::shared_ptr<const Mesh> mesh, const std::string& cache_dir,
                                  DiffMode mode, bool* cache_hit, std::string* log_line) {
    std::uint64_t key = mesh_hash(*mesh);
    std::ostringstream name;
    name << "embedding_" << std::hex << key << ".json";
    fs::path path = fs::path(cache_dir) / name.str();

    if (fs::exists(path)) {
        std::ifstream in(path);
        json j;
        in >> j;
        if (j.value("mesh_hash", std::string()) == std::to_string(key)) {
            EmbeddingField field;
            field.mesh = std::move(mesh);
            field.mode = mode;
            field.normalization.scale = j["normalization"]["scale"];
            field.normalization.offset = j["normalization"]["offset"];
            const auto& vals = j["node_values"];
            field.node_values.resize(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) field.node_values[i] = vals[i];
            if (field.node_values.size() == field.mesh->n_nodes()) {
                if (cache_hit) *cache_hit = true;
                if (log_line) *log_line = "embedding: cache hit " + name.str();
                return field;
            }
        }
    }

    SpectralPair pair = fiedler(graph_from_mesh(*mesh));
    EmbeddingField field = build_embedding(mesh, pair, mode);
    if (cache_hit) *cache_hit = false;
    if (log_line) {
        std::ostringstream ss;
        ss << "embedding: computed lambda2=" << pair.lambda2 << " in " << pair.iterations
           << " iterations" << (pair.degenerate ? " (degenerate spectrum warning)" : "")
           << ", cached as " << name.str();
        *log_line = ss.str();
    }

    fs::create_directories(cache_dir);
    json j;
    j["mesh_hash"] = std::to_string(key);
    j["lambda2"] = pair.lambda2;
    j["lambda3_estimate"] = pair.lambda3_estimate;
    j["degenerate"] = pair.degenerate;
    j["normalization"] = {{"scale", field.normalization.scale},
                          {"offset", field.normalization.offset}};
    j["node_values"] = json::array();
    for (Eigen::Index i = 0; i < field.node_values.size(); ++i)
        j["node_values"].push_back(field.node_values[i]);
    std::ofstream out(path);
    out << j.dump() << "\n";
    return field;
}

void save_checkpoint(const Network& net, const std::string& path) {
    json j;
    j["layer_sizes"] = net.layer_sizes;
    j["activation"] = "tanh";
    j["seed"] = net.seed;
    j["parameters"] = json::array();
    for (Eigen::Index i = 0; i < net.params.size(); ++i) j["parameters"].push_back(net.params[i]);
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << j.dump() << "\n";
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("file not found: '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint parse failure: ") + e.what());
    }
    Network net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    net.seed = j.value("seed", 0ULL);
    const auto& params = j.at("parameters");
    if (static_cast<int>(params.size()) != parameter_count(net.layer_sizes))
        throw ParseError("checkpoint parameter count mismatch");
    net.params.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) net.params[i] = params[i];
    return net;
}

void save_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << "iteration,total,pde,data,ic,bc\n";
    char buf[160];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.iteration,
                      row.loss.total, row.loss.pde, row.loss.data, row.loss.ic, row.loss.bc);
        out << buf;
    }
}

namespace {

HeatProblemSpec heat_spec_from_config(const ExperimentConfig& c) {
    HeatProblemSpec spec;
    if (c.source_kind == "disc") {
        spec = disc_source_spec(c.geo.source_center, c.geo.source_radius, c.source_magnitude,
                                c.dirichlet_value, c.neumann_value);
    } else if (c.source_kind == "manufactured_sines") {
        ManufacturedPoisson m = manufactured_poisson("sines");
        spec.source = m.f;
        spec.dirichlet_value = m.dirichlet_value;
        spec.neumann_value = 0.0;
    } else if (c.source_kind == "none") {
        spec.dirichlet_value = c.dirichlet_value;
        spec.neumann_value = c.neumann_value;
    } else {
        throw UserError("unknown source_kind '" + c.source_kind + "'");
    }
    return spec;
}

std::shared_ptr<const Mesh> mesh_from_config(const ExperimentConfig& c) {
    if (!c.mesh_file.empty()) return std::make_shared<Mesh>(load_mesh(c.mesh_file));
    return std::make_shared<Mesh>(generate_domain(c.geo, c.geometry));
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    fs::create_directories(fs::path(config.out_dir) / "fields");
    std::ofstream log(fs::path(config.out_dir) / "run.log");
    auto log_line = [&](const std::string& line) {
        log << line << "\n";
        if (config.echo_log) std::cout << line << "\n";
    };

    {
        std::ofstream cfg(fs::path(config.out_dir) / "config.json");
        cfg << experiment_to_json_string(config) << "\n";
    }

    RunResult result;
    result.run_dir = config.out_dir;
    result.mesh = mesh_from_config(config);
    log_line("mesh: " + std::to_string(result.mesh->n_nodes()) + " nodes, " +
             std::to_string(result.mesh->n_elements()) + " elements");
    save_mesh_json(*result.mesh, (fs::path(config.out_dir) / "mesh.json").string());

    if (config.mode == "gpinn") {
        std::string line;
        bool hit = false;
        EmbeddingField field = embedding_for_mesh(result.mesh, embedding_cache_dir(config),
                                                  config.diff_mode, &hit, &line);
        log_line(line);
        result.embedding_cache_hit = hit;
        if (config.zero_embedding) field.node_values.setZero();
        result.field = std::move(field);
        json j;
        j["node_values"] = json::array();
        for (Eigen::Index i = 0; i < result.field->node_values.size(); ++i)
            j["node_values"].push_back(result.field->node_values[i]);
        j["normalization"] = {{"scale", result.field->normalization.scale},
                              {"offset", result.field->normalization.offset}};
        std::ofstream out(fs::path(config.out_dir) / "embedding.json");
        out << j.dump() << "\n";
    } else if (config.mode != "pinn") {
        throw UserError("unknown mode '" + config.mode + "' (pinn or gpinn)");
    }

    Network net = init_network(config.layer_sizes(), config.seed);
    if (config.zero_z_weights && config.mode == "gpinn") {
        // zero the weight column of the z input (layout: column-major W0)
        Eigen::VectorXd& p = net.params;
        int rows = config.layer_sizes()[1];
        for (int r = 0; r < rows; ++r) p[2 * rows + r] = 0.0;
    }

    const EmbeddingField* field_ptr = result.field ? &*result.field : nullptr;
    Network work = net;

    const bool is_heat = config.problem == "heat";
    if (!is_heat && config.problem != "elasticity")
        throw UserError("unknown problem '" + config.problem + "'");

    HeatProblemSpec heat_spec;
    std::optional<Vec2> pin;
    if (is_heat) {
        heat_spec = heat_spec_from_config(config);
    } else if (config.elasticity.dirichlet_mode == DirichletMode::fix_y_pin_x) {
        pin = pin_anchor_point(*result.mesh);
    }

    const SamplingStrategy strategy =
        is_heat ? SamplingStrategy::uniform_random : SamplingStrategy::quadrature;

    CollocationBatch batch;
    int batch_epoch = -1;
    auto ensure_batch = [&](int iteration) {
        int epoch = config.resample_every > 0 ? iteration / config.resample_every : 0;
        if (epoch == batch_epoch) return;
        batch = sample_batch(*result.mesh, config.counts,
                             derive_seed(config.seed, seed_purpose::batch, epoch), strategy);
        batch_epoch = epoch;
    };

    LossProvider provider = [&](const Eigen::VectorXd& params, Eigen::VectorXd& grad,
                                int iteration) {
        ensure_batch(iteration);
        work.params = params;
        return is_heat ? heat_loss_grad(work, field_ptr, batch, heat_spec, config.weights, grad)
                       : energy_loss_grad(work, field_ptr, batch, config.elasticity,
                                          config.weights, grad, pin);
    };

    OptimizeOptions adam_opt;
    adam_opt.method = OptMethod::adam;
    adam_opt.adam.learning_rate = config.adam_lr;
    adam_opt.budget = config.adam_iterations;
    adam_opt.tol = config.tol;
    adam_opt.patience = config.patience;

    auto [after_adam, adam_history] = optimize(net, provider, adam_opt);
    result.net = after_adam;
    result.history = std::move(adam_history);
    log_line("adam: " + std::to_string(result.history.size()) + " iterations, final total=" +
             std::to_string(result.history.empty() ? 0.0 : result.history.back().loss.total));

    if (config.lbfgs_iterations > 0) {
        // L-BFGS refines on the frozen final batch so the line search sees a
        // fixed objective
        const int frozen_iteration = std::max(0, config.adam_iterations - 1);
        ensure_batch(frozen_iteration);
        LossProvider frozen = [&](const Eigen::VectorXd& params, Eigen::VectorXd& grad, int) {
            work.params = params;
            return is_heat ? heat_loss_grad(work, field_ptr, batch, heat_spec, config.weights, grad)
                           : energy_loss_grad(work, field_ptr, batch, config.elasticity,
                                              config.weights, grad, pin);
        };
        OptimizeOptions lbfgs_opt;
        lbfgs_opt.method = OptMethod::lbfgs;
        lbfgs_opt.budget = config.lbfgs_iterations;
        lbfgs_opt.tol = config.tol;
        lbfgs_opt.patience = config.patience;
        lbfgs_opt.iteration_offset = static_cast<int>(result.history.size());
        auto [after_lbfgs, lbfgs_history] = optimize(result.net, frozen, lbfgs_opt);
        result.net = after_lbfgs;
        result.history.insert(result.history.end(), lbfgs_history.begin(), lbfgs_history.end());
        log_line("lbfgs: " + std::to_string(lbfgs_history.size()) + " iterations");
    }

    result.final_loss =
        result.history.empty() ? LossBreakdown{} : result.history.back().loss;

    save_history_csv(result.history, (fs::path(config.out_dir) / "history.csv").string());
    save_checkpoint(result.net, (fs::path(config.out_dir) / "checkpoint.json").string());

    RunHandle handle{config, result.net, result.mesh, result.field};
    export_grid_csv(handle, 64, 64, (fs::path(config.out_dir) / "fields" / "solution.csv").string());
    log_line("done");
    return result;
}

RunHandle load_run(const std::string& run_dir) {
    RunHandle handle;
    handle.config = experiment_from_json_file((fs::path(run_dir) / "config.json").string());
    handle.net = load_checkpoint((fs::path(run_dir) / "checkpoint.json").string());
    handle.mesh =
        std::make_shared<Mesh>(load_mesh((fs::path(run_dir) / "mesh.json").string(), "native-json"));
    if (handle.config.mode == "gpinn") {
        std::ifstream in(fs::path(run_dir) / "embedding.json");
        if (!in) throw UserError("run '" + run_dir + "' is a gpinn run but has no embedding.json");
        json j;
        in >> j;
        EmbeddingField field;
        field.mesh = handle.mesh;
        field.mode = handle.config.diff_mode;
        field.normalization.scale = j["normalization"]["scale"];
        field.normalization.offset = j["normalization"]["offset"];
        const auto& vals = j["node_values"];
        field.node_values.resize(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) field.node_values[i] = vals[i];
        handle.field = std::move(field);
    }
    return handle;
}

FieldFunction run_field_function(const RunHandle& run) {
    const Network* net = &run.net;
    if (run.field) {
        const EmbeddingField* field = &*run.field;
        return [net, field](const Vec2& x) {
            return evaluate(*net, augment(*field, x), 0).value;
        };
    }
    return [net](const Vec2& x) { return evaluate(*net, Eigen::VectorXd(x), 0).value; };
}

ComparisonReport compare_runs(const RunHandle& a, const RunHandle& b, const FieldSolution& ref,
                              const Eigen::MatrixXd& points) {
    if (a.config.problem != b.config.problem)
        throw UserError("compare_runs: mismatched problem kinds ('" + a.config.problem +
                        "' vs '" + b.config.problem + "')");
    ComparisonReport report;
    report.a = relative_error(run_field_function(a), ref, points, "compare");
    report.b = relative_error(run_field_function(b), ref, points, "compare");
    report.re_difference = report.a.norm.pointwise - report.b.norm.pointwise;
    return report;
}

void save_error_report_json(const ErrorReport& report, const std::string& path) {
    json j;
    j["points_descriptor"] = report.points_descriptor;
    auto stats = [](const ErrorStats& s) {
        return json{{"max", s.max}, {"mean", s.mean}, {"l2", s.l2}};
    };
    j["components"] = json::array();
    for (const auto& c : report.components) j["components"].push_back(stats(c));
    j["norm"] = stats(report.norm);
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

void save_comparison_csv(const ComparisonReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << "x,y,re_a,re_b,re_diff\n";
    char buf[200];
    for (Eigen::Index p = 0; p < report.re_difference.size(); ++p) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", report.a.points(0, p),
                      report.a.points(1, p), report.a.norm.pointwise[p],
                      report.b.norm.pointwise[p], report.re_difference[p]);
        out << buf;
    }
}

void export_grid_csv(const RunHandle& run, int nx, int ny, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    Eigen::Vector4d bb = run.mesh->bounding_box();
    const int comps = run.config.output_components();
    out << "x,y";
    for (int c = 0; c < comps; ++c) out << ",value" << c;
    if (run.field) out << ",z";
    out << "\n";

    FieldFunction f = run_field_function(run);
    char buf[64];
    for (int iy = 0; iy < ny; ++iy) {
        double y = ny > 1 ? bb[1] + (bb[3] - bb[1]) * iy / (ny - 1) : bb[1];
        for (int ix = 0; ix < nx; ++ix) {
            double x = nx > 1 ? bb[0] + (bb[2] - bb[0]) * ix / (nx - 1) : bb[0];
            Vec2 p(x, y);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", x, y);
            out << buf;
            Eigen::VectorXd v = f(p);
            for (int c = 0; c < comps; ++c) {
                std::snprintf(buf, sizeof buf, ",%.17g", v[c]);
                out << buf;
            }
            if (run.field) {
                std::snprintf(buf, sizeof buf, ",%.17g", eval_z(*run.field, p));
                out << buf;
            }
            out << "\n";
        }
    }
}

} // namespace gpinn
