// gpinn: mesh generation, Fiedler embedding, PINN/GPINN training and
// evaluation against the built-in FEM references.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gpinn/graph.hpp"
#include "gpinn/training.hpp"

namespace fs = std::filesystem;
using namespace gpinn;

namespace {

struct CommandResult {
    int exit_code = 0;
    std::string summary;
    std::vector<std::string> paths_written;
};

Vec2 parse_vec2(const std::string& s) {
    std::istringstream ss(s);
    double x, y;
    char comma;
    if (!(ss >> x >> comma >> y) || comma != ',')
        throw UserError("expected 'x,y' but got '" + s + "'");
    return {x, y};
}

std::pair<int, int> parse_grid(const std::string& s) {
    auto sep = s.find('x');
    if (sep == std::string::npos) throw UserError("expected 'NxM' but got '" + s + "'");
    int nx = std::stoi(s.substr(0, sep));
    int ny = std::stoi(s.substr(sep + 1));
    if (nx < 1 || ny < 1) throw UserError("grid sizes must be >= 1");
    return {nx, ny};
}

Eigen::MatrixXd points_from_spec(const std::string& spec, const Mesh& mesh) {
    if (spec.rfind("grid:", 0) == 0) {
        auto [nx, ny] = parse_grid(spec.substr(5));
        Eigen::Vector4d bb = mesh.bounding_box();
        Eigen::MatrixXd pts(2, static_cast<Eigen::Index>(nx) * ny);
        int k = 0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                double x = nx > 1 ? bb[0] + (bb[2] - bb[0]) * ix / (nx - 1) : bb[0];
                double y = ny > 1 ? bb[1] + (bb[3] - bb[1]) * iy / (ny - 1) : bb[1];
                pts.col(k++) = Vec2(x, y);
            }
        return pts;
    }
    if (spec.rfind("file:", 0) == 0) {
        std::ifstream in(spec.substr(5));
        if (!in) throw UserError("file not found: '" + spec.substr(5) + "'");
        std::vector<Vec2> pts;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            double x, y;
            char comma;
            if (ss >> x >> comma >> y) pts.emplace_back(x, y);
        }
        if (pts.empty()) throw UserError("no points parsed from '" + spec.substr(5) + "'");
        Eigen::MatrixXd out(2, pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) out.col(i) = pts[i];
        return out;
    }
    throw UserError("points must be 'grid:NxN' or 'file:<path>'");
}

CommandResult dispatch(int argc, char** argv) {
    CLI::App app{"Physics-informed neural networks with a Fiedler-vector graph embedding"};
    app.require_subcommand(1);

    // --- mesh-gen ---
    auto* mesh_gen = app.add_subcommand("mesh-gen", "generate a built-in domain mesh");
    std::string kind = "unit_square", mesh_out = "mesh.json";
    GeometryConfig geo;
    std::string source_center, crack_tip, window, crack_mouth = "left";
    mesh_gen->add_option("--kind", kind, "house | crack_plate | unit_square");
    mesh_gen->add_option("--h", geo.h, "target element size");
    mesh_gen->add_option("--out", mesh_out, "output mesh JSON path");
    mesh_gen->add_option("--house-side", geo.house_side);
    mesh_gen->add_option("--wall-thickness", geo.wall_thickness);
    mesh_gen->add_option("--source-center", source_center, "x,y");
    mesh_gen->add_option("--source-radius", geo.source_radius);
    mesh_gen->add_option("--window", window, "x0,x1 on the bottom edge");
    mesh_gen->add_option("--plate-width", geo.plate_width);
    mesh_gen->add_option("--plate-height", geo.plate_height);
    mesh_gen->add_option("--crack-tip", crack_tip, "x,y");
    mesh_gen->add_option("--crack-mouth", crack_mouth, "left | right | bottom | top");
    mesh_gen->add_option("--tip-refinement", geo.tip_refinement,
                         "grade lines near the tip down to h/this");

    // --- embed ---
    auto* embed = app.add_subcommand("embed", "Fiedler pair of the mesh graph");
    std::string embed_mesh, embed_out = "embedding.json";
    double embed_tol = 1e-10;
    bool embed_normalized = false;
    embed->add_option("--mesh", embed_mesh, "mesh file (.json or .msh)")->required();
    embed->add_option("--tol", embed_tol, "eigensolver tolerance");
    embed->add_option("--out", embed_out, "output JSON path");
    embed->add_flag("--normalized", embed_normalized, "also emit the [-1,1]-normalized field");

    // --- train ---
    auto* train = app.add_subcommand("train", "run a PINN/GPINN experiment");
    std::string train_config;
    bool echo = false;
    train->add_option("--config", train_config, "experiment config JSON")->required();
    train->add_flag("--echo", echo, "echo the run log to stdout");

    // --- evaluate ---
    auto* evaluate_cmd = app.add_subcommand("evaluate", "relative error against a reference field");
    std::string eval_run, eval_run_b, eval_reference, eval_points = "grid:64x64", eval_out;
    evaluate_cmd->add_option("--run", eval_run, "run directory")->required();
    evaluate_cmd->add_option("--run-b", eval_run_b, "second run directory (side-by-side compare)");
    evaluate_cmd->add_option("--reference", eval_reference, "reference field JSON")->required();
    evaluate_cmd->add_option("--points", eval_points, "grid:NxN or file:<csv>");
    evaluate_cmd->add_option("--out", eval_out, "output path prefix");

    // --- export ---
    auto* export_cmd = app.add_subcommand("export", "sample a trained run on a regular grid");
    std::string export_run, export_grid = "128x128", export_out = "export.csv";
    export_cmd->add_option("--run", export_run, "run directory")->required();
    export_cmd->add_option("--grid", export_grid, "NxM");
    export_cmd->add_option("--out", export_out, "output CSV path");

    CommandResult result;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        result.exit_code = app.exit(e);
        return result;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        result.exit_code = 1;
        result.summary = "argument error";
        return result;
    }

    if (mesh_gen->parsed()) {
        if (!source_center.empty()) geo.source_center = parse_vec2(source_center);
        if (!crack_tip.empty()) geo.crack_tip = parse_vec2(crack_tip);
        if (!window.empty()) {
            auto sep = window.find(',');
            if (sep == std::string::npos) throw UserError("--window expects x0,x1");
            geo.window_x0 = std::stod(window.substr(0, sep));
            geo.window_x1 = std::stod(window.substr(sep + 1));
        }
        if (crack_mouth == "left") geo.crack_mouth = CrackMouth::left;
        else if (crack_mouth == "right") geo.crack_mouth = CrackMouth::right;
        else if (crack_mouth == "bottom") geo.crack_mouth = CrackMouth::bottom;
        else if (crack_mouth == "top") geo.crack_mouth = CrackMouth::top;
        else throw UserError("unknown crack mouth '" + crack_mouth + "'");

        Mesh mesh = generate_domain(geo, kind);
        save_mesh_json(mesh, mesh_out);
        result.summary = kind + " mesh: " + std::to_string(mesh.n_nodes()) + " nodes, " +
                         std::to_string(mesh.n_elements()) + " elements";
        result.paths_written.push_back(mesh_out);
        return result;
    }

    if (embed->parsed()) {
        Mesh mesh = load_mesh(embed_mesh);
        SpectralPair pair = fiedler(graph_from_mesh(mesh), embed_tol);
        nlohmann::json j;
        j["lambda2"] = pair.lambda2;
        j["fiedler"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < pair.fiedler.size(); ++i) j["fiedler"].push_back(pair.fiedler[i]);
        if (pair.degenerate) {
            j["degenerate_spectrum_warning"] = true;
            std::cerr << "warning: degenerate spectrum (lambda3 - lambda2 < tol); "
                         "the Fiedler vector is not unique\n";
        }
        if (embed_normalized) {
            auto mesh_ptr = std::make_shared<Mesh>(std::move(mesh));
            EmbeddingField field = build_embedding(mesh_ptr, pair);
            j["node_values"] = nlohmann::json::array();
            for (Eigen::Index i = 0; i < field.node_values.size(); ++i)
                j["node_values"].push_back(field.node_values[i]);
            j["normalization"] = {{"scale", field.normalization.scale},
                                  {"offset", field.normalization.offset}};
        }
        std::ofstream out(embed_out);
        if (!out) throw UserError("cannot open '" + embed_out + "' for writing");
        out << j.dump() << "\n";
        std::ostringstream ss;
        ss << "lambda2 = " << pair.lambda2;
        result.summary = ss.str();
        result.paths_written.push_back(embed_out);
        return result;
    }

    if (train->parsed()) {
        ExperimentConfig config = experiment_from_json_file(train_config);
        config.echo_log = echo;
        RunResult run = run_experiment(config);
        std::ostringstream ss;
        ss << "trained " << config.mode << "/" << config.problem << ": final loss "
           << run.final_loss.total << " over " << run.history.size() << " iterations";
        result.summary = ss.str();
        result.paths_written.push_back(run.run_dir);
        return result;
    }

    if (evaluate_cmd->parsed()) {
        RunHandle run = load_run(eval_run);
        FieldSolution ref = load_field_json(eval_reference);
        Eigen::MatrixXd points = points_from_spec(eval_points, *ref.mesh);
        std::string prefix = eval_out.empty() ? eval_run + "/evaluation" : eval_out;
        if (!eval_run_b.empty()) {
            RunHandle run_b = load_run(eval_run_b);
            ComparisonReport cmp = compare_runs(run, run_b, ref, points);
            save_error_report_json(cmp.a, prefix + "_a.json");
            save_error_report_json(cmp.b, prefix + "_b.json");
            save_comparison_csv(cmp, prefix + ".csv");
            std::ostringstream ss;
            ss << "A: mean RE " << cmp.a.norm.mean << ", max " << cmp.a.norm.max << " | B: mean RE "
               << cmp.b.norm.mean << ", max " << cmp.b.norm.max;
            result.summary = ss.str();
            result.paths_written = {prefix + "_a.json", prefix + "_b.json", prefix + ".csv"};
        } else {
            ErrorReport report = relative_error(run_field_function(run), ref, points, eval_points);
            save_error_report_json(report, prefix + ".json");
            std::ostringstream ss;
            ss << "mean RE " << report.norm.mean << ", max RE " << report.norm.max;
            result.summary = ss.str();
            result.paths_written = {prefix + ".json"};
        }
        return result;
    }

    if (export_cmd->parsed()) {
        RunHandle run = load_run(export_run);
        auto [nx, ny] = parse_grid(export_grid);
        export_grid_csv(run, nx, ny, export_out);
        result.summary = "exported " + std::to_string(nx * ny) + " grid samples";
        result.paths_written.push_back(export_out);
        return result;
    }

    result.exit_code = 1;
    result.summary = "no subcommand";
    return result;
}

} // namespace

int main(int argc, char** argv) {
    CommandResult result;
    try {
        result = dispatch(argc, argv);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (!result.summary.empty()) std::cout << result.summary << "\n";
    for (const auto& p : result.paths_written) std::cout << "wrote " << p << "\n";
    return result.exit_code;
}
