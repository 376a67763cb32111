#pragma once

#include <optional>
#include <string>

#include "gpinn/embedding.hpp"
#include "gpinn/mesh.hpp"
#include "gpinn/optim.hpp"
#include "gpinn/problems.hpp"
#include "gpinn/reference.hpp"

namespace gpinn {

/// One end-to-end experiment: geometry, problem, network, optimizer and
/// sampling settings. Everything is serializable to JSON so a run directory
/// carries its own provenance.
struct ExperimentConfig {
    std::string problem = "heat";         // heat | elasticity
    std::string mode = "pinn";            // pinn | gpinn
    std::string geometry = "unit_square"; // unit_square | house | crack_plate
    std::string mesh_file;                // when set, loaded instead of generated
    GeometryConfig geo;

    // heat problem
    std::string source_kind = "disc"; // disc | manufactured_sines | none
    double source_magnitude = 1.0;
    double dirichlet_value = 0.0;
    double neumann_value = 0.0;

    ElasticityProblemSpec elasticity;

    std::vector<int> hidden = {64, 64, 64};
    std::uint64_t seed = 1;

    double adam_lr = 1e-3;
    int adam_iterations = 20000;
    int lbfgs_iterations = 0;
    double tol = 0.0;
    int patience = 100;

    BatchCounts counts;
    int resample_every = 500;
    LossWeights weights;
    DiffMode diff_mode = DiffMode::frozen;

    std::string out_dir = "run";
    bool echo_log = false;

    // parity-test hooks: zero the embedding values / the z-input weight column
    bool zero_embedding = false;
    bool zero_z_weights = false;

    std::vector<int> layer_sizes() const;
    int output_components() const { return problem == "elasticity" ? 2 : 1; }
};

ExperimentConfig experiment_from_json_file(const std::string& path);
ExperimentConfig experiment_from_json_string(const std::string& text);
std::string experiment_to_json_string(const ExperimentConfig& config);

struct RunResult {
    Network net;
    std::vector<HistoryRow> history;
    LossBreakdown final_loss;
    std::string run_dir;
    bool embedding_cache_hit = false;
    std::shared_ptr<const Mesh> mesh;
    std::optional<EmbeddingField> field;
};

// Deterministic given the config: builds (or loads) the mesh, computes the
// embedding once per geometry (cached by mesh hash), trains Adam then
// optionally L-BFGS on a frozen final batch, and writes config.json,
// mesh.json, embedding.json, history.csv, checkpoint.json and fields/ into
// the run directory.
RunResult run_experiment(const ExperimentConfig& config);

std::uint64_t mesh_hash(const Mesh& mesh);
std::string embedding_cache_dir(const ExperimentConfig& config);

// Embedding with cache-aside semantics; `cache_hit` reports whether the
// eigensolve was skipped.
EmbeddingField embedding_for_mesh(std::shared_ptr<const Mesh> mesh, const std::string& cache_dir,
                                  DiffMode mode, bool* cache_hit, std::string* log_line);

struct RunHandle {
    ExperimentConfig config;
    Network net;
    std::shared_ptr<const Mesh> mesh;
    std::optional<EmbeddingField> field;
};

RunHandle load_run(const std::string& run_dir);

// Candidate field of a trained run (adds the z input for gpinn runs).
FieldFunction run_field_function(const RunHandle& run);

struct ComparisonReport {
    ErrorReport a, b;
    Eigen::VectorXd re_difference; // norm-variant RE(a) - RE(b) per point
};

ComparisonReport compare_runs(const RunHandle& a, const RunHandle& b, const FieldSolution& ref,
                              const Eigen::MatrixXd& points);

void save_comparison_csv(const ComparisonReport& report, const std::string& path);
void save_error_report_json(const ErrorReport& report, const std::string& path);

// Regular nx x ny grid over the mesh bounding box, row-major from the lower
// left; values outside the domain are the clamped nearest-element extension.
void export_grid_csv(const RunHandle& run, int nx, int ny, const std::string& path);

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);
void save_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

} // namespace gpinn
