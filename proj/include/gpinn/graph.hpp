#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "gpinn/common.hpp"
#include "gpinn/mesh.hpp"

namespace gpinn {

/// Undirected, unweighted graph with its sparse adjacency and degree data.
struct Graph {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges; // deduplicated, a < b, sorted
    Eigen::SparseMatrix<double> adjacency;  // symmetric 0/1, zero diagonal
    Eigen::VectorXi degrees;

    // CSR neighbor lists for traversals
    std::vector<int> adj_offsets;
    std::vector<int> adj_list;
};

Graph graph_from_edges(int n_vertices, std::vector<std::pair<int, int>> edges);
Graph graph_from_mesh(const Mesh& mesh);
Graph make_path_graph(int n);
Graph make_grid_graph(int nx, int ny);

Eigen::SparseMatrix<double> laplacian(const Graph& g);

int connected_components(const Graph& g);

/// The (lambda2, u2) pair. The vector is unit-2-norm, orthogonal to the
/// constant vector, and sign-fixed: the entry of largest magnitude is
/// positive (ties broken by lowest vertex index).
struct SpectralPair {
    double lambda2 = 0.0;
    Eigen::VectorXd fiedler;
    // numerical multiplicity > 1: lambda3 - lambda2 < tol. The vector is
    // still a valid eigenvector but the embedding built from it is not unique.
    bool degenerate = false;
    double lambda3_estimate = 0.0;
    int iterations = 0;
};

SpectralPair fiedler(const Graph& g, double tol = 1e-10, int max_iterations = 10000);

std::optional<int> bfs_distance(const Graph& g, int v, int w);
std::vector<int> bfs_distances_from(const Graph& g, int v);

// Rayleigh quotient vᵀLv / vᵀv, evaluated both through L and through the
// edge-difference identity ½ ΣΣ A_mn (v_n - v_m)²; the two must agree.
double rayleigh(const Graph& g, const Eigen::VectorXd& vec);

struct GraphHeatState {
    Eigen::VectorXd values;
    double time = 0.0;
};

enum class HeatMethod { spectral, rk4 };

// df/dt = -L f. Spectral: full dense eigendecomposition (small graphs,
// oracle). RK4: fixed step <= 1/(2 lambda_max) via the Gershgorin bound.
GraphHeatState heat_evolve(const Graph& g, const Eigen::VectorXd& f0, double t, HeatMethod method);

/// Dense symmetric eigendecomposition by cyclic Jacobi rotations; the
/// desk-scale oracle for the iterative Fiedler solver (n <= 2000).
struct DenseSpectrum {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // columns
};

DenseSpectrum dense_spectrum(const Eigen::MatrixXd& symmetric);
DenseSpectrum dense_spectrum(const Graph& g);

} // namespace gpinn
