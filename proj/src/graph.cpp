#include "gpinn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "gpinn/rng.hpp"

namespace gpinn {

Graph graph_from_edges(int n_vertices, std::vector<std::pair<int, int>> edges) {
    Graph g;
    g.n_vertices = n_vertices;
    for (auto& [a, b] : edges) {
        if (a == b) throw InvariantError("self-loop at vertex " + std::to_string(a));
        if (a < 0 || b < 0 || a >= n_vertices || b >= n_vertices)
            throw InvariantError("edge endpoint out of range");
        if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * g.edges.size());
    g.degrees = Eigen::VectorXi::Zero(n_vertices);
    for (const auto& [a, b] : g.edges) {
        trip.emplace_back(a, b, 1.0);
        trip.emplace_back(b, a, 1.0);
        g.degrees[a]++;
        g.degrees[b]++;
    }
    g.adjacency.resize(n_vertices, n_vertices);
    g.adjacency.setFromTriplets(trip.begin(), trip.end());

    g.adj_offsets.assign(n_vertices + 1, 0);
    for (const auto& [a, b] : g.edges) {
        g.adj_offsets[a + 1]++;
        g.adj_offsets[b + 1]++;
    }
    for (int i = 0; i < n_vertices; ++i) g.adj_offsets[i + 1] += g.adj_offsets[i];
    g.adj_list.resize(2 * g.edges.size());
    std::vector<int> cursor(g.adj_offsets.begin(), g.adj_offsets.end() - 1);
    for (const auto& [a, b] : g.edges) {
        g.adj_list[cursor[a]++] = b;
        g.adj_list[cursor[b]++] = a;
    }
    return g;
}

Graph graph_from_mesh(const Mesh& mesh) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(3 * mesh.elements.size());
    for (const auto& t : mesh.elements) {
        edges.emplace_back(t[0], t[1]);
        edges.emplace_back(t[1], t[2]);
        edges.emplace_back(t[2], t[0]);
    }
    return graph_from_edges(mesh.n_nodes(), std::move(edges));
}

Graph make_path_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return graph_from_edges(n, std::move(edges));
}

Graph make_grid_graph(int nx, int ny) {
    std::vector<std::pair<int, int>> edges;
    auto id = [nx](int ix, int iy) { return iy * nx + ix; };
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            if (ix + 1 < nx) edges.emplace_back(id(ix, iy), id(ix + 1, iy));
            if (iy + 1 < ny) edges.emplace_back(id(ix, iy), id(ix, iy + 1));
        }
    return graph_from_edges(nx * ny, std::move(edges));
}

Eigen::SparseMatrix<double> laplacian(const Graph& g) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * g.edges.size() + g.n_vertices);
    for (const auto& [a, b] : g.edges) {
        trip.emplace_back(a, b, -1.0);
        trip.emplace_back(b, a, -1.0);
    }
    for (int i = 0; i < g.n_vertices; ++i)
        trip.emplace_back(i, i, static_cast<double>(g.degrees[i]));
    Eigen::SparseMatrix<double> L(g.n_vertices, g.n_vertices);
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

std::vector<int> bfs_distances_from(const Graph& g, int v) {
    std::vector<int> dist(g.n_vertices, -1);
    std::deque<int> queue{v};
    dist[v] = 0;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int k = g.adj_offsets[u]; k < g.adj_offsets[u + 1]; ++k) {
            int w = g.adj_list[k];
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    return dist;
}

std::optional<int> bfs_distance(const Graph& g, int v, int w) {
    if (v < 0 || w < 0 || v >= g.n_vertices || w >= g.n_vertices)
        throw UserError("bfs_distance: vertex index out of range");
    if (v == w) return 0;
    auto dist = bfs_distances_from(g, v);
    if (dist[w] < 0) return std::nullopt;
    return dist[w];
}

int connected_components(const Graph& g) {
    std::vector<char> seen(g.n_vertices, 0);
    int components = 0;
    for (int s = 0; s < g.n_vertices; ++s) {
        if (seen[s]) continue;
        ++components;
        std::deque<int> queue{s};
        seen[s] = 1;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int k = g.adj_offsets[u]; k < g.adj_offsets[u + 1]; ++k) {
                int w = g.adj_list[k];
                if (!seen[w]) {
                    seen[w] = 1;
                    queue.push_back(w);
                }
            }
        }
    }
    return components;
}

double rayleigh(const Graph& g, const Eigen::VectorXd& vec) {
    if (vec.size() != g.n_vertices) throw UserError("rayleigh: vector length mismatch");
    double nrm2 = vec.squaredNorm();
    if (nrm2 == 0.0) throw UserError("rayleigh: zero vector");

    double edge_sum = 0.0;
    for (const auto& [a, b] : g.edges) {
        double d = vec[a] - vec[b];
        edge_sum += d * d; // ½ ΣΣ A_mn (..)² counts each undirected edge once
    }
    double via_edges = edge_sum / nrm2;

    Eigen::SparseMatrix<double> L = laplacian(g);
    double via_matrix = vec.dot(L * vec) / nrm2;

    if (std::abs(via_edges - via_matrix) >
        1e-12 * std::max({1.0, std::abs(via_edges), std::abs(via_matrix)}))
        throw NumericalError("rayleigh: matrix and edge-difference forms disagree");
    return via_edges;
}

namespace {

void sign_fix(Eigen::VectorXd& v) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        double m = std::abs(v[i]);
        if (m > best) { // strict: first (lowest index) of the maxima wins
            best = m;
            arg = i;
        }
    }
    if (v[arg] < 0.0) v = -v;
}

void project_out_constant(Eigen::VectorXd& v) {
    v.array() -= v.mean();
}

// Jacobi-preconditioned CG for L y = b restricted to the subspace orthogonal
// to the constant kernel vector.
Eigen::VectorXd deflated_cg(const Eigen::SparseMatrix<double>& L, const Eigen::VectorXd& diag,
                            Eigen::VectorXd b, double rel_tol, int max_iter) {
    project_out_constant(b);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = r.cwiseQuotient(diag);
    project_out_constant(z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double b_norm = b.norm();
    if (b_norm == 0.0) return x;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd Lp = L * p;
        double alpha = rz / p.dot(Lp);
        x += alpha * p;
        r -= alpha * Lp;
        if (r.norm() <= rel_tol * b_norm) break;
        z = r.cwiseQuotient(diag);
        project_out_constant(z);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    project_out_constant(x);
    return x;
}

} // namespace

SpectralPair fiedler(const Graph& g, double tol, int max_iterations) {
    const int n = g.n_vertices;
    if (n < 2) throw UserError("fiedler: need at least two vertices");
    int components = connected_components(g);
    if (components != 1) throw DisconnectedGraphError(components);

    Eigen::SparseMatrix<double> L = laplacian(g);
    Eigen::VectorXd diag = g.degrees.cast<double>();

    // Block (size 2) deflated inverse iteration with Rayleigh-Ritz extraction:
    // converges at rate lambda2/lambda4 and resolves near-degenerate
    // (lambda2 ~ lambda3) pairs, which square-symmetric meshes produce.
    const int block = std::min(2, n - 1);
    SplitMix64 rng(derive_seed(0x0F1ED1E5ULL, seed_purpose::eigensolver));
    Eigen::MatrixXd V(n, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < n; ++i) V(i, j) = rng.uniform(-1.0, 1.0);

    auto orthonormalize = [&](Eigen::MatrixXd& M) {
        for (int j = 0; j < M.cols(); ++j) {
            Eigen::VectorXd col = M.col(j);
            project_out_constant(col);
            for (int k = 0; k < j; ++k) col -= M.col(k).dot(col) * M.col(k);
            double nrm = col.norm();
            if (nrm < 1e-300) throw NumericalError("fiedler: block collapsed");
            M.col(j) = col / nrm;
        }
    };
    orthonormalize(V);

    const int cg_iters = std::max(200, 10 * n);
    SpectralPair out;
    double lambda2 = 0.0, lambda3 = 0.0;
    Eigen::VectorXd u2;

    int iteration = 0;
    for (; iteration < max_iterations; ++iteration) {
        Eigen::MatrixXd Y(n, block);
        for (int j = 0; j < block; ++j)
            Y.col(j) = deflated_cg(L, diag, V.col(j), 1e-13, cg_iters);
        orthonormalize(Y);

        // Rayleigh-Ritz on span(Y)
        Eigen::MatrixXd LY = L * Y;
        Eigen::MatrixXd B = Y.transpose() * LY;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(B);
        Eigen::MatrixXd rotated = Y * ritz.eigenvectors();

        lambda2 = ritz.eigenvalues()[0];
        lambda3 = block > 1 ? ritz.eigenvalues()[1] : lambda2;
        u2 = rotated.col(0);
        project_out_constant(u2);
        u2.normalize();

        double resid = (L * u2 - lambda2 * u2).lpNorm<Eigen::Infinity>();
        V = rotated;
        if (resid < tol) break;
    }
    if (iteration >= max_iterations)
        throw NoConvergenceError("fiedler: inverse iteration did not reach tolerance " +
                                 std::to_string(tol) + " in " + std::to_string(max_iterations) +
                                 " iterations");

    sign_fix(u2);
    out.lambda2 = lambda2;
    out.fiedler = u2;
    out.lambda3_estimate = lambda3;
    out.degenerate = block > 1 && (lambda3 - lambda2) < tol;
    out.iterations = iteration + 1;
    return out;
}

DenseSpectrum dense_spectrum(const Eigen::MatrixXd& symmetric) {
    const int n = static_cast<int>(symmetric.rows());
    if (n > 2000) throw UserError("dense_spectrum: oracle limited to n <= 2000");
    Eigen::MatrixXd A = symmetric;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);

    // classic cyclic Jacobi sweeps
    auto off_norm = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) s += A(p, q) * A(p, q);
        return std::sqrt(2.0 * s);
    };
    const double target = 1e-14 * std::max(1.0, A.norm());
    for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) <= 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                Eigen::VectorXd Ap = A.col(p), Aq = A.col(q);
                A.col(p) = c * Ap - s * Aq;
                A.col(q) = s * Ap + c * Aq;
                Eigen::VectorXd Rp = A.row(p), Rq = A.row(q);
                A.row(p) = c * Rp.transpose() - s * Rq.transpose();
                A.row(q) = s * Rp.transpose() + c * Rq.transpose();
                Eigen::VectorXd Vp = V.col(p), Vq = V.col(q);
                V.col(p) = c * Vp - s * Vq;
                V.col(q) = s * Vp + c * Vq;
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return A(a, a) < A(b, b); });

    DenseSpectrum out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = A(order[i], order[i]);
        out.vectors.col(i) = V.col(order[i]);
    }
    return out;
}

DenseSpectrum dense_spectrum(const Graph& g) {
    return dense_spectrum(Eigen::MatrixXd(laplacian(g)));
}

GraphHeatState heat_evolve(const Graph& g, const Eigen::VectorXd& f0, double t,
                           HeatMethod method) {
    if (t < 0.0) throw UserError("heat_evolve: t must be >= 0");
    if (f0.size() != g.n_vertices) throw UserError("heat_evolve: signal length mismatch");
    int components = connected_components(g);
    if (components != 1) throw DisconnectedGraphError(components);

    GraphHeatState state;
    state.time = t;

    if (method == HeatMethod::spectral) {
        DenseSpectrum spec = dense_spectrum(g);
        Eigen::VectorXd f = Eigen::VectorXd::Zero(g.n_vertices);
        for (int i = 0; i < g.n_vertices; ++i) {
            double coeff = spec.vectors.col(i).dot(f0);
            f += coeff * std::exp(-spec.values[i] * t) * spec.vectors.col(i);
        }
        state.values = f;
        return state;
    }

    // RK4 on df/dt = -L f with step bounded by the Gershgorin estimate
    Eigen::SparseMatrix<double> L = laplacian(g);
    double lambda_max_bound = 2.0 * g.degrees.maxCoeff();
    double dt_max = 1.0 / (2.0 * lambda_max_bound);
    int steps = std::max(1, static_cast<int>(std::ceil(t / dt_max)));
    double dt = t / steps;
    Eigen::VectorXd f = f0;
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd k1 = -(L * f);
        Eigen::VectorXd k2 = -(L * (f + 0.5 * dt * k1));
        Eigen::VectorXd k3 = -(L * (f + 0.5 * dt * k2));
        Eigen::VectorXd k4 = -(L * (f + dt * k3));
        f += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    state.values = f;
    return state;
}

} // namespace gpinn
