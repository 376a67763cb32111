#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gpinn/mesh.hpp"

namespace gpinn {

using nlohmann::json;

std::string mesh_to_json_string(const Mesh& mesh) {
    json j;
    j["nodes"] = json::array();
    for (const auto& p : mesh.nodes) j["nodes"].push_back({p.x(), p.y()});
    j["elements"] = json::array();
    for (const auto& t : mesh.elements) j["elements"].push_back({t[0], t[1], t[2]});
    j["boundary"] = json::array();
    for (const auto& be : mesh.boundary_edges)
        j["boundary"].push_back({be.a, be.b, to_string(be.tag)});
    return j.dump();
}

Mesh mesh_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("mesh JSON parse failure: ") + e.what());
    }
    Mesh mesh;
    try {
        for (const auto& p : j.at("nodes"))
            mesh.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        for (const auto& t : j.at("elements"))
            mesh.elements.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        if (j.contains("boundary")) {
            for (const auto& b : j["boundary"])
                mesh.boundary_edges.push_back({b.at(0).get<int>(), b.at(1).get<int>(),
                                               boundary_tag_from_string(b.at(2).get<std::string>())});
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("mesh JSON missing or malformed field: ") + e.what());
    }
    mesh.finalize();
    return mesh;
}

void save_mesh_json(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << mesh_to_json_string(mesh) << "\n";
}

namespace {

Mesh load_gmsh_v2(std::istream& in) {
    std::string line;
    std::map<int, std::string> physical_names;
    std::map<long long, int> node_id_map;
    Mesh mesh;

    auto expect_section_end = [&](const std::string& end) {
        while (std::getline(in, line)) {
            if (line.rfind(end, 0) == 0) return;
        }
        throw ParseError("gmsh: missing " + end);
    };

    while (std::getline(in, line)) {
        if (line.rfind("$MeshFormat", 0) == 0) {
            std::getline(in, line);
            std::istringstream ss(line);
            double version = 0.0;
            ss >> version;
            if (version < 2.0 || version >= 3.0)
                throw ParseError("gmsh: unsupported format version (need 2.x ASCII)");
            expect_section_end("$EndMeshFormat");
        } else if (line.rfind("$PhysicalNames", 0) == 0) {
            std::getline(in, line);
            int count = std::stoi(line);
            for (int i = 0; i < count; ++i) {
                std::getline(in, line);
                std::istringstream ss(line);
                int dim, id;
                std::string name;
                ss >> dim >> id;
                std::getline(ss, name);
                auto q0 = name.find('"');
                auto q1 = name.rfind('"');
                if (q0 != std::string::npos && q1 > q0)
                    physical_names[id] = name.substr(q0 + 1, q1 - q0 - 1);
            }
            expect_section_end("$EndPhysicalNames");
        } else if (line.rfind("$Nodes", 0) == 0) {
            std::getline(in, line);
            int count = std::stoi(line);
            for (int i = 0; i < count; ++i) {
                std::getline(in, line);
                std::istringstream ss(line);
                long long id;
                double x, y, z;
                if (!(ss >> id >> x >> y >> z)) throw ParseError("gmsh: malformed node line");
                node_id_map[id] = mesh.n_nodes();
                mesh.nodes.emplace_back(x, y);
            }
            expect_section_end("$EndNodes");
        } else if (line.rfind("$Elements", 0) == 0) {
            std::getline(in, line);
            int count = std::stoi(line);
            for (int i = 0; i < count; ++i) {
                std::getline(in, line);
                std::istringstream ss(line);
                long long id;
                int type, ntags;
                if (!(ss >> id >> type >> ntags)) throw ParseError("gmsh: malformed element line");
                std::vector<int> tags(ntags);
                for (int& t : tags) ss >> t;
                if (type == 1) {
                    long long a, b;
                    if (!(ss >> a >> b)) throw ParseError("gmsh: malformed line element");
                    BoundaryTag tag = BoundaryTag::free_edge;
                    if (ntags >= 1) {
                        auto it = physical_names.find(tags[0]);
                        if (it != physical_names.end()) {
                            try {
                                tag = boundary_tag_from_string(it->second);
                            } catch (const ParseError&) {
                                tag = BoundaryTag::free_edge;
                            }
                        }
                    }
                    mesh.boundary_edges.push_back({node_id_map.at(a), node_id_map.at(b), tag});
                } else if (type == 2) {
                    long long a, b, c;
                    if (!(ss >> a >> b >> c)) throw ParseError("gmsh: malformed triangle");
                    mesh.elements.push_back(
                        {node_id_map.at(a), node_id_map.at(b), node_id_map.at(c)});
                }
                // other element types (points etc.) are skipped
            }
            expect_section_end("$EndElements");
        }
    }

    if (mesh.nodes.empty() || mesh.elements.empty())
        throw ParseError("gmsh: no nodes or no triangles found");
    mesh.finalize();
    return mesh;
}

} // namespace

Mesh load_mesh(const std::string& path, const std::string& format) {
    std::ifstream in(path);
    if (!in) throw UserError("file not found: '" + path + "'");
    if (format == "native-json") {
        std::stringstream buf;
        buf << in.rdbuf();
        return mesh_from_json_string(buf.str());
    }
    if (format == "gmsh-v2-ascii") return load_gmsh_v2(in);
    throw UserError("unknown mesh format '" + format + "' (native-json or gmsh-v2-ascii)");
}

Mesh load_mesh(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    return load_mesh(path, ext == ".msh" ? "gmsh-v2-ascii" : "native-json");
}

} // namespace gpinn
