#include "oa/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "oa/edge_controllers.hpp"
#include "oa/feasibility.hpp"

namespace oa {

using json = nlohmann::ordered_json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
    std::ostringstream out;
    out << "scenario validation failed (" << errors.size() << " error"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) out << "\n  - " << e;
    return out.str();
}

/// Accumulates validation errors and offers checked typed access to json
/// objects.
class Checker {
  public:
    explicit Checker(std::string origin) : origin_(std::move(origin)) {}

    void error(const std::string& msg) { errors_.push_back(msg); }

    void require_keys(const json& obj, const std::string& where,
                      const std::vector<std::string>& allowed) {
        if (!obj.is_object()) {
            error(where + ": expected an object");
            return;
        }
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
                error(where + ": unknown key '" + it.key() + "'");
        }
    }

    bool has(const json& obj, const std::string& key) const {
        return obj.is_object() && obj.contains(key);
    }

    double number(const json& obj, const std::string& where, const std::string& key,
                  double fallback, bool required = false) {
        if (!has(obj, key)) {
            if (required) error(where + ": missing required key '" + key + "'");
            return fallback;
        }
        if (!obj[key].is_number()) {
            error(where + "." + key + ": expected a number");
            return fallback;
        }
        return obj[key].get<double>();
    }

    std::string text(const json& obj, const std::string& where, const std::string& key,
                     const std::string& fallback, bool required = false) {
        if (!has(obj, key)) {
            if (required) error(where + ": missing required key '" + key + "'");
            return fallback;
        }
        if (!obj[key].is_string()) {
            error(where + "." + key + ": expected a string");
            return fallback;
        }
        return obj[key].get<std::string>();
    }

    bool boolean(const json& obj, const std::string& where, const std::string& key,
                 bool fallback) {
        if (!has(obj, key)) return fallback;
        if (!obj[key].is_boolean()) {
            error(where + "." + key + ": expected a boolean");
            return fallback;
        }
        return obj[key].get<bool>();
    }

    Vector vector(const json& obj, const std::string& where, const std::string& key,
                  bool required = false) {
        if (!has(obj, key)) {
            if (required) error(where + ": missing required key '" + key + "'");
            return Vector();
        }
        const json& arr = obj[key];
        if (!arr.is_array()) {
            error(where + "." + key + ": expected an array of numbers");
            return Vector();
        }
        Vector out(arr.size());
        for (size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number()) {
                error(where + "." + key + "[" + std::to_string(i) + "]: expected a number");
                return Vector();
            }
            out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
        }
        return out;
    }

    Matrix matrix(const json& arr, const std::string& where) {
        if (!arr.is_array() || arr.empty() || !arr[0].is_array()) {
            error(where + ": expected an array of rows");
            return Matrix();
        }
        const size_t cols = arr[0].size();
        Matrix out(arr.size(), cols);
        for (size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_array() || arr[i].size() != cols) {
                error(where + ": ragged rows");
                return Matrix();
            }
            for (size_t j = 0; j < cols; ++j) {
                if (!arr[i][j].is_number()) {
                    error(where + ": non-numeric entry");
                    return Matrix();
                }
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    arr[i][j].get<double>();
            }
        }
        return out;
    }

    bool ok() const { return errors_.empty(); }
    std::vector<std::string> take() { return std::move(errors_); }

  private:
    std::string origin_;
    std::vector<std::string> errors_;
};

void parse_graph(Checker& c, const json& root, Scenario& s) {
    if (!c.has(root, "graph")) {
        c.error("missing required key 'graph'");
        return;
    }
    const json& g = root["graph"];
    c.require_keys(g, "graph", {"nodes", "edges"});
    s.node_count = static_cast<int>(c.number(g, "graph", "nodes", 0, true));
    if (s.node_count < 2) c.error("graph.nodes: need at least 2 nodes");
    if (!c.has(g, "edges") || !g["edges"].is_array()) {
        c.error("graph.edges: expected an array of [tail, head] pairs");
        return;
    }
    for (size_t k = 0; k < g["edges"].size(); ++k) {
        const json& e = g["edges"][k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer()) {
            c.error("graph.edges[" + std::to_string(k) + "]: expected [tail, head]");
            continue;
        }
        s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
}

void parse_nodes(Checker& c, const json& root, Scenario& s) {
    if (!c.has(root, "nodes")) {
        c.error("missing required key 'nodes'");
        return;
    }
    const json& n = root["nodes"];
    s.node_family = c.text(n, "nodes", "family", "", true);
    if (s.node_family == "inventory") {
        c.require_keys(n, "nodes", {"family", "p"});
        if (!c.has(n, "p") || !n["p"].is_array() ||
            static_cast<int>(n["p"].size()) != s.node_count) {
            c.error("nodes.p: expected one supply row per node");
            return;
        }
        for (int i = 0; i < s.node_count; ++i) {
            const json row = json::array({n["p"][i]});
            s.nodes.push_back(
                InventoryNode{c.matrix(row, "nodes.p[" + std::to_string(i) + "]")});
        }
    } else if (s.node_family == "linear") {
        c.require_keys(n, "nodes", {"family", "a", "g", "p", "c"});
        for (const char* key : {"a", "g", "p", "c"})
            if (!c.has(n, key) || !n[key].is_array() ||
                static_cast<int>(n[key].size()) != s.node_count)
                c.error(std::string("nodes.") + key + ": expected one matrix per node");
        if (!c.ok()) return;
        for (int i = 0; i < s.node_count; ++i) {
            const std::string where = "nodes[" + std::to_string(i) + "]";
            LinearNode node{c.matrix(n["a"][i], where + ".a"), c.matrix(n["g"][i], where + ".g"),
                            c.matrix(n["p"][i], where + ".p"), c.matrix(n["c"][i], where + ".c")};
            s.nodes.push_back(node);
        }
    } else if (s.node_family == "droop") {
        c.require_keys(n, "nodes", {"family", "d", "p_star"});
        const Vector d = c.vector(n, "nodes", "d", true);
        const Vector p_star = c.vector(n, "nodes", "p_star", true);
        if (d.size() != s.node_count || p_star.size() != s.node_count) {
            c.error("nodes.d / nodes.p_star: expected one entry per node");
            return;
        }
        for (int i = 0; i < s.node_count; ++i) {
            if (d(i) <= 0.0) c.error("nodes.d[" + std::to_string(i) + "]: must be positive");
            s.nodes.push_back(DroopNode{d(i), p_star(i)});
        }
    } else {
        c.error("nodes.family: unknown family '" + s.node_family +
                "' (expected inventory | linear | droop)");
    }
}

void parse_controller(Checker& c, const json& root, Scenario& s) {
    if (!c.has(root, "controller")) {
        c.error("missing required key 'controller'");
        return;
    }
    const json& ctl = root["controller"];
    s.controller_family = c.text(ctl, "controller", "family", "", true);
    const std::vector<std::string> families = {"internal_model",      "comm_augmented", "static",
                                               "monotone_integrator", "optimal_distribution",
                                               "droop"};
    if (std::find(families.begin(), families.end(), s.controller_family) == families.end()) {
        c.error("controller.family: unknown family '" + s.controller_family + "'");
        return;
    }
    std::vector<std::string> allowed = {"family"};
    const bool designed = s.controller_family == "internal_model" ||
                          s.controller_family == "comm_augmented" ||
                          s.controller_family == "optimal_distribution";
    if (designed) {
        allowed.insert(allowed.end(), {"design", "h", "feedthrough"});
        if (s.controller_family == "comm_augmented") allowed.push_back("comm_gain");
        s.design = c.text(ctl, "controller", "design", "");
        s.feedthrough = c.boolean(ctl, "controller", "feedthrough", true);
        s.comm_gain = c.number(ctl, "controller", "comm_gain", 1.0);
        if (c.has(ctl, "h")) {
            if (!s.design.empty() && s.design != "explicit")
                c.error("controller: give either 'design' or 'h', not both");
            s.design = "explicit";
            s.h_explicit = c.matrix(ctl["h"], "controller.h");
        } else if (s.design != "tree" && s.design != "optimal") {
            c.error("controller.design: expected 'tree' or 'optimal' (or an explicit 'h')");
        }
    } else if (s.controller_family == "droop") {
        allowed.push_back("a");
        s.droop_a = c.vector(ctl, "controller", "a", true);
        for (Eigen::Index k = 0; k < s.droop_a.size(); ++k)
            if (s.droop_a(k) <= 0.0)
                c.error("controller.a[" + std::to_string(k) + "]: must be positive");
    }
    c.require_keys(ctl, "controller", allowed);
}

void parse_exosystem(Checker& c, const json& root, Scenario& s) {
    if (!c.has(root, "exosystem")) {
        if (s.node_family != "droop") c.error("missing required key 'exosystem'");
        return;
    }
    const json& exo = root["exosystem"];
    c.require_keys(exo, "exosystem", {"blocks"});
    if (!c.has(exo, "blocks") || !exo["blocks"].is_array()) {
        c.error("exosystem.blocks: expected an array");
        return;
    }
    for (size_t i = 0; i < exo["blocks"].size(); ++i) {
        const json& blk = exo["blocks"][i];
        const std::string where = "exosystem.blocks[" + std::to_string(i) + "]";
        const std::string type = c.text(blk, where, "type", "", true);
        if (type == "static") {
            c.require_keys(blk, where, {"type", "dim"});
            const int dim = static_cast<int>(c.number(blk, where, "dim", 1));
            if (dim < 1) c.error(where + ".dim: must be >= 1");
            s.exo_blocks.push_back(StaticBlock{dim});
        } else if (type == "rotation") {
            c.require_keys(blk, where, {"type", "frequency"});
            s.exo_blocks.push_back(
                LinearSkewBlock::rotation(c.number(blk, where, "frequency", 0.0, true)));
        } else if (type == "linear") {
            c.require_keys(blk, where, {"type", "s"});
            if (!c.has(blk, "s")) {
                c.error(where + ": missing 's'");
                continue;
            }
            s.exo_blocks.push_back(LinearSkewBlock{c.matrix(blk["s"], where + ".s")});
        } else {
            c.error(where + ".type: unknown type '" + type + "'");
        }
    }
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError({origin + ": " + e.what()});
    }

    Checker c(origin);
    Scenario s;
    c.require_keys(root, "scenario",
                   {"id", "graph", "nodes", "controller", "exosystem", "q_weights", "initial",
                    "run", "output_dim", "tolerances"});
    s.id = c.text(root, "scenario", "id", "", true);

    parse_graph(c, root, s);
    parse_nodes(c, root, s);
    parse_controller(c, root, s);
    parse_exosystem(c, root, s);

    s.q_weights = c.vector(root, "scenario", "q_weights");
    for (Eigen::Index k = 0; k < s.q_weights.size(); ++k)
        if (s.q_weights(k) <= 0.0)
            c.error("q_weights[" + std::to_string(k) + "]: weights must be positive");

    if (c.has(root, "initial")) {
        c.require_keys(root["initial"], "initial", {"w", "x", "eta"});
        s.w0 = c.vector(root["initial"], "initial", "w");
        s.x0 = c.vector(root["initial"], "initial", "x");
        s.eta0 = c.vector(root["initial"], "initial", "eta");
    }

    if (c.has(root, "run")) {
        c.require_keys(root["run"], "run", {"dt", "horizon", "record_stride", "seed"});
        s.dt = c.number(root["run"], "run", "dt", 1e-3);
        s.horizon = c.number(root["run"], "run", "horizon", 1.0, true);
        s.record_stride = static_cast<int>(c.number(root["run"], "run", "record_stride", 1));
        s.seed = static_cast<unsigned>(c.number(root["run"], "run", "seed", 0));
    } else {
        c.error("missing required key 'run'");
    }
    if (s.dt <= 0.0) c.error("run.dt: must be positive");
    if (s.horizon < s.dt) c.error("run.horizon: must be >= dt");
    if (s.record_stride < 1) c.error("run.record_stride: must be >= 1");

    s.output_dim = static_cast<int>(c.number(root, "scenario", "output_dim", 1));
    if (s.output_dim < 1) c.error("output_dim: must be >= 1");

    if (c.has(root, "tolerances")) {
        c.require_keys(root["tolerances"], "tolerances", {"agreement", "gamma"});
        s.tol_agreement = c.number(root["tolerances"], "tolerances", "agreement", 1e-2);
        s.tol_gamma = c.number(root["tolerances"], "tolerances", "gamma", 1e-2);
    }

    // cross-field checks that need a well-formed graph
    if (c.ok()) {
        try {
            NetworkGraph graph(s.node_count, s.edges);
            const int m = graph.edge_count();
            if (s.node_family == "droop" && graph.cycle_space_dim() != 0)
                c.error("graph: the droop loop is restricted to acyclic graphs");
            if (s.controller_family == "droop" && s.droop_a.size() != m)
                c.error("controller.a: expected one coefficient per edge");
            if (s.design == "explicit" && s.h_explicit.rows() != m)
                c.error("controller.h: expected one row per edge");
            if (s.design == "optimal" && s.q_weights.size() != m)
                c.error("q_weights: the optimal design needs one positive weight per edge");
            if ((s.node_family == "droop") != (s.controller_family == "droop"))
                c.error("droop nodes and the droop controller must be paired");
        } catch (const std::exception& e) {
            c.error(std::string("graph: ") + e.what());
        }
    }

    if (!c.ok()) throw ScenarioError(c.take());
    return s;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError({path + ": cannot open file"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

std::string emit_scenario(const Scenario& s) {
    json root;
    root["id"] = s.id;
    root["graph"]["nodes"] = s.node_count;
    json edges = json::array();
    for (const auto& [tail, head] : s.edges) edges.push_back(json::array({tail, head}));
    root["graph"]["edges"] = edges;

    json nodes;
    nodes["family"] = s.node_family;
    if (s.node_family == "inventory") {
        json p = json::array();
        for (const auto& n : s.nodes)
            p.push_back(matrix_to_json(std::get<InventoryNode>(n).p)[0]);
        nodes["p"] = p;
    } else if (s.node_family == "linear") {
        json a = json::array(), g = json::array(), p = json::array(), cc = json::array();
        for (const auto& n : s.nodes) {
            const auto& lin = std::get<LinearNode>(n);
            a.push_back(matrix_to_json(lin.a));
            g.push_back(matrix_to_json(lin.g));
            p.push_back(matrix_to_json(lin.p));
            cc.push_back(matrix_to_json(lin.c));
        }
        nodes["a"] = a;
        nodes["g"] = g;
        nodes["p"] = p;
        nodes["c"] = cc;
    } else if (s.node_family == "droop") {
        Vector d(s.node_count), p_star(s.node_count);
        for (int i = 0; i < s.node_count; ++i) {
            const auto& n = std::get<DroopNode>(s.nodes[static_cast<size_t>(i)]);
            d(i) = n.d;
            p_star(i) = n.p_star;
        }
        nodes["d"] = vector_to_json(d);
        nodes["p_star"] = vector_to_json(p_star);
    }
    root["nodes"] = nodes;

    json ctl;
    ctl["family"] = s.controller_family;
    if (s.design == "explicit") ctl["h"] = matrix_to_json(s.h_explicit);
    else if (!s.design.empty()) ctl["design"] = s.design;
    if (s.controller_family == "comm_augmented") ctl["comm_gain"] = s.comm_gain;
    if (s.controller_family == "droop") ctl["a"] = vector_to_json(s.droop_a);
    else if (s.controller_family != "static" && s.controller_family != "monotone_integrator")
        ctl["feedthrough"] = s.feedthrough;
    root["controller"] = ctl;

    if (!s.exo_blocks.empty()) {
        json blocks = json::array();
        for (const auto& blk : s.exo_blocks) {
            json b;
            if (const auto* st = std::get_if<StaticBlock>(&blk)) {
                b["type"] = "static";
                b["dim"] = st->dim;
            } else if (const auto* lin = std::get_if<LinearSkewBlock>(&blk)) {
                if (lin->s.rows() == 2 && lin->s(0, 0) == 0.0 && lin->s(1, 1) == 0.0 &&
                    lin->s(0, 1) == -lin->s(1, 0)) {
                    b["type"] = "rotation";
                    b["frequency"] = lin->s(1, 0);
                } else {
                    b["type"] = "linear";
                    b["s"] = matrix_to_json(lin->s);
                }
            } else {
                throw std::runtime_error("emit_scenario: general exosystem blocks not serializable");
            }
            blocks.push_back(b);
        }
        root["exosystem"]["blocks"] = blocks;
    }

    if (s.q_weights.size() > 0) root["q_weights"] = vector_to_json(s.q_weights);
    json initial;
    if (s.w0.size() > 0) initial["w"] = vector_to_json(s.w0);
    if (s.x0.size() > 0) initial["x"] = vector_to_json(s.x0);
    if (s.eta0.size() > 0) initial["eta"] = vector_to_json(s.eta0);
    if (!initial.empty()) root["initial"] = initial;

    root["run"]["dt"] = s.dt;
    root["run"]["horizon"] = s.horizon;
    root["run"]["record_stride"] = s.record_stride;
    root["run"]["seed"] = s.seed;
    if (s.output_dim != 1) root["output_dim"] = s.output_dim;
    root["tolerances"]["agreement"] = s.tol_agreement;
    root["tolerances"]["gamma"] = s.tol_gamma;
    return root.dump(2) + "\n";
}

Matrix scenario_disturbance_map(const Scenario& s) {
    int q = 0;
    for (const auto& n : s.nodes)
        q += std::visit(
            [](const auto& nn) -> int {
                using T = std::decay_t<decltype(nn)>;
                if constexpr (std::is_same_v<T, DroopNode>) return 0;
                else return static_cast<int>(nn.p.cols());
            },
            n);
    Matrix p = Matrix::Zero(s.node_count, q);
    int off = 0;
    for (int i = 0; i < s.node_count; ++i) {
        std::visit(
            [&](const auto& nn) {
                using T = std::decay_t<decltype(nn)>;
                if constexpr (!std::is_same_v<T, DroopNode>) {
                    if (nn.p.rows() != 1)
                        throw std::runtime_error(
                            "scenario_disturbance_map: needs scalar-output nodes");
                    p.block(i, off, 1, nn.p.cols()) = nn.p;
                    off += static_cast<int>(nn.p.cols());
                }
            },
            s.nodes[static_cast<size_t>(i)]);
    }
    return p;
}

Matrix scenario_feedforward(const Scenario& s) {
    if (s.design == "explicit") return s.h_explicit;
    const NetworkGraph graph(s.node_count, s.edges);
    const Matrix p = scenario_disturbance_map(s);
    if (s.design == "tree") return design_tree_feedforward(graph, p);
    if (s.design == "optimal") return design_optimal_feedforward(graph, s.q_weights, p);
    throw std::runtime_error("scenario_feedforward: scenario has no design directive");
}

ClosedLoopSystem build_system(const Scenario& s) {
    NetworkGraph graph(s.node_count, s.edges);
    const int m = graph.edge_count();

    Exosystem exo = s.exo_blocks.empty() ? Exosystem({StaticBlock{1}})
                                         : Exosystem(s.exo_blocks);

    EdgeController ctrl = StaticCoupling{m, s.output_dim};
    if (s.controller_family == "internal_model") {
        ctrl = InternalModelController{exo, scenario_feedforward(s), s.feedthrough};
    } else if (s.controller_family == "comm_augmented") {
        ctrl = CommAugmentedController{
            InternalModelController{exo, scenario_feedforward(s), s.feedthrough},
            graph.comm_laplacian(), s.comm_gain};
    } else if (s.controller_family == "monotone_integrator") {
        ctrl = MonotoneIntegratorController::default_map(m);
    } else if (s.controller_family == "optimal_distribution") {
        ctrl = OptimalDistributionController{exo, scenario_feedforward(s), s.feedthrough};
    } else if (s.controller_family == "droop") {
        ctrl = DroopEdgeController{s.droop_a};
    }

    if (s.node_family == "droop") {
        // the droop loop carries no exosystem; give it an inert placeholder
        return ClosedLoopSystem(graph, s.nodes, ctrl, Exosystem({StaticBlock{1}}), 1);
    }
    return ClosedLoopSystem(graph, s.nodes, ctrl, exo, s.output_dim);
}

Vector initial_state(const Scenario& s, const ClosedLoopSystem& sys) {
    Vector state = Vector::Zero(sys.state_dim());
    auto place = [&](const Vector& v, int offset, int dim, const char* name) {
        if (v.size() == 0) return;
        if (v.size() != dim)
            throw ScenarioError({std::string("initial.") + name + ": expected dimension " +
                                 std::to_string(dim)});
        state.segment(offset, dim) = v;
    };
    place(s.w0, 0, sys.exo_dim(), "w");
    place(s.x0, sys.exo_dim(), sys.node_state_dim(), "x");
    place(s.eta0, sys.exo_dim() + sys.node_state_dim(), sys.controller_state_dim(), "eta");
    return state;
}

}  // namespace oa
