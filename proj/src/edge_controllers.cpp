#include "oa/edge_controllers.hpp"

#include <cmath>
#include <stdexcept>

namespace oa {

MonotoneIntegratorController MonotoneIntegratorController::default_map(int edge_count) {
    MonotoneIntegratorController ctrl;
    ctrl.c = 1.0;
    ctrl.edge_count_ = edge_count;
    ctrl.psi = [](double eta) { return eta + std::tanh(eta); };
    ctrl.potential = [](double eta) { return 0.5 * eta * eta + std::log(std::cosh(eta)); };
    return ctrl;
}

int controller_state_dim(const EdgeController& ctrl) {
    return std::visit([](const auto& c) { return c.state_dim(); }, ctrl);
}

bool controller_has_feedthrough(const EdgeController& ctrl) {
    return std::visit(
        [](const auto& c) -> bool {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, StaticCoupling>) return true;
            else if constexpr (std::is_same_v<T, DroopEdgeController>) return false;
            else if constexpr (std::is_same_v<T, CommAugmentedController>) return c.core.feedthrough;
            else return c.feedthrough;
        },
        ctrl);
}

namespace {

Vector internal_model_field(const InternalModelController& c, const Vector& eta,
                            const Vector& v) {
    const int m = c.edge_count(), d = c.copy_dim();
    if (eta.size() != static_cast<Eigen::Index>(m) * d || v.size() != m)
        throw std::invalid_argument("controller_vector_field: dimension mismatch");
    Vector out(eta.size());
    for (int k = 0; k < m; ++k)
        out.segment(k * d, d) =
            c.exo.vector_field(eta.segment(k * d, d)) + c.h.row(k).transpose() * v(k);
    return out;
}

Vector internal_model_output(const InternalModelController& c, const Vector& eta,
                             const Vector& nu) {
    const int m = c.edge_count(), d = c.copy_dim();
    Vector lambda(m);
    for (int k = 0; k < m; ++k) lambda(k) = c.h.row(k).dot(eta.segment(k * d, d));
    if (c.feedthrough) {
        if (nu.size() != m) throw std::invalid_argument("controller_output: nu expected");
        lambda += nu;
    } else if (nu.size() != 0) {
        throw std::invalid_argument("controller_output: family has no feedthrough");
    }
    return lambda;
}

}  // namespace

Vector controller_vector_field(const EdgeController& ctrl, const Vector& eta, const Vector& v) {
    return std::visit(
        [&](const auto& c) -> Vector {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, InternalModelController>) {
                return internal_model_field(c, eta, v);
            } else if constexpr (std::is_same_v<T, CommAugmentedController>) {
                Vector out = internal_model_field(c.core, eta, v);
                const int m = c.core.edge_count(), d = c.core.copy_dim();
                for (int k = 0; k < m; ++k)
                    for (int j = 0; j < m; ++j)
                        if (c.l_comm(k, j) != 0.0)
                            out.segment(k * d, d) -=
                                c.comm_gain * c.l_comm(k, j) * eta.segment(j * d, d);
                return out;
            } else if constexpr (std::is_same_v<T, StaticCoupling>) {
                if (eta.size() != 0) throw std::invalid_argument("StaticCoupling has no state");
                return Vector();
            } else if constexpr (std::is_same_v<T, MonotoneIntegratorController>) {
                if (eta.size() != c.edge_count_ || v.size() != c.edge_count_)
                    throw std::invalid_argument("controller_vector_field: dimension mismatch");
                return v;
            } else if constexpr (std::is_same_v<T, OptimalDistributionController>) {
                if (eta.size() != c.h.cols() || v.size() != c.h.rows())
                    throw std::invalid_argument("controller_vector_field: dimension mismatch");
                return c.exo.vector_field(eta) + c.h.transpose() * v;
            } else {  // DroopEdgeController: eta = B^T theta, eta' = -B^T y = v
                if (eta.size() != c.a.size() || v.size() != c.a.size())
                    throw std::invalid_argument("controller_vector_field: dimension mismatch");
                return v;
            }
        },
        ctrl);
}

Vector controller_output(const EdgeController& ctrl, const Vector& eta, const Vector& nu) {
    return std::visit(
        [&](const auto& c) -> Vector {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, InternalModelController>) {
                return internal_model_output(c, eta, nu);
            } else if constexpr (std::is_same_v<T, CommAugmentedController>) {
                return internal_model_output(c.core, eta, nu);
            } else if constexpr (std::is_same_v<T, StaticCoupling>) {
                if (nu.size() != static_cast<Eigen::Index>(c.edge_count_) * c.p)
                    throw std::invalid_argument("controller_output: nu = v expected");
                return nu;
            } else if constexpr (std::is_same_v<T, MonotoneIntegratorController>) {
                Vector lambda(c.edge_count_);
                for (int k = 0; k < c.edge_count_; ++k) lambda(k) = c.psi(eta(k));
                if (c.feedthrough) {
                    if (nu.size() != c.edge_count_)
                        throw std::invalid_argument("controller_output: nu expected");
                    lambda += nu;
                } else if (nu.size() != 0) {
                    throw std::invalid_argument("controller_output: family has no feedthrough");
                }
                return lambda;
            } else if constexpr (std::is_same_v<T, OptimalDistributionController>) {
                Vector lambda = c.h * eta;
                if (c.feedthrough) {
                    if (nu.size() != c.h.rows())
                        throw std::invalid_argument("controller_output: nu expected");
                    lambda += nu;
                } else if (nu.size() != 0) {
                    throw std::invalid_argument("controller_output: family has no feedthrough");
                }
                return lambda;
            } else {  // DroopEdgeController
                if (nu.size() != 0)
                    throw std::invalid_argument("controller_output: droop has no feedthrough");
                return c.a.cwiseProduct(eta.array().sin().matrix());
            }
        },
        ctrl);
}

Matrix design_tree_feedforward(const NetworkGraph& graph, const Matrix& p) {
    const SpanningTree tree = extract_spanning_tree(graph);
    const Matrix& bt = tree.incidence;
    const Matrix tree_rows = -(bt.transpose() * bt).ldlt().solve(bt.transpose() * p);
    Matrix h = Matrix::Zero(graph.edge_count(), p.cols());
    for (size_t i = 0; i < tree.edge_indices.size(); ++i)
        h.row(tree.edge_indices[i]) = tree_rows.row(static_cast<Eigen::Index>(i));
    return h;
}

Matrix design_optimal_feedforward(const NetworkGraph& graph, const Vector& q, const Matrix& p) {
    const Matrix b = graph.incidence();
    const Matrix lq = weighted_laplacian(b, q);
    const Matrix h_zeta = -moore_penrose(lq) * p;
    return q.cwiseInverse().asDiagonal() * b.transpose() * h_zeta;
}

}  // namespace oa
