#include "oa/node_models.hpp"

#include <cmath>
#include <stdexcept>

namespace oa {

int node_state_dim(const NodeModel& model) {
    return std::visit([](const auto& n) { return n.state_dim(); }, model);
}

int node_output_dim(const NodeModel& model) {
    return std::visit([](const auto& n) { return n.output_dim(); }, model);
}

Vector node_vector_field(const NodeModel& model, const Vector& x, const Vector& u,
                         const Vector& w) {
    return std::visit(
        [&](const auto& n) -> Vector {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LinearNode>) {
                if (x.size() != n.a.rows() || u.size() != n.g.cols() || w.size() != n.p.cols())
                    throw std::invalid_argument("node_vector_field: dimension mismatch");
                return n.a * x + n.g * u + n.p * w;
            } else if constexpr (std::is_same_v<T, GradientFlowNode>) {
                if (x.size() != n.dim || u.size() != n.g.cols() || w.size() != n.p.cols())
                    throw std::invalid_argument("node_vector_field: dimension mismatch");
                return n.gradient(x) + n.g * u + n.p * w;
            } else if constexpr (std::is_same_v<T, InventoryNode>) {
                if (x.size() != 1 || u.size() != 1 || w.size() != n.p.cols())
                    throw std::invalid_argument("node_vector_field: dimension mismatch");
                return u + n.p * w;
            } else {
                if (x.size() != 1 || u.size() != 1)
                    throw std::invalid_argument("node_vector_field: dimension mismatch");
                return Vector::Constant(1, (n.p_star + u(0)) / n.d);
            }
        },
        model);
}

Vector node_output(const NodeModel& model, const Vector& x, const Vector& w,
                   const Vector* xdot) {
    return std::visit(
        [&](const auto& n) -> Vector {
            using T = std::decay_t<decltype(n)>;
            (void)w;
            if constexpr (std::is_same_v<T, LinearNode>) {
                return n.c * x;
            } else if constexpr (std::is_same_v<T, GradientFlowNode>) {
                return n.g.transpose() * x;  // C = G^T
            } else if constexpr (std::is_same_v<T, InventoryNode>) {
                return x;
            } else {
                if (xdot == nullptr)
                    throw std::invalid_argument("node_output: droop output needs xdot");
                return *xdot;
            }
        },
        model);
}

std::optional<Matrix> passivity_certificate(const LinearNode& node, double tol) {
    const int r = node.state_dim();
    const int p = static_cast<int>(node.g.cols());
    // Unknown: symmetric Q, parametrized by its upper triangle.
    const int nvars = r * (r + 1) / 2;
    auto var_index = [r](int i, int j) {
        if (i > j) std::swap(i, j);
        return i * r - i * (i - 1) / 2 + (j - i);
    };
    Matrix lhs = Matrix::Zero(r * p, nvars);
    Vector rhs(r * p);
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < p; ++k) {
            const int row = i * p + k;
            for (int j = 0; j < r; ++j) lhs(row, var_index(i, j)) += node.g(j, k);
            rhs(row) = node.c(k, i);
        }
    Vector qvec = lhs.completeOrthogonalDecomposition().solve(rhs);
    if ((lhs * qvec - rhs).norm() > tol * (1.0 + rhs.norm())) return std::nullopt;
    // steer the free parameters toward the identity to favor definiteness
    Eigen::JacobiSVD<Matrix> svd(lhs, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-12 * sv(0)) ++rank;
    if (rank < nvars) {
        const Matrix null = svd.matrixV().rightCols(nvars - rank);
        Vector ivec = Vector::Zero(nvars);
        for (int i = 0; i < r; ++i) ivec(var_index(i, i)) = 1.0;
        qvec += null * (null.transpose() * (ivec - qvec));
    }
    Matrix q(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = i; j < r; ++j) q(i, j) = q(j, i) = qvec(var_index(i, j));

    Eigen::SelfAdjointEigenSolver<Matrix> qs(q);
    if (qs.eigenvalues().minCoeff() <= tol) return std::nullopt;
    Eigen::SelfAdjointEigenSolver<Matrix> ls(node.a.transpose() * q + q * node.a);
    if (ls.eigenvalues().maxCoeff() > tol * (1.0 + q.norm())) return std::nullopt;
    return q;
}

namespace {

double storage_value(const NodeModel& model, const Vector& dx,
                     const std::optional<Matrix>& cert) {
    if (std::holds_alternative<LinearNode>(model)) return 0.5 * dx.dot(*cert * dx);
    return 0.5 * dx.squaredNorm();
}

}  // namespace

SupplyReport incremental_supply_check(const NodeModel& model, const NodeTrajectory& ta,
                                      const NodeTrajectory& tb, double dt, double tol_base) {
    if (ta.x.cols() != tb.x.cols() || ta.x.cols() < 2)
        throw std::invalid_argument("incremental_supply_check: grid mismatch");
    const Eigen::Index steps = ta.x.cols();
    SupplyReport report;
    report.steps = static_cast<int>(steps) - 1;

    if (std::holds_alternative<DroopNode>(model)) {
        const double d = std::get<DroopNode>(model).d;
        for (Eigen::Index k = 0; k < steps; ++k) {
            const double dy = ta.y(0, k) - tb.y(0, k);
            const double du = ta.u(0, k) - tb.u(0, k);
            const double err = std::abs(dy * du - d * dy * dy);
            report.max_droop_identity_error = std::max(report.max_droop_identity_error, err);
            if (err > 1e-12 * (1.0 + std::abs(dy * du))) ++report.violations;
        }
        return report;
    }

    std::optional<Matrix> cert;
    if (const auto* lin = std::get_if<LinearNode>(&model)) {
        cert = passivity_certificate(*lin);
        if (!cert) throw std::runtime_error("incremental_supply_check: no passivity certificate");
    }

    for (Eigen::Index k = 0; k + 1 < steps; ++k) {
        const double v0 = storage_value(model, ta.x.col(k) - tb.x.col(k), cert);
        const double v1 = storage_value(model, ta.x.col(k + 1) - tb.x.col(k + 1), cert);
        const double vdot = (v1 - v0) / dt;
        // trapezoid average of the supply over the step
        const double s0 = (ta.y.col(k) - tb.y.col(k)).dot(ta.u.col(k) - tb.u.col(k));
        const double s1 = (ta.y.col(k + 1) - tb.y.col(k + 1)).dot(ta.u.col(k + 1) - tb.u.col(k + 1));
        const double supply = 0.5 * (s0 + s1);
        const double xdot_scale = ((ta.x.col(k + 1) - ta.x.col(k)).norm() +
                                   (tb.x.col(k + 1) - tb.x.col(k)).norm()) / dt;
        const double tol = tol_base * (1.0 + xdot_scale) * (1.0 + std::abs(supply));
        if (vdot > supply + tol) {
            ++report.violations;
            report.max_violation = std::max(report.max_violation, vdot - supply - tol);
        }
    }
    return report;
}

}  // namespace oa
