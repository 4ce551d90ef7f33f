#include "oa/exosystem.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace oa {

LinearSkewBlock LinearSkewBlock::rotation(double freq) {
    Matrix s(2, 2);
    s << 0.0, -freq, freq, 0.0;
    return LinearSkewBlock{s};
}

namespace {

int dim_of(const ExoBlock& b) {
    return std::visit(
        [](const auto& blk) -> int {
            using T = std::decay_t<decltype(blk)>;
            if constexpr (std::is_same_v<T, LinearSkewBlock>)
                return static_cast<int>(blk.s.rows());
            else
                return blk.dim;
        },
        b);
}

}  // namespace

Exosystem::Exosystem(std::vector<ExoBlock> blocks, std::vector<double> box_half_widths)
    : blocks_(std::move(blocks)), half_widths_(std::move(box_half_widths)) {
    if (blocks_.empty()) throw std::invalid_argument("Exosystem: no blocks");
    if (half_widths_.empty()) half_widths_.assign(blocks_.size(), 1.0);
    if (half_widths_.size() != blocks_.size())
        throw std::invalid_argument("Exosystem: one box per block expected");
    for (const auto& b : blocks_) {
        if (const auto* skew = std::get_if<LinearSkewBlock>(&b)) {
            if (skew->s.rows() != skew->s.cols())
                throw std::invalid_argument("Exosystem: skew block not square");
            if ((skew->s.transpose() + skew->s).cwiseAbs().maxCoeff() >= 1e-12)
                throw std::invalid_argument("Exosystem: block is not skew-symmetric");
        }
        offsets_.push_back(dim_);
        dim_ += dim_of(b);
    }
}

int Exosystem::block_dim(int i) const { return dim_of(blocks_[static_cast<size_t>(i)]); }

bool Exosystem::is_linear() const {
    for (const auto& b : blocks_)
        if (std::holds_alternative<GeneralBlock>(b)) return false;
    return true;
}

Vector Exosystem::vector_field(const Vector& w) const {
    if (w.size() != dim_) throw std::invalid_argument("Exosystem: dimension mismatch");
    Vector out(dim_);
    for (int i = 0; i < block_count(); ++i) {
        const int d = block_dim(i);
        const auto seg = w.segment(offsets_[i], d);
        std::visit(
            [&](const auto& blk) {
                using T = std::decay_t<decltype(blk)>;
                if constexpr (std::is_same_v<T, StaticBlock>)
                    out.segment(offsets_[i], d).setZero();
                else if constexpr (std::is_same_v<T, LinearSkewBlock>)
                    out.segment(offsets_[i], d) = blk.s * seg;
                else
                    out.segment(offsets_[i], d) = blk.field(seg);
            },
            blocks_[static_cast<size_t>(i)]);
    }
    return out;
}

Matrix Exosystem::stacked_matrix() const {
    if (!is_linear()) throw std::runtime_error("Exosystem: not linear");
    Matrix s = Matrix::Zero(dim_, dim_);
    for (int i = 0; i < block_count(); ++i)
        if (const auto* skew = std::get_if<LinearSkewBlock>(&blocks_[static_cast<size_t>(i)]))
            s.block(offsets_[i], offsets_[i], block_dim(i), block_dim(i)) = skew->s;
    return s;
}

Vector Exosystem::closed_form(const Vector& w0, double t) const {
    if (w0.size() != dim_) throw std::invalid_argument("Exosystem: dimension mismatch");
    Vector out(dim_);
    for (int i = 0; i < block_count(); ++i) {
        const int d = block_dim(i);
        const auto seg = w0.segment(offsets_[i], d);
        std::visit(
            [&](const auto& blk) {
                using T = std::decay_t<decltype(blk)>;
                if constexpr (std::is_same_v<T, StaticBlock>) {
                    out.segment(offsets_[i], d) = seg;
                } else if constexpr (std::is_same_v<T, LinearSkewBlock>) {
                    if (d == 2) {
                        const double freq = blk.s(1, 0);
                        const double c = std::cos(freq * t), sn = std::sin(freq * t);
                        out(offsets_[i]) = c * seg(0) - sn * seg(1);
                        out(offsets_[i] + 1) = sn * seg(0) + c * seg(1);
                    } else {
                        out.segment(offsets_[i], d) = (blk.s * t).exp() * seg;
                    }
                } else {
                    throw std::runtime_error("Exosystem: no closed form for general blocks");
                }
            },
            blocks_[static_cast<size_t>(i)]);
    }
    return out;
}

MonotonicityReport Exosystem::check_incremental_monotonicity(int sample_count, unsigned seed,
                                                             double tol) const {
    if (sample_count < 1) throw std::invalid_argument("Exosystem: sample_count must be >= 1");
    std::mt19937_64 rng(seed);
    MonotonicityReport report;
    report.pass = true;
    report.max_inner_product = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < block_count(); ++i) {
        const int d = block_dim(i);
        std::uniform_real_distribution<double> dist(-half_widths_[static_cast<size_t>(i)],
                                                    half_widths_[static_cast<size_t>(i)]);
        for (int sample = 0; sample < sample_count; ++sample) {
            Vector a(d), b(d);
            for (int j = 0; j < d; ++j) {
                a(j) = dist(rng);
                b(j) = dist(rng);
            }
            Vector fa = std::visit(
                [&](const auto& blk) -> Vector {
                    using T = std::decay_t<decltype(blk)>;
                    if constexpr (std::is_same_v<T, StaticBlock>) return Vector::Zero(d);
                    else if constexpr (std::is_same_v<T, LinearSkewBlock>) return blk.s * a;
                    else return blk.field(a);
                },
                blocks_[static_cast<size_t>(i)]);
            Vector fb = std::visit(
                [&](const auto& blk) -> Vector {
                    using T = std::decay_t<decltype(blk)>;
                    if constexpr (std::is_same_v<T, StaticBlock>) return Vector::Zero(d);
                    else if constexpr (std::is_same_v<T, LinearSkewBlock>) return blk.s * b;
                    else return blk.field(b);
                },
                blocks_[static_cast<size_t>(i)]);
            const double inner = (a - b).dot(fa - fb);
            if (inner > report.max_inner_product) {
                report.max_inner_product = inner;
                if (inner > tol) {  // witness the worst violating pair
                    report.witness_a = a;
                    report.witness_b = b;
                    report.block_index = i;
                }
            }
            if (inner > tol) report.pass = false;
        }
    }
    return report;
}

}  // namespace oa
