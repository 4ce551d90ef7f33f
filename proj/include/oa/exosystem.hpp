#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "oa/linalg.hpp"

namespace oa {

/// Constant disturbance: s_i(w_i) = 0.
struct StaticBlock {
    int dim = 1;
};

/// Linear generator w_i' = S_i w_i with S_i skew-symmetric.
struct LinearSkewBlock {
    Matrix s;
    /// Planar rotation block [[0, -freq], [freq, 0]].
    static LinearSkewBlock rotation(double freq);
};

/// User-supplied vector field; incremental monotonicity is only certified
/// by sampling.
struct GeneralBlock {
    int dim = 1;
    std::function<Vector(const Vector&)> field;
};

using ExoBlock = std::variant<StaticBlock, LinearSkewBlock, GeneralBlock>;

struct MonotonicityReport {
    double max_inner_product = 0.0;
    bool pass = false;
    Vector witness_a, witness_b;  // violating pair, when pass is false
    int block_index = -1;
};

/// Disturbance generator w' = s(w), one block per node. Initial conditions
/// live in per-block axis-aligned boxes centered at the origin.
class Exosystem {
  public:
    explicit Exosystem(std::vector<ExoBlock> blocks, std::vector<double> box_half_widths = {});

    int dim() const { return dim_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    int block_dim(int i) const;
    int block_offset(int i) const { return offsets_[i]; }
    const std::vector<ExoBlock>& blocks() const { return blocks_; }

    bool is_linear() const;  // all blocks static or skew

    Vector vector_field(const Vector& w) const;

    /// Stacked linear generator matrix; throws if a GeneralBlock is present.
    Matrix stacked_matrix() const;

    /// Exact solution w(t) = exp(S t) w0, blockwise. Throws for GeneralBlock.
    Vector closed_form(const Vector& w0, double t) const;

    /// Samples pairs from the initial-condition boxes and evaluates
    /// (w - w')^T (s(w) - s(w')); passes if the maximum stays <= tol.
    MonotonicityReport check_incremental_monotonicity(int sample_count, unsigned seed,
                                                      double tol = 1e-12) const;

  private:
    std::vector<ExoBlock> blocks_;
    std::vector<double> half_widths_;
    std::vector<int> offsets_;
    int dim_ = 0;
};

}  // namespace oa
