#pragma once

#include "dynmri/core.hpp"
#include "dynmri/operators.hpp"
#include "dynmri/regularization.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace dynmri {

/// Primal and dual iterates of one chunk.
///
/// z, z_bar, y3 and y4 hold the structural-prior splitting and are only
/// populated for ICBTV; the other vectors have one entry per frame.
struct SolverState {
    std::vector<Image> u, u_bar;
    std::vector<Image> z, z_bar;
    std::vector<ComplexVector> y1;
    std::vector<VectorField> y2, y3, y4;
    std::size_t iteration = 0;
    double energy = 0.0;
    double residual = 0.0;

    std::size_t frame_count() const { return u.size(); }
    bool has_splitting() const { return !z.empty(); }
};

/// Fixed first frame of a chunk, coupled to the chunk's first frame by `gamma`.
struct WarmFrame {
    Image frame;
    double gamma = 0.0;
};

struct ConvergenceRecord {
    std::size_t chunk = 0;
    std::size_t iteration = 0;
    double energy = 0.0;
    double residual = 0.0;
};

struct ChunkRange {
    std::size_t first = 0; // 0-based, inclusive
    std::size_t last = 0;  // inclusive
    std::optional<std::size_t> link_frame;

    std::size_t size() const { return last - first + 1; }
    bool operator==(const ChunkRange &) const = default;
};

std::vector<ChunkRange> chunk_schedule(std::size_t frames, std::size_t chunk_size);

struct ChunkReport {
    ChunkRange range;
    double tau = 0.0;
    double sigma = 0.0;
    double operator_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double energy = 0.0;
    double residual = 0.0;
};

struct Reconstruction {
    ImageSequence frames;
    bool converged = true;
    std::vector<ChunkReport> chunks;
    std::vector<ConvergenceRecord> history;
};

struct SolveOptions {
    // Called after every iteration with the chunk index and state.
    std::function<void(std::size_t, const SolverState &)> on_iteration;
};

// Primal objective of the current iterate. For ICBTV the current z is used as
// the splitting, so the value bounds the exact objective from above.
double energy_value(const SolverState &state, const KSpaceData &data, const MethodSpec &spec,
                    const SubgradientField *sub, const WarmFrame *warm = nullptr);

// Combined primal and dual residual between consecutive iterates, each part
// normalized by the square root of its dimension.
double pd_residual(const SolverState &before, const SolverState &after, const KSpaceData &data,
                   const MethodSpec &spec, double tau, double sigma);

/// Primal-dual iteration for one chunk of frames.
class ChunkSolver {
public:
    // `data` and `spec` cover exactly the chunk's frames.
    ChunkSolver(KSpaceData data, MethodSpec spec, const SubgradientField *sub,
                std::optional<WarmFrame> warm, double tau, double sigma);

    void iterate();
    const SolverState &state() const { return state_; }
    double energy() const;
    // Stores the diagnostics of the latest convergence check in the state.
    void record_check(double energy, double residual);

    double tau() const { return tau_; }
    double sigma() const { return sigma_; }

    // Auto step size 0.99 / ||L|| for the chunk's stacked operator.
    static double auto_step(const KSpaceData &data, const MethodSpec &spec, double *norm_out = nullptr);

private:
    void apply_forward(std::size_t t, const Image &u, ComplexVector &out);
    void apply_adjoint(std::size_t t, std::span<const Complex> z, Image &out);

    KSpaceData data_;
    MethodSpec spec_;
    const SubgradientField *sub_;
    std::optional<WarmFrame> warm_;
    double tau_;
    double sigma_;
    SolverState state_;
    Image spectrum_;
    Image scratch_;
    Image div2_, div3_, div4_, ky_;
    std::vector<Image> next_u_, next_z_;
    ComplexVector kx_;
};

Reconstruction reconstruct_dynamic(const KSpaceData &data, const MethodSpec &spec,
                                   const SubgradientField *sub = nullptr,
                                   std::optional<WarmFrame> warm = std::nullopt,
                                   const SolveOptions &options = {});

struct PriorResult {
    Image image;
    bool converged = false;
    std::size_t iterations = 0;
    double tau = 0.0;
    double sigma = 0.0;
    ComplexVector y1;
    VectorField y2;
    std::vector<ConvergenceRecord> history;
};

// TV-regularized reconstruction of frame 0 of `pattern` from `f0`.
PriorResult reconstruct_prior(const ComplexVector &f0, const SamplingPattern &pattern, double alpha0,
                              const StoppingRule &stopping, std::optional<double> tau = std::nullopt,
                              std::optional<double> sigma = std::nullopt);

// Minimum-norm least squares by conjugate gradients on the normal equations.
Image ls_reconstruct(std::span<const Complex> f, const SamplingPattern &pattern, std::size_t t,
                     std::size_t iterations = 50);

} // namespace dynmri
