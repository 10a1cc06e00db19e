#include "dynmri/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dynmri {

std::vector<ChunkRange> chunk_schedule(std::size_t frames, std::size_t chunk_size) {
    if (chunk_size == 0) throw Error(ErrorCategory::Config, "chunk size must be at least 1");
    std::vector<ChunkRange> chunks;
    for (std::size_t first = 0; first < frames; first += chunk_size) {
        ChunkRange range;
        range.first = first;
        range.last = std::min(frames, first + chunk_size) - 1;
        if (first > 0) range.link_frame = first - 1;
        chunks.push_back(range);
    }
    return chunks;
}

namespace {

// y <- projection of y + sigma * grad(u) onto the pixelwise ball of the given radius.
void ascend_projected(VectorField &y, const Image &u, double sigma, double radius) {
    if (radius == 0.0) {
        std::fill(y.dx.begin(), y.dx.end(), Complex{});
        std::fill(y.dy.begin(), y.dy.end(), Complex{});
        return;
    }
    const std::size_t h = u.shape().height, w = u.shape().width;
    const Complex *pu = u.data().data();
    Complex *px = y.dx.data();
    Complex *py = y.dy.data();
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t n = r * w + c;
            if (c + 1 < w) px[n] += sigma * (pu[n + 1] - pu[n]);
            if (r + 1 < h) py[n] += sigma * (pu[n + w] - pu[n]);
            const double magnitude = std::sqrt(std::norm(px[n]) + std::norm(py[n]));
            if (magnitude > radius) {
                const double scale = radius / magnitude;
                px[n] *= scale;
                py[n] *= scale;
            }
        }
    }
}

bool uses_splitting(const MethodSpec &spec) { return spec.method == Method::ICBTV; }

// Coupling weight between chunk-local frames t and t + 1 (zero past the end).
double forward_gamma(const MethodSpec &spec, std::size_t t, std::size_t frames) {
    return t + 1 < frames ? spec.temporal_weight(t) : 0.0;
}

void check_state(const SolverState &state, const KSpaceData &data, const MethodSpec &spec) {
    if (state.frame_count() != data.frame_count() || spec.frame_count() != data.frame_count())
        throw Error(ErrorCategory::Dimension, "solver state, data and weights cover different frame counts");
}

MethodSpec slice(const MethodSpec &spec, std::size_t first, std::size_t count) {
    MethodSpec out = spec;
    auto cut = [&](const std::vector<double> &v) {
        return std::vector<double>(v.begin() + first, v.begin() + first + count);
    };
    out.alpha = cut(spec.alpha);
    out.gamma = cut(spec.gamma);
    out.w = cut(spec.w);
    return out;
}

} // namespace

double energy_value(const SolverState &state, const KSpaceData &data, const MethodSpec &spec,
                    const SubgradientField *sub, const WarmFrame *warm) {
    check_state(state, data, spec);
    const std::size_t frames = state.frame_count();
    double energy = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
        const Image &u = state.u[t];
        if (data.pattern.sample_count(t) > 0) {
            ComplexVector residual = forward_op(u, data.pattern, t);
            for (std::size_t k = 0; k < residual.size(); ++k) residual[k] -= data.samples[t][k];
            energy += 0.5 * spec.alpha[t] * norm_squared(residual);
        }
        const double tv = spec.tv_weight(t);
        if (tv > 0.0) energy += tv * tv_value(u);
        const double icb = spec.icb_weight(t);
        if (icb > 0.0) {
            if (!sub) throw Error(ErrorCategory::Config, "ICBTV energy needs a subgradient field");
            const Image &z = state.z[t];
            energy += icb * (tv_value(u - z) + tv_value(z) - inner_product(sub->p0, u) +
                             2.0 * inner_product(sub->p0, z));
        }
        const double gamma = forward_gamma(spec, t, frames);
        if (gamma > 0.0) energy += 0.5 * gamma * norm_squared((state.u[t + 1] - u).data());
    }
    if (warm && warm->gamma > 0.0 && frames > 0)
        energy += 0.5 * warm->gamma * norm_squared((state.u[0] - warm->frame).data());
    return energy;
}

double pd_residual(const SolverState &before, const SolverState &after, const KSpaceData &data,
                   const MethodSpec &spec, double tau, double sigma) {
    check_state(before, data, spec);
    check_state(after, data, spec);
    double primal_sq = 0.0, dual_sq = 0.0;
    std::size_t primal_dim = 0, dual_dim = 0;
    const bool split = uses_splitting(spec) && before.has_splitting() && after.has_splitting();

    for (std::size_t t = 0; t < before.frame_count(); ++t) {
        const GridShape shape = before.u[t].shape();
        const Image du = before.u[t] - after.u[t];
        Image primal_u = (1.0 / tau) * du;
        const bool data_block = data.pattern.sample_count(t) > 0;
        const bool tv_block = spec.tv_weight(t) > 0.0;
        const bool icb_block = split && spec.icb_weight(t) > 0.0;

        if (data_block) {
            ComplexVector dy1(before.y1[t].size());
            for (std::size_t k = 0; k < dy1.size(); ++k) dy1[k] = before.y1[t][k] - after.y1[t][k];
            primal_u -= adjoint_op(dy1, data.pattern, t);
            ComplexVector k_du = forward_op(du, data.pattern, t);
            for (std::size_t k = 0; k < dy1.size(); ++k) dual_sq += std::norm(dy1[k] / sigma - k_du[k]);
            dual_dim += dy1.size();
        }
        const VectorField grad_du = gradient(du);
        if (tv_block) {
            const VectorField dy2 = before.y2[t] - after.y2[t];
            primal_u += divergence(dy2);
            const VectorField d = (1.0 / sigma) * dy2 - grad_du;
            dual_sq += norm_squared(d.dx) + norm_squared(d.dy);
            dual_dim += 2 * shape.size();
        }
        if (icb_block) {
            const Image dz = before.z[t] - after.z[t];
            const VectorField dy3 = before.y3[t] - after.y3[t];
            const VectorField dy4 = before.y4[t] - after.y4[t];
            const Image div3 = divergence(dy3);
            const Image div4 = divergence(dy4);
            primal_u += div3;
            Image primal_z = (1.0 / tau) * dz - (div3 - div4);
            primal_sq += norm_squared(primal_z.data());
            primal_dim += shape.size();
            const VectorField grad_dz = gradient(dz);
            const VectorField d3 = (1.0 / sigma) * dy3 - (grad_du - grad_dz);
            const VectorField d4 = (1.0 / sigma) * dy4 - grad_dz;
            dual_sq += norm_squared(d3.dx) + norm_squared(d3.dy) + norm_squared(d4.dx) + norm_squared(d4.dy);
            dual_dim += 4 * shape.size();
        }
        primal_sq += norm_squared(primal_u.data());
        primal_dim += shape.size();
    }
    double residual = 0.0;
    if (primal_dim > 0) residual += std::sqrt(primal_sq / static_cast<double>(primal_dim));
    if (dual_dim > 0) residual += std::sqrt(dual_sq / static_cast<double>(dual_dim));
    return residual;
}

ChunkSolver::ChunkSolver(KSpaceData data, MethodSpec spec, const SubgradientField *sub,
                         std::optional<WarmFrame> warm, double tau, double sigma)
    : data_(std::move(data)), spec_(std::move(spec)), sub_(sub), warm_(std::move(warm)), tau_(tau),
      sigma_(sigma) {
    data_.validate();
    const std::size_t frames = data_.frame_count();
    spec_.validate(frames);
    if (!(tau_ > 0.0) || !(sigma_ > 0.0)) throw Error(ErrorCategory::Config, "step sizes must be positive");
    const GridShape shape = data_.pattern.shape();
    if (uses_splitting(spec_)) {
        if (!sub_) throw Error(ErrorCategory::Config, "ICBTV needs a subgradient field from the prior");
        if (sub_->shape() != shape)
            throw Error(ErrorCategory::Dimension, "subgradient grid does not match the data grid");
    }
    if (warm_ && warm_->frame.shape() != shape)
        throw Error(ErrorCategory::Dimension, "warm frame grid does not match the data grid");

    spectrum_ = Image(shape);
    scratch_ = Image(shape);
    div2_ = div3_ = div4_ = ky_ = Image(shape);
    next_u_.assign(frames, Image(shape));
    if (uses_splitting(spec_)) next_z_.assign(frames, Image(shape));
    for (std::size_t t = 0; t < frames; ++t) {
        Image u0(shape);
        apply_adjoint(t, data_.samples[t], u0);
        state_.u.push_back(u0);
        state_.u_bar.push_back(std::move(u0));
        state_.y1.emplace_back(data_.samples[t].size());
        state_.y2.emplace_back(shape);
        if (uses_splitting(spec_)) {
            state_.z.emplace_back(shape);
            state_.z_bar.emplace_back(shape);
            state_.y3.emplace_back(shape);
            state_.y4.emplace_back(shape);
        }
    }
    state_.energy = energy();
}

void ChunkSolver::apply_forward(std::size_t t, const Image &u, ComplexVector &out) {
    forward_op(u, data_.pattern, t, spectrum_, out);
}

void ChunkSolver::apply_adjoint(std::size_t t, std::span<const Complex> z, Image &out) {
    adjoint_op(z, data_.pattern, t, spectrum_, out);
}

double ChunkSolver::energy() const {
    return energy_value(state_, data_, spec_, sub_, warm_ ? &*warm_ : nullptr);
}

void ChunkSolver::record_check(double energy, double residual) {
    state_.energy = energy;
    state_.residual = residual;
}

void ChunkSolver::iterate() {
    const std::size_t frames = state_.frame_count();
    const bool split = state_.has_splitting();
    ComplexVector &kx = kx_;

    // Dual ascent.
    for (std::size_t t = 0; t < frames; ++t) {
        const double alpha = spec_.alpha[t];
        auto &y1 = state_.y1[t];
        if (!y1.empty()) {
            apply_forward(t, state_.u_bar[t], kx);
            const auto &f = data_.samples[t];
            for (std::size_t k = 0; k < y1.size(); ++k) y1[k] = alpha * (y1[k] + sigma_ * (kx[k] - f[k])) / (alpha + sigma_);
        }

        const double tv = spec_.tv_weight(t);
        if (tv > 0.0) ascend_projected(state_.y2[t], state_.u_bar[t], sigma_, tv);
        if (split) {
            const double icb = spec_.icb_weight(t);
            for (std::size_t n = 0; n < scratch_.size(); ++n) scratch_[n] = state_.u_bar[t][n] - state_.z_bar[t][n];
            ascend_projected(state_.y3[t], scratch_, sigma_, icb);
            ascend_projected(state_.y4[t], state_.z_bar[t], sigma_, icb);
        }
    }

    // Primal descent. Neighbouring frames enter with their previous iterate.
    std::vector<Image> &next_u = next_u_;
    std::vector<Image> &next_z = next_z_;
    Image &div2 = div2_, &div3 = div3_, &div4 = div4_, &ky = ky_;
    for (std::size_t t = 0; t < frames; ++t) {
        const Image &u = state_.u[t];
        apply_adjoint(t, state_.y1[t], ky);
        divergence(state_.y2[t], div2);
        const double icb = split ? spec_.icb_weight(t) : 0.0;
        if (split) {
            divergence(state_.y3[t], div3);
            divergence(state_.y4[t], div4);
        }

        const double gamma_next = forward_gamma(spec_, t, frames);
        double gamma_prev = 0.0;
        const Image *prev = nullptr;
        if (t > 0) {
            gamma_prev = spec_.temporal_weight(t - 1);
            prev = &state_.u[t - 1];
        } else if (warm_) {
            gamma_prev = warm_->gamma;
            prev = &warm_->frame;
        }
        const Image *next = gamma_next > 0.0 ? &state_.u[t + 1] : nullptr;
        const double denom = tau_ * (gamma_next + gamma_prev) + 1.0;

        Image &out = next_u[t];
        for (std::size_t n = 0; n < out.size(); ++n) {
            Complex bracket = ky[n] - div2[n];
            if (split) bracket -= div3[n] + icb * sub_->p0[n];
            Complex value = u[n] - tau_ * bracket;
            if (next) value += tau_ * gamma_next * (*next)[n];
            if (prev && gamma_prev > 0.0) value += tau_ * gamma_prev * (*prev)[n];
            out[n] = value / denom;
        }
        if (split) {
            const Image &z = state_.z[t];
            Image &zout = next_z[t];
            for (std::size_t n = 0; n < zout.size(); ++n)
                zout[n] = z[n] - tau_ * (2.0 * icb * sub_->p0[n] + div3[n] - div4[n]);
        }
    }

    // Over-relaxation.
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t n = 0; n < next_u[t].size(); ++n)
            state_.u_bar[t][n] = 2.0 * next_u[t][n] - state_.u[t][n];
        std::swap(state_.u[t], next_u[t]);
        if (split) {
            for (std::size_t n = 0; n < next_z[t].size(); ++n)
                state_.z_bar[t][n] = 2.0 * next_z[t][n] - state_.z[t][n];
            std::swap(state_.z[t], next_z[t]);
        }
    }
    ++state_.iteration;
}

double ChunkSolver::auto_step(const KSpaceData &data, const MethodSpec &spec, double *norm_out) {
    const std::size_t frames = data.frame_count();
    std::vector<double> tv(frames), icb(frames);
    for (std::size_t t = 0; t < frames; ++t) {
        tv[t] = spec.tv_weight(t);
        icb[t] = spec.icb_weight(t);
    }
    const double estimate = operator_norm_estimate(data.pattern, tv, icb, true);
    if (norm_out) *norm_out = estimate;
    // An all-empty chunk without regularization has a zero operator; any step is stable.
    return estimate > 0.0 ? 0.99 / estimate : 1.0;
}

namespace {

struct ChunkOutcome {
    SolverState state;
    ChunkReport report;
};

ChunkOutcome solve_chunk(const KSpaceData &data, const MethodSpec &spec, const SubgradientField *sub,
                         std::optional<WarmFrame> warm, std::size_t chunk_index, const SolveOptions &options,
                         std::vector<ConvergenceRecord> &history) {
    ChunkReport report;
    double auto_step = 0.0;
    if (!spec.tau || !spec.sigma) auto_step = ChunkSolver::auto_step(data, spec, &report.operator_norm);
    report.tau = spec.tau.value_or(auto_step);
    report.sigma = spec.sigma.value_or(auto_step);

    ChunkSolver solver(data, spec, sub, std::move(warm), report.tau, report.sigma);
    const StoppingRule &rule = spec.stopping;
    double last_energy = solver.state().energy;
    SolverState before;

    for (std::size_t iter = 1; iter <= rule.max_iterations; ++iter) {
        const bool check = iter % rule.check_interval == 0 || iter == rule.max_iterations;
        if (check) before = solver.state();
        solver.iterate();
        if (options.on_iteration) options.on_iteration(chunk_index, solver.state());
        if (!check) continue;

        const double energy = solver.energy();
        if (!std::isfinite(energy)) {
            std::ostringstream msg;
            msg << "energy became non-finite at iteration " << iter << " (tau " << report.tau << ", sigma "
                << report.sigma << ", tau*sigma*||L||^2 = "
                << report.tau * report.sigma * report.operator_norm * report.operator_norm
                << "); reduce the step sizes";
            throw Error(ErrorCategory::Divergence, msg.str());
        }
        solver.record_check(energy, pd_residual(before, solver.state(), data, spec, report.tau, report.sigma));
        const SolverState &state = solver.state();
        history.push_back({chunk_index, iter, state.energy, state.residual});

        const double change = std::abs(state.energy - last_energy) / std::max(std::abs(last_energy), 1e-300);
        last_energy = state.energy;
        report.iterations = iter;
        report.energy = state.energy;
        report.residual = state.residual;
        if (change < rule.energy_tolerance && state.residual < rule.residual_tolerance) {
            report.converged = true;
            break;
        }
    }
    return {solver.state(), report};
}

} // namespace

Reconstruction reconstruct_dynamic(const KSpaceData &data, const MethodSpec &spec, const SubgradientField *sub,
                                   std::optional<WarmFrame> warm, const SolveOptions &options) {
    data.validate();
    const std::size_t frames = data.frame_count();
    if (frames == 0) throw Error(ErrorCategory::Dimension, "no frames to reconstruct");
    spec.validate(frames);
    if (spec.method == Method::ICBTV && !sub)
        throw Error(ErrorCategory::Config, "method icbtv requires a prior subgradient field");

    Reconstruction result;
    result.frames = ImageSequence(data.pattern.shape(), frames);

    if (spec.method == Method::LS) {
        for (std::size_t t = 0; t < frames; ++t)
            result.frames[t] = ls_reconstruct(data.samples[t], data.pattern, t, spec.ls_iterations);
        return result;
    }

    const auto chunks = chunk_schedule(frames, spec.chunk_size);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const ChunkRange &range = chunks[c];
        std::optional<WarmFrame> link;
        if (range.link_frame) {
            link = WarmFrame{result.frames[*range.link_frame], spec.temporal_weight(*range.link_frame)};
        } else if (warm) {
            link = warm;
        }
        const KSpaceData chunk_data = data.frames(range.first, range.size());
        const MethodSpec chunk_spec = slice(spec, range.first, range.size());
        ChunkOutcome outcome = solve_chunk(chunk_data, chunk_spec, sub, std::move(link), c, options, result.history);
        for (std::size_t t = 0; t < range.size(); ++t) result.frames[range.first + t] = outcome.state.u[t];
        outcome.report.range = range;
        result.converged = result.converged && outcome.report.converged;
        result.chunks.push_back(outcome.report);
    }
    return result;
}

PriorResult reconstruct_prior(const ComplexVector &f0, const SamplingPattern &pattern, double alpha0,
                              const StoppingRule &stopping, std::optional<double> tau,
                              std::optional<double> sigma) {
    if (!(alpha0 > 0.0)) throw Error(ErrorCategory::Config, "prior weight alpha0 must be positive");
    KSpaceData data{pattern.frames(0, 1), {f0}};
    MethodSpec spec = MethodSpec::uniform(Method::TV, 1, alpha0, 0.0, 1.0);
    spec.stopping = stopping;
    spec.tau = tau;
    spec.sigma = sigma;
    spec.validate(1);

    PriorResult result;
    ChunkOutcome outcome = solve_chunk(data, spec, nullptr, std::nullopt, 0, {}, result.history);
    result.image = outcome.state.u[0];
    result.converged = outcome.report.converged;
    result.iterations = outcome.report.iterations;
    result.tau = outcome.report.tau;
    result.sigma = outcome.report.sigma;
    result.y1 = outcome.state.y1[0];
    result.y2 = outcome.state.y2[0];
    return result;
}

Image ls_reconstruct(std::span<const Complex> f, const SamplingPattern &pattern, std::size_t t,
                     std::size_t iterations) {
    const GridShape shape = pattern.shape();
    Image x(shape);
    if (pattern.sample_count(t) == 0) return x;
    auto normal = [&](const Image &v) { return adjoint_op(forward_op(v, pattern, t), pattern, t); };

    Image r = adjoint_op(f, pattern, t);
    Image p = r;
    double rr = norm_squared(r.data());
    const double stop = 1e-28 * rr;
    for (std::size_t k = 0; k < iterations && rr > stop; ++k) {
        const Image ap = normal(p);
        const double pap = inner_product(p, ap);
        if (!(pap > 0.0)) break;
        const double step = rr / pap;
        for (std::size_t n = 0; n < x.size(); ++n) {
            x[n] += step * p[n];
            r[n] -= step * ap[n];
        }
        const double rr_next = norm_squared(r.data());
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t n = 0; n < p.size(); ++n) p[n] = r[n] + beta * p[n];
    }
    return x;
}

} // namespace dynmri
