#include "dnpg/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dnpg/errors.hpp"

namespace dnpg {

namespace {

using MatD = Eigen::MatrixXd;

constexpr double kMaxFrequency = 64.0;

double frequency(int k, int count) {
    if (count == 1) return 1.0;
    return std::pow(kMaxFrequency, static_cast<double>(k) / (count - 1));
}

MatD activate(const MatD& h, Activation a) {
    if (a == Activation::Tanh) return h.array().tanh().matrix();
    return (h.array() / (1.0 + (-h.array()).exp())).matrix();
}

MatD activation_slope(const MatD& h, Activation a) {
    if (a == Activation::Tanh) return (1.0 - h.array().tanh().square()).matrix();
    const auto sig = 1.0 / (1.0 + (-h.array()).exp());
    return (sig * (1.0 + h.array() * (1.0 - sig))).matrix();
}

// Column b = [z, sin/cos time features, embedding row of c_b].
MatD assemble_inputs(const DenoiserParams& params, const MatD& z, const std::vector<int>& ts,
                     const std::vector<int>& cs) {
    const auto& arch = params.arch;
    const auto B = static_cast<Eigen::Index>(ts.size());
    MatD x(arch.input_width(), B);
    const int F = arch.time_frequencies;
    for (Eigen::Index b = 0; b < B; ++b) {
        const int t = ts[static_cast<std::size_t>(b)];
        const int c = cs[static_cast<std::size_t>(b)];
        if (t < 1 || t > arch.time_steps) throw std::out_of_range("denoiser: t outside [1, T]");
        if (c < 0 || c >= arch.conditions) throw std::invalid_argument("denoiser: invalid condition id");
        x.block(0, b, arch.dim, 1) = z.col(b);
        const double tau = static_cast<double>(t) / arch.time_steps;
        for (int k = 0; k < F; ++k) {
            const double phase = 2.0 * std::numbers::pi * frequency(k, F) * tau;
            x(arch.dim + 2 * k, b) = std::sin(phase);
            x(arch.dim + 2 * k + 1, b) = std::cos(phase);
        }
        x.block(arch.dim + 2 * F, b, arch.embedding_width, 1) =
            params.tensors.embedding.row(c).transpose().cast<double>();
    }
    return x;
}

struct ForwardTrace {
    std::vector<MatD> pre;  // h_l for hidden layers
    std::vector<MatD> post; // a_0 = x, a_l = act(h_l)
    MatD out;
};

ForwardTrace forward(const DenoiserParams& params, MatD x) {
    ForwardTrace tr;
    const auto& W = params.tensors.weights;
    const auto& b = params.tensors.biases;
    tr.post.push_back(std::move(x));
    for (std::size_t l = 0; l + 1 < W.size(); ++l) {
        MatD h = W[l].cast<double>() * tr.post.back();
        h.colwise() += b[l].cast<double>();
        tr.post.push_back(activate(h, params.arch.activation));
        tr.pre.push_back(std::move(h));
    }
    tr.out = W.back().cast<double>() * tr.post.back();
    tr.out.colwise() += b.back().cast<double>();
    return tr;
}

template <class Scalar>
MlpTensors<Scalar> zero_tensors(const DenoiserArch& arch) {
    MlpTensors<Scalar> t;
    t.embedding = MlpTensors<Scalar>::Matrix::Zero(arch.conditions, arch.embedding_width);
    int in = arch.input_width();
    std::vector<int> outs = arch.hidden;
    outs.push_back(arch.dim);
    for (int out : outs) {
        t.weights.push_back(MlpTensors<Scalar>::Matrix::Zero(out, in));
        t.biases.push_back(MlpTensors<Scalar>::Vector::Zero(out));
        in = out;
    }
    return t;
}

} // namespace

void DenoiserArch::validate() const {
    if (dim < 1) throw ConfigError("denoiser.dim: must be >= 1");
    if (conditions < 2) throw ConfigError("denoiser.conditions: need phi plus at least one condition");
    if (time_steps < 1) throw ConfigError("denoiser.time_steps: must be >= 1");
    if (time_frequencies < 1) throw ConfigError("denoiser.time_frequencies: must be >= 1");
    if (embedding_width < 1) throw ConfigError("denoiser.embedding_width: must be >= 1");
    if (hidden.empty()) throw ConfigError("denoiser.hidden: need at least one hidden layer");
    for (int h : hidden)
        if (h < 1) throw ConfigError("denoiser.hidden: layer widths must be >= 1");
    if (activation != Activation::Tanh && activation != Activation::Silu)
        throw ConfigError("denoiser.activation: unknown activation");
}

template <class Scalar>
std::vector<Scalar> MlpTensors<Scalar>::flatten() const {
    std::vector<Scalar> flat;
    flat.reserve(size());
    auto push = [&](const Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    };
    push(embedding);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        push(weights[l]);
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat.push_back(biases[l][i]);
    }
    return flat;
}

template <class Scalar>
void MlpTensors<Scalar>::assign(const std::vector<Scalar>& flat) {
    if (flat.size() != size()) throw std::invalid_argument("parameter vector has the wrong length");
    std::size_t k = 0;
    auto pull = [&](Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
    };
    pull(embedding);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        pull(weights[l]);
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = flat[k++];
    }
}

template struct MlpTensors<float>;
template struct MlpTensors<double>;

DenoiserParams DenoiserParams::zeros(const DenoiserArch& arch) {
    arch.validate();
    return DenoiserParams{arch, zero_tensors<float>(arch)};
}

DenoiserParams DenoiserParams::initialize(const DenoiserArch& arch, std::uint64_t seed) {
    DenoiserParams p = zeros(arch);
    Rng rng(seed);
    auto fill = [&](auto& m, double bound) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
    };
    fill(p.tensors.embedding, 1.0);
    for (std::size_t l = 0; l < p.tensors.weights.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.tensors.weights[l].cols()));
        fill(p.tensors.weights[l], bound);
        fill(p.tensors.biases[l], bound);
    }
    return p;
}

bool DenoiserParams::all_finite() const {
    if (!tensors.embedding.allFinite()) return false;
    for (std::size_t l = 0; l < tensors.weights.size(); ++l)
        if (!tensors.weights[l].allFinite() || !tensors.biases[l].allFinite()) return false;
    return true;
}

Vec eps_theta(const DenoiserParams& params, const Vec& z_t, int t, int c) {
    if (z_t.size() != params.arch.dim) throw std::invalid_argument("eps_theta: dimension mismatch");
    MatD z = z_t;
    return forward(params, assemble_inputs(params, z, {t}, {c})).out.col(0);
}

LossAndGrad loss_and_grad(const DenoiserParams& params, const TrainingBatch& batch, const NoiseSchedule& schedule) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    if (B == 0) throw std::invalid_argument("loss_and_grad: empty batch");
    const auto& arch = params.arch;
    if (batch.z0.rows() != arch.dim || batch.eps.rows() != arch.dim || batch.z0.cols() != B ||
        batch.eps.cols() != B || batch.c.size() != batch.t.size())
        throw std::invalid_argument("loss_and_grad: batch shape mismatch");
    if (schedule.steps() != arch.time_steps) throw std::invalid_argument("loss_and_grad: schedule length mismatch");

    MatD zt(arch.dim, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const double ab = schedule.alpha_bar(batch.t[static_cast<std::size_t>(b)]);
        zt.col(b) = std::sqrt(ab) * batch.z0.col(b) + std::sqrt(1.0 - ab) * batch.eps.col(b);
    }
    ForwardTrace tr = forward(params, assemble_inputs(params, zt, batch.t, batch.c));
    const MatD resid = tr.out - batch.eps;
    LossAndGrad res;
    res.loss = resid.squaredNorm() / static_cast<double>(B);
    if (!std::isfinite(res.loss)) throw NumericalError("loss_and_grad: non-finite loss");

    res.grads = zero_tensors<double>(arch);
    const std::size_t L = params.tensors.weights.size();
    MatD delta = (2.0 / static_cast<double>(B)) * resid;
    for (std::size_t l = L; l-- > 0;) {
        res.grads.weights[l] = delta * tr.post[l].transpose();
        res.grads.biases[l] = delta.rowwise().sum();
        MatD back = params.tensors.weights[l].cast<double>().transpose() * delta;
        if (l > 0) {
            delta = back.cwiseProduct(activation_slope(tr.pre[l - 1], arch.activation));
        } else {
            const int offset = arch.dim + 2 * arch.time_frequencies;
            for (Eigen::Index b = 0; b < B; ++b)
                res.grads.embedding.row(batch.c[static_cast<std::size_t>(b)]) +=
                    back.block(offset, b, arch.embedding_width, 1).transpose();
        }
    }
    return res;
}

TrainingBatch draw_training_batch(const GmmWorld& world, const NoiseSchedule& schedule, Rng& rng,
                                  std::size_t batch_size, double p_uncond) {
    if (!(p_uncond >= 0.0 && p_uncond <= 1.0)) throw std::invalid_argument("p_uncond outside [0, 1]");
    TrainingBatch batch;
    const auto B = static_cast<Eigen::Index>(batch_size);
    batch.z0.resize(world.dim(), B);
    batch.eps.resize(world.dim(), B);
    batch.t.resize(batch_size);
    batch.c.resize(batch_size);
    const int C = world.condition_count();
    for (Eigen::Index b = 0; b < B; ++b) {
        const double u = rng.uniform();
        int c = C - 1;
        double acc = 0.0;
        for (int k = 1; k < C; ++k) {
            acc += world.condition(k).prior;
            if (u < acc) {
                c = k;
                break;
            }
        }
        batch.z0.col(b) = sample_clean(world, c, rng);
        batch.t[static_cast<std::size_t>(b)] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
        batch.eps.col(b) = rng.normal_vector(world.dim());
        const bool drop = rng.uniform() < p_uncond;
        batch.c[static_cast<std::size_t>(b)] = drop ? kPhi : c;
    }
    return batch;
}

void TrainConfig::validate() const {
    if (steps < 0) throw ConfigError("train.steps: must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be positive");
    if (!(final_learning_rate > 0.0)) throw ConfigError("train.final_learning_rate: must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1: must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2: must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps: must be positive");
    if (!(p_uncond >= 0.0 && p_uncond <= 1.0)) throw ConfigError("train.p_uncond: must be in [0, 1]");
}

TrainResult train(DenoiserParams params, const GmmWorld& world, const NoiseSchedule& schedule,
                  const TrainConfig& config) {
    config.validate();
    if (params.arch.dim != world.dim() || params.arch.conditions != world.condition_count())
        throw ConfigError("denoiser architecture does not match the world");
    if (params.arch.time_steps != schedule.steps()) throw ConfigError("denoiser time_steps does not match schedule");

    TrainResult result{std::move(params), {}};
    result.losses.reserve(static_cast<std::size_t>(config.steps));
    Rng rng(config.seed);
    std::vector<float> flat = result.params.tensors.flatten();
    std::vector<double> m(flat.size(), 0.0), v(flat.size(), 0.0);
    double b1t = 1.0, b2t = 1.0;
    for (int step = 0; step < config.steps; ++step) {
        const TrainingBatch batch =
            draw_training_batch(world, schedule, rng, static_cast<std::size_t>(config.batch_size), config.p_uncond);
        LossAndGrad lg;
        try {
            lg = loss_and_grad(result.params, batch, schedule);
        } catch (const NumericalError&) {
            throw NumericalError("training diverged at step " + std::to_string(step) + ": non-finite loss");
        }
        result.losses.push_back(lg.loss);
        const std::vector<double> g = lg.grads.flatten();
        b1t *= config.beta1;
        b2t *= config.beta2;
        const double progress = config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 1.0;
        const double lr = config.final_learning_rate +
                          0.5 * (config.learning_rate - config.final_learning_rate) *
                              (1.0 + std::cos(std::numbers::pi * progress));
        for (std::size_t i = 0; i < flat.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            flat[i] = static_cast<float>(flat[i] - lr * mhat / (std::sqrt(vhat) + config.adam_eps));
        }
        result.params.tensors.assign(flat);
    }
    return result;
}

double heldout_eps_mse(const DenoiserParams& params, const GmmWorld& world, const NoiseSchedule& schedule, int c,
                       std::size_t points, std::uint64_t seed) {
    if (points == 0) throw std::invalid_argument("heldout_eps_mse: no points");
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const Vec z0 = sample_clean(world, c, rng);
        const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
        const Vec eps = rng.normal_vector(world.dim());
        const Vec zt = forward_noise(z0, t, eps, schedule);
        const Vec target = eps_from_score(score(world, zt, t, c, schedule), t, schedule);
        total += (eps_theta(params, zt, t, c) - target).squaredNorm();
    }
    return total / static_cast<double>(points);
}

} // namespace dnpg
