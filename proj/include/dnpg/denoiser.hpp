#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "dnpg/rng.hpp"
#include "dnpg/schedule.hpp"
#include "dnpg/world.hpp"

namespace dnpg {

enum class Activation : std::uint32_t { Tanh = 0, Silu = 1 };

/// Shape of the noise-prediction MLP. Input is [z_t, time features, condition
/// embedding]; time features are sin/cos(2 pi f_k t/T) for frequencies f_k
/// spaced geometrically over [1, 64].
struct DenoiserArch {
    int dim = 1;
    int conditions = 2; ///< embedding rows, phi included
    int time_steps = 1000;
    std::vector<int> hidden{128, 128, 128};
    int time_frequencies = 16;
    int embedding_width = 16;
    Activation activation = Activation::Silu;

    int input_width() const { return dim + 2 * time_frequencies + embedding_width; }
    void validate() const;
    bool operator==(const DenoiserArch&) const = default;
};

template <class Scalar>
struct MlpTensors {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Matrix embedding;            ///< conditions x embedding_width
    std::vector<Matrix> weights; ///< layer l: out x in
    std::vector<Vector> biases;

    std::size_t size() const {
        std::size_t n = static_cast<std::size_t>(embedding.size());
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        return n;
    }

    /// Embedding, then per layer W and b; matrices row-major.
    std::vector<Scalar> flatten() const;
    void assign(const std::vector<Scalar>& flat);
};

/// Parameters are stored as 32-bit floats (the checkpoint precision); all
/// arithmetic runs in double.
struct DenoiserParams {
    DenoiserArch arch;
    MlpTensors<float> tensors;

    static DenoiserParams zeros(const DenoiserArch& arch);
    /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); embeddings ~ U(-1, 1).
    static DenoiserParams initialize(const DenoiserArch& arch, std::uint64_t seed);

    bool all_finite() const;
};

/// Time-conditioned noise prediction for a single point. Bit-deterministic.
Vec eps_theta(const DenoiserParams& params, const Vec& z_t, int t, int c);

struct TrainingBatch {
    Eigen::MatrixXd z0;  ///< dim x B
    Eigen::MatrixXd eps; ///< dim x B
    std::vector<int> t;
    std::vector<int> c;

    std::size_t size() const { return t.size(); }
};

struct LossAndGrad {
    double loss = 0.0;
    MlpTensors<double> grads;
};

/// Mean over the batch of ||eps - eps_theta(z_t; t, c)||^2 and its exact gradient.
LossAndGrad loss_and_grad(const DenoiserParams& params, const TrainingBatch& batch, const NoiseSchedule& schedule);

/// Per entry, in stream order: condition from the prior, z0 ~ p(z|c),
/// t ~ U{1..T}, eps ~ N(0, I), then with probability p_uncond c := phi.
TrainingBatch draw_training_batch(const GmmWorld& world, const NoiseSchedule& schedule, Rng& rng,
                                  std::size_t batch_size, double p_uncond);

struct TrainConfig {
    int steps = 20000;
    int batch_size = 128;
    double learning_rate = 1e-3;
    /// Learning rate reached at the last step, by cosine decay; defaults to constant.
    double final_learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double p_uncond = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    DenoiserParams params;
    std::vector<double> losses;
};

/// Adam on freshly drawn batches. Throws NumericalError on a non-finite loss.
TrainResult train(DenoiserParams params, const GmmWorld& world, const NoiseSchedule& schedule,
                  const TrainConfig& config);

/// Mean squared eps error against the analytic oracle over `points` held-out
/// forward-process draws with condition `c` (phi: marginal).
double heldout_eps_mse(const DenoiserParams& params, const GmmWorld& world, const NoiseSchedule& schedule, int c,
                       std::size_t points, std::uint64_t seed);

} // namespace dnpg
