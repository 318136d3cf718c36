#ifndef FLEX_NN_HPP
#define FLEX_NN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flex/matrix.hpp"
#include "flex/rng.hpp"

namespace flex {

// Dense MLP with tanh hidden activations and a linear output layer.
struct MlpLayer {
    Matrix w; // out x in, row-major
    std::vector<double> b;
};

struct MlpParams {
    std::vector<MlpLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
    std::size_t parameter_count() const;
};

// Same shapes as the parameters; holds accumulated partial derivatives.
using Gradient = MlpParams;

// dims = {in, h1, ..., out}. Rows of each weight matrix are orthogonalized
// Gaussian draws scaled by `gain` (output layer by `output_gain`); biases 0.
MlpParams make_mlp(const std::vector<int>& dims, Rng& rng, double gain = 1.0,
                   double output_gain = 1.0);

Gradient zero_gradient(const MlpParams& params);

std::vector<double> forward(const MlpParams& params, std::span<const double> input);

// Forward pass that stores per-layer activations for a later backward pass.
struct ForwardCache {
    std::vector<std::vector<double>> act; // act[0] = input copy, act[k] = layer k output
};
const std::vector<double>& forward_cached(const MlpParams& params, std::span<const double> input,
                                          ForwardCache& cache);

// Accumulates into grad the exact reverse-mode gradient of <output, cotangent>
// with respect to every parameter, reusing the forward cache.
void backward_cached(const MlpParams& params, const ForwardCache& cache,
                     std::span<const double> cotangent, Gradient& grad);

// Convenience wrapper: forward + backward in one call.
Gradient backward(const MlpParams& params, std::span<const double> input,
                  std::span<const double> cotangent);

// Numerically stable softmax / log-softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

// Action distribution of the policy head for one observation.
std::vector<double> policy_distribution(const MlpParams& params, std::span<const double> observation);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(const MlpParams& params);

// One bias-corrected Adam step along -gradient (a descent step; pass the
// negated gradient to ascend).
void adam_step(MlpParams& params, const Gradient& grad, AdamState& state, double lr);

std::vector<double> flatten(const MlpParams& params);
void unflatten(std::span<const double> flat, MlpParams& params);

// axpy over all parameters: dst += scale * (src - dst0) convenience used by
// the meta learner's interpolation updates.
void interpolate_params(MlpParams& dst, const MlpParams& toward, double scale);

// Checkpoint: one JSON header line (shapes, format version, optional extra
// fields) followed by the raw little-endian doubles of policy then value.
void save_checkpoint(const std::string& path, const MlpParams& policy, const MlpParams& value,
                     const std::string& extra_json = "");
struct Checkpoint {
    MlpParams policy;
    MlpParams value;
    std::string extra_json;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace flex

#endif
