#include "flex/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "flex/errors.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace flex {

using nlohmann::json;

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.data.size() + l.b.size();
    return n;
}

namespace {

// Orthogonalizes the rows of w (Gaussian init + modified Gram-Schmidt over
// blocks of at most `cols` rows), then scales by gain.
void orthogonal_rows(Matrix& w, Rng& rng, double gain) {
    const int rows = w.rows, cols = w.cols;
    for (auto& v : w.data) v = rng.normal();
    for (int block = 0; block < rows; block += cols) {
        const int hi = std::min(rows, block + cols);
        for (int r = block; r < hi; ++r) {
            double* row_r = &w.data[static_cast<std::size_t>(r) * cols];
            for (int q = block; q < r; ++q) {
                const double* row_q = &w.data[static_cast<std::size_t>(q) * cols];
                double dot = 0.0;
                for (int c = 0; c < cols; ++c) dot += row_r[c] * row_q[c];
                for (int c = 0; c < cols; ++c) row_r[c] -= dot * row_q[c];
            }
            double norm_sq = 0.0;
            for (int c = 0; c < cols; ++c) norm_sq += row_r[c] * row_r[c];
            double inv = norm_sq > 1e-30 ? 1.0 / std::sqrt(norm_sq) : 0.0;
            for (int c = 0; c < cols; ++c) row_r[c] *= inv;
        }
    }
    for (auto& v : w.data) v *= gain;
}

} // namespace

MlpParams make_mlp(const std::vector<int>& dims, Rng& rng, double gain, double output_gain) {
    if (dims.size() < 2) throw ValidationError("dims", "an MLP needs at least input and output dims");
    MlpParams p;
    p.layers.resize(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer& layer = p.layers[l];
        layer.w = Matrix(dims[l + 1], dims[l]);
        layer.b.assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
        const bool last = l + 2 == dims.size();
        orthogonal_rows(layer.w, rng, last ? output_gain : gain);
    }
    return p;
}

Gradient zero_gradient(const MlpParams& params) {
    Gradient g;
    g.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        g.layers[l].w = Matrix(params.layers[l].w.rows, params.layers[l].w.cols, 0.0);
        g.layers[l].b.assign(params.layers[l].b.size(), 0.0);
    }
    return g;
}

const std::vector<double>& forward_cached(const MlpParams& params, std::span<const double> input,
                                          ForwardCache& cache) {
    if (params.layers.empty()) throw ValidationError("params", "empty network");
    if (static_cast<int>(input.size()) != params.input_dim())
        throw ValidationError("input", "input dimension mismatch");
    cache.act.resize(params.layers.size() + 1);
    cache.act[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const MlpLayer& layer = params.layers[l];
        const std::vector<double>& x = cache.act[l];
        std::vector<double>& y = cache.act[l + 1];
        y.assign(layer.b.begin(), layer.b.end());
        const int rows = layer.w.rows, cols = layer.w.cols;
        for (int r = 0; r < rows; ++r) {
            const double* wr = &layer.w.data[static_cast<std::size_t>(r) * cols];
            double acc = y[static_cast<std::size_t>(r)];
            for (int c = 0; c < cols; ++c) acc += wr[c] * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] = acc;
        }
        if (l + 1 < params.layers.size())
            for (auto& v : y) v = std::tanh(v);
    }
    return cache.act.back();
}

std::vector<double> forward(const MlpParams& params, std::span<const double> input) {
    ForwardCache cache;
    return forward_cached(params, input, cache);
}

void backward_cached(const MlpParams& params, const ForwardCache& cache,
                     std::span<const double> cotangent, Gradient& grad) {
    const std::size_t depth = params.layers.size();
    if (cache.act.size() != depth + 1) throw ValidationError("cache", "stale forward cache");
    if (static_cast<int>(cotangent.size()) != params.output_dim())
        throw ValidationError("cotangent", "cotangent dimension mismatch");

    std::vector<double> delta(cotangent.begin(), cotangent.end());
    std::vector<double> next_delta;
    for (std::size_t l = depth; l-- > 0;) {
        const MlpLayer& layer = params.layers[l];
        MlpLayer& g = grad.layers[l];
        const std::vector<double>& x = cache.act[l];
        const int rows = layer.w.rows, cols = layer.w.cols;

        // dW = delta x^T, db = delta
        for (int r = 0; r < rows; ++r) {
            const double dr = delta[static_cast<std::size_t>(r)];
            if (dr == 0.0) continue;
            double* gr = &g.w.data[static_cast<std::size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) gr[c] += dr * x[static_cast<std::size_t>(c)];
            g.b[static_cast<std::size_t>(r)] += dr;
        }
        if (l == 0) break;

        next_delta.assign(static_cast<std::size_t>(cols), 0.0);
        for (int r = 0; r < rows; ++r) {
            const double dr = delta[static_cast<std::size_t>(r)];
            if (dr == 0.0) continue;
            const double* wr = &layer.w.data[static_cast<std::size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) next_delta[static_cast<std::size_t>(c)] += dr * wr[c];
        }
        // x was produced by tanh, so dtanh = 1 - x^2
        for (int c = 0; c < cols; ++c)
            next_delta[static_cast<std::size_t>(c)] *= 1.0 - x[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        delta.swap(next_delta);
    }
}

Gradient backward(const MlpParams& params, std::span<const double> input,
                  std::span<const double> cotangent) {
    ForwardCache cache;
    forward_cached(params, input, cache);
    Gradient g = zero_gradient(params);
    backward_cached(params, cache, cotangent, g);
    return g;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    double hi = logits[0];
    for (double v : logits) hi = std::max(hi, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - hi);
    const double log_z = hi + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - log_z;
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out = log_softmax(logits);
    for (auto& v : out) v = std::exp(v);
    return out;
}

std::vector<double> policy_distribution(const MlpParams& params, std::span<const double> observation) {
    const std::vector<double> logits = forward(params, observation);
    return softmax(logits);
}

AdamState make_adam_state(const MlpParams& params) {
    AdamState s;
    s.m.assign(params.parameter_count(), 0.0);
    s.v.assign(params.parameter_count(), 0.0);
    return s;
}

void adam_step(MlpParams& params, const Gradient& grad, AdamState& state, double lr) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    std::size_t k = 0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto update = [&](double& p, double g) {
            state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
            state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
            const double mhat = state.m[k] / bc1;
            const double vhat = state.v[k] / bc2;
            p -= lr * mhat / (std::sqrt(vhat) + state.eps);
            ++k;
        };
        for (std::size_t i = 0; i < params.layers[l].w.data.size(); ++i)
            update(params.layers[l].w.data[i], grad.layers[l].w.data[i]);
        for (std::size_t i = 0; i < params.layers[l].b.size(); ++i)
            update(params.layers[l].b[i], grad.layers[l].b[i]);
    }
}

std::vector<double> flatten(const MlpParams& params) {
    std::vector<double> flat;
    flat.reserve(params.parameter_count());
    for (const auto& l : params.layers) {
        flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void unflatten(std::span<const double> flat, MlpParams& params) {
    if (flat.size() != params.parameter_count())
        throw ValidationError("flat", "flattened size differs from parameter count");
    std::size_t k = 0;
    for (auto& l : params.layers) {
        for (auto& v : l.w.data) v = flat[k++];
        for (auto& v : l.b) v = flat[k++];
    }
}

void interpolate_params(MlpParams& dst, const MlpParams& toward, double scale) {
    if (dst.layers.size() != toward.layers.size())
        throw ValidationError("params", "shape mismatch in interpolation");
    if (scale == 1.0) { // exact assignment, not dst + (toward - dst)
        dst = toward;
        return;
    }
    for (std::size_t l = 0; l < dst.layers.size(); ++l) {
        for (std::size_t i = 0; i < dst.layers[l].w.data.size(); ++i)
            dst.layers[l].w.data[i] += scale * (toward.layers[l].w.data[i] - dst.layers[l].w.data[i]);
        for (std::size_t i = 0; i < dst.layers[l].b.size(); ++i)
            dst.layers[l].b[i] += scale * (toward.layers[l].b[i] - dst.layers[l].b[i]);
    }
}

namespace {

json shapes_of(const MlpParams& p) {
    json shapes = json::array();
    for (const auto& l : p.layers) shapes.push_back({l.w.rows, l.w.cols});
    return shapes;
}

void write_params(std::ofstream& out, const MlpParams& p) {
    for (const auto& l : p.layers) {
        out.write(reinterpret_cast<const char*>(l.w.data.data()),
                  static_cast<std::streamsize>(l.w.data.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.b.data()),
                  static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
}

MlpParams read_params(std::ifstream& in, const json& shapes) {
    MlpParams p;
    for (const auto& s : shapes) {
        MlpLayer layer;
        layer.w = Matrix(s[0].get<int>(), s[1].get<int>());
        layer.b.assign(static_cast<std::size_t>(s[0].get<int>()), 0.0);
        in.read(reinterpret_cast<char*>(layer.w.data.data()),
                static_cast<std::streamsize>(layer.w.data.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(layer.b.data()),
                static_cast<std::streamsize>(layer.b.size() * sizeof(double)));
        p.layers.push_back(std::move(layer));
    }
    if (!in) throw ValidationError("(file)", "checkpoint truncated");
    return p;
}

} // namespace

void save_checkpoint(const std::string& path, const MlpParams& policy, const MlpParams& value,
                     const std::string& extra_json) {
    json header;
    header["format"] = "flex-mlp";
    header["version"] = "0.1.0";
    header["policy_shapes"] = shapes_of(policy);
    header["value_shapes"] = shapes_of(value);
    if (!extra_json.empty()) header["extra"] = json::parse(extra_json);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("(file)", "cannot write checkpoint: " + path);
    out << header.dump() << '\n';
    write_params(out, policy);
    write_params(out, value);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("(file)", "cannot open checkpoint: " + path);
    std::string line;
    std::getline(in, line);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError("(header)", std::string("bad checkpoint header: ") + e.what());
    }
    if (header.value("format", "") != "flex-mlp")
        throw ValidationError("format", "not a flex-mlp checkpoint");
    Checkpoint ck;
    ck.policy = read_params(in, header.at("policy_shapes"));
    ck.value = read_params(in, header.at("value_shapes"));
    if (header.contains("extra")) ck.extra_json = header["extra"].dump();
    return ck;
}

} // namespace flex
