#include "shapefit/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapefit {

namespace {

void check_lambda(double lambda, const char* who) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(std::string(who) + ": lambda must be finite and nonnegative");
}

void check_weights(std::span<const double> v, std::span<const double> weights) {
    if (weights.empty())
        return;
    if (weights.size() != v.size())
        throw std::invalid_argument("weights length does not match input length");
    for (double c : weights)
        if (!(c > 0.0))
            throw std::invalid_argument("weights must be strictly positive");
}

inline double weight_at(std::span<const double> weights, std::size_t i) {
    return weights.empty() ? 1.0 : weights[i];
}

}  // namespace

Weights::Weights(double lambda_, double step_) : lambda(lambda_), step(step_) {
    check_lambda(lambda, "Weights");
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument("Weights: step must be finite and positive");
}

std::vector<double> center(std::span<const double> z) {
    if (z.empty())
        throw std::invalid_argument("center: empty vector");
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    std::vector<double> out(z.size());
    std::transform(z.begin(), z.end(), out.begin(), [mean](double x) { return x - mean; });
    return out;
}

double block_soft_threshold_inplace(std::span<double> r, double lambda_s) {
    check_lambda(lambda_s, "block_soft_threshold");
    double sq = 0.0;
    for (double x : r)
        sq += x * x;
    const double norm = std::sqrt(sq);
    const double factor = norm > lambda_s ? 1.0 - lambda_s / norm : 0.0;
    for (double& x : r)
        x *= factor;
    return factor;
}

std::vector<double> block_soft_threshold(std::span<const double> r, double lambda_s) {
    std::vector<double> out(r.begin(), r.end());
    block_soft_threshold_inplace(out, lambda_s);
    return out;
}

// Forward pass keeps the derivative of the message function as a piecewise
// linear, increasing function of the next coordinate. Its knots live in a
// deque laid out in `ws.knots` (new knots only ever enter at the two ends);
// (left_a, left_b) and (right_a, right_b) are the lines beyond the outermost
// knots. Clipping the derivative to [-lambda_down, lambda_up] records the
// interval that the backward pass clamps into.
void chain_prox(std::span<const double> v, std::span<const double> weights, double lambda_down,
                double lambda_up, std::span<double> out, ChainProxWorkspace& ws) {
    const std::size_t n = v.size();
    if (out.size() != n)
        throw std::invalid_argument("chain_prox: output length mismatch");
    if (n == 0)
        return;
    if (n == 1) {
        out[0] = v[0];
        return;
    }
    ws.knots.resize(2 * n + 2);
    ws.lower.resize(n);
    ws.upper.resize(n);
    auto& knots = ws.knots;

    std::size_t head = n + 1;
    std::size_t tail = n + 1;
    double c = weight_at(weights, 0);
    double left_a = c, left_b = -c * v[0];
    double right_a = c, right_b = -c * v[0];

    for (std::size_t k = 0; k + 1 < n; ++k) {
        while (head < tail && left_a * knots[head].x + left_b < -lambda_down) {
            left_a += knots[head].d_slope;
            left_b += knots[head].d_offset;
            ++head;
        }
        if (head == tail) {
            right_a = left_a;
            right_b = left_b;
        }
        const double lo = (-lambda_down - left_b) / left_a;

        while (head < tail && right_a * knots[tail - 1].x + right_b > lambda_up) {
            right_a -= knots[tail - 1].d_slope;
            right_b -= knots[tail - 1].d_offset;
            --tail;
        }
        if (head == tail) {
            right_a = left_a;
            right_b = left_b;
        }
        const double hi = (lambda_up - right_b) / right_a;

        ws.lower[k] = lo;
        ws.upper[k] = hi;
        knots[--head] = {lo, left_a, left_b + lambda_down};
        knots[tail++] = {hi, -right_a, lambda_up - right_b};

        const double y = v[k + 1];
        c = weight_at(weights, k + 1);
        left_a = c;
        left_b = -lambda_down - c * y;
        right_a = c;
        right_b = lambda_up - c * y;
    }

    while (head < tail && left_a * knots[head].x + left_b < 0.0) {
        left_a += knots[head].d_slope;
        left_b += knots[head].d_offset;
        ++head;
    }
    out[n - 1] = -left_b / left_a;
    for (std::size_t k = n - 1; k-- > 0;)
        out[k] = std::clamp(out[k + 1], ws.lower[k], ws.upper[k]);
}

std::vector<double> tv_prox(std::span<const double> v, std::span<const double> weights,
                            double lambda) {
    check_lambda(lambda, "tv_prox");
    check_weights(v, weights);
    std::vector<double> out(v.size());
    ChainProxWorkspace ws;
    chain_prox(v, weights, lambda, lambda, out, ws);
    return out;
}

std::vector<double> tv_prox(std::span<const double> v, double lambda) {
    return tv_prox(v, {}, lambda);
}

std::vector<double> tv_prox(std::span<const double> v, Weights w) {
    return tv_prox(v, {}, w.effective());
}

std::vector<double> oneside_tv_prox(std::span<const double> v, std::span<const double> weights,
                                    double lambda) {
    check_lambda(lambda, "oneside_tv_prox");
    check_weights(v, weights);
    std::vector<double> out(v.size());
    ChainProxWorkspace ws;
    chain_prox(v, weights, lambda, 0.0, out, ws);
    return out;
}

std::vector<double> oneside_tv_prox(std::span<const double> v, double lambda) {
    return oneside_tv_prox(v, {}, lambda);
}

void pav_inplace(std::span<double> v, std::span<const double> weights, PavWorkspace& ws) {
    const std::size_t n = v.size();
    ws.value.clear();
    ws.weight.clear();
    ws.length.clear();
    for (std::size_t i = 0; i < n; ++i) {
        double val = v[i];
        double wt = weight_at(weights, i);
        std::size_t len = 1;
        // Pool while the new block violates order with its predecessor.
        while (!ws.value.empty() && ws.value.back() >= val) {
            const double w_prev = ws.weight.back();
            val = (ws.value.back() * w_prev + val * wt) / (w_prev + wt);
            wt += w_prev;
            len += ws.length.back();
            ws.value.pop_back();
            ws.weight.pop_back();
            ws.length.pop_back();
        }
        ws.value.push_back(val);
        ws.weight.push_back(wt);
        ws.length.push_back(len);
    }
    std::size_t pos = 0;
    for (std::size_t b = 0; b < ws.value.size(); ++b)
        for (std::size_t k = 0; k < ws.length[b]; ++k)
            v[pos++] = ws.value[b];
}

std::vector<double> pav_isotonic(std::span<const double> v, std::span<const double> weights) {
    check_weights(v, weights);
    std::vector<double> out(v.begin(), v.end());
    PavWorkspace ws;
    pav_inplace(out, weights, ws);
    return out;
}

std::vector<double> pav_isotonic(std::span<const double> v) { return pav_isotonic(v, {}); }

std::vector<double> pav_isotonic_nonneg(std::span<const double> v,
                                        std::span<const double> weights) {
    auto out = pav_isotonic(v, weights);
    for (double& x : out)
        x = std::max(x, 0.0);
    return out;
}

std::vector<double> pav_isotonic_nonneg(std::span<const double> v) {
    return pav_isotonic_nonneg(v, {});
}

double tv_seminorm(std::span<const double> z) {
    double s = 0.0;
    for (std::size_t i = 1; i < z.size(); ++i)
        s += std::abs(z[i] - z[i - 1]);
    return s;
}

double oneside_tv_seminorm(std::span<const double> z) {
    double s = 0.0;
    for (std::size_t i = 1; i < z.size(); ++i)
        s += std::max(z[i - 1] - z[i], 0.0);
    return s;
}

}  // namespace shapefit
