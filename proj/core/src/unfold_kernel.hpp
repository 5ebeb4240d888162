#pragma once

// Scalar-generic implementation of one unfolded layer and the per-layer rate
// evaluation. Instantiated with double for inference and with ad::Var for
// reverse-mode parameter gradients; both share this exact code path.
//
// Beams are stored as (U+1) x M complex rows: row 0 is v0, row k+1 is v_k.
// Products A[k][j] = h_k^H (row j) are U x (U+1), column 0 is the common beam.

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rsma/autodiff.hpp"
#include "rsma/fp_transform.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace rsma::kernel {

template <class T>
struct Cx {
    T re{};
    T im{};
};

template <class T>
using Beams = std::vector<Cx<T>>;

struct Problem {
    int U = 0;
    int M = 0;
    std::vector<Cx<double>> h; // U x M
    std::vector<double> f;
    std::vector<double> noise;
    double p0 = 0.0;
    double budget = 0.0;
    int ref = 0;
    int heavy = 0;
    std::vector<double> env;

    explicit Problem(const ProblemInstance& inst)
        : U(inst.num_users()), M(inst.num_antennas()), p0(inst.p0), budget(inst.power_budget), ref(inst.ref_user),
          heavy(heaviest_user(inst.weights)) {
        h.resize(static_cast<std::size_t>(U) * M);
        for (int k = 0; k < U; ++k) {
            for (int m = 0; m < M; ++m) {
                h[k * M + m] = {inst.channels(k, m).real(), inst.channels(k, m).imag()};
            }
        }
        f.assign(inst.weights.data(), inst.weights.data() + U);
        noise.assign(inst.noise_var.data(), inst.noise_var.data() + U);
        const RVector e = env_vector(inst);
        env.assign(e.data(), e.data() + e.size());
    }

    const Cx<double>& chan(int k, int m) const { return h[k * M + m]; }
};

inline Beams<double> to_beams(const BeamformerSet& b) {
    const int U = b.num_users();
    const int M = b.num_antennas();
    Beams<double> out(static_cast<std::size_t>(U + 1) * M);
    for (int m = 0; m < M; ++m) {
        out[m] = {b.v0(m).real(), b.v0(m).imag()};
    }
    for (int k = 0; k < U; ++k) {
        for (int m = 0; m < M; ++m) {
            out[(k + 1) * M + m] = {b.v(k, m).real(), b.v(k, m).imag()};
        }
    }
    return out;
}

inline BeamformerSet from_beams(const Beams<double>& v, int U, int M) {
    BeamformerSet out = BeamformerSet::zeros(U, M);
    for (int m = 0; m < M; ++m) {
        out.v0(m) = {v[m].re, v[m].im};
    }
    for (int k = 0; k < U; ++k) {
        for (int m = 0; m < M; ++m) {
            out.v(k, m) = {v[(k + 1) * M + m].re, v[(k + 1) * M + m].im};
        }
    }
    return out;
}

template <class T>
Beams<T> lift(const Beams<double>& v) {
    Beams<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = {T(v[i].re), T(v[i].im)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar primitives shared by double and ad::Var.

template <class T>
T node(double value, std::span<const T> parents, std::span<const double> partials) {
    if constexpr (std::is_same_v<T, double>) {
        return value;
    } else {
        return ad::custom(value, parents, partials);
    }
}

template <class T>
T lin(double offset, std::span<const T> xs, std::span<const double> coeffs) {
    if constexpr (std::is_same_v<T, double>) {
        double v = offset;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            v += coeffs[i] * xs[i];
        }
        return v;
    } else {
        return ad::linear(offset, xs, coeffs);
    }
}

template <class T>
T tsqrt(const T& x) {
    using std::sqrt;
    if constexpr (std::is_same_v<T, double>) {
        return sqrt(x);
    } else {
        return ad::sqrt(x);
    }
}

template <class T>
T tlog2(const T& x) {
    if constexpr (std::is_same_v<T, double>) {
        return std::log2(x);
    } else {
        return ad::log2(x);
    }
}

template <class T>
T abs2(const Cx<T>& z) {
    const double re = ad::value(z.re);
    const double im = ad::value(z.im);
    const T parents[2] = {z.re, z.im};
    const double partials[2] = {2.0 * re, 2.0 * im};
    return node<T>(re * re + im * im, parents, partials);
}

/// Re{conj(z) a}.
template <class T>
T re_conj_mul(const Cx<T>& z, const Cx<T>& a) {
    const T parents[4] = {z.re, a.re, z.im, a.im};
    const double partials[4] = {ad::value(a.re), ad::value(z.re), ad::value(a.im), ad::value(z.im)};
    return node<T>(ad::value(z.re) * ad::value(a.re) + ad::value(z.im) * ad::value(a.im), parents, partials);
}

template <class T>
Cx<T> scale(const Cx<T>& z, const T& s) {
    return {z.re * s, z.im * s};
}

template <class T>
Cx<T> add(const Cx<T>& a, const Cx<T>& b) {
    return {a.re + b.re, a.im + b.im};
}

template <class T>
Cx<T> detach(const Cx<T>& z) {
    return {T(ad::value(z.re)), T(ad::value(z.im))};
}

template <class T>
T sum(const std::vector<T>& xs, double offset = 0.0) {
    const std::vector<double> ones(xs.size(), 1.0);
    return lin<T>(offset, xs, ones);
}

// ---------------------------------------------------------------------------

template <class T>
std::vector<Cx<T>> products(const Problem& p, const Beams<T>& v) {
    const int R = p.U + 1;
    std::vector<Cx<T>> A(static_cast<std::size_t>(p.U) * R);
    std::vector<T> xs(2 * p.M);
    std::vector<double> c_re(2 * p.M);
    std::vector<double> c_im(2 * p.M);
    for (int k = 0; k < p.U; ++k) {
        for (int m = 0; m < p.M; ++m) {
            const Cx<double>& h = p.chan(k, m);
            // conj(h) * v = (h.re v.re + h.im v.im) + i (h.re v.im - h.im v.re)
            c_re[2 * m] = h.re;
            c_re[2 * m + 1] = h.im;
            c_im[2 * m] = -h.im;
            c_im[2 * m + 1] = h.re;
        }
        for (int j = 0; j < R; ++j) {
            for (int m = 0; m < p.M; ++m) {
                xs[2 * m] = v[j * p.M + m].re;
                xs[2 * m + 1] = v[j * p.M + m].im;
            }
            A[k * R + j] = {lin<T>(0.0, xs, c_re), lin<T>(0.0, xs, c_im)};
        }
    }
    return A;
}

template <class T>
struct LayerWeights {
    const T* w0;  // U+2
    const T* w;   // U x (U+2)
    const T* eta; // U x (U+1)
};

template <class T>
Beams<T> project(const Problem& p, const Beams<T>& tilde) {
    const int R = p.U + 1;
    const int M = p.M;
    std::vector<T> norms(R);
    std::vector<T> xs(2 * M);
    std::vector<double> ds(2 * M);
    for (int i = 0; i < R; ++i) {
        double n = 0.0;
        for (int m = 0; m < M; ++m) {
            const Cx<T>& z = tilde[i * M + m];
            xs[2 * m] = z.re;
            xs[2 * m + 1] = z.im;
            ds[2 * m] = 2.0 * ad::value(z.re);
            ds[2 * m + 1] = 2.0 * ad::value(z.im);
            n += ad::value(z.re) * ad::value(z.re) + ad::value(z.im) * ad::value(z.im);
        }
        norms[i] = node<T>(n, xs, ds);
        if (n == 0.0 && p.p0 > 0.0) {
            throw std::invalid_argument("unfolded projection: beamformer " + std::to_string(i) +
                                        " is zero and cannot be scaled to p0");
        }
    }
    std::vector<T> excess(R);
    for (int i = 0; i < R; ++i) {
        excess[i] = ad::value(norms[i]) > p.p0 ? norms[i] - T(p.p0) : T(0.0);
    }
    const T total = sum(excess);
    std::vector<T> target(R);
    if (ad::value(total) > 0.0) {
        const double free_power = p.budget - R * p.p0;
        for (int i = 0; i < R; ++i) {
            target[i] = excess[i] / total * T(free_power) + T(p.p0);
        }
    } else {
        for (int i = 0; i < R; ++i) {
            if (ad::value(norms[i]) == 0.0) {
                throw std::invalid_argument("unfolded projection: all beamformers are zero");
            }
            target[i] = T(p.budget / R);
        }
    }
    Beams<T> out(tilde.size());
    for (int i = 0; i < R; ++i) {
        const T s = ad::value(norms[i]) > 0.0 ? tsqrt(target[i] / norms[i]) : T(0.0);
        for (int m = 0; m < M; ++m) {
            out[i * M + m] = scale(tilde[i * M + m], s);
        }
    }
    return out;
}

/// One unfolded layer: auxiliaries, learned step, projection. A must hold
/// products(p, v). The penalty factor cancels out of both learned update
/// terms, so it does not appear here.
template <class T>
Beams<T> layer_step(const Problem& p, const Beams<T>& v, const std::vector<Cx<T>>& A, LayerWeights<T> lw,
                    bool z_backprop, int layer_index) {
    const int U = p.U;
    const int R = U + 1;
    const int M = p.M;
    const int E = U + 2;
    auto a = [&](int k, int j) -> const Cx<T>& { return A[k * R + j]; };
    const std::string where = "layer " + std::to_string(layer_index + 1);

    std::vector<Cx<T>> z(U);
    std::vector<T> z_abs2(U);
    std::vector<T> phi(U);
    std::vector<T> terms;
    for (int k = 0; k < U; ++k) {
        terms.clear();
        for (int j = 0; j < U; ++j) {
            if (j != k) {
                terms.push_back(abs2(a(k, j + 1)));
            }
        }
        const T b = sum(terms, p.noise[k]);
        z[k] = {a(k, k + 1).re / b, a(k, k + 1).im / b};
        if (!z_backprop) {
            z[k] = detach(z[k]);
        }
        z_abs2[k] = abs2(z[k]);
        phi[k] = T(1.0) + T(2.0) * re_conj_mul(z[k], a(k, k + 1)) - z_abs2[k] * b;
        if (!(ad::value(phi[k]) > 0.0)) {
            throw NonPositivePhiError(k + 1, ad::value(phi[k]), where);
        }
    }
    const int r = p.ref;
    terms.clear();
    for (int j = 0; j < U; ++j) {
        terms.push_back(abs2(a(r, j + 1)));
    }
    const T b0 = sum(terms, p.noise[r]);
    Cx<T> z0 = {a(r, 0).re / b0, a(r, 0).im / b0};
    if (!z_backprop) {
        z0 = detach(z0);
    }
    const T z0_abs2 = abs2(z0);
    const T phi0 = T(1.0) + T(2.0) * re_conj_mul(z0, a(r, 0)) - z0_abs2 * b0;
    if (!(ad::value(phi0) > 0.0)) {
        throw NonPositivePhiError(0, ad::value(phi0), where);
    }

    const T s0 = lin<T>(0.0, std::span<const T>(lw.w0, E), p.env);
    std::vector<T> s(U);
    for (int k = 0; k < U; ++k) {
        s[k] = lin<T>(0.0, std::span<const T>(lw.w + k * E, E), p.env);
    }

    Beams<T> out(v.size());
    std::vector<T> xs;
    std::vector<double> cs;

    // Common beam: v0 + ln2 (phi.w0) g_v0 / lambda = v0 + (phi.w0) 2 z0 / phi0 h_r.
    {
        const Cx<T> c0 = scale(z0, T(2.0) * s0 / phi0);
        for (int m = 0; m < M; ++m) {
            const Cx<double>& h = p.chan(r, m);
            const T re_x[3] = {v[m].re, c0.re, c0.im};
            const double re_c[3] = {1.0, h.re, -h.im};
            const T im_x[3] = {v[m].im, c0.re, c0.im};
            const double im_c[3] = {1.0, h.im, h.re};
            out[m] = {lin<T>(0.0, re_x, re_c), lin<T>(0.0, im_x, im_c)};
        }
    }

    // Private beams: every gradient term is a multiple of some h_l, so the
    // update is v_k + sum_l c_{k,l} h_l.
    std::vector<Cx<T>> coef(U);
    std::vector<bool> used(U);
    for (int k = 0; k < U; ++k) {
        std::fill(used.begin(), used.end(), false);
        auto accumulate = [&](int l, const Cx<T>& c) {
            coef[l] = used[l] ? add(coef[l], c) : c;
            used[l] = true;
        };
        const T* eta = lw.eta + k * (U + 1);
        const T sk = s[k];
        // ln2 * s_k * eta_k * zeta_k / phi_k  with zeta_k = 2 f_k z_k h_k / ln2
        accumulate(k, scale(z[k], sk * eta[0] * T(2.0 * p.f[k]) / phi[k]));
        int idx = 1;
        for (int j = 0; j < U; ++j) {
            if (j == k) {
                continue;
            }
            // beta_{j,k} = -2 |z_j|^2 f_j h_j (h_j^H v_k) / ln2
            accumulate(j, scale(a(j, k + 1), sk * eta[idx] * T(-2.0 * p.f[j]) * z_abs2[j] / phi[j]));
            ++idx;
        }
        // o_k / lambda = -2 |z0|^2 h_r (h_r^H v_k) / (phi0 ln2)
        accumulate(r, scale(a(r, k + 1), sk * eta[U] * T(-2.0) * z0_abs2 / phi0));

        for (int m = 0; m < M; ++m) {
            const Cx<T>& vk = v[(k + 1) * M + m];
            xs.clear();
            cs.clear();
            xs.push_back(vk.re);
            cs.push_back(1.0);
            std::vector<T> xi{vk.im};
            std::vector<double> ci{1.0};
            for (int l = 0; l < U; ++l) {
                if (!used[l]) {
                    continue;
                }
                const Cx<double>& h = p.chan(l, m);
                xs.push_back(coef[l].re);
                cs.push_back(h.re);
                xs.push_back(coef[l].im);
                cs.push_back(-h.im);
                xi.push_back(coef[l].re);
                ci.push_back(h.im);
                xi.push_back(coef[l].im);
                ci.push_back(h.re);
            }
            out[(k + 1) * M + m] = {lin<T>(0.0, xs, cs), lin<T>(0.0, xi, ci)};
        }
    }
    return project(p, out);
}

template <class T>
struct Rates {
    T wsr{};
    T min_c{};
    int min_user = 0;
};

/// Weighted sum rate with the common rate placed on the heaviest user.
template <class T>
Rates<T> rates(const Problem& p, const std::vector<Cx<T>>& A) {
    const int U = p.U;
    const int R = U + 1;
    std::vector<T> gains(R);
    std::vector<T> rp(U);
    std::vector<T> c(U);
    std::vector<T> terms;
    for (int k = 0; k < U; ++k) {
        for (int j = 0; j < R; ++j) {
            gains[j] = abs2(A[k * R + j]);
        }
        terms.clear();
        for (int j = 0; j < U; ++j) {
            if (j != k) {
                terms.push_back(gains[j + 1]);
            }
        }
        const T interference = sum(terms, p.noise[k]);
        const T total = interference + gains[k + 1];
        c[k] = tlog2(T(1.0) + gains[0] / total);
        rp[k] = tlog2(T(1.0) + gains[k + 1] / interference);
    }
    Rates<T> out;
    out.min_user = 0;
    for (int k = 1; k < U; ++k) {
        if (ad::value(c[k]) < ad::value(c[out.min_user])) {
            out.min_user = k;
        }
    }
    out.min_c = c[out.min_user];
    std::vector<double> weights(p.f);
    weights.push_back(p.f[p.heavy]);
    rp.push_back(out.min_c);
    out.wsr = lin<T>(0.0, rp, weights);
    return out;
}

/// Per-sample loss (1/N) sum_n log2(n+1) (wsr_star - wsr_hat_n). `flat` is the
/// layer-major parameter vector.
template <class T>
T sample_loss(const Problem& p, const Beams<double>& init, std::span<const T> flat, int num_layers,
              double wsr_star, bool z_backprop, double* final_wsr) {
    const int U = p.U;
    const std::size_t per_layer = LayerParams::flat_size(U);
    Beams<T> v = lift<T>(init);
    std::vector<Cx<T>> A = products(p, v);
    std::vector<T> weighted(num_layers);
    std::vector<double> coeffs(num_layers);
    double constant = 0.0;
    for (int n = 0; n < num_layers; ++n) {
        const T* base = flat.data() + n * per_layer;
        const LayerWeights<T> lw{base, base + (U + 2), base + (U + 2) + U * (U + 2)};
        v = layer_step(p, v, A, lw, z_backprop, n);
        A = products(p, v);
        const Rates<T> r = rates(p, A);
        const double weight = std::log2(static_cast<double>(n + 2)) / num_layers;
        constant += weight * wsr_star;
        weighted[n] = r.wsr;
        coeffs[n] = -weight;
        if (final_wsr != nullptr && n + 1 == num_layers) {
            *final_wsr = ad::value(r.wsr);
        }
    }
    return lin<T>(constant, weighted, coeffs);
}

} // namespace rsma::kernel
