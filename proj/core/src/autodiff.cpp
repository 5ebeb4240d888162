#include "rsma/autodiff.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsma::ad {

namespace {

thread_local Tape* g_active = nullptr;

Var binary(double value, const Var& a, double da, const Var& b, double db) {
    const std::array<Var, 2> parents{a, b};
    const std::array<double, 2> partials{da, db};
    return custom(value, parents, partials);
}

Var unary(double value, const Var& a, double da) {
    if (a.is_constant()) {
        return Var(value);
    }
    const int parent = a.id;
    return {value, active_tape().add_node({&parent, 1}, {&da, 1})};
}

} // namespace

int Tape::add_leaf() {
    offset_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return static_cast<int>(offset_.size()) - 2;
}

int Tape::add_node(std::span<const int> parents, std::span<const double> partials) {
    parent_.insert(parent_.end(), parents.begin(), parents.end());
    partial_.insert(partial_.end(), partials.begin(), partials.end());
    offset_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return static_cast<int>(offset_.size()) - 2;
}

std::vector<double> Tape::adjoints(int output) const {
    std::vector<double> adj(num_nodes(), 0.0);
    if (output < 0) {
        return adj;
    }
    adj[output] = 1.0;
    for (int node = output; node >= 0; --node) {
        const double a = adj[node];
        if (a == 0.0) {
            continue;
        }
        for (std::uint32_t e = offset_[node]; e < offset_[node + 1]; ++e) {
            adj[parent_[e]] += partial_[e] * a;
        }
    }
    return adj;
}

void Tape::clear() {
    parent_.clear();
    partial_.clear();
    offset_.assign(1, 0);
}

Tape& active_tape() {
    if (g_active == nullptr) {
        throw std::logic_error("ad: no active tape on this thread");
    }
    return *g_active;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

Var custom(double value, std::span<const Var> parents, std::span<const double> partials) {
    thread_local std::vector<int> ids;
    thread_local std::vector<double> ds;
    ids.clear();
    ds.clear();
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (!parents[i].is_constant()) {
            ids.push_back(parents[i].id);
            ds.push_back(partials[i]);
        }
    }
    if (ids.empty()) {
        return Var(value);
    }
    return {value, active_tape().add_node(ids, ds)};
}

Var linear(double offset, std::span<const Var> xs, std::span<const double> coeffs) {
    double v = offset;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        v += coeffs[i] * xs[i].val;
    }
    return custom(v, xs, coeffs);
}

Var operator+(const Var& a, const Var& b) {
    if (b.is_constant()) {
        return unary(a.val + b.val, a, 1.0);
    }
    if (a.is_constant()) {
        return unary(a.val + b.val, b, 1.0);
    }
    return binary(a.val + b.val, a, 1.0, b, 1.0);
}

Var operator-(const Var& a, const Var& b) {
    if (b.is_constant()) {
        return unary(a.val - b.val, a, 1.0);
    }
    if (a.is_constant()) {
        return unary(a.val - b.val, b, -1.0);
    }
    return binary(a.val - b.val, a, 1.0, b, -1.0);
}

Var operator*(const Var& a, const Var& b) {
    if (b.is_constant()) {
        return unary(a.val * b.val, a, b.val);
    }
    if (a.is_constant()) {
        return unary(a.val * b.val, b, a.val);
    }
    return binary(a.val * b.val, a, b.val, b, a.val);
}

Var operator/(const Var& a, const Var& b) {
    const double q = a.val / b.val;
    if (b.is_constant()) {
        return unary(q, a, 1.0 / b.val);
    }
    if (a.is_constant()) {
        return unary(q, b, -q / b.val);
    }
    return binary(q, a, 1.0 / b.val, b, -q / b.val);
}

Var operator-(const Var& a) { return unary(-a.val, a, -1.0); }

Var sqrt(const Var& a) {
    const double s = std::sqrt(a.val);
    return unary(s, a, 0.5 / s);
}

Var log2(const Var& a) { return unary(std::log2(a.val), a, 1.0 / (a.val * std::numbers::ln2)); }

} // namespace rsma::ad
