#pragma once

// Minimal reverse-mode differentiation over real scalars.
//
// A Tape records every non-constant intermediate as a node with an arbitrary
// number of (parent, partial) pairs. Var is a value plus a node id; id -1
// marks a constant, which never creates nodes. Operations write to the
// thread's active tape, installed with TapeScope.

#include <cstdint>
#include <span>
#include <vector>

namespace rsma::ad {

class Tape {
public:
    Tape() { offset_.push_back(0); }

    int add_leaf();
    int add_node(std::span<const int> parents, std::span<const double> partials);

    /// Adjoints of every node with respect to node `output`.
    std::vector<double> adjoints(int output) const;

    std::size_t num_nodes() const { return offset_.size() - 1; }
    std::size_t num_edges() const { return parent_.size(); }
    void clear();

private:
    std::vector<int> parent_;
    std::vector<double> partial_;
    std::vector<std::uint32_t> offset_;
};

Tape& active_tape();

class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

struct Var {
    double val = 0.0;
    int id = -1;

    Var() = default;
    Var(double v) : val(v) {} // NOLINT: implicit constants are the point
    Var(double v, int node) : val(v), id(node) {}

    bool is_constant() const { return id < 0; }
    static Var leaf(double v) { return {v, active_tape().add_leaf()}; }
};

/// Node with caller-supplied value and partials; constant parents are dropped.
Var custom(double value, std::span<const Var> parents, std::span<const double> partials);

/// offset + sum_i coeffs[i] * xs[i].
Var linear(double offset, std::span<const Var> xs, std::span<const double> coeffs);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var sqrt(const Var& a);
Var log2(const Var& a);

inline double value(const Var& a) { return a.val; }
inline double value(double a) { return a; }

} // namespace rsma::ad
