#pragma once

// One-dimensional classical DMP with canonical system and Gaussian basis
// forcing, kept as a reference for the simplified skill pipeline.
//
//   tau^2 xdd = K (g - x) - tau D xd + (g - x0) f(s)
//   tau sd    = -alpha s
//   f(s)      = sum_i w_i psi_i(s) s / sum_i psi_i(s),  psi_i = exp(-h_i (s - c_i)^2)

#include "teleskill/geometry.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace teleskill::classic {

class DegenerateScalingError : public Error {
public:
    using Error::Error;
};

class UnderflowError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

struct DmpParameters {
    double stiffness = 0.55;   // K
    double damping = 3.5;      // D
    double alpha = 4.0;
    double tau = 1.0;

    void validate() const {
        if (!(stiffness > 0.0 && damping > 0.0 && alpha > 0.0 && tau > 0.0)) {
            throw Error("DMP parameters must be positive");
        }
    }
};

/// Closed-form phase s(t) = exp(-alpha t / tau).
inline double phase(double t, double tau, double alpha) { return std::exp(-alpha * t / tau); }

class ClassicDmp {
public:
    ClassicDmp(DmpParameters params, std::vector<double> centers, std::vector<double> widths,
               std::vector<double> weights)
        : params_(params), centers_(std::move(centers)), widths_(std::move(widths)), weights_(std::move(weights)) {
        params_.validate();
        if (centers_.empty() || centers_.size() != widths_.size() || centers_.size() != weights_.size()) {
            throw Error("DMP basis: centers, widths and weights must be non-empty and of equal length");
        }
        for (double h : widths_) {
            if (!(h > 0.0)) {
                throw Error("DMP basis widths must be positive");
            }
        }
    }

    /// `count` centers spread uniformly over [s_end, 1] with widths
    /// 1 / (2 dc^2); all weights zero.
    static ClassicDmp with_uniform_basis(DmpParameters params, int count, double s_end) {
        if (count < 1) {
            throw Error("DMP needs at least one basis function");
        }
        std::vector<double> c(static_cast<std::size_t>(count));
        std::vector<double> h(static_cast<std::size_t>(count));
        const double spacing = count > 1 ? (1.0 - s_end) / (count - 1) : 1.0;
        for (int i = 0; i < count; ++i) {
            c[static_cast<std::size_t>(i)] = count > 1 ? s_end + i * spacing : 1.0;
            h[static_cast<std::size_t>(i)] = 1.0 / (2.0 * spacing * spacing);
        }
        return ClassicDmp(params, std::move(c), std::move(h), std::vector<double>(static_cast<std::size_t>(count), 0.0));
    }

    /// Target samples of the forcing term obtained by solving the
    /// transformation system for f at every trajectory sample.
    static std::vector<double> target_samples(std::span<const double> x, std::span<const double> xd,
                                              std::span<const double> xdd, double x0, double goal,
                                              const DmpParameters& p) {
        if (std::abs(goal - x0) < 1e-12) {
            throw DegenerateScalingError("goal equals start; forcing targets are undefined");
        }
        std::vector<double> f(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            f[k] = (-p.stiffness * (goal - x[k]) + p.tau * p.damping * xd[k] + p.tau * p.tau * xdd[k]) / (goal - x0);
        }
        return f;
    }

    /// Least-squares fit of the basis weights to the target samples of a
    /// trajectory sampled at t_k = k dt. The goal defaults to the last sample.
    static ClassicDmp fit(std::span<const double> x, std::span<const double> xd, std::span<const double> xdd,
                          double dt, DmpParameters params, int basis_count,
                          std::optional<double> goal = std::nullopt) {
        params.validate();
        if (x.size() < 2 || x.size() != xd.size() || x.size() != xdd.size()) {
            throw Error("DMP fit needs equally long position, velocity and acceleration samples");
        }
        if (!(dt > 0.0)) {
            throw Error("DMP fit step must be positive");
        }
        const double x0 = x.front();
        const double g = goal.value_or(x.back());
        const std::vector<double> targets = target_samples(x, xd, xdd, x0, g, params);

        const double t_end = dt * static_cast<double>(x.size() - 1);
        ClassicDmp dmp = with_uniform_basis(params, basis_count, phase(t_end, params.tau, params.alpha));
        dmp.start_ = x0;
        dmp.goal_ = g;

        const auto rows = static_cast<Eigen::Index>(x.size());
        const auto cols = static_cast<Eigen::Index>(basis_count);
        Eigen::MatrixXd design(rows, cols);
        Eigen::VectorXd rhs(rows);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const double s = phase(static_cast<double>(k) * dt, params.tau, params.alpha);
            const Eigen::VectorXd psi = dmp.activations(s);
            design.row(k) = (psi * s / psi.sum()).transpose();
            rhs[k] = targets[static_cast<std::size_t>(k)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        Eigen::VectorXd w;
        if (qr.rank() == cols) {
            w = qr.solve(rhs);
        } else {
            const Eigen::MatrixXd gram = design.transpose() * design;
            const double ridge = 1e-10 * std::max(1.0, gram.trace() / static_cast<double>(cols));
            w = (gram + ridge * Eigen::MatrixXd::Identity(cols, cols)).ldlt().solve(design.transpose() * rhs);
            dmp.notice_ = "rank-deficient basis design (rank " + std::to_string(qr.rank()) + " of " +
                          std::to_string(cols) + "); ridge-regularized solve used";
        }
        dmp.weights_.assign(w.data(), w.data() + w.size());
        return dmp;
    }

    double forcing(double s) const {
        const Eigen::VectorXd psi = activations(s);
        const double sum = psi.sum();
        if (!(sum >= 1e-300)) {
            throw UnderflowError("basis activations underflow at phase " + std::to_string(s));
        }
        const Eigen::Map<const Eigen::VectorXd> w(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
        return w.dot(psi) * s / sum;
    }

    /// Semi-implicit Euler rollout from rest at x0; returns steps + 1 positions.
    std::vector<double> rollout(double x0, double goal, double tau, double dt, int steps) const {
        if (!(dt > 0.0) || !(tau > 0.0)) {
            throw Error("rollout step and time scale must be positive");
        }
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(steps) + 1);
        double x = x0;
        double v = 0.0;
        out.push_back(x);
        for (int k = 0; k < steps; ++k) {
            const double s = phase(k * dt, tau, params_.alpha);
            const double a =
                (params_.stiffness * (goal - x) - tau * params_.damping * v + (goal - x0) * forcing(s)) / (tau * tau);
            v += a * dt;
            x += v * dt;
            if (!std::isfinite(x) || !std::isfinite(v)) {
                throw DivergenceError("DMP rollout diverged at step " + std::to_string(k + 1));
            }
            out.push_back(x);
        }
        return out;
    }

    const DmpParameters& parameters() const { return params_; }
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<double>& widths() const { return widths_; }
    const std::vector<double>& weights() const { return weights_; }
    double start() const { return start_; }
    double goal() const { return goal_; }
    /// Non-empty when fit() had to regularize.
    const std::string& notice() const { return notice_; }

private:
    Eigen::VectorXd activations(double s) const {
        Eigen::VectorXd psi(static_cast<Eigen::Index>(centers_.size()));
        for (std::size_t i = 0; i < centers_.size(); ++i) {
            const double d = s - centers_[i];
            psi[static_cast<Eigen::Index>(i)] = std::exp(-widths_[i] * d * d);
        }
        return psi;
    }

    DmpParameters params_;
    std::vector<double> centers_;
    std::vector<double> widths_;
    std::vector<double> weights_;
    double start_ = 0.0;
    double goal_ = 0.0;
    std::string notice_;
};

}  // namespace teleskill::classic
