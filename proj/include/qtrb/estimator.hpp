#pragma once

// Decay fitting y(m) = A·p^m + B and the fidelity figures derived from it.

#include "groups.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtrb {

class FitError : public std::runtime_error {
public:
    enum class Reason { TooFewDepths, Degenerate, NoConvergence };
    FitError(Reason r, const std::string& what) : std::runtime_error(what), reason_(r) {}
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

struct FitPoint {
    double m = 0.0;
    double y = 0.0;
    double weight = 1.0;  // inverse variance
};

struct FitOptions {
    /// Interpret weights as inverse variances (true) or rescale the
    /// covariance by the reduced chi-square (false).
    bool absolute_sigma = true;
    std::optional<double> fixed_B;
    int max_iterations = 200;
    double gradient_tol = 1e-12;
};

struct DecayFit {
    double A = 0.0;
    double p = 1.0;
    double B = 0.0;
    double sigma_A = 0.0;
    double sigma_p = 0.0;
    double sigma_B = 0.0;
    double residual_norm = 0.0;  // sqrt of the weighted residual sum of squares
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;

    double operator()(double m) const { return A * std::pow(p, m) + B; }
};

namespace detail {

struct FitProblem {
    std::vector<FitPoint> pts;
    std::optional<double> fixed_B;

    int n_params() const { return fixed_B ? 2 : 3; }

    // Parameters: (A, u = log p[, B]).
    double B_of(const Eigen::VectorXd& x) const { return fixed_B ? *fixed_B : x(2); }

    double cost(const Eigen::VectorXd& x) const {
        double c = 0.0;
        for (const auto& pt : pts) {
            const double r = pt.y - (x(0) * std::exp(x(1) * pt.m) + B_of(x));
            c += pt.weight * r * r;
        }
        return c;
    }

    void linearize(const Eigen::VectorXd& x, Eigen::MatrixXd& jtj, Eigen::VectorXd& jtr) const {
        const int k = n_params();
        jtj = Eigen::MatrixXd::Zero(k, k);
        jtr = Eigen::VectorXd::Zero(k);
        Eigen::VectorXd g(k);
        for (const auto& pt : pts) {
            const double e = std::exp(x(1) * pt.m);
            const double r = pt.y - (x(0) * e + B_of(x));
            g(0) = e;
            g(1) = x(0) * pt.m * e;
            if (k == 3) g(2) = 1.0;
            jtj.noalias() += pt.weight * g * g.transpose();
            jtr.noalias() += pt.weight * r * g;
        }
    }

    // Best (A, B) for fixed p by weighted linear least squares.
    Eigen::VectorXd profile(double p) const {
        const int k = n_params();
        Eigen::VectorXd x(k);
        x(1) = std::log(p);
        double saa = 0, sab = 0, sbb = 0, say = 0, sby = 0;
        for (const auto& pt : pts) {
            const double a = std::pow(p, pt.m);
            const double y = pt.y - (fixed_B ? *fixed_B : 0.0);
            saa += pt.weight * a * a;
            sab += pt.weight * a;
            sbb += pt.weight;
            say += pt.weight * a * y;
            sby += pt.weight * y;
        }
        if (fixed_B) {
            x(0) = saa > 0 ? say / saa : 0.0;
            return x;
        }
        const double det = saa * sbb - sab * sab;
        if (std::abs(det) < 1e-300) {
            x(0) = 0.0;
            x(2) = sbb > 0 ? sby / sbb : 0.0;
            return x;
        }
        x(0) = (say * sbb - sab * sby) / det;
        x(2) = (saa * sby - sab * say) / det;
        return x;
    }
};

inline constexpr double kMaxLogP = 9.999995e-7;  // log(1 + 1e-6)

}  // namespace detail

/// Weighted Levenberg–Marquardt fit of A·p^m + B with p parameterized as exp(u).
inline DecayFit fit_exponential(std::span<const FitPoint> points, const FitOptions& opt = {}) {
    detail::FitProblem prob;
    prob.fixed_B = opt.fixed_B;
    prob.pts.assign(points.begin(), points.end());
    for (const auto& pt : prob.pts) {
        if (!std::isfinite(pt.m) || !std::isfinite(pt.y)) throw std::invalid_argument("fit_exponential: non-finite point");
        if (!(pt.weight > 0.0) || !std::isfinite(pt.weight))
            throw std::invalid_argument("fit_exponential: weights must be positive and finite");
        if (pt.m < 0.0) throw std::invalid_argument("fit_exponential: negative depth");
    }
    std::stable_sort(prob.pts.begin(), prob.pts.end(), [](const FitPoint& a, const FitPoint& b) {
        return a.m < b.m || (a.m == b.m && a.y < b.y);
    });
    std::vector<double> depths;
    for (const auto& pt : prob.pts)
        if (depths.empty() || depths.back() != pt.m) depths.push_back(pt.m);
    if (depths.size() < 4) throw FitError(FitError::Reason::TooFewDepths, "fit_exponential: need at least 4 distinct depths");

    double ymin = prob.pts.front().y, ymax = ymin;
    for (const auto& pt : prob.pts) {
        ymin = std::min(ymin, pt.y);
        ymax = std::max(ymax, pt.y);
    }
    if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax)))
        throw FitError(FitError::Reason::Degenerate, "fit_exponential: constant data, decay rate is unidentifiable");

    auto mean_at = [&](double m) {
        double s = 0.0, w = 0.0;
        for (const auto& pt : prob.pts)
            if (pt.m == m) {
                s += pt.weight * pt.y;
                w += pt.weight;
            }
        return s / w;
    };

    // Deterministic start: tail mean, first-depth offset, two-point log ratio.
    const int k = prob.n_params();
    Eigen::VectorXd x(k);
    {
        const double b0 = opt.fixed_B ? *opt.fixed_B : mean_at(depths.back());
        const double y0 = mean_at(depths.front());
        const double a0 = y0 - b0;
        const std::size_t mid = opt.fixed_B ? depths.size() - 1 : depths.size() / 2;
        const double ratio = (mean_at(depths[mid]) - b0) / a0;
        double p0 = 0.9;
        if (a0 != 0.0 && ratio > 0.0 && depths[mid] > depths.front())
            p0 = std::pow(ratio, 1.0 / (depths[mid] - depths.front()));
        p0 = std::clamp(p0, 1e-3, 1.0 - 1e-9);
        x(0) = a0;
        x(1) = std::log(p0);
        if (k == 3) x(2) = b0;
    }
    // A coarse profile scan over p guards against a poor two-point start.
    double best = prob.cost(x);
    for (double q : {0.5, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995, 0.998, 0.999, 0.9995, 0.9999}) {
        const Eigen::VectorXd cand = prob.profile(q);
        const double c = prob.cost(cand);
        if (c < best) {
            best = c;
            x = cand;
        }
    }

    double lambda = 1e-3;
    double cost = best;
    int it = 0;
    bool converged = false;
    Eigen::MatrixXd jtj;
    Eigen::VectorXd jtr;
    for (; it < opt.max_iterations; ++it) {
        prob.linearize(x, jtj, jtr);
        if (jtr.norm() < opt.gradient_tol) {
            converged = true;
            break;
        }
        bool improved = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd lhs = jtj;
            for (int i = 0; i < k; ++i) lhs(i, i) += lambda * std::max(jtj(i, i), 1e-300);
            const Eigen::VectorXd step = lhs.ldlt().solve(jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd trial = x + step;
            trial(1) = std::min(trial(1), detail::kMaxLogP);
            const double c = prob.cost(trial);
            if (c <= cost) {
                const double rel = std::abs(cost - c) / std::max(cost, 1e-300);
                const double dx = (trial - x).norm() / (x.norm() + 1e-300);
                x = trial;
                cost = c;
                lambda = std::max(lambda / 10.0, 1e-12);
                improved = true;
                if (rel < 1e-15 || dx < 1e-14) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved || converged) {
            // No downhill step at any damping: a stationary point up to roundoff.
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged) throw FitError(FitError::Reason::NoConvergence, "fit_exponential: no convergence in iteration budget");

    prob.linearize(x, jtj, jtr);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible()) throw FitError(FitError::Reason::Degenerate, "fit_exponential: singular normal matrix");
    Eigen::MatrixXd cov = lu.inverse();

    DecayFit f;
    f.A = x(0);
    f.p = std::exp(x(1));
    f.B = prob.B_of(x);
    f.chi2 = cost;
    f.residual_norm = std::sqrt(cost);
    f.dof = static_cast<int>(prob.pts.size()) - k;
    f.iterations = it;
    if (!opt.absolute_sigma) cov *= f.dof > 0 ? cost / f.dof : 0.0;
    f.sigma_A = std::sqrt(std::max(cov(0, 0), 0.0));
    f.sigma_p = f.p * std::sqrt(std::max(cov(1, 1), 0.0));
    f.sigma_B = k == 3 ? std::sqrt(std::max(cov(2, 2), 0.0)) : 0.0;
    if (!std::isfinite(f.sigma_p) || !std::isfinite(f.A) || !std::isfinite(f.B))
        throw FitError(FitError::Reason::Degenerate, "fit_exponential: non-finite fit");
    return f;
}

/// Standard deviation of p from resampling the per-depth sample sets with replacement.
inline double bootstrap_sigma_p(const std::vector<std::pair<double, std::vector<double>>>& samples_by_depth,
                                int resamples, std::uint64_t seed, const FitOptions& opt = {}) {
    if (resamples < 2) throw std::invalid_argument("bootstrap_sigma_p: need at least 2 resamples");
    std::mt19937_64 rng(seed);
    std::vector<double> ps;
    for (int r = 0; r < resamples; ++r) {
        std::vector<FitPoint> pts;
        for (const auto& [m, vals] : samples_by_depth) {
            if (vals.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, vals.size() - 1);
            double s = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) s += vals[pick(rng)];
            pts.push_back({m, s / static_cast<double>(vals.size()), 1.0});
        }
        try {
            ps.push_back(fit_exponential(pts, opt).p);
        } catch (const FitError&) {
        }
    }
    if (ps.size() < 2) throw FitError(FitError::Reason::Degenerate, "bootstrap_sigma_p: too few successful resamples");
    double mean = 0.0;
    for (double p : ps) mean += p;
    mean /= static_cast<double>(ps.size());
    double var = 0.0;
    for (double p : ps) var += (p - mean) * (p - mean);
    return std::sqrt(var / static_cast<double>(ps.size() - 1));
}

inline void require_rb_dimension(int d) {
    if (d != 2 && d != 3 && d != 9) throw std::invalid_argument("dimension must be 2, 3 or 9");
}

/// r = (d−1)(1−p)/d.
inline double error_per_clifford(double p, int d) {
    require_rb_dimension(d);
    return (d - 1.0) * (1.0 - p) / d;
}

inline double error_per_clifford_sigma(double sigma_p, int d) {
    require_rb_dimension(d);
    return (d - 1.0) * sigma_p / d;
}

/// r_gate = (d−1)/d · (1 − p_i/p); unclipped.
inline double interleaved_gate_error(double p_i, double p, int d) {
    require_rb_dimension(d);
    if (p == 0.0) throw std::invalid_argument("interleaved_gate_error: reference p is zero");
    return (d - 1.0) / d * (1.0 - p_i / p);
}

struct GateError {
    double r = 0.0;
    double sigma = 0.0;
};

/// Gate error with first-order propagation of independent sigmas.
inline GateError interleaved_gate_error(const DecayFit& interleaved, const DecayFit& reference, int d) {
    GateError e;
    e.r = interleaved_gate_error(interleaved.p, reference.p, d);
    const double s = (d - 1.0) / d;
    const double di = s / reference.p;
    const double dr = s * interleaved.p / (reference.p * reference.p);
    e.sigma = std::hypot(di * interleaved.sigma_p, dr * reference.sigma_p);
    return e;
}

struct LeakageFit {
    double p_l = 1.0;
    double sigma = 0.0;
    double rate = 0.0;  // 1 − p_l
    double A = 0.0;
    double B = 0.0;
    bool degenerate = false;
};

/// Fits the out-of-subspace population. Constant data is reported as a zero
/// rate with the degenerate flag set.
inline LeakageFit fit_leakage(std::span<const FitPoint> points, const FitOptions& opt = {}) {
    LeakageFit out;
    try {
        const auto f = fit_exponential(points, opt);
        out.p_l = f.p;
        out.sigma = f.sigma_p;
        out.rate = 1.0 - f.p;
        out.A = f.A;
        out.B = f.B;
    } catch (const FitError& e) {
        if (e.reason() != FitError::Reason::Degenerate) throw;
        out.degenerate = true;
        out.B = points.empty() ? 0.0 : points.front().y;
    }
    return out;
}

/// Canonical member of a {Q, Q†} pair: the lexicographically smaller exponent vector.
inline PauliLabel conjugate_pair_representative(const PauliLabel& q) {
    PauliLabel a = q.unphased();
    PauliLabel b = a;
    for (auto& v : b.x) v = mod3(-v);
    for (auto& v : b.z) v = mod3(-v);
    const auto key = [](const PauliLabel& l) {
        std::vector<int> k;
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            k.push_back(l.x[i]);
            k.push_back(l.z[i]);
        }
        return k;
    };
    return key(b) < key(a) ? b : a;
}

namespace detail {

inline std::vector<PauliLabel> missing_channels(const std::map<PauliLabel, double>& decays, int n) {
    std::vector<PauliLabel> missing;
    for (const auto& q : all_paulis(n)) {
        if (q.weight() == 0) continue;
        const auto rep = conjugate_pair_representative(q);
        if (!(rep == q.unphased())) continue;
        if (!decays.count(rep)) missing.push_back(rep);
    }
    return missing;
}

inline void require_complete(const std::map<PauliLabel, double>& decays, int n) {
    const auto missing = missing_channels(decays, n);
    if (missing.empty()) return;
    std::string msg = "process_fidelity: missing channels";
    for (const auto& q : missing) msg += " " + q.name();
    throw std::invalid_argument(msg);
}

}  // namespace detail

/// F_p = (1 + Σ_{Q ≠ I} p_Q)/9ⁿ; each stored representative stands for its conjugate pair.
inline double process_fidelity(const std::map<PauliLabel, double>& decays, int n) {
    if (n < 1) throw std::invalid_argument("process_fidelity: n must be >= 1");
    detail::require_complete(decays, n);
    double sum = 1.0;
    for (const auto& q : all_paulis(n)) {
        if (q.weight() == 0) continue;
        sum += decays.at(conjugate_pair_representative(q));
    }
    return sum / static_cast<double>(ipow3(2 * n));
}

/// Propagated sigma of F_p for independent representative sigmas.
inline double process_fidelity_sigma(const std::map<PauliLabel, double>& sigmas, int n) {
    detail::require_complete(sigmas, n);
    double var = 0.0;
    for (const auto& [q, s] : sigmas) {
        (void)q;
        // Q and Q† share one estimate, so the pair contributes 2·p_Q.
        const double mult = 2.0;
        var += mult * mult * s * s;
    }
    return std::sqrt(var) / static_cast<double>(ipow3(2 * n));
}

/// F_avg = (d·F_p + 1)/(d + 1).
inline double average_gate_fidelity(double F_p, int d) {
    if (d < 2) throw std::invalid_argument("average_gate_fidelity: d must be >= 2");
    return (d * F_p + 1.0) / (d + 1.0);
}

}  // namespace qtrb
