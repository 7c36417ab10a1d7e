#include "sabrdnn/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "sabrdnn/error.hpp"

namespace sabrdnn {

namespace {

class UnitBoxProblem {
public:
    UnitBoxProblem(const Objective& f, const BoxBounds& box) : f_(f), box_(box) {}

    double value(const Eigen::VectorXd& u) {
        ++evals;
        return f_(to_x(u));
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& u, double h) {
        Eigen::VectorXd g(u.size());
        Eigen::VectorXd p = u;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double up = std::min(u(i) + h, 1.0), dn = std::max(u(i) - h, 0.0);
            p(i) = up;
            const double fu = value(p);
            p(i) = dn;
            const double fd = value(p);
            p(i) = u(i);
            g(i) = (fu - fd) / (up - dn);
        }
        return g;
    }

    std::vector<double> to_x(const Eigen::VectorXd& u) const {
        std::vector<double> x(std::size_t(u.size()));
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double w = box_.hi[i] - box_.lo[i];
            x[i] = std::clamp(box_.lo[i] + w * u(Eigen::Index(i)), box_.lo[i], box_.hi[i]);
        }
        return x;
    }

    int evals = 0;

private:
    const Objective& f_;
    const BoxBounds& box_;
};

Eigen::VectorXd project(const Eigen::VectorXd& u) { return u.cwiseMax(0.0).cwiseMin(1.0); }

// Gradient with components that push against an active bound removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& u, const Eigen::VectorXd& g) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if ((u(i) <= 0.0 && g(i) > 0.0) || (u(i) >= 1.0 && g(i) < 0.0)) pg(i) = 0.0;
    return pg;
}

}  // namespace

OptimResult minimize_box(const Objective& f, std::vector<double> x0, const BoxBounds& box, const OptimOptions& opt) {
    const std::size_t n = x0.size();
    if (n == 0 || box.lo.size() != n || box.hi.size() != n)
        fail(ErrorKind::InvalidParameter, "start point and bounds must have the same non-zero size");
    for (std::size_t i = 0; i < n; ++i)
        if (!(box.lo[i] < box.hi[i])) fail(ErrorKind::InvalidParameter, "each bound needs lo < hi");

    UnitBoxProblem prob(f, box);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) u(Eigen::Index(i)) = (x0[i] - box.lo[i]) / (box.hi[i] - box.lo[i]);
    u = project(u);

    const Eigen::Index N = Eigen::Index(n);
    double fu = prob.value(u);
    Eigen::VectorXd g = prob.gradient(u, opt.fd_step);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(N, N);
    bool identity = true, scaled = false;

    OptimResult r;
    for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
        const Eigen::VectorXd pg = projected_gradient(u, g);
        if (pg.lpNorm<Eigen::Infinity>() <= opt.gtol) {
            r.converged = true;
            break;
        }
        Eigen::VectorXd d = -(H * pg);
        for (Eigen::Index i = 0; i < N; ++i)
            if (pg(i) == 0.0) d(i) = 0.0;
        if (g.dot(d) >= 0.0) {
            H.setIdentity();
            identity = true;
            d = -pg;
        }

        double t = 1.0, fn = fu;
        Eigen::VectorXd un = u;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            un = project(u + t * d);
            if (un == u) break;
            fn = prob.value(un);
            if (std::isfinite(fn) && fn <= fu + 1e-4 * g.dot(un - u)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!identity) {
                H.setIdentity();
                identity = true;
                continue;
            }
            // no descent along the projected gradient: as good as the finite-difference gradient allows
            r.converged = true;
            break;
        }

        const Eigen::VectorXd gn = prob.gradient(un, opt.fd_step);
        const Eigen::VectorXd s = un - u, y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (!scaled) {
                H *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(N, N) - rho * y * s.transpose();
            H = V.transpose() * H * V + rho * s * s.transpose();
            identity = false;
        }
        const double decrease = fu - fn;
        const double f_old = fu;
        u = un;
        fu = fn;
        g = gn;
        if (decrease <= opt.ftol * std::fabs(f_old)) {
            r.converged = true;
            ++r.iterations;
            break;
        }
    }
    r.x = prob.to_x(u);
    r.f = fu;
    r.evaluations = prob.evals;
    return r;
}

}  // namespace sabrdnn
