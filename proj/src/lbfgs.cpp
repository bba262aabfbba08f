#include "adc/lbfgs.hpp"

#include "adc/error.hpp"

#include <algorithm>
#include <cmath>

namespace adc {

namespace {

struct CurvaturePair {
    Eigen::VectorXd s, y;
    double rho;
};

Eigen::VectorXd two_loop(const std::deque<CurvaturePair>& pairs, const Eigen::VectorXd& grad) {
    Eigen::VectorXd q = grad;
    std::vector<double> a(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        a[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= a[i] * pairs[i].y;
    }
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double b = pairs[i].rho * pairs[i].y.dot(q);
        q += (a[i] - b) * pairs[i].s;
    }
    return -q;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

LbfgsReport minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options,
                           const IterationHook& hook) {
    LbfgsReport rep;
    rep.x = std::move(x0);
    Eigen::VectorXd grad(rep.x.size());
    rep.value = objective(rep.x, grad);
    ++rep.evaluations;
    if (!std::isfinite(rep.value) || !grad.allFinite()) throw NumericalError("lbfgs: non-finite initial objective");

    const double tol = options.rtol * std::max(1.0, inf_norm(grad));
    rep.value_history.push_back(rep.value);
    rep.gradient_norm_history.push_back(inf_norm(grad));

    std::deque<CurvaturePair> pairs;
    Eigen::VectorXd trial_grad(rep.x.size());

    while (true) {
        if (inf_norm(grad) <= tol) {
            rep.converged = true;
            rep.message = "gradient tolerance reached";
            break;
        }
        if (rep.iterations >= options.max_iterations) {
            rep.message = "iteration limit reached";
            break;
        }

        bool accepted = false;
        Eigen::VectorXd step;
        double trial_value = 0.0;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            Eigen::VectorXd dir = pairs.empty() ? Eigen::VectorXd(-grad / inf_norm(grad)) : two_loop(pairs, grad);
            double slope = grad.dot(dir);
            if (!(slope < 0.0)) {
                pairs.clear();
                dir = -grad / inf_norm(grad);
                slope = grad.dot(dir);
            }
            double t = 1.0;
            for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
                const Eigen::VectorXd trial = rep.x + t * dir;
                trial_value = objective(trial, trial_grad);
                ++rep.evaluations;
                if (std::isfinite(trial_value) && trial_grad.allFinite() &&
                    trial_value <= rep.value + options.armijo * t * slope) {
                    step = t * dir;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (pairs.empty()) break;
                pairs.clear();
            }
        }
        if (!accepted) {
            rep.message = "line search failed after " + std::to_string(options.max_halvings) + " halvings";
            break;
        }

        Eigen::VectorXd y = trial_grad - grad;
        const double sy = step.dot(y);
        if (sy > 1e-12 * step.norm() * y.norm() && sy > 0.0) {
            pairs.push_back({step, y, 1.0 / sy});
            if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
        }
        rep.x += step;
        rep.value = trial_value;
        grad = trial_grad;
        ++rep.iterations;
        rep.value_history.push_back(rep.value);
        rep.gradient_norm_history.push_back(inf_norm(grad));
        if (hook && !hook(rep.iterations, rep.x, rep.value)) {
            rep.message = "stopped by hook";
            break;
        }
    }
    return rep;
}

} // namespace adc
