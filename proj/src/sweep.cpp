#include "adc/sweep.hpp"

#include "adc/error.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace adc {

namespace {

SweepRow make_row(double alpha, double beta, double gamma, int steps, double noise) {
    SweepRow r;
    r.alpha = alpha;
    r.beta = beta;
    r.gamma = gamma;
    r.steps = steps;
    r.noise = noise;
    return r;
}

} // namespace

SweepRow run_cell(const AssembledSystem& system, const ObservationSeries& obs, double alpha, double beta,
                  double gamma, int steps, double noise, const SweepSettings& settings) {
    SweepRow row = make_row(alpha, beta, gamma, steps, noise);
    try {
        if (steps < 1) throw InputError("sweep: k must be >= 1");
        const double dt = settings.end_time / steps;
        const RegParams reg{alpha, beta, gamma, settings.ventricle_factor};
        const InverseProblem problem(system, obs, reg, dt, steps, std::nullopt, settings.forward);
        ControlState truth;
        truth.diffusion = settings.truth.empty() ? reference_diffusion(system) : settings.truth;
        truth.boundary = manufactured_boundary(system, dt, steps);
        const InverseResult res = optimize(problem, default_initial_control(system, steps), settings.optimizer, truth);
        row.iterations = res.iterations;
        row.converged = res.converged;
        for (auto s : {Subdomain::Csf, Subdomain::Grey, Subdomain::White})
            row.d_rel[static_cast<int>(s) - 1] = res.errors->for_subdomain(s);
        row.g_rel = res.errors->boundary;
        row.objective = res.objective_history.back();
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

std::vector<SweepRow> run_sweep(const AssembledSystem& system, const SweepGrid& grid, const SweepSettings& settings,
                                int workers) {
    struct Cell {
        double a, b, g;
        int k;
        double n;
    };
    std::vector<Cell> cells;
    for (double a : grid.alpha)
        for (double b : grid.beta)
            for (double g : grid.gamma)
                for (int k : grid.steps)
                    for (double n : grid.noise) cells.push_back({a, b, g, k, n});

    // observations depend on (dt_gen, noise) only; generated once up front
    std::map<std::pair<double, double>, std::optional<ObservationSeries>> data;
    std::map<std::pair<double, double>, std::string> data_error;
    auto key = [&](const Cell& c) {
        const double dt_gen = settings.dt_gen ? *settings.dt_gen : settings.end_time / std::max(c.k, 1);
        return std::make_pair(dt_gen, c.n);
    };
    for (const auto& c : cells) {
        const auto kk = key(c);
        if (data.count(kk)) continue;
        try {
            SyntheticSpec spec;
            spec.diffusion = settings.truth;
            spec.dt = kk.first;
            spec.observations = settings.observations;
            spec.end_time = settings.end_time;
            spec.noise = {kk.second, settings.seed};
            data[kk] = make_synthetic_observations(system, spec);
        } catch (const std::exception& e) {
            data[kk] = std::nullopt;
            data_error[kk] = e.what();
        }
    }

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            const Cell& c = cells[i];
            const auto& obs = data.at(key(c));
            if (!obs) {
                rows[i] = make_row(c.a, c.b, c.g, c.k, c.n);
                rows[i].error = data_error.at(key(c));
                continue;
            }
            rows[i] = run_cell(system, *obs, c.a, c.b, c.g, c.k, c.n, settings);
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return rows;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

} // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.gamma) << ',' << r.steps << ',' << num(r.noise) << ',';
        if (!r.error.empty()) {
            out << ',' << quoted("error: " + r.error) << ",,,,,\n";
            continue;
        }
        out << r.iterations << ',' << (r.converged ? "true" : "false");
        for (const auto& d : r.d_rel) out << ',' << (d ? num(*d) : "");
        out << ',' << num(r.g_rel) << ',' << num(r.objective) << '\n';
    }
    out.flush();
}

} // namespace adc
