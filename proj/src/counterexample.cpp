#include "bsdelab/counterexample.hpp"

#include "bsdelab/errors.hpp"
#include "bsdelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

namespace bsdelab {

void CounterexampleConfig::validate() const {
    if (!(eps > 0.0) || !(dt > 0.0) || !(horizon > 0.0)) {
        throw PreconditionError("counterexample: eps, dt and horizon must be positive");
    }
    if (n_paths == 0 || batch == 0 || chunk == 0) {
        throw PreconditionError("counterexample: n_paths, batch and chunk must be positive");
    }
    if (!(dt < 1.0)) {
        throw PreconditionError("counterexample: dt must be below 1");
    }
}

namespace {

void run_batch(const CounterexampleConfig& cfg, std::size_t n_steps, std::size_t first, std::size_t lanes,
               std::vector<LadderPathStats>& out) {
    std::vector<std::mt19937_64> engines;
    std::vector<std::normal_distribution<double>> normals(lanes);
    engines.reserve(lanes);
    for (std::size_t l = 0; l < lanes; ++l) {
        engines.push_back(make_engine(cfg.seed.substream(first + l)));
    }
    std::vector<double> w(lanes, 0.0), anchor(lanes, 0.0), gap(lanes, 0.0), up(lanes, 0.0), down(lanes, 0.0),
        cross(lanes, 0.0);
    kernels::LadderLanes state{w, anchor, gap, up, down, cross};
    const double sd = std::sqrt(cfg.dt);
    std::vector<double> inc(cfg.chunk * lanes);
    for (std::size_t s0 = 0; s0 < n_steps; s0 += cfg.chunk) {
        const std::size_t m = std::min(cfg.chunk, n_steps - s0);
        for (std::size_t l = 0; l < lanes; ++l) {
            for (std::size_t s = 0; s < m; ++s) {
                inc[s * lanes + l] = sd * normals[l](engines[l]);
            }
        }
        kernels::ladder_advance(std::span<const double>(inc.data(), m * lanes), lanes, cfg.eps, state);
    }
    for (std::size_t l = 0; l < lanes; ++l) {
        out[first + l] = {gap[l], up[l] + down[l], up[l], down[l], cross[l]};
    }
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const std::size_t idx = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5));
    return v[idx];
}

}  // namespace

CounterexampleReport run_counterexample(const CounterexampleConfig& config) {
    config.validate();
    const auto n_steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
    CounterexampleReport rep;
    rep.config = config;
    rep.paths.resize(config.n_paths);

    const std::size_t n_batches = (config.n_paths + config.batch - 1) / config.batch;
    const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n_batches)));
    auto work = [&](unsigned wid) {
        for (std::size_t b = wid; b < n_batches; b += workers) {
            const std::size_t first = b * config.batch;
            const std::size_t lanes = std::min(config.batch, config.n_paths - first);
            run_batch(config, n_steps, first, lanes, rep.paths);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    rep.slack = std::sqrt(2.0 * config.dt * std::log(1.0 / config.dt));
    rep.gap_bound = config.eps + rep.slack;
    std::vector<double> gaps;
    gaps.reserve(rep.paths.size());
    double tv = 0.0;
    double cr = 0.0;
    for (const auto& p : rep.paths) {
        gaps.push_back(p.gap);
        tv += p.tv;
        cr += p.crossings;
        if (p.gap > rep.gap_bound) {
            ++rep.violations;
        }
    }
    const double np = static_cast<double>(rep.paths.size());
    rep.gap_max = *std::max_element(gaps.begin(), gaps.end());
    rep.gap_q50 = quantile(gaps, 0.5);
    rep.gap_q90 = quantile(gaps, 0.9);
    rep.gap_q99 = quantile(gaps, 0.99);
    rep.mean_tv = tv / np;
    rep.mean_crossings = cr / np;
    rep.predicted_tv = config.horizon / config.eps;
    rep.tv_relative_error = std::fabs(rep.mean_tv - rep.predicted_tv) / rep.predicted_tv;
    rep.coarse_grid = config.dt > config.eps * config.eps / 20.0;
    return rep;
}

TvSlopeFit tv_slope(const std::vector<double>& eps_values, CounterexampleConfig base) {
    if (eps_values.size() < 2) {
        throw PreconditionError("tv_slope: needs at least two eps values");
    }
    TvSlopeFit fit;
    const RandomSeed root = base.seed;
    for (std::size_t j = 0; j < eps_values.size(); ++j) {
        base.eps = eps_values[j];
        base.seed = root.substream(1000 + j);
        const auto rep = run_counterexample(base);
        fit.eps.push_back(base.eps);
        fit.mean_tv.push_back(rep.mean_tv);
    }
    const double m = static_cast<double>(fit.eps.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < fit.eps.size(); ++j) {
        const double x = std::log(1.0 / fit.eps[j]);
        const double y = std::log(fit.mean_tv[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / m;
    return fit;
}

std::string counterexample_csv(const CounterexampleReport& report) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "eps,path,gap,tv,up,down,crossings\n";
    for (std::size_t i = 0; i < report.paths.size(); ++i) {
        const auto& p = report.paths[i];
        os << report.config.eps << ',' << i << ',' << p.gap << ',' << p.tv << ',' << p.up << ',' << p.down << ','
           << p.crossings << '\n';
    }
    return os.str();
}

}  // namespace bsdelab
