#include "rhlab/matrixstats.hpp"

#include <cmath>
#include <exception>
#include <random>

#include "rhlab/common.hpp"
#include "rhlab/rng.hpp"
#include "rhlab/stats.hpp"

namespace rhlab::matrixstats {
namespace {

struct Trial {
    double absdet;
    int positive;
    bool degenerate;
};

Eigen::MatrixXd draw(int m, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    std::normal_distribution<double> g(0.0, 1.0);
    const double off = std::sqrt(0.5);
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
        a(i, i) = g(rng);
        for (int j = i + 1; j < m; ++j) a(i, j) = a(j, i) = off * g(rng);
    }
    return a;
}

void classify(const Eigen::VectorXd& ev, int& pos, int& neg, double& det) {
    const double rho = std::max(std::fabs(ev(0)), std::fabs(ev(ev.size() - 1)));
    const double tau = 1e-12 * rho;
    pos = neg = 0;
    det = 1.0;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) > tau) ++pos;
        else if (ev(i) < -tau) ++neg;
        det *= ev(i);
    }
}

Trial run_trial(int m, std::uint64_t seed, std::uint64_t t, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
    const auto a = draw(m, seed, t);
    int pos, neg;
    double det;
    if (m == 1) {
        Eigen::VectorXd ev(1);
        ev(0) = a(0, 0);
        classify(ev, pos, neg, det);
    } else {
        es.compute(a, Eigen::EigenvaluesOnly);
        classify(es.eigenvalues(), pos, neg, det);
    }
    return {std::fabs(det), pos, pos + neg != m};
}

void check(int m, std::int64_t trials) {
    if (m < 1) throw InvalidArgument("matrix size must be >= 1");
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
}

DetExpectationTable tabulate(int m, const std::vector<Trial>& tr) {
    const std::int64_t T = static_cast<std::int64_t>(tr.size());
    DetExpectationTable tab;
    tab.m = m;
    tab.trials = T;
    tab.e_hat.assign(m + 1, 0.0);
    tab.std_errors.assign(m + 1, 0.0);
    tab.hits.assign(m + 1, 0);
    tab.upper_bound.assign(m + 1, false);
    tab.c_plus.assign(m + 1, 0.0);

    std::vector<double> all(T), bin(T);
    std::int64_t degenerate = 0;
    for (std::int64_t t = 0; t < T; ++t) {
        all[t] = tr[t].absdet;
        degenerate += tr[t].degenerate;
    }
    const Estimate plain = summarize(all);
    tab.mean_abs_det = plain.mean;
    tab.total_std_error = plain.std_error / std::sqrt(kPi);
    tab.degenerate_fraction = static_cast<double>(degenerate) / T;
    for (int i = 0; i <= m; ++i) {
        for (std::int64_t t = 0; t < T; ++t) {
            const bool in = !tr[t].degenerate && tr[t].positive == i;
            bin[t] = in ? tr[t].absdet : 0.0;
            tab.hits[i] += in;
        }
        const Estimate e = summarize(bin);
        if (tab.hits[i] == 0) {
            tab.upper_bound[i] = true;
            tab.e_hat[i] = 3.0 / T * plain.mean;
            tab.std_errors[i] = 0.0;
        } else {
            tab.e_hat[i] = e.mean;
            tab.std_errors[i] = e.std_error;
        }
        tab.c_plus[i] = tab.e_hat[i] / std::sqrt(kPi);
        if (!tab.upper_bound[i]) tab.total += tab.c_plus[i];
    }
    return tab;
}

}  // namespace

SymMatrixSample sample_sym(int m, std::uint64_t seed, std::uint64_t stream_index) {
    check(m, 1);
    SymMatrixSample s;
    s.size = m;
    s.entries = draw(m, seed, stream_index);
    Eigen::VectorXd ev;
    if (m == 1) {
        ev = s.entries.col(0);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.entries, Eigen::EigenvaluesOnly);
        ev = es.eigenvalues();
    }
    s.eigenvalues.assign(ev.data(), ev.data() + m);
    classify(ev, s.positive, s.negative, s.det);
    return s;
}

DetExpectationTable estimate_e_table_serial(int m, std::int64_t trials, std::uint64_t seed) {
    check(m, trials);
    std::vector<Trial> tr(trials);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (std::int64_t t = 0; t < trials; ++t) tr[t] = run_trial(m, seed, t, es);
    return tabulate(m, tr);
}

DetExpectationTable estimate_e_table(int m, std::int64_t trials, std::uint64_t seed) {
    check(m, trials);
    std::vector<Trial> tr(trials);
#pragma omp parallel
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
#pragma omp for schedule(static)
        for (std::int64_t t = 0; t < trials; ++t) tr[t] = run_trial(m, seed, t, es);
    }
    return tabulate(m, tr);
}

double asymptotic_total(int n) { return 2.0 * std::sqrt(2.0) / kPi * std::exp(std::lgamma(0.5 * (n + 1))); }

std::vector<RatioPoint> asymptotic_ratio(const std::vector<int>& m_values, std::int64_t trials, std::uint64_t seed) {
    std::vector<RatioPoint> out;
    for (int m : m_values) {
        const auto tab = estimate_e_table(m, trials, seed + static_cast<std::uint64_t>(m));
        const double f = asymptotic_total(m + 1);
        out.push_back({m, tab.mean_abs_det / std::sqrt(kPi) / f, tab.total_std_error / f});
    }
    return out;
}

TailEstimate low_index_tail(const DetExpectationTable& tab, double alpha) {
    if (!(alpha >= 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in [0, 1/2)");
    const int n = tab.m + 1;
    const int kmax = std::min(tab.m, static_cast<int>(std::floor(alpha * n)));
    TailEstimate r;
    double var = 0.0;
    bool any_hit = false;
    for (int i = 0; i <= kmax; ++i) {
        if (tab.upper_bound[i]) continue;
        any_hit = true;
        r.value += tab.c_plus[i];
        var += tab.std_errors[i] * tab.std_errors[i] / kPi;
    }
    if (!any_hit) {
        // rule of three on the combined bins
        r.upper_bound = true;
        r.value = 3.0 / tab.trials * tab.mean_abs_det / std::sqrt(kPi);
        return r;
    }
    r.std_error = std::sqrt(var);  // bins are disjoint events; covariance terms are negative and ignored
    return r;
}

TailEstimate low_index_tail(int m, double alpha, std::int64_t trials, std::uint64_t seed) {
    return low_index_tail(estimate_e_table(m, trials, seed), alpha);
}

}  // namespace rhlab::matrixstats
