// Acceptance harness: one PASS/FAIL line per criterion. Full experiments are
// written under the directory given as argv[1] (default ./acceptance_runs).
// Exit status is the number of failed criteria.

#include "scatex/dct.hpp"
#include "scatex/experiment.hpp"
#include "scatex/mlr.hpp"
#include "scatex/plots.hpp"
#include "scatex/scattering.hpp"
#include "scatex/zoopt.hpp"
#include "support/oracles.hpp"
#include "support/scatter_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace scatex;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool done = false;
    bool pass = false;
    std::string detail;
};
Verdict verdicts[11];

void verdict(int id, bool pass, const std::string& detail)
{
    verdicts[id] = {true, pass, detail};
    std::printf("  [criterion %d evaluated]\n", id);
    std::fflush(stdout);
}

template <class... A>
std::string fmt(const char* f, A... a)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> randn(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (double& v : x)
        v = g(rng);
    return x;
}

double max_abs(const std::vector<double>& a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

struct Run {
    fs::path dir;
    json report;
    double wall_s = 0.0;
};

Run run(Generator g, const fs::path& dir)
{
    auto cfg = default_config(g);
    cfg.output_dir = dir.string();
    fs::remove_all(dir);
    const auto t0 = Clock::now();
    Run r{dir, run_experiment(cfg), 0.0};
    r.wall_s = seconds_since(t0);
    std::printf("  [%s run in %s: %.1f s]\n", to_string(g).c_str(), dir.string().c_str(), r.wall_s);
    std::fflush(stdout);
    return r;
}

// ---- independent checks ----------------------------------------------------

/// Probabilities of the stored model at the stored extracted signals,
/// recomputed through the shipped filter bank.
std::vector<Eigen::VectorXd> extracted_probabilities(const fs::path& dir, int K)
{
    const auto bank = filter_bank_from_json(read_json(dir / artifacts::filter_bank));
    const auto model = mlr_model_from_json(read_json(dir / artifacts::model));
    const auto sig = load_extracted_signals((dir / artifacts::extracted).string(), K);
    std::vector<Eigen::VectorXd> out;
    for (const auto& x : sig.raw)
        out.push_back(predict_proba(model, scatter2(x, bank).coeffs));
    return out;
}

/// Brute force over window starts, non-circular.
double window_mass(const std::vector<double>& x, std::size_t s, std::size_t w)
{
    double m = 0.0;
    for (std::size_t i = s; i < s + w; ++i)
        m += std::abs(x[i]);
    return m;
}

struct Localization {
    double single = 0.0;
    double pair_a = 0.0, pair_b = 0.0;
};

Localization localization(const std::vector<double>& x, std::size_t w)
{
    double total = 0.0;
    for (double v : x)
        total += std::abs(v);
    Localization out;
    if (total == 0.0)
        return out;
    const std::size_t n = x.size() - w + 1;
    std::vector<double> m(n);
    for (std::size_t s = 0; s < n; ++s) {
        m[s] = window_mass(x, s, w) / total;
        out.single = std::max(out.single, m[s]);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + w; b < n; ++b)
            if (m[a] + m[b] > out.pair_a + out.pair_b) {
                out.pair_a = std::max(m[a], m[b]);
                out.pair_b = std::min(m[a], m[b]);
            }
    return out;
}

/// Largest KKT violation of mean NLL + lambda * ||B||_1 on standardized
/// features, written from scratch.
double kkt_oracle(const MlrModel& m, const LabeledFeatures& data)
{
    const std::size_t N = data.labels.size();
    const int K = m.K;
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd gB = Eigen::MatrixXd::Zero(K, m.p);
    Eigen::VectorXd z(m.p), logit(K);
    for (std::size_t i = 0; i < N; ++i) {
        for (int j = 0; j < m.p; ++j)
            z[j] = (data.features[i][j] - m.feature_center[j]) / m.feature_scale[j];
        logit = m.alphas + m.betas * z;
        const double top = logit.maxCoeff();
        Eigen::VectorXd e = (logit.array() - top).exp();
        e /= e.sum();
        e[data.labels[i] - 1] -= 1.0;
        ga += e / double(N);
        gB += e * z.transpose() / double(N);
    }
    double worst = ga.cwiseAbs().maxCoeff();
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < m.p; ++j) {
            const double b = m.betas(k, j), g = gB(k, j);
            const double v = b == 0.0 ? std::max(0.0, std::abs(g) - m.lambda)
                                      : std::abs(g + m.lambda * (b > 0 ? 1.0 : -1.0));
            worst = std::max(worst, v);
        }
    return worst;
}

bool histories_monotone(const fs::path& dir, int K, long& runs)
{
    bool ok = true;
    for (int k = 1; k <= K; ++k) {
        const auto h = read_json(dir / artifacts::zorun(k)).at("history").get<std::vector<double>>();
        ok = ok && !h.empty() && std::is_sorted(h.rbegin(), h.rend());
        ++runs;
    }
    return ok;
}

// ---- criteria ----------------------------------------------------------------

void criterion1()
{
    const ScatteringConfig cfg;
    const auto bank = build_filter_bank(cfg);
    std::mt19937_64 rng(1);
    const int n = 200;
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < n; ++i)
        xs.push_back(randn(128, rng));
    std::size_t size = 0;
    const auto t0 = Clock::now();
    for (const auto& x : xs)
        size = std::max(size, scatter2(x, bank).coeffs.size());
    const double ms = 1e3 * seconds_since(t0) / n;
    const bool pass = size == 1078 && cfg.t_out() == 7 && cfg.n_paths() == 154 && ms < 50.0;
    verdict(1, pass,
            fmt("coefficients %zu (need 1078), per path %zu (need 7), %.3f ms/signal (need < 50)", size,
                cfg.t_out(), ms));
}

void criterion2(const Run& r)
{
    const auto& c = r.report.at("classifier");
    const double acc = c.at("test_accuracy");
    const int n_test = r.report.at("n_test"), n_train = r.report.at("n_train");
    const bool pass = acc >= 0.95 && n_test == 3000 && n_train == 300 && r.wall_s < 600.0;
    verdict(2, pass,
            fmt("CBF test accuracy %.4f (need >= 0.95) on %d test / %d train, run %.1f s (need < 600)", acc, n_test,
                n_train, r.wall_s));
}

void criterion3(const Run& r)
{
    const double acc = r.report.at("classifier").at("test_accuracy");
    const int n_test = r.report.at("n_test"), n_train = r.report.at("n_train");
    const bool pass = acc >= 0.80 && acc <= 0.95 && n_test == 3000 && n_train == 300 && r.wall_s < 600.0;
    verdict(3, pass,
            fmt("triangle test accuracy %.4f (need [0.80, 0.95]) on %d test / %d train, run %.1f s (need < 600)",
                acc, n_test, n_train, r.wall_s));
}

void criterion4(const Run& cbf, const Run& tri)
{
    bool pass = true;
    std::string detail;
    for (const auto* r : {&cbf, &tri}) {
        const auto probs = extracted_probabilities(r->dir, 3);
        detail += r == &cbf ? "cbf" : " triangle";
        for (int k = 1; k <= 3; ++k) {
            const auto& p = probs[k - 1];
            Eigen::Index arg = 0;
            p.maxCoeff(&arg);
            const bool ok = arg == k - 1 && p[k - 1] >= 0.9;
            pass = pass && ok;
            detail += fmt(" k%d p=%.4f%s", k, p[k - 1], arg == k - 1 ? "" : fmt("(argmax %d)", int(arg) + 1).c_str());
        }
    }
    verdict(4, pass, detail + " (need argmax = k and p_k >= 0.9)");
}

void criterion5(const Run& cbf)
{
    const auto sig = load_extracted_signals((cbf.dir / artifacts::extracted).string(), 3);
    const auto cyl = localization(sig.raw[0], 48);
    const auto bell = localization(sig.raw[1], 48);
    const auto fun = localization(sig.raw[2], 48);
    const bool pair_ok = cyl.pair_b >= 0.25 && cyl.pair_a + cyl.pair_b >= 0.8;
    const bool report_ok = cbf.report.at("localization").at("pass") == true;
    const bool pass = bell.single >= 0.8 && fun.single >= 0.8 && pair_ok && report_ok;
    verdict(5, pass,
            fmt("bell %.3f, funnel %.3f in one width-48 window (need >= 0.8); cylinder disjoint pair %.3f + %.3f "
                "(need each >= 0.25, sum >= 0.8); report flag %s",
                bell.single, fun.single, cyl.pair_a, cyl.pair_b, report_ok ? "pass" : "fail"));
}

void criterion6()
{
    double worst = 0.0;
    int signals = 0;
    std::mt19937_64 rng(6);
    const double rates[][3] = {{2, 2, 2}, {1, 2, 4}, {2, 1, 2}, {2, 2, 4}};
    for (const auto& r : rates) {
        ScatteringConfig c;
        c.d = 32;
        c.n_filters_1 = 5;
        c.n_filters_2 = 4;
        c.r1 = r[0];
        c.r2 = r[1];
        c.ra = r[2];
        c.J = default_averaging_scale(c.ra);
        const auto bank = build_filter_bank(c);
        for (int s = 0; s < 50; ++s, ++signals) {
            const auto x = randn(32, rng);
            const auto fast = scatter2(x, bank).coeffs;
            const auto slow = oracle::scatter(x, bank);
            double diff = fast.size() == slow.size() ? 0.0 : INFINITY;
            for (std::size_t i = 0; i < std::min(fast.size(), slow.size()); ++i)
                diff = std::max(diff, std::abs(fast[i] - slow[i]));
            worst = std::max(worst, diff / max_abs(slow));
        }
    }
    verdict(6, worst <= 1e-8,
            fmt("max relative deviation from the direct oracle %.2e over %d signals, 4 configs x 50 (need <= 1e-8)",
                worst, signals));
}

void criterion7(const Run& cbf, const Run& tri)
{
    bool pass = true;
    std::string detail;
    for (const auto* r : {&cbf, &tri}) {
        const auto model = mlr_model_from_json(read_json(r->dir / artifacts::model));
        const auto train = load_features_csv((r->dir / artifacts::train_features).string(), 3);
        const double kkt = kkt_oracle(model, train);
        const double bound = 10.0 * default_config(Generator::cbf).fit.tol;
        pass = pass && kkt <= bound;
        detail += fmt("%s KKT %.2e (need <= %.0e); ", r == &cbf ? "cbf" : "triangle", kkt, bound);
    }

    // Central differences of the summed NLL on random small problems.
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + trial % 3, p = 3 + trial % 4, N = 10 + trial;
        RowMatrix X(N, p);
        std::vector<int> y(N);
        for (int i = 0; i < N; ++i) {
            const auto row = randn(p, rng);
            for (int j = 0; j < p; ++j)
                X(i, j) = row[j];
            y[i] = 1 + int(rng() % K);
        }
        Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(randn(K, rng).data(), K);
        const auto bv = randn(K * p, rng);
        Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(bv.data(), K, p);
        const auto g = nll_and_grad(a, B, X, y);
        const double h = 1e-6;
        Eigen::VectorXd fd_a(K);
        Eigen::MatrixXd fd_B(K, p);
        for (int k = 0; k < K; ++k) {
            auto ap = a, am = a;
            ap[k] += h;
            am[k] -= h;
            fd_a[k] = (nll_and_grad(ap, B, X, y).nll - nll_and_grad(am, B, X, y).nll) / (2 * h);
            for (int j = 0; j < p; ++j) {
                auto Bp = B, Bm = B;
                Bp(k, j) += h;
                Bm(k, j) -= h;
                fd_B(k, j) = (nll_and_grad(a, Bp, X, y).nll - nll_and_grad(a, Bm, X, y).nll) / (2 * h);
            }
        }
        const double num = std::sqrt((fd_a - g.grad_alpha).squaredNorm() + (fd_B - g.grad_beta).squaredNorm());
        const double den = std::sqrt(g.grad_alpha.squaredNorm() + g.grad_beta.squaredNorm());
        worst = std::max(worst, num / den);
    }
    pass = pass && worst <= 1e-5;
    verdict(7, pass, detail + fmt("finite-difference gradient relative error %.2e over 20 problems (need <= 1e-5)", worst));
}

void criterion8(const std::vector<const Run*>& runs)
{
    DeConfig cfg;
    cfg.pop_size = 40;
    cfg.max_evals = 20000;
    cfg.seed = 8;
    cfg.bounds = {5.0};
    cfg.parameterization = Parameterization::identity;
    cfg.init = InitKind::white;
    cfg.stall_generations = 1000000;
    const auto sphere = [](std::span<const double> c) {
        double s = 0.0;
        for (double v : c)
            s += v * v;
        return s;
    };
    const auto r = de_minimize(sphere, 8, cfg);
    bool monotone = std::is_sorted(r.history.rbegin(), r.history.rend());
    long n_runs = 1;
    for (const auto* run : runs)
        monotone = histories_monotone(run->dir, 3, n_runs) && monotone;
    const bool pass = r.best_value < 1e-6 && r.evals_used <= 20000 && monotone;
    verdict(8, pass,
            fmt("sphere best %.2e after %ld evals (need < 1e-6 within 20000); histories non-increasing on %ld/%ld runs",
                r.best_value, r.evals_used, monotone ? n_runs : 0L, n_runs));
}

void criterion9()
{
    std::mt19937_64 rng(9);
    double roundtrip = 0.0, parseval = 0.0;
    for (std::size_t d : {4u, 7u, 32u, 128u, 1000u}) {
        for (int s = 0; s < 20; ++s) {
            const auto x = randn(d, rng);
            const auto c = dct_forward(x);
            const auto back = dct_inverse(c);
            double ex = 0.0, ec = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                roundtrip = std::max(roundtrip, std::abs(back[i] - x[i]));
                ex += x[i] * x[i];
                ec += c[i] * c[i];
            }
            parseval = std::max(parseval, std::abs(ex - ec) / ex);
        }
    }

    double simplex = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int K = 2 + trial % 5;
        const double spread = trial % 2 ? 1.0 : 300.0;
        auto m = make_uniform_model(K, 3);
        for (int k = 0; k < K; ++k) {
            m.alphas[k] = spread * randn(1, rng)[0];
            for (int j = 0; j < 3; ++j)
                m.betas(k, j) = spread * randn(1, rng)[0];
        }
        const auto p = predict_proba(m, randn(3, rng));
        simplex = std::max(simplex, std::abs(p.sum() - 1.0));
        if ((p.array() < 0.0).any() || !p.allFinite())
            simplex = INFINITY;
    }

    // Averaged direct-DFT periodogram, least-squares slope in log-log.
    const std::size_t d = 1024, half = d / 2;
    std::vector<double> cs(d), sn(d), power(half + 1, 0.0);
    for (std::size_t m = 0; m < d; ++m) {
        cs[m] = std::cos(2.0 * std::numbers::pi * double(m) / double(d));
        sn[m] = std::sin(2.0 * std::numbers::pi * double(m) / double(d));
    }
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto x = pink_noise(d, 900 + s);
        for (std::size_t k = 1; k <= half; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                re += x[j] * cs[(k * j) % d];
                im -= x[j] * sn[(k * j) % d];
            }
            power[k] += re * re + im * im;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 1; k <= half; ++k) {
        const double lx = std::log(double(k)), ly = std::log(power[k] / 200.0);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = double(half);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    const bool pass = roundtrip <= 1e-10 && parseval <= 1e-10 && simplex <= 1e-12 && std::abs(slope + 1.0) <= 0.3;
    verdict(9, pass,
            fmt("DCT round trip %.1e, Parseval %.1e (need <= 1e-10); softmax sum error %.1e (need <= 1e-12); "
                "pink slope %.3f (need -1 +- 0.3)",
                roundtrip, parseval, simplex, slope));
}

void criterion10(const Run& a1, const Run& a2, const Run& b1, const Run& b2)
{
    const bool cbf_same = report_numeric_fields(a1.report) == report_numeric_fields(a2.report);
    const bool tri_same = report_numeric_fields(b1.report) == report_numeric_fields(b2.report);
    auto hashes = [](const Run& r) { return read_json(r.dir / artifacts::manifest).at("artifacts"); };
    const bool cbf_art = hashes(a1) == hashes(a2);
    const bool tri_art = hashes(b1) == hashes(b2);
    verdict(10, cbf_same && tri_same,
            fmt("repeat runs: cbf report numbers %s, triangle report numbers %s (need identical); artifact digests "
                "cbf %s, triangle %s",
                cbf_same ? "identical" : "differ", tri_same ? "identical" : "differ", cbf_art ? "identical" : "differ",
                tri_art ? "identical" : "differ"));
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
    try {
        criterion1();
        criterion6();
        criterion9();

        const auto cbf = run(Generator::cbf, root / "cbf");
        const auto tri = run(Generator::triangle, root / "triangle");
        criterion2(cbf);
        criterion3(tri);
        criterion4(cbf, tri);
        criterion5(cbf);
        criterion7(cbf, tri);

        const auto cbf2 = run(Generator::cbf, root / "cbf_repeat");
        const auto tri2 = run(Generator::triangle, root / "triangle_repeat");
        criterion8({&cbf, &tri, &cbf2, &tri2});
        criterion10(cbf, cbf2, tri, tri2);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
    }
    int failures = 0;
    for (int id = 1; id <= 10; ++id) {
        const auto& v = verdicts[id];
        const char* tag = !v.done ? "FAIL" : v.pass ? "PASS" : "FAIL";
        std::printf("criterion %2d: %s  %s\n", id, tag, v.done ? v.detail.c_str() : "not evaluated");
        failures += v.done && v.pass ? 0 : 1;
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
