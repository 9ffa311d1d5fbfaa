#include "scatex/zoopt.hpp"

#include "scatex/dct.hpp"
#include "scatex/errors.hpp"
#include "scatex/fft.hpp"
#include "scatex/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

namespace scatex {

namespace {

void normalize_rms(Signal& x)
{
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double& v : x) {
        v -= mean;
        ss += v * v;
    }
    const double rms = std::sqrt(ss / static_cast<double>(x.size()));
    if (rms > 0.0)
        for (double& v : x)
            v /= rms;
}

} // namespace

Signal pink_noise(std::size_t d, std::uint64_t seed)
{
    if (d < 2)
        throw InputError("pink_noise: length must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    fft::cvec white(d);
    for (auto& v : white)
        v = normal(rng);
    auto spec = fft::forward(std::span<const fft::complex>(white));
    spec[0] = 0.0;
    for (std::size_t k = 1; k < d; ++k)
        spec[k] /= std::sqrt(static_cast<double>(std::abs(fft::signed_bin(k, d))));
    const auto time = fft::backward(spec);
    Signal x(d);
    for (std::size_t i = 0; i < d; ++i)
        x[i] = time[i].real();
    normalize_rms(x);
    return x;
}

Signal white_noise(std::size_t d, std::uint64_t seed)
{
    if (d < 2)
        throw InputError("white_noise: length must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Signal x(d);
    for (double& v : x)
        v = normal(rng);
    normalize_rms(x);
    return x;
}

double grad_norm(std::span<const double> x)
{
    if (x.size() < 2)
        throw InputError("grad_norm: length must be >= 2");
    double ss = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double dlt = x[i + 1] - x[i];
        ss += dlt * dlt;
    }
    return std::sqrt(ss);
}

void ObjectiveSpec::validate() const
{
    if (!model || !bank)
        throw ConfigError("objective: model and filter bank are required");
    if (static_cast<std::size_t>(model->p) != bank->config.output_size())
        throw ConfigError("objective: model expects " + std::to_string(model->p)
                          + " features but the filter bank emits "
                          + std::to_string(bank->config.output_size()));
    if (target_class < 1 || target_class > model->K)
        throw ConfigError("objective: target class " + std::to_string(target_class) + " outside 1.."
                          + std::to_string(model->K));
    if (!(mu >= 0.0) || !(nu >= 0.0))
        throw ConfigError("objective: mu and nu must be >= 0");
}

ObjectiveTerms objective_terms(std::span<const double> x, const ObjectiveSpec& spec)
{
    if (x.size() != spec.bank->config.d)
        throw InputError("objective: signal length " + std::to_string(x.size()) + " != "
                         + std::to_string(spec.bank->config.d));
    ObjectiveTerms t;
    const auto s = scatter2(x, *spec.bank);
    t.probabilities = predict_proba(*spec.model, s.coeffs);
    t.inverse_probability = 1.0 / t.probabilities[spec.target_class - 1];
    for (double v : x)
        t.l1 += std::abs(v);
    t.grad = grad_norm(x);
    t.value = t.inverse_probability + spec.mu * t.l1 + spec.nu * t.grad;
    return t;
}

double objective_eval(std::span<const double> x, const ObjectiveSpec& spec)
{
    return objective_terms(x, spec).value;
}

std::string to_string(InitKind k) { return k == InitKind::pink ? "pink" : "white"; }
std::string to_string(Parameterization p) { return p == Parameterization::dct ? "dct" : "identity"; }
std::string to_string(StopReason r) { return r == StopReason::max_evals ? "max_evals" : "stalled"; }

int DeConfig::effective_pop_size(std::size_t dim) const
{
    if (pop_size > 0)
        return pop_size;
    return static_cast<int>(std::min<std::size_t>(8 * dim, 512));
}

std::size_t DeConfig::effective_search_dim(std::size_t d) const
{
    if (parameterization == Parameterization::identity || search_dim <= 0)
        return d;
    return std::min<std::size_t>(d, static_cast<std::size_t>(search_dim));
}

void DeConfig::validate(std::size_t dim) const
{
    if (search_dim < 0)
        throw ConfigError("de.search_dim must be >= 0");
    if (pop_size != 0 && pop_size < 4)
        throw ConfigError("de.pop_size must be >= 4 (or 0 for automatic)");
    if (!(F > 0.0 && F <= 2.0))
        throw ConfigError("de.F must be in (0, 2]");
    if (!(CR >= 0.0 && CR <= 1.0))
        throw ConfigError("de.CR must be in [0, 1]");
    if (max_evals < effective_pop_size(dim))
        throw ConfigError("de.max_evals must cover at least the initial population");
    if (!(init_scale > 0.0))
        throw ConfigError("de.init_scale must be positive");
    if (bounds.size() != 1 && bounds.size() < dim)
        throw ConfigError("de.bounds must hold 1 or at least " + std::to_string(dim) + " values");
    for (double b : bounds)
        if (!(b > 0.0) || !std::isfinite(b))
            throw ConfigError("de.bounds entries must be positive and finite");
    if (stall_generations < 1 || !(stall_tol >= 0.0))
        throw ConfigError("de.stall_generations must be >= 1 and stall_tol >= 0");
}

DeResult de_minimize(const SearchObjective& objective, std::size_t dim, const DeConfig& config,
                     std::size_t signal_length)
{
    if (signal_length == 0)
        signal_length = dim;
    if (signal_length < dim)
        throw ConfigError("de_minimize: signal length shorter than search dimension");
    if (dim < 2)
        throw ConfigError("de_minimize: search dimension must be >= 2");
    config.validate(dim);
    const std::size_t np = static_cast<std::size_t>(config.effective_pop_size(dim));
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_member(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_slot(0, dim - 1);

    auto clip = [&](std::vector<double>& v) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double b = config.bound(j);
            v[j] = std::clamp(v[j], -b, b);
        }
    };

    std::vector<std::vector<double>> pop(np);
    for (auto& member : pop) {
        const std::uint64_t s = rng();
        Signal noise = config.init == InitKind::pink ? pink_noise(signal_length, s)
                                                     : white_noise(signal_length, s);
        for (double& v : noise)
            v *= config.init_scale;
        if (config.parameterization == Parameterization::dct)
            noise = dct_forward(noise);
        member.assign(noise.begin(), noise.begin() + static_cast<std::ptrdiff_t>(dim));
        clip(member);
    }

    auto checked = [&](std::span<const double> v) {
        const double f = objective(v);
        if (!std::isfinite(f))
            throw std::runtime_error("de_minimize: objective returned a non-finite value");
        return f;
    };

    std::vector<double> fitness(np);
    parallel_for(np, config.threads, [&](std::size_t i) { fitness[i] = checked(pop[i]); });

    DeResult result;
    result.evals_used = static_cast<long>(np);
    std::size_t best = static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
    result.history.push_back(fitness[best]);

    std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
    std::vector<double> trial_fitness(np);
    while (result.evals_used + static_cast<long>(np) <= config.max_evals) {
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do r1 = pick_member(rng); while (r1 == i);
            do r2 = pick_member(rng); while (r2 == i || r2 == r1);
            do r3 = pick_member(rng); while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t forced = pick_slot(rng);
            auto& u = trials[i];
            for (std::size_t j = 0; j < dim; ++j) {
                const bool take = unit(rng) < config.CR || j == forced;
                u[j] = take ? pop[r1][j] + config.F * (pop[r2][j] - pop[r3][j]) : pop[i][j];
            }
            clip(u);
        }
        parallel_for(np, config.threads, [&](std::size_t i) { trial_fitness[i] = checked(trials[i]); });
        result.evals_used += static_cast<long>(np);
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_fitness[i] <= fitness[i]) {
                std::swap(pop[i], trials[i]);
                fitness[i] = trial_fitness[i];
                if (fitness[i] < fitness[best])
                    best = i;
            }
        }
        result.history.push_back(fitness[best]);

        const std::size_t g = result.history.size() - 1;
        const std::size_t window = static_cast<std::size_t>(config.stall_generations);
        if (g >= window) {
            const double then = result.history[g - window];
            const double now = result.history[g];
            if (then - now <= config.stall_tol * std::abs(then)) {
                result.stop_reason = StopReason::stalled;
                break;
            }
        }
    }
    result.best = pop[best];
    result.best_value = fitness[best];
    return result;
}

namespace {

Signal to_signal(std::span<const double> v, std::size_t d, Parameterization p)
{
    if (p == Parameterization::identity)
        return Signal(v.begin(), v.end());
    std::vector<double> c(d, 0.0);
    std::copy(v.begin(), v.end(), c.begin());
    return dct_inverse(c);
}

} // namespace

ZoRun de_extract(const ObjectiveSpec& spec, const DeConfig& config)
{
    spec.validate();
    const std::size_t d = spec.bank->config.d;
    const Parameterization param = config.parameterization;
    auto objective = [&](std::span<const double> v) { return objective_eval(to_signal(v, d, param), spec); };
    const DeResult res = de_minimize(objective, config.effective_search_dim(d), config, d);

    ZoRun run;
    run.spec = spec;
    run.config = config;
    run.best_coeffs = res.best;
    run.best_x = to_signal(res.best, d, param);
    run.best_value = res.best_value;
    run.history = res.history;
    run.evals_used = res.evals_used;
    run.stop_reason = res.stop_reason;
    run.probabilities = objective_terms(run.best_x, spec).probabilities;
    return run;
}

std::vector<ZoRun> extract_all_classes(const ObjectiveSpec& spec, const DeConfig& config)
{
    spec.validate();
    std::vector<ZoRun> runs;
    for (int k = 1; k <= spec.model->K; ++k) {
        ObjectiveSpec s = spec;
        s.target_class = k;
        DeConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(k);
        runs.push_back(de_extract(s, c));
    }
    return runs;
}

std::vector<double> dct_bounds(const std::vector<Signal>& signals, double factor)
{
    if (signals.empty())
        throw InputError("dct_bounds: no signals");
    std::vector<double> bounds(signals.front().size(), 0.0);
    for (const auto& x : signals) {
        if (x.size() != bounds.size())
            throw InputError("dct_bounds: signals differ in length");
        const auto c = dct_forward(x);
        for (std::size_t k = 0; k < c.size(); ++k)
            bounds[k] = std::max(bounds[k], std::abs(c[k]));
    }
    for (double& b : bounds)
        b = b > 0.0 ? factor * b : factor;
    return bounds;
}

double max_normalized_xcorr(std::span<const double> x, std::span<const double> t)
{
    if (x.size() != t.size())
        throw InputError("template length " + std::to_string(t.size()) + " != signal length "
                         + std::to_string(x.size()));
    const std::size_t d = x.size();
    double nx = 0.0, nt = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        nx += x[i] * x[i];
        nt += t[i] * t[i];
    }
    if (nx == 0.0 || nt == 0.0)
        return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < d; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            acc += x[i] * t[(i + s) % d];
        best = std::max(best, acc);
    }
    return best / std::sqrt(nx * nt);
}

double template_classify(const std::vector<Signal>& templates, const LabeledDataset& dataset)
{
    if (templates.empty())
        throw InputError("template_classify: no templates");
    if (dataset.size() == 0)
        return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < templates.size(); ++k) {
            const double score = max_normalized_xcorr(dataset.signals[i], templates[k]);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(k);
            }
        }
        hits += best + 1 == dataset.labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

WindowMass max_window_mass(std::span<const double> x, std::size_t width)
{
    WindowMass out;
    const std::size_t d = x.size();
    double total = 0.0;
    for (double v : x)
        total += std::abs(v);
    if (total == 0.0 || d == 0)
        return out;
    width = std::min(width, d);
    double acc = 0.0;
    for (std::size_t i = 0; i < width; ++i)
        acc += std::abs(x[i]);
    double best = acc;
    for (std::size_t s = 1; s + width <= d; ++s) {
        acc += std::abs(x[s + width - 1]) - std::abs(x[s - 1]);
        if (acc > best) {
            best = acc;
            out.start = s;
        }
    }
    out.fraction = best / total;
    return out;
}

WindowPair best_disjoint_window_pair(std::span<const double> x, std::size_t width)
{
    WindowPair out;
    const std::size_t d = x.size();
    double total = 0.0;
    for (double v : x)
        total += std::abs(v);
    if (total == 0.0 || 2 * width > d)
        return out;
    std::vector<double> mass(d - width + 1, 0.0);
    for (std::size_t s = 0; s < mass.size(); ++s)
        for (std::size_t i = s; i < s + width; ++i)
            mass[s] += std::abs(x[i]);
    double best = -1.0;
    for (std::size_t a = 0; a < mass.size(); ++a)
        for (std::size_t b = a + width; b < mass.size(); ++b)
            if (mass[a] + mass[b] > best) {
                best = mass[a] + mass[b];
                out.first = {mass[a] / total, a};
                out.second = {mass[b] / total, b};
            }
    return out;
}

double support_fraction(std::span<const double> x)
{
    if (x.empty())
        return 0.0;
    double mx = 0.0;
    for (double v : x)
        mx = std::max(mx, std::abs(v));
    if (mx == 0.0)
        return 0.0;
    const auto n = std::count_if(x.begin(), x.end(), [&](double v) { return std::abs(v) > 0.01 * mx; });
    return static_cast<double>(n) / static_cast<double>(x.size());
}

double SweepPoint::min_probability() const
{
    return target_probability.empty() ? 0.0 : *std::min_element(target_probability.begin(), target_probability.end());
}

double SweepPoint::max_support() const
{
    return support.empty() ? 0.0 : *std::max_element(support.begin(), support.end());
}

double SweepPoint::mean_support() const
{
    return support.empty() ? 0.0 : std::accumulate(support.begin(), support.end(), 0.0) / support.size();
}

std::size_t select_penalties(const std::vector<SweepPoint>& points, bool* sparsity_feasible)
{
    if (points.empty())
        throw InputError("select_penalties: empty sweep");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].max_support() <= sweep_max_support
            && (!best || points[i].min_probability() > points[*best].min_probability()))
            best = i;
    if (sparsity_feasible)
        *sparsity_feasible = best.has_value();
    if (best)
        return *best;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].min_probability() >= sweep_min_probability
            && (!best || points[i].mean_support() < points[*best].mean_support()))
            best = i;
    if (best)
        return *best;
    best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].min_probability() > points[*best].min_probability())
            best = i;
    return *best;
}

SweepResult sweep_penalties(const ObjectiveSpec& spec, const DeConfig& config, const std::vector<double>& mus,
                            const std::vector<double>& nus)
{
    SweepResult result;
    for (double mu : mus)
        for (double nu : nus) {
            ObjectiveSpec s = spec;
            s.mu = mu;
            s.nu = nu;
            SweepPoint pt;
            pt.mu = mu;
            pt.nu = nu;
            for (const auto& run : extract_all_classes(s, config)) {
                pt.target_probability.push_back(run.probabilities[run.spec.target_class - 1]);
                pt.support.push_back(support_fraction(run.best_x));
                pt.best_x.push_back(run.best_x);
            }
            result.points.push_back(std::move(pt));
        }
    result.selected = select_penalties(result.points, &result.sparsity_feasible);
    return result;
}

std::vector<double> default_penalty_grid()
{
    return {1e-3, 1e-2, 1e-1, 1.0, 10.0};
}

nlohmann::json to_json(const SweepResult& r)
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points)
        pts.push_back({{"mu", p.mu},
                       {"nu", p.nu},
                       {"target_probability", p.target_probability},
                       {"support_fraction", p.support},
                       {"min_probability", p.min_probability()},
                       {"mean_support", p.mean_support()}});
    return {{"points", pts},
            {"selected", r.selected},
            {"mu", r.points.at(r.selected).mu},
            {"nu", r.points.at(r.selected).nu},
            {"sparsity_feasible", r.sparsity_feasible}};
}

nlohmann::json to_json(const DeConfig& c)
{
    return {{"pop_size", c.pop_size},
            {"search_dim", c.search_dim},
            {"F", c.F},
            {"CR", c.CR},
            {"max_evals", c.max_evals},
            {"seed", c.seed},
            {"init", to_string(c.init)},
            {"parameterization", to_string(c.parameterization)},
            {"init_scale", c.init_scale},
            {"bounds", c.bounds},
            {"stall_generations", c.stall_generations},
            {"stall_tol", c.stall_tol}};
}

DeConfig de_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("de: expected an object");
    DeConfig c;
    auto get = [&](const char* key, auto& field) {
        if (!j.contains(key))
            return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("de.") + key + ": wrong type");
        }
    };
    get("pop_size", c.pop_size);
    get("search_dim", c.search_dim);
    get("F", c.F);
    get("CR", c.CR);
    get("max_evals", c.max_evals);
    get("seed", c.seed);
    get("init_scale", c.init_scale);
    get("bounds", c.bounds);
    get("stall_generations", c.stall_generations);
    get("stall_tol", c.stall_tol);
    get("threads", c.threads);
    if (j.contains("init")) {
        const auto v = j.at("init");
        if (v == "pink")
            c.init = InitKind::pink;
        else if (v == "white")
            c.init = InitKind::white;
        else
            throw ConfigError("de.init: expected 'pink' or 'white'");
    }
    if (j.contains("parameterization")) {
        const auto v = j.at("parameterization");
        if (v == "dct")
            c.parameterization = Parameterization::dct;
        else if (v == "identity")
            c.parameterization = Parameterization::identity;
        else
            throw ConfigError("de.parameterization: expected 'dct' or 'identity'");
    }
    static const char* known[] = {"pop_size", "search_dim", "F",      "CR",     "max_evals",         "seed",       "init",
                                  "parameterization", "init_scale", "bounds", "stall_generations", "stall_tol",
                                  "threads"};
    for (const auto& [key, _] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; })
            == std::end(known))
            throw ConfigError("de." + key + ": unknown field");
    return c;
}

nlohmann::json to_json(const ZoRun& run)
{
    std::vector<double> probs(run.probabilities.data(), run.probabilities.data() + run.probabilities.size());
    return {{"config", to_json(run.config)},
            {"target_class", run.spec.target_class},
            {"mu", run.spec.mu},
            {"nu", run.spec.nu},
            {"best_x", run.best_x},
            {"best_coeffs", run.best_coeffs},
            {"best_value", run.best_value},
            {"history", run.history},
            {"evals_used", run.evals_used},
            {"stop_reason", to_string(run.stop_reason)},
            {"probabilities", probs}};
}

} // namespace scatex
