#include "scatex/mlr.hpp"

#include "scatex/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace scatex {

void FitConfig::validate() const
{
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i]))
            throw ConfigError("fit.lambda_grid: entries must be positive and finite");
        if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1]))
            throw ConfigError("fit.lambda_grid: must be strictly descending");
    }
    if (lambda_grid.empty() && n_lambda < 1)
        throw ConfigError("fit.n_lambda must be >= 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio <= 1.0))
        throw ConfigError("fit.lambda_min_ratio must be in (0, 1]");
    if (max_iter < 1)
        throw ConfigError("fit.max_iter must be positive");
    if (!(tol > 0.0))
        throw ConfigError("fit.tol must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("fit.val_fraction must be in (0, 1)");
    if (!(max_deviance_ratio > 0.0 && max_deviance_ratio <= 1.0))
        throw ConfigError("fit.max_deviance_ratio must be in (0, 1]");
}

std::size_t MlrModel::nonzero_count() const
{
    return static_cast<std::size_t>((betas.array() != 0.0).count());
}

std::size_t MlrModel::nonzero_count(int k) const
{
    return static_cast<std::size_t>((betas.row(k).array() != 0.0).count());
}

MlrModel make_uniform_model(int K, int p)
{
    MlrModel m;
    m.K = K;
    m.p = p;
    m.alphas = Eigen::VectorXd::Zero(K);
    m.betas = Eigen::MatrixXd::Zero(K, p);
    m.feature_center = Eigen::VectorXd::Zero(p);
    m.feature_scale = Eigen::VectorXd::Ones(p);
    return m;
}

RowMatrix to_matrix(const std::vector<std::vector<double>>& rows)
{
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
    RowMatrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != p)
            throw InputError("feature row " + std::to_string(i) + " has length "
                             + std::to_string(rows[i].size()) + ", expected " + std::to_string(p));
        m.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), p);
    }
    return m;
}

namespace {

// Row-wise softmax of logits, in place; returns sum of log-sum-exp terms.
double softmax_rows(Eigen::MatrixXd& logits, std::span<const int> y0, double& picked)
{
    double lse_sum = 0.0;
    picked = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        picked += logits(i, y0[i]) - mx;
        logits.row(i) = (logits.row(i).array() - mx).exp();
        const double s = logits.row(i).sum();
        lse_sum += std::log(s);
        logits.row(i) /= s;
    }
    return lse_sum;
}

struct Problem {
    const RowMatrix& Z;
    std::vector<int> y0; // 0-based labels
    int K;
    double n() const { return static_cast<double>(Z.rows()); }
};

// Mean loss at (a, B); leaves class probabilities in `probs`.
double mean_loss(const Problem& pb, const Eigen::VectorXd& a, const Eigen::MatrixXd& B, Eigen::MatrixXd& probs)
{
    probs.noalias() = pb.Z * B.transpose();
    probs.rowwise() += a.transpose();
    double picked = 0.0;
    const double lse = softmax_rows(probs, pb.y0, picked);
    return (lse - picked) / pb.n();
}

void mean_grad(const Problem& pb, Eigen::MatrixXd& probs, Eigen::VectorXd& ga, Eigen::MatrixXd& gB)
{
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        probs(i, pb.y0[i]) -= 1.0;
    ga = probs.colwise().sum().transpose() / pb.n();
    gB.noalias() = probs.transpose() * pb.Z;
    gB /= pb.n();
}

double kkt_from_grad(const Eigen::VectorXd& ga, const Eigen::MatrixXd& gB, const Eigen::MatrixXd& B, double lambda)
{
    double r = ga.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < B.rows(); ++k)
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            const double g = gB(k, j);
            const double b = B(k, j);
            const double v = b == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                      : std::abs(g + lambda * (b > 0.0 ? 1.0 : -1.0));
            r = std::max(r, v);
        }
    return r;
}

struct SolveStats {
    int iterations = 0;
    double kkt = 0.0;
    double loss = 0.0;
};

// Monotone FISTA with backtracking and momentum restart. (a, B) are warm
// starts on entry and the solution on exit. lipschitz carries the step
// estimate across the path.
SolveStats solve(const Problem& pb, double lambda, Eigen::VectorXd& a, Eigen::MatrixXd& B, double& lipschitz,
                 int max_iter, double tol)
{
    const Eigen::Index K = pb.K;
    const Eigen::Index p = pb.Z.cols();
    Eigen::MatrixXd probs(pb.Z.rows(), K);
    Eigen::VectorXd ga(K), a_y = a, a_z(K), a_prev = a;
    Eigen::MatrixXd gB(K, p), B_y = B, B_z(K, p), B_prev = B;

    auto penalty = [&](const Eigen::MatrixXd& M) { return lambda * M.cwiseAbs().sum(); };

    double f_x = mean_loss(pb, a, B, probs);
    mean_grad(pb, probs, ga, gB);
    SolveStats stats;
    stats.kkt = kkt_from_grad(ga, gB, B, lambda);
    stats.loss = f_x;
    if (stats.kkt <= tol)
        return stats;
    double F_x = f_x + penalty(B);
    double t = 1.0;
    bool y_is_x = true;

    for (int it = 1; it <= max_iter; ++it) {
        stats.iterations = it;
        double f_y = f_x;
        if (!y_is_x) {
            f_y = mean_loss(pb, a_y, B_y, probs);
            mean_grad(pb, probs, ga, gB);
        }
        lipschitz *= 0.9;
        double f_z = 0.0;
        while (true) {
            a_z = a_y - ga / lipschitz;
            const double thr = lambda / lipschitz;
            B_z = (B_y - gB / lipschitz).unaryExpr([thr](double v) {
                return v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
            });
            f_z = mean_loss(pb, a_z, B_z, probs);
            const double lin = ga.dot(a_z - a_y) + (gB.array() * (B_z - B_y).array()).sum();
            const double quad = 0.5 * lipschitz * ((a_z - a_y).squaredNorm() + (B_z - B_y).squaredNorm());
            if (f_z <= f_y + lin + quad + 1e-15 * std::abs(f_y))
                break;
            lipschitz *= 2.0;
        }
        const double F_z = f_z + penalty(B_z);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (F_z <= F_x) {
            a_prev = a;
            B_prev = B;
            a = a_z;
            B = B_z;
            f_x = f_z;
            F_x = F_z;
            // probs currently hold softmax at x; take the gradient there.
            mean_grad(pb, probs, ga, gB);
            stats.kkt = kkt_from_grad(ga, gB, B, lambda);
            stats.loss = f_x;
            if (stats.kkt <= tol)
                return stats;
            const double momentum = (t - 1.0) / t_next;
            if (momentum > 0.0) {
                a_y = a + momentum * (a - a_prev);
                B_y = B + momentum * (B - B_prev);
                y_is_x = false;
            } else {
                a_y = a;
                B_y = B;
                y_is_x = true;
            }
            t = t_next;
        } else {
            // Restart momentum from x; its gradient must be recomputed.
            t = 1.0;
            a_y = a;
            B_y = B;
            f_x = mean_loss(pb, a, B, probs);
            mean_grad(pb, probs, ga, gB);
            y_is_x = true;
        }
    }
    return stats;
}

void check_inputs(const std::vector<std::vector<double>>& features, const std::vector<int>& labels, int K)
{
    if (K < 2)
        throw ConfigError("fit: need K >= 2 classes");
    if (features.size() != labels.size())
        throw InputError("fit: feature rows and labels differ in count");
    if (features.size() < static_cast<std::size_t>(K))
        throw ConfigError("fit: need N >= K samples");
    std::vector<int> counts(K, 0);
    for (int y : labels) {
        if (y < 1 || y > K)
            throw InputError("fit: label " + std::to_string(y) + " outside 1.." + std::to_string(K));
        ++counts[y - 1];
    }
    for (int k = 0; k < K; ++k)
        if (counts[k] == 0)
            throw ConfigError("fit: class " + std::to_string(k + 1) + " has no samples");
    for (std::size_t i = 0; i < features.size(); ++i)
        for (double v : features[i])
            if (!std::isfinite(v))
                throw InputError("fit: non-finite feature in row " + std::to_string(i));
}

RowMatrix standardized(const RowMatrix& X, const Eigen::VectorXd& center, const Eigen::VectorXd& scale)
{
    RowMatrix Z = X;
    Z.rowwise() -= center.transpose();
    Z.array().rowwise() /= scale.transpose().array();
    return Z;
}

std::vector<int> zero_based(std::span<const int> labels)
{
    std::vector<int> y0(labels.size());
    std::transform(labels.begin(), labels.end(), y0.begin(), [](int y) { return y - 1; });
    return y0;
}

double accuracy_on(const RowMatrix& Z, std::span<const int> y0, const Eigen::VectorXd& a, const Eigen::MatrixXd& B)
{
    if (Z.rows() == 0)
        return 0.0;
    Eigen::MatrixXd logits = Z * B.transpose();
    logits.rowwise() += a.transpose();
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < logits.cols(); ++k)
            if (logits(i, k) > logits(i, best))
                best = k;
        hits += best == y0[i];
    }
    return static_cast<double>(hits) / static_cast<double>(Z.rows());
}

RowMatrix select_rows(const RowMatrix& Z, const std::vector<std::size_t>& idx)
{
    RowMatrix out(static_cast<Eigen::Index>(idx.size()), Z.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = Z.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

Eigen::VectorXd prior_intercepts(std::span<const int> y0, int K)
{
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
    for (int y : y0)
        counts[y] += 1.0;
    Eigen::VectorXd a = (counts / static_cast<double>(y0.size())).array().log();
    return a.array() - a.mean();
}

} // namespace

NllGrad nll_and_grad(const Eigen::VectorXd& alphas, const Eigen::MatrixXd& betas, const RowMatrix& features,
                     std::span<const int> labels)
{
    const Eigen::Index K = alphas.size();
    if (betas.rows() != K || betas.cols() != features.cols()
        || static_cast<Eigen::Index>(labels.size()) != features.rows())
        throw InputError("nll_and_grad: dimension mismatch");
    for (int y : labels)
        if (y < 1 || y > K)
            throw InputError("nll_and_grad: label outside 1..K");
    const auto y0 = zero_based(labels);
    Eigen::MatrixXd probs = features * betas.transpose();
    probs.rowwise() += alphas.transpose();
    double picked = 0.0;
    const double lse = softmax_rows(probs, y0, picked);
    NllGrad out;
    out.nll = lse - picked;
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        probs(i, y0[i]) -= 1.0;
    out.grad_alpha = probs.colwise().sum().transpose();
    out.grad_beta = probs.transpose() * features;
    return out;
}

FitResult fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels, int K,
              const FitConfig& config)
{
    config.validate();
    check_inputs(features, labels, K);
    const RowMatrix X = to_matrix(features);
    const Eigen::Index N = X.rows();
    const Eigen::Index p = X.cols();

    MlrModel model = make_uniform_model(K, static_cast<int>(p));
    if (config.standardize) {
        model.feature_center = X.colwise().mean().transpose();
        for (Eigen::Index j = 0; j < p; ++j) {
            const double sd = std::sqrt((X.col(j).array() - model.feature_center[j]).square().mean());
            // Constant columns keep scale 1; their centered values are all 0.
            model.feature_scale[j] = sd > 1e-12 * (1.0 + std::abs(model.feature_center[j])) ? sd : 1.0;
        }
    }
    const RowMatrix Z = standardized(X, model.feature_center, model.feature_scale);
    const auto y0 = zero_based(labels);

    FitResult result;
    // lambda_max: largest mean-loss gradient in beta at the intercept-only optimum.
    {
        const Eigen::VectorXd a0 = prior_intercepts(y0, K);
        Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(N, K);
        probs.rowwise() += a0.transpose();
        Problem pb{Z, y0, K};
        double dummy = 0.0;
        softmax_rows(probs, y0, dummy);
        Eigen::VectorXd ga;
        Eigen::MatrixXd gB;
        mean_grad(pb, probs, ga, gB);
        result.lambda_max = gB.cwiseAbs().maxCoeff();
    }
    if (!config.lambda_grid.empty()) {
        result.lambda_grid = config.lambda_grid;
    } else {
        const double top = result.lambda_max > 0.0 ? result.lambda_max : 1.0;
        const int n = config.n_lambda;
        for (int i = 0; i < n; ++i)
            result.lambda_grid.push_back(n == 1 ? top
                                                : top * std::pow(config.lambda_min_ratio,
                                                                 static_cast<double>(i) / (n - 1)));
    }
    const auto& grid = result.lambda_grid;

    // Stratified split: floor(val_fraction * n_k) of each class to validation,
    // always leaving at least one training sample per class.
    std::vector<std::size_t> train_idx, val_idx;
    {
        std::mt19937_64 rng(config.seed);
        for (int k = 0; k < K; ++k) {
            std::vector<std::size_t> members;
            for (Eigen::Index i = 0; i < N; ++i)
                if (y0[i] == k)
                    members.push_back(static_cast<std::size_t>(i));
            std::shuffle(members.begin(), members.end(), rng);
            std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_fraction * members.size()));
            n_val = std::min(n_val, members.size() - 1);
            val_idx.insert(val_idx.end(), members.begin(), members.begin() + n_val);
            train_idx.insert(train_idx.end(), members.begin() + n_val, members.end());
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }
    const RowMatrix Z_train = select_rows(Z, train_idx);
    const RowMatrix Z_val = select_rows(Z, val_idx);
    std::vector<int> y_train, y_val;
    for (auto i : train_idx)
        y_train.push_back(y0[i]);
    for (auto i : val_idx)
        y_val.push_back(y0[i]);

    auto null_loss = [K](std::span<const int> ys) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(K);
        for (int y : ys)
            c[y] += 1.0;
        c /= static_cast<double>(ys.size());
        double h = 0.0;
        for (int k = 0; k < K; ++k)
            if (c[k] > 0.0)
                h -= c[k] * std::log(c[k]);
        return h;
    };

    // Validation path.
    {
        Problem pb{Z_train, y_train, K};
        Eigen::VectorXd a = prior_intercepts(y_train, K);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K, p);
        double L = 1.0;
        const double null = null_loss(y_train);
        double best_acc = -1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto st = solve(pb, grid[i], a, B, L, config.max_iter, config.tol);
            PathPoint pt;
            pt.lambda = grid[i];
            pt.nonzeros = static_cast<std::size_t>((B.array() != 0.0).count());
            pt.iterations = st.iterations;
            pt.kkt_residual = st.kkt;
            pt.validation_accuracy = accuracy_on(Z_val, y_val, a, B);
            result.path.push_back(pt);
            // Strict improvement only: ties keep the larger lambda.
            if (!val_idx.empty() && pt.validation_accuracy > best_acc) {
                best_acc = pt.validation_accuracy;
                result.selected = i;
            }
            if (null > 0.0 && 1.0 - st.loss / null >= config.max_deviance_ratio)
                break;
        }
        // Without a validation set, keep the smallest lambda reached.
        if (val_idx.empty())
            result.selected = result.path.size() - 1;
    }

    // Refit on all samples down to the selected lambda.
    {
        Problem pb{Z, y0, K};
        Eigen::VectorXd a = prior_intercepts(y0, K);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K, p);
        double L = 1.0;
        SolveStats st;
        for (std::size_t i = 0; i <= result.selected; ++i)
            st = solve(pb, grid[i], a, B, L, config.max_iter, config.tol);
        model.alphas = a;
        model.betas = B;
        model.lambda = grid[result.selected];
        result.final_kkt_residual = st.kkt;
        result.final_iterations = st.iterations;
    }
    result.model = std::move(model);
    return result;
}

Eigen::VectorXd predict_proba(const MlrModel& model, std::span<const double> features)
{
    if (static_cast<int>(features.size()) != model.p)
        throw InputError("predict_proba: feature length " + std::to_string(features.size()) + " != p = "
                         + std::to_string(model.p));
    const Eigen::Map<const Eigen::VectorXd> s(features.data(), model.p);
    const Eigen::VectorXd z = (s - model.feature_center).cwiseQuotient(model.feature_scale);
    Eigen::VectorXd logits = model.alphas + model.betas * z;
    logits.array() -= logits.maxCoeff();
    logits = logits.array().exp();
    return logits / logits.sum();
}

int predict_class(const MlrModel& model, std::span<const double> features)
{
    const Eigen::VectorXd p = predict_proba(model, features);
    int best = 0;
    for (int k = 1; k < model.K; ++k)
        if (p[k] > p[best])
            best = k;
    return best;
}

double accuracy(const MlrModel& model, const std::vector<std::vector<double>>& features, std::span<const int> labels)
{
    if (features.size() != labels.size())
        throw InputError("accuracy: feature rows and labels differ in count");
    if (features.empty())
        return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        hits += predict_class(model, features[i]) + 1 == labels[i];
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

double kkt_residual(const MlrModel& model, const std::vector<std::vector<double>>& features,
                    std::span<const int> labels)
{
    const RowMatrix X = to_matrix(features);
    if (X.cols() != model.p || static_cast<std::size_t>(X.rows()) != labels.size())
        throw InputError("kkt_residual: dimension mismatch");
    const RowMatrix Z = standardized(X, model.feature_center, model.feature_scale);
    const Problem pb{Z, zero_based(labels), model.K};
    Eigen::MatrixXd probs(Z.rows(), model.K);
    mean_loss(pb, model.alphas, model.betas, probs);
    Eigen::VectorXd ga;
    Eigen::MatrixXd gB;
    mean_grad(pb, probs, ga, gB);
    return kkt_from_grad(ga, gB, model.betas, model.lambda);
}

nlohmann::json to_json(const FitConfig& c)
{
    return {{"lambda_grid", c.lambda_grid},
            {"n_lambda", c.n_lambda},
            {"lambda_min_ratio", c.lambda_min_ratio},
            {"max_iter", c.max_iter},
            {"tol", c.tol},
            {"val_fraction", c.val_fraction},
            {"seed", c.seed},
            {"standardize", c.standardize},
            {"max_deviance_ratio", c.max_deviance_ratio}};
}

FitConfig fit_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("fit: expected an object");
    FitConfig c;
    auto get = [&](const char* key, auto& field) {
        if (!j.contains(key))
            return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("fit.") + key + ": wrong type");
        }
    };
    get("lambda_grid", c.lambda_grid);
    get("n_lambda", c.n_lambda);
    get("lambda_min_ratio", c.lambda_min_ratio);
    get("max_iter", c.max_iter);
    get("tol", c.tol);
    get("val_fraction", c.val_fraction);
    get("seed", c.seed);
    get("standardize", c.standardize);
    get("max_deviance_ratio", c.max_deviance_ratio);
    static const char* known[] = {"lambda_grid", "n_lambda",     "lambda_min_ratio", "max_iter",          "tol",
                                  "val_fraction", "seed", "standardize",      "max_deviance_ratio"};
    for (const auto& [key, _] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; })
            == std::end(known))
            throw ConfigError("fit." + key + ": unknown field");
    c.validate();
    return c;
}

nlohmann::json to_json(const MlrModel& model)
{
    nlohmann::json triplets = nlohmann::json::array();
    for (int k = 0; k < model.K; ++k)
        for (int j = 0; j < model.p; ++j)
            if (model.betas(k, j) != 0.0)
                triplets.push_back({k, j, model.betas(k, j)});
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j = {{"K", model.K},
                        {"p", model.p},
                        {"lambda", model.lambda},
                        {"alphas", vec(model.alphas)},
                        {"betas", triplets},
                        {"feature_center", vec(model.feature_center)},
                        {"feature_scale", vec(model.feature_scale)}};
    j["scattering"] = model.scattering ? to_json(*model.scattering) : nlohmann::json(nullptr);
    return j;
}

MlrModel mlr_model_from_json(const nlohmann::json& j)
{
    try {
        MlrModel m;
        m.K = j.at("K").get<int>();
        m.p = j.at("p").get<int>();
        if (m.K < 2 || m.p < 1)
            throw InputError("model JSON: need K >= 2 and p >= 1");
        m.lambda = j.at("lambda").get<double>();
        auto vec = [&](const char* key, Eigen::Index n) {
            const auto v = j.at(key).get<std::vector<double>>();
            if (static_cast<Eigen::Index>(v.size()) != n)
                throw InputError(std::string("model JSON: '") + key + "' has wrong length");
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
        };
        m.alphas = vec("alphas", m.K);
        m.feature_center = vec("feature_center", m.p);
        m.feature_scale = vec("feature_scale", m.p);
        if ((m.feature_scale.array() <= 0.0).any())
            throw InputError("model JSON: feature_scale entries must be positive");
        m.betas = Eigen::MatrixXd::Zero(m.K, m.p);
        for (const auto& t : j.at("betas")) {
            const int k = t.at(0).get<int>();
            const int col = t.at(1).get<int>();
            if (k < 0 || k >= m.K || col < 0 || col >= m.p)
                throw InputError("model JSON: beta triplet index out of range");
            m.betas(k, col) = t.at(2).get<double>();
        }
        if (j.contains("scattering") && !j.at("scattering").is_null())
            m.scattering = scattering_config_from_json(j.at("scattering"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
}

} // namespace scatex
