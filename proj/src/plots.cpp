#include "scatex/plots.hpp"

#include "scatex/csv.hpp"
#include "scatex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace scatex {

namespace {

const char* const palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

std::string class_name(Generator g, int k)
{
    if (g == Generator::cbf) {
        static const char* names[] = {"cylinder", "bell", "funnel"};
        return "class " + std::to_string(k) + " (" + names[k - 1] + ")";
    }
    return "class " + std::to_string(k);
}

std::vector<double> axis(std::size_t n)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = static_cast<double>(i + 1);
    return t;
}

std::vector<std::vector<int>> members_by_class(const LabeledDataset& ds, int per_class)
{
    std::vector<std::vector<int>> m(static_cast<std::size_t>(ds.K));
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (static_cast<int>(m[ds.labels[i] - 1].size()) < per_class)
            m[ds.labels[i] - 1].push_back(static_cast<int>(i));
    return m;
}

} // namespace

ExtractedSignals load_extracted_signals(const std::string& path, int K)
{
    const csv::Table t = csv::read_table(path);
    ExtractedSignals out;
    for (int k = 1; k <= K; ++k) {
        const auto col = [&](const std::string& name) {
            const auto it = std::find(t.header.begin(), t.header.end(), name);
            if (it == t.header.end())
                throw MalformedFileError(path, 1, "header", "missing column '" + name + "'");
            return static_cast<std::size_t>(it - t.header.begin());
        };
        const std::size_t raw = col("class" + std::to_string(k) + "_raw");
        const std::size_t norm = col("class" + std::to_string(k) + "_normalized");
        Signal r, n;
        for (const auto& row : t.rows) {
            r.push_back(row[raw]);
            n.push_back(row[norm]);
        }
        out.raw.push_back(std::move(r));
        out.normalized.push_back(std::move(n));
    }
    return out;
}

svg::Figure samples_figure(const LabeledDataset& ds, int per_class)
{
    validate(ds);
    svg::Figure fig;
    fig.title = "Sample waveforms";
    const auto t = axis(ds.length());
    const auto members = members_by_class(ds, per_class);
    for (int k = 1; k <= ds.K; ++k) {
        svg::Panel p;
        p.title = "class " + std::to_string(k);
        p.x_min = 1;
        p.x_max = static_cast<double>(ds.length());
        for (std::size_t s = 0; s < members[k - 1].size(); ++s)
            p.lines.push_back({t, ds.signals[members[k - 1][s]], "sample", palette[s % 5]});
        fig.panels.push_back(std::move(p));
    }
    return fig;
}

svg::Figure beta_figure(const MlrModel& model)
{
    svg::Figure fig;
    fig.title = "Standardized coefficients per class";
    for (int k = 0; k < model.K; ++k) {
        svg::Panel p;
        p.title = "class " + std::to_string(k + 1) + ": " + std::to_string(model.nonzero_count(k)) + " nonzero";
        p.x_min = 0;
        p.x_max = std::max(1, model.p - 1);
        svg::Stems s;
        for (int j = 0; j < model.p; ++j)
            if (model.betas(k, j) != 0.0) {
                s.x.push_back(j);
                s.y.push_back(model.betas(k, j));
            }
        p.stems = std::move(s);
        fig.panels.push_back(std::move(p));
    }
    return fig;
}

svg::Figure extracted_figure(Generator dataset, const std::vector<Signal>& normalized)
{
    svg::Figure fig;
    fig.title = "Extracted class-revealing signals";
    for (std::size_t k = 0; k < normalized.size(); ++k) {
        const auto t = axis(normalized[k].size());
        svg::Panel p;
        p.title = class_name(dataset, static_cast<int>(k + 1));
        p.x_min = 1;
        p.x_max = static_cast<double>(normalized[k].size());
        if (dataset == Generator::triangle)
            for (int h = 1; h <= 3; ++h) {
                Signal base = triangle::h_vector(h);
                for (double& v : base)
                    v /= 6.0;
                p.lines.push_back({t, base, "overlay h" + std::to_string(h), "#999999", true});
            }
        p.lines.push_back({t, normalized[k], "extracted", palette[k % 5]});
        fig.panels.push_back(std::move(p));
    }
    return fig;
}

std::vector<std::string> write_plots(const std::string& dir, Generator dataset, const LabeledDataset& train,
                                     const MlrModel& model, const ExtractedSignals& extracted)
{
    namespace fs = std::filesystem;
    auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
    const std::size_t d = train.length();

    svg::write(at(plot_files::samples_svg), samples_figure(train));
    {
        std::vector<std::string> header{"t"};
        std::vector<std::vector<double>> rows(d);
        for (std::size_t i = 0; i < d; ++i)
            rows[i].push_back(static_cast<double>(i + 1));
        const auto members = members_by_class(train, samples_per_class);
        for (int k = 1; k <= train.K; ++k)
            for (std::size_t s = 0; s < members[k - 1].size(); ++s) {
                header.push_back("class" + std::to_string(k) + "_sample" + std::to_string(s + 1));
                for (std::size_t i = 0; i < d; ++i)
                    rows[i].push_back(train.signals[members[k - 1][s]][i]);
            }
        csv::write_table(at(plot_files::samples_csv), header, rows);
    }

    svg::write(at(plot_files::betas_svg), beta_figure(model));
    {
        std::vector<std::string> header{"feature"};
        for (int k = 1; k <= model.K; ++k)
            header.push_back("class" + std::to_string(k));
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(model.p));
        for (int j = 0; j < model.p; ++j) {
            rows[j].push_back(j);
            for (int k = 0; k < model.K; ++k)
                rows[j].push_back(model.betas(k, j));
        }
        csv::write_table(at(plot_files::betas_csv), header, rows);
    }

    svg::write(at(plot_files::extracted_svg), extracted_figure(dataset, extracted.normalized));
    {
        std::vector<std::string> header{"t"};
        std::vector<std::vector<double>> rows(d);
        for (std::size_t i = 0; i < d; ++i)
            rows[i].push_back(static_cast<double>(i + 1));
        for (std::size_t k = 0; k < extracted.normalized.size(); ++k) {
            header.push_back("class" + std::to_string(k + 1));
            for (std::size_t i = 0; i < d; ++i)
                rows[i].push_back(extracted.normalized[k][i]);
        }
        if (dataset == Generator::triangle)
            for (int h = 1; h <= 3; ++h) {
                header.push_back("h" + std::to_string(h));
                for (std::size_t i = 0; i < d; ++i)
                    rows[i].push_back(triangle::h(h, static_cast<int>(i + 1)) / 6.0);
            }
        csv::write_table(at(plot_files::extracted_csv), header, rows);
    }
    return {plot_files::samples_svg, plot_files::samples_csv, plot_files::betas_svg,
            plot_files::betas_csv,   plot_files::extracted_svg, plot_files::extracted_csv};
}

} // namespace scatex
