#include "scatex/csv.hpp"
#include "scatex/errors.hpp"
#include "scatex/synthgen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace scatex {

namespace csv {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

} // namespace

void write_labeled_rows(const std::string& path, const std::string& prefix,
                        const std::vector<int>& labels, const std::vector<std::vector<double>>& rows)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    out << "label";
    for (std::size_t j = 0; j < width; ++j)
        out << ',' << prefix << j;
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << labels[i];
        for (double v : rows[i])
            out << ',' << format_double(v);
        out << '\n';
    }
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

LabeledRows read_labeled_rows(const std::string& path, const std::string& prefix, int K)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");

    std::string line;
    if (!std::getline(in, line))
        throw MalformedFileError(path, 1, "header", "file is empty");
    strip_cr(line);
    const auto header = split(line);
    if (header.empty() || header[0] != "label")
        throw MalformedFileError(path, 1, "header", "first column must be 'label'");
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j] != prefix + std::to_string(j - 1))
            throw MalformedFileError(path, 1, "header", "expected column '" + prefix
                                                            + std::to_string(j - 1) + "'");
    }
    const std::size_t width = header.size() - 1;

    LabeledRows result;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        strip_cr(line);
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw MalformedFileError(path, row, "row", "expected " + std::to_string(header.size())
                                                           + " fields, found "
                                                           + std::to_string(fields.size()));
        int label = 0;
        auto lres = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
        if (lres.ec != std::errc() || lres.ptr != fields[0].data() + fields[0].size())
            throw MalformedFileError(path, row, "label", "not an integer");
        if (label < 1 || label > K)
            throw MalformedFileError(path, row, "label", "label " + std::to_string(label)
                                                             + " outside 1.." + std::to_string(K));
        std::vector<double> values(width);
        for (std::size_t j = 0; j < width; ++j) {
            const auto f = fields[j + 1];
            auto res = std::from_chars(f.data(), f.data() + f.size(), values[j]);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(values[j]))
                throw MalformedFileError(path, row, prefix + std::to_string(j),
                                         "not a finite number");
        }
        result.labels.push_back(label);
        result.rows.push_back(std::move(values));
    }
    return result;
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j)
            out << (j ? "," : "") << format_double(r[j]);
        out << '\n';
    }
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

Table read_table(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line))
        throw MalformedFileError(path, 1, "header", "file is empty");
    strip_cr(line);
    Table t;
    for (auto f : split(line))
        t.header.emplace_back(f);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        strip_cr(line);
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != t.header.size())
            throw MalformedFileError(path, row, "row", "expected " + std::to_string(t.header.size())
                                                           + " fields, found " + std::to_string(fields.size()));
        std::vector<double> values(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto f = fields[j];
            auto res = std::from_chars(f.data(), f.data() + f.size(), values[j]);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(values[j]))
                throw MalformedFileError(path, row, t.header[j], "not a finite number");
        }
        t.rows.push_back(std::move(values));
    }
    return t;
}

} // namespace csv

void save_dataset_csv(const LabeledDataset& ds, const std::string& path)
{
    validate(ds);
    csv::write_labeled_rows(path, "s", ds.labels, ds.signals);
}

LabeledDataset load_dataset_csv(const std::string& path, int K)
{
    auto rows = csv::read_labeled_rows(path, "s", K);
    LabeledDataset ds;
    ds.K = K;
    ds.labels = std::move(rows.labels);
    ds.signals = std::move(rows.rows);
    if (ds.length() < 2 && !ds.signals.empty())
        throw MalformedFileError(path, 1, "header", "signals need at least 2 samples");
    return ds;
}

} // namespace scatex
