#pragma once

#include <string>
#include <vector>

namespace scatex::csv {

/// Rows of `label,<prefix>0,...,<prefix>{d-1}`.
struct LabeledRows {
    std::vector<int> labels;
    std::vector<std::vector<double>> rows;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

void write_labeled_rows(const std::string& path, const std::string& prefix,
                        const std::vector<int>& labels, const std::vector<std::vector<double>>& rows);

/// Labels must lie in 1..K; every row must have the header's width.
LabeledRows read_labeled_rows(const std::string& path, const std::string& prefix, int K);

/// Plain numeric table with a free-form header, used for plot data.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a file written by write_table; every row must match the header width.
Table read_table(const std::string& path);

} // namespace scatex::csv
