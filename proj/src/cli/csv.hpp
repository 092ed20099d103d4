#pragma once

#include <string>
#include <vector>

namespace mrh::cli {

// Deterministic shortest-ish decimal rendering (%.12g); identical doubles
// always produce identical bytes, which the reproducibility contract relies on.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// Writes header + rows, comma separated, '\n' line endings, no trailing blank line.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Two-or-three-column numeric CSV reader for empirical sample points
// (x1,x2[,weight]); skips a single leading header line if non-numeric.
struct NumericTable {
    std::vector<std::vector<double>> rows;
    std::size_t columns = 0;
};
NumericTable read_numeric_csv(const std::string& path);

}  // namespace mrh::cli
