#ifndef AREL_DATASET_HPP
#define AREL_DATASET_HPP

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace arel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct csv_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct singular_design_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Response vector plus design matrix. Column 1 may be an all-ones
 * intercept column; the flag records whether one is present.
 */
struct RegressionDataset {
    Vector y;
    Matrix X;
    bool intercept_included = false;
    std::vector<std::string> column_names;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index m() const { return X.cols(); }
};

/// Relative rank tolerance used when checking the design for full column rank.
inline constexpr double kRankTol = 1e-10;

inline bool full_column_rank(const Matrix& X, double tol = kRankTol) {
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    qr.setThreshold(tol);
    return qr.rank() == X.cols();
}

/**
 * Load a dataset from CSV. The first row is a header; the column named "y"
 * is the response and every other column is a predictor, kept in file order.
 * With add_intercept an all-ones column is prepended.
 */
inline RegressionDataset load_csv(const std::string& path, bool add_intercept = true) {
    std::ifstream in(path);
    if (!in) throw csv_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw csv_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    int ycol = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == "y") ycol = static_cast<int>(j);
    if (ycol < 0) throw csv_error(path + ": no column named 'y'");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            if (cell.empty())
                throw csv_error(path + ": missing value at line " + std::to_string(lineno));
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw csv_error(path + ": bad numeric value '" + cell + "' at line " +
                                std::to_string(lineno));
            }
        }
        if (row.size() != header.size())
            throw csv_error(path + ": wrong field count at line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw csv_error(path + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m_raw = static_cast<Eigen::Index>(header.size()) - 1;
    RegressionDataset d;
    d.y.resize(n);
    d.X.resize(n, m_raw + (add_intercept ? 1 : 0));
    d.intercept_included = add_intercept;
    if (add_intercept) {
        d.X.col(0).setOnes();
        d.column_names.push_back("intercept");
    }
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != ycol) d.column_names.push_back(header[j]);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index k = add_intercept ? 1 : 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (static_cast<int>(j) == ycol)
                d.y(i) = rows[i][j];
            else
                d.X(i, k++) = rows[i][j];
        }
    }
    if (!full_column_rank(d.X))
        throw singular_design_error(path + ": design matrix is rank deficient");
    return d;
}

}  // namespace arel

#endif  // AREL_DATASET_HPP
