#include "nalpha/forecast/ridge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "nalpha/common/error.hpp"

namespace nalpha::forecast {

namespace {

void check_theta(double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("ridge penalty must be positive and finite");
}

// Solves (S + theta I) b = r with optional unit-variance scaling of S.
Eigen::VectorXd solve_centered(const Eigen::MatrixXd& S, const Eigen::VectorXd& r, double n, double theta,
                               bool standardize) {
    const Eigen::Index d = S.rows();
    if (!standardize) {
        Eigen::MatrixXd A = S;
        A.diagonal().array() += theta;
        return A.llt().solve(r);
    }
    Eigen::VectorXd scale(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double v = S(j, j) / n;
        scale(j) = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
    }
    Eigen::MatrixXd A = scale.asDiagonal() * S * scale.asDiagonal();
    A.diagonal().array() += theta;
    const Eigen::VectorXd bs = A.llt().solve(scale.asDiagonal() * r);
    return scale.asDiagonal() * bs;
}

double parse_double(std::string_view s) {
    double v = 0.0;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw InputError("bad number '" + std::string(s) + "' in grid");
    return v;
}

}  // namespace

RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double theta, bool standardize) {
    check_theta(theta);
    if (X.rows() < 2) throw DomainError("ridge needs at least two rows");
    if (y.size() != X.rows()) throw DomainError("ridge: X and y row counts differ");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("ridge: non-finite input");
    const Eigen::RowVectorXd xbar = X.colwise().mean();
    const double ybar = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - xbar;
    const Eigen::VectorXd yc = y.array() - ybar;
    RidgeModel m;
    m.theta = theta;
    m.n_train = static_cast<std::size_t>(X.rows());
    m.beta = solve_centered(Xc.transpose() * Xc, Xc.transpose() * yc, static_cast<double>(X.rows()), theta, standardize);
    m.intercept = ybar - xbar.dot(m.beta);
    return m;
}

GramStats::GramStats(Eigen::Index dim)
    : sx(Eigen::VectorXd::Zero(dim)), sxy(Eigen::VectorXd::Zero(dim)), sxx(Eigen::MatrixXd::Zero(dim, dim)) {}

void GramStats::add_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() == 0) return;
    n += static_cast<double>(X.rows());
    sy += y.sum();
    syy += y.squaredNorm();
    sx += X.colwise().sum().transpose();
    sxy.noalias() += X.transpose() * y;
    sxx.noalias() += X.transpose() * X;
}

GramStats& GramStats::operator+=(const GramStats& o) {
    n += o.n;
    sy += o.sy;
    syy += o.syy;
    sx += o.sx;
    sxy += o.sxy;
    sxx += o.sxx;
    return *this;
}

GramStats& GramStats::operator-=(const GramStats& o) {
    n -= o.n;
    sy -= o.sy;
    syy -= o.syy;
    sx -= o.sx;
    sxy -= o.sxy;
    sxx -= o.sxx;
    return *this;
}

RidgeModel fit_ridge(const GramStats& s, double theta, bool standardize) {
    check_theta(theta);
    if (s.n < 2.0) throw DomainError("ridge needs at least two rows");
    const Eigen::VectorXd xbar = s.sx / s.n;
    const double ybar = s.sy / s.n;
    const Eigen::MatrixXd S = s.sxx - s.n * xbar * xbar.transpose();
    const Eigen::VectorXd r = s.sxy - s.n * ybar * xbar;
    RidgeModel m;
    m.theta = theta;
    m.n_train = static_cast<std::size_t>(s.n);
    m.beta = solve_centered(S, r, s.n, theta, standardize);
    m.intercept = ybar - xbar.dot(m.beta);
    return m;
}

double sum_squared_error(const GramStats& s, const RidgeModel& m) {
    const double b0 = m.intercept;
    const double v = s.syy - 2.0 * b0 * s.sy - 2.0 * m.beta.dot(s.sxy) + s.n * b0 * b0 +
                     2.0 * b0 * m.beta.dot(s.sx) + m.beta.dot(s.sxx * m.beta);
    return std::max(v, 0.0);
}

std::vector<std::size_t> fold_bounds(std::size_t rows, int folds) {
    std::vector<std::size_t> b(static_cast<std::size_t>(folds) + 1);
    for (int k = 0; k <= folds; ++k) b[static_cast<std::size_t>(k)] = rows * static_cast<std::size_t>(k) / static_cast<std::size_t>(folds);
    return b;
}

std::size_t pick_penalty(std::span<const double> grid, std::span<const double> cv_mse) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double a = cv_mse[g], b = cv_mse[best];
        const bool tie = std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
        if (a < b && !tie) best = g;
        else if (tie && grid[g] > grid[best]) best = g;
    }
    return best;
}

double select_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> grid, int folds,
                      std::size_t gap, std::vector<double>* cv_mse) {
    if (grid.empty()) throw DomainError("penalty grid is empty");
    if (folds < 2) throw DomainError("cross-validation needs at least two folds");
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < static_cast<std::size_t>(folds)) throw DomainError("fewer rows than folds");
    for (double t : grid) check_theta(t);
    const auto bounds = fold_bounds(n, folds);
    auto stats_of = [&](std::size_t lo, std::size_t hi) {
        GramStats s(X.cols());
        if (hi > lo) {
            const auto a = static_cast<Eigen::Index>(lo), len = static_cast<Eigen::Index>(hi - lo);
            s.add_rows(X.middleRows(a, len), y.segment(a, len));
        }
        return s;
    };
    std::vector<GramStats> val, train;
    for (int k = 0; k < folds; ++k) {
        const std::size_t lo = bounds[static_cast<std::size_t>(k)], hi = bounds[static_cast<std::size_t>(k) + 1];
        val.push_back(stats_of(lo, hi));
        GramStats t = stats_of(0, lo >= gap ? lo - gap : 0);
        t += stats_of(std::min(n, hi + gap), n);
        if (t.n < 2.0) throw DomainError("a cross-validation fold leaves fewer than two training rows");
        train.push_back(std::move(t));
    }
    std::vector<double> mse(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (int k = 0; k < folds; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const RidgeModel m = fit_ridge(train[ku], grid[g]);
            mse[g] += sum_squared_error(val[ku], m) / val[ku].n;
        }
        mse[g] /= folds;
    }
    if (cv_mse) *cv_mse = mse;
    return grid[pick_penalty(grid, mse)];
}

std::vector<double> parse_grid(std::string_view text) {
    std::vector<double> out;
    if (text.starts_with("log:")) {
        std::string_view rest = text.substr(4);
        std::vector<std::string_view> parts;
        std::size_t pos = 0;
        while (true) {
            const auto c = rest.find(':', pos);
            parts.push_back(rest.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
        if (parts.size() != 3) throw InputError("grid must look like log:<lo>:<hi>:<count>");
        const double lo = parse_double(parts[0]), hi = parse_double(parts[1]);
        const double count = parse_double(parts[2]);
        if (!(lo > 0.0) || !(hi >= lo) || count < 1 || count != std::floor(count)) {
            throw InputError("invalid log grid '" + std::string(text) + "'");
        }
        const int k = static_cast<int>(count);
        for (int i = 0; i < k; ++i) {
            const double f = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
            out.push_back(std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo))));
        }
        out.front() = lo;
        out.back() = k == 1 ? lo : hi;
    } else {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto c = text.find(',', pos);
            out.push_back(parse_double(text.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos)));
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
    }
    for (double v : out) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError("grid values must be positive");
    }
    return out;
}

std::vector<double> default_grid() { return parse_grid("log:1e-2:1e6:9"); }

}  // namespace nalpha::forecast
