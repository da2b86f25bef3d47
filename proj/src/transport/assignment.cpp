#include "mfstop/transport/assignment.hpp"

#include <cmath>
#include <limits>

#include "mfstop/error.hpp"

namespace mfstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::ptrdiff_t kNone = -1;

}  // namespace

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw InvalidArgument("assignment cost matrix must be n x n");
    for (double c : cost)
        if (!std::isfinite(c)) throw InvalidArgument("assignment costs must be finite");
    Assignment result;
    if (n == 0) return result;
    if (n == 1) {
        result.row_to_col = {0};
        result.cost = cost[0];
        return result;
    }
    auto c = [&](std::size_t i, std::size_t j) { return cost[i * n + j]; };

    std::vector<std::ptrdiff_t> x(n, kNone), y(n, kNone);
    std::vector<double> v(n), d(n);
    std::vector<std::size_t> free_rows(n), collist(n), pred(n), matches(n, 0);

    // Column reduction, scanning columns in reverse.
    for (std::size_t jj = n; jj-- > 0;) {
        double m = c(0, jj);
        std::size_t imin = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (c(i, jj) < m) {
                m = c(i, jj);
                imin = i;
            }
        v[jj] = m;
        if (++matches[imin] == 1) {
            x[imin] = static_cast<std::ptrdiff_t>(jj);
            y[jj] = static_cast<std::ptrdiff_t>(imin);
        } else {
            y[jj] = kNone;
        }
    }

    // Reduction transfer.
    std::size_t numfree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[numfree++] = i;
        } else if (matches[i] == 1) {
            const auto j1 = static_cast<std::size_t>(x[i]);
            double m = kInf;
            for (std::size_t j = 0; j < n; ++j)
                if (j != j1 && c(i, j) - v[j] < m) m = c(i, j) - v[j];
            v[j1] -= m;
        }
    }

    // Augmenting row reduction, two passes. Rounding can make a pass cycle
    // when a price decrement is absorbed, so the work is capped and leftover
    // rows go to the augmentation phase.
    const std::size_t budget = 8 * n + 64;
    for (int pass = 0; pass < 2 && numfree > 0; ++pass) {
        std::size_t k = 0;
        const std::size_t prev = numfree;
        numfree = 0;
        std::size_t steps = 0;
        while (k < prev) {
            if (++steps > budget) {
                for (std::size_t r = k; r < prev; ++r) free_rows[numfree++] = free_rows[r];
                break;
            }
            const std::size_t i = free_rows[k++];
            double umin = c(i, 0) - v[0];
            double usubmin = kInf;
            std::size_t j1 = 0, j2 = 0;
            for (std::size_t j = 1; j < n; ++j) {
                const double h = c(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            std::ptrdiff_t i0 = y[j1];
            const bool strict = umin < usubmin;
            if (strict)
                v[j1] -= usubmin - umin;
            else if (i0 != kNone) {
                j1 = j2;
                i0 = y[j2];
            }
            x[i] = static_cast<std::ptrdiff_t>(j1);
            y[j1] = static_cast<std::ptrdiff_t>(i);
            if (i0 != kNone) {
                x[static_cast<std::size_t>(i0)] = kNone;
                if (strict)
                    free_rows[--k] = static_cast<std::size_t>(i0);
                else
                    free_rows[numfree++] = static_cast<std::size_t>(i0);
            }
        }
    }

    // Shortest augmenting path for each remaining free row.
    for (std::size_t f = 0; f < numfree; ++f) {
        const std::size_t freerow = free_rows[f];
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = c(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        std::size_t low = 0, up = 0, last = 0, endofpath = 0;
        double m = 0.0;
        bool found = false;
        while (!found) {
            if (up == low) {
                last = low;  // columns [0, last) are settled
                m = d[collist[up++]];
                for (std::size_t k = up; k < n; ++k) {
                    const std::size_t j = collist[k];
                    const double h = d[j];
                    if (h <= m) {
                        if (h < m) {
                            up = low;
                            m = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (std::size_t k = low; k < up; ++k)
                    if (y[collist[k]] == kNone) {
                        endofpath = collist[k];
                        found = true;
                        break;
                    }
            }
            if (!found) {
                const std::size_t j1 = collist[low++];
                const auto i = static_cast<std::size_t>(y[j1]);
                const double h = c(i, j1) - v[j1] - m;
                for (std::size_t k = up; k < n; ++k) {
                    const std::size_t j = collist[k];
                    const double v2 = c(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == m) {
                            if (y[j] == kNone) {
                                endofpath = j;
                                found = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        }
        for (std::size_t k = 0; k < last; ++k) {
            const std::size_t j1 = collist[k];
            v[j1] += d[j1] - m;
        }
        std::size_t i;
        do {
            i = pred[endofpath];
            y[endofpath] = static_cast<std::ptrdiff_t>(i);
            const std::ptrdiff_t prev = x[i];
            x[i] = static_cast<std::ptrdiff_t>(endofpath);
            if (i != freerow) endofpath = static_cast<std::size_t>(prev);
        } while (i != freerow);
    }

    result.row_to_col.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] == kNone) throw ContractViolation("assignment solver left a row unmatched");
        result.row_to_col[i] = static_cast<std::size_t>(x[i]);
        result.cost += c(i, result.row_to_col[i]);
    }
    return result;
}

}  // namespace mfstop
