#include "scalefree/occupancy_ftrl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

using Sparse = std::vector<std::pair<int, double>>;

double dot(const Sparse& c, const Eigen::VectorXd& v) {
    double total = 0.0;
    for (const auto& [i, w] : c) total += w * v[i];
    return total;
}

// Variables, linear maps and constraints of the occupancy program.
struct Program {
    const LayeredStructure& st;
    int n = 0;
    bool start_free = false;
    std::vector<double> start_fixed;
    std::vector<int> start_var;
    std::vector<char> reachable;
    std::vector<Sparse> m_expr;  // per pair; empty when unreachable
    std::vector<Sparse> q_expr;  // per transition entry
    std::vector<Sparse> eq;
    std::vector<double> eq_rhs;
    std::vector<Sparse> ineq;  // c.v + d > 0
    std::vector<double> ineq_const;
    Eigen::VectorXd start;

    explicit Program(const LayeredStructure& structure) : st(structure) {}

    int add_var() {
        ineq.push_back({{n, 1.0}});
        ineq_const.push_back(0.0);
        return n++;
    }
};

// Split of a row into free entries (lo < hi) and fixed ones. Fixed entries
// with positive center keep the ratio center_j / free_mass to the free part.
// With fewer than two free entries, or no free mass left, the row is the
// center itself.
struct RowSplit {
    bool pinned = true;
    std::vector<std::size_t> free;
    std::vector<std::size_t> fixed;
    double free_mass = 0.0;
};

RowSplit split_row(const RowBox& box, std::size_t len) {
    RowSplit r;
    double fixed_mass = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
        if (box.upper(j) <= 0.0) continue;
        if (box.lower(j) == box.upper(j)) {
            r.fixed.push_back(j);
            fixed_mass += box.center[j];
        } else {
            r.free.push_back(j);
        }
    }
    r.free_mass = 1.0 - fixed_mass;
    r.pinned = r.free.size() < 2 || r.free_mass <= 1e-12;
    return r;
}

// Free-part constraints lo_k m < x_k < hi_k m with m = (sum of free x) / F.
// Upper bounds at or above F are implied by the others being positive.
void add_box_constraints(Program& prog, const RowBox& box, const RowSplit& split, const std::vector<int>& vars,
                         bool scaled) {
    const double F = split.free_mass;
    for (std::size_t k = 0; k < vars.size(); ++k) {
        const double lo = box.lower(split.free[k]);
        const double hi = box.upper(split.free[k]);
        if (lo > 0.0) {
            Sparse c;
            if (scaled) {
                for (std::size_t i = 0; i < vars.size(); ++i) c.emplace_back(vars[i], (i == k ? 1.0 : 0.0) - lo / F);
                prog.ineq_const.push_back(0.0);
            } else {
                c.emplace_back(vars[k], 1.0);
                prog.ineq_const.push_back(-lo);
            }
            prog.ineq.push_back(std::move(c));
        }
        if (hi < F) {
            Sparse c;
            if (scaled) {
                for (std::size_t i = 0; i < vars.size(); ++i) c.emplace_back(vars[i], hi / F - (i == k ? 1.0 : 0.0));
                prog.ineq_const.push_back(0.0);
            } else {
                c.emplace_back(vars[k], -1.0);
                prog.ineq_const.push_back(hi);
            }
            prog.ineq.push_back(std::move(c));
        }
    }
}

double free_radius_bound(const RowBox& box, const RowSplit& split) {
    double theta = 0.5;
    for (std::size_t j : split.free) theta = std::min(theta, 0.5 * box.radius[j]);
    return theta;
}

Program build_program(const ConfidenceSet& set) {
    const LayeredStructure& st = set.structure();
    Program prog(st);
    prog.reachable.assign(st.state_count(), 0);
    prog.m_expr.assign(st.pair_count(), {});
    prog.q_expr.assign(st.row_storage(), {});

    double theta = 0.5;
    const RowBox start_box = set.start_box();
    const std::size_t first = st.layer_size(0);
    prog.start_var.assign(first, -1);
    prog.start_fixed.assign(first, 0.0);
    const RowSplit start_split = split_row(start_box, first);
    prog.start_free = !start_split.pinned;
    if (prog.start_free) {
        std::vector<int> vars;
        Sparse total;
        for (std::size_t j : start_split.free) {
            prog.start_var[j] = prog.add_var();
            vars.push_back(prog.start_var[j]);
            total.emplace_back(prog.start_var[j], 1.0);
            prog.reachable[st.layer_begin(0) + j] = 1;
        }
        for (std::size_t j : start_split.fixed) {
            prog.start_fixed[j] = start_box.center[j];
            prog.reachable[st.layer_begin(0) + j] = start_box.center[j] > 0.0;
        }
        theta = std::min(theta, free_radius_bound(start_box, start_split));
        add_box_constraints(prog, start_box, start_split, vars, false);
        prog.eq.push_back(std::move(total));
        prog.eq_rhs.push_back(start_split.free_mass);
    } else {
        prog.start_fixed.assign(start_box.center.begin(), start_box.center.end());
        for (std::size_t j = 0; j < first; ++j) prog.reachable[st.layer_begin(0) + j] = prog.start_fixed[j] > 0.0;
    }

    std::vector<RowSplit> splits(st.pair_count());
    for (std::size_t h = 0; h < st.horizon(); ++h) {
        for (std::size_t s = st.layer_begin(h); s < st.layer_end(h); ++s) {
            if (!prog.reachable[s]) continue;
            for (std::size_t a = 0; a < st.actions(); ++a) {
                const std::size_t pair = st.pair_index(s, a);
                if (!st.has_row(s)) {
                    prog.m_expr[pair] = {{prog.add_var(), 1.0}};
                    continue;
                }
                const RowBox box = set.row_box(s, a);
                const std::size_t len = st.row_length(s);
                const std::size_t offset = st.row_offset(s, a);
                const std::size_t next_begin = st.layer_begin(h + 1);
                RowSplit& split = splits[pair];
                split = split_row(box, len);
                if (split.pinned) {
                    const int m = prog.add_var();
                    prog.m_expr[pair] = {{m, 1.0}};
                    for (std::size_t j = 0; j < len; ++j) {
                        if (box.center[j] > 0.0) {
                            prog.q_expr[offset + j] = {{m, box.center[j]}};
                            prog.reachable[next_begin + j] = 1;
                        }
                    }
                    continue;
                }
                std::vector<int> vars;
                for (std::size_t j : split.free) {
                    const int v = prog.add_var();
                    vars.push_back(v);
                    prog.q_expr[offset + j] = {{v, 1.0}};
                    prog.m_expr[pair].emplace_back(v, 1.0 / split.free_mass);
                    prog.reachable[next_begin + j] = 1;
                }
                for (std::size_t j : split.fixed) {
                    if (!(box.center[j] > 0.0)) continue;
                    for (int v : vars) prog.q_expr[offset + j].emplace_back(v, box.center[j] / split.free_mass);
                    prog.reachable[next_begin + j] = 1;
                }
                theta = std::min(theta, free_radius_bound(box, split));
                add_box_constraints(prog, box, split, vars, true);
            }
        }
    }

    // flow: sum_a q(s,a) equals the mass flowing into s
    for (std::size_t h = 0; h < st.horizon(); ++h) {
        for (std::size_t s = st.layer_begin(h); s < st.layer_end(h); ++s) {
            if (!prog.reachable[s]) continue;
            Sparse row;
            for (std::size_t a = 0; a < st.actions(); ++a) {
                for (const auto& term : prog.m_expr[st.pair_index(s, a)]) row.push_back(term);
            }
            double rhs = 0.0;
            const std::size_t local = s - st.layer_begin(h);
            if (h == 0) {
                if (prog.start_var[local] >= 0) {
                    row.emplace_back(prog.start_var[local], -1.0);
                } else {
                    rhs = prog.start_fixed[local];
                }
            } else {
                for (std::size_t p = st.layer_begin(h - 1); p < st.layer_end(h - 1); ++p) {
                    for (std::size_t a = 0; a < st.actions(); ++a) {
                        for (const auto& [i, w] : prog.q_expr[st.row_offset(p, a) + local]) row.emplace_back(i, -w);
                    }
                }
            }
            prog.eq.push_back(std::move(row));
            prog.eq_rhs.push_back(rhs);
        }
    }

    // interior start: uniform policy; free parts move theta of the way from
    // the center to an even split of the free mass, fixed parts stay put
    prog.start = Eigen::VectorXd::Zero(prog.n);
    std::vector<double> mass(st.state_count(), 0.0);
    for (std::size_t j = 0; j < first; ++j) mass[st.layer_begin(0) + j] = prog.start_fixed[j];
    if (prog.start_free) {
        const double u = start_split.free_mass / static_cast<double>(start_split.free.size());
        for (std::size_t j : start_split.free) {
            const double x = (1.0 - theta) * start_box.center[j] + theta * u;
            prog.start[prog.start_var[j]] = x;
            mass[st.layer_begin(0) + j] = x;
        }
    }
    const double policy_weight = 1.0 / static_cast<double>(st.actions());
    for (std::size_t h = 0; h < st.horizon(); ++h) {
        for (std::size_t s = st.layer_begin(h); s < st.layer_end(h); ++s) {
            if (!prog.reachable[s]) continue;
            for (std::size_t a = 0; a < st.actions(); ++a) {
                const std::size_t pair = st.pair_index(s, a);
                const double m = mass[s] * policy_weight;
                if (!st.has_row(s)) {
                    prog.start[prog.m_expr[pair][0].first] = m;
                    continue;
                }
                const RowBox box = set.row_box(s, a);
                const std::size_t offset = st.row_offset(s, a);
                const std::size_t next_begin = st.layer_begin(h + 1);
                const RowSplit& split = splits[pair];
                if (split.pinned) {
                    prog.start[prog.m_expr[pair][0].first] = m;
                    for (std::size_t j = 0; j < st.row_length(s); ++j) mass[next_begin + j] += m * box.center[j];
                    continue;
                }
                const double u = split.free_mass / static_cast<double>(split.free.size());
                for (std::size_t j : split.free) {
                    const double k = (1.0 - theta) * box.center[j] + theta * u;
                    prog.start[prog.q_expr[offset + j][0].first] = m * k;
                    mass[next_begin + j] += m * k;
                }
                for (std::size_t j : split.fixed) mass[next_begin + j] += m * box.center[j];
            }
        }
    }
    for (std::size_t i = 0; i < prog.ineq.size(); ++i) {
        if (!(dot(prog.ineq[i], prog.start) + prog.ineq_const[i] > 0.0)) {
            throw NumericalError("occupancy program has no strictly feasible start point");
        }
    }
    return prog;
}

struct Objective {
    const Program& prog;
    std::vector<double> loss;    // per pair, divided by the max weight
    std::vector<double> weight;  // per pair, divided by the max weight

    double value(const Eigen::VectorXd& v) const {
        double f = 0.0;
        for (std::size_t p = 0; p < loss.size(); ++p) {
            if (prog.m_expr[p].empty()) continue;
            const double m = dot(prog.m_expr[p], v);
            f += loss[p] * m + weight[p] * m * std::log(m);
        }
        return f;
    }

    // t f - sum ln s_i; +inf outside the domain
    double barrier(const Eigen::VectorXd& v, double t) const {
        double phi = t * value(v);
        for (std::size_t i = 0; i < prog.ineq.size(); ++i) {
            const double s = dot(prog.ineq[i], v) + prog.ineq_const[i];
            if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
            phi -= std::log(s);
        }
        return phi;
    }

    void derivatives(const Eigen::VectorXd& v, double t, Eigen::VectorXd& g, Eigen::MatrixXd& H) const {
        g.setZero();
        H.setZero();
        for (std::size_t p = 0; p < loss.size(); ++p) {
            const Sparse& e = prog.m_expr[p];
            if (e.empty()) continue;
            const double m = dot(e, v);
            const double coef = t * (loss[p] + weight[p] * (std::log(m) + 1.0));
            const double curv = t * weight[p] / m;
            for (const auto& [i, wi] : e) {
                g[i] += coef * wi;
                for (const auto& [j, wj] : e) H(i, j) += curv * wi * wj;
            }
        }
        for (std::size_t k = 0; k < prog.ineq.size(); ++k) {
            const Sparse& c = prog.ineq[k];
            const double s = dot(c, v) + prog.ineq_const[k];
            const double inv = 1.0 / s;
            for (const auto& [i, wi] : c) {
                g[i] -= wi * inv;
                for (const auto& [j, wj] : c) H(i, j) += wi * wj * inv * inv;
            }
        }
    }
};

OccupancyMeasure extract(const Program& prog, const Eigen::VectorXd& v) {
    const LayeredStructure& st = prog.st;
    OccupancyMeasure q;
    q.initial.assign(st.layer_size(0), 0.0);
    for (std::size_t j = 0; j < q.initial.size(); ++j) {
        q.initial[j] = prog.start_var[j] >= 0 ? v[prog.start_var[j]] : prog.start_fixed[j];
    }
    q.pairs.assign(st.pair_count(), 0.0);
    for (std::size_t p = 0; p < q.pairs.size(); ++p) q.pairs[p] = dot(prog.m_expr[p], v);
    q.transitions.assign(st.row_storage(), 0.0);
    for (std::size_t i = 0; i < q.transitions.size(); ++i) q.transitions[i] = dot(prog.q_expr[i], v);
    return q;
}

}  // namespace

std::vector<double> ftrl_layer_weights(std::span<const double> thresholds, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("learning rate must be positive and finite");
    double largest = 0.0;
    for (double c : thresholds) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidInput("thresholds must be finite and non-negative");
        largest = std::max(largest, c);
    }
    std::vector<double> w(thresholds.size());
    for (std::size_t h = 0; h < w.size(); ++h) {
        const double c = thresholds[h] > 0.0 ? thresholds[h] : (largest > 0.0 ? largest : 1.0);
        w[h] = c / eta;
    }
    return w;
}

double occupancy_objective(const LayeredStructure& structure, const OccupancyMeasure& q,
                           std::span<const double> cumulative, std::span<const double> weights) {
    double f = 0.0;
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        const double w = weights[structure.layer_of(s)];
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            const std::size_t p = structure.pair_index(s, a);
            const double m = q.pairs[p];
            f += cumulative[p] * m;
            if (m > 0.0) f += w * m * std::log(m);
        }
    }
    return f;
}

OccupancyMeasure solve_occupancy_program(std::span<const double> cumulative, const ConfidenceSet& set,
                                         std::span<const double> weights, const OccupancySolverOptions& options,
                                         OccupancySolverStats* stats) {
    const LayeredStructure& st = set.structure();
    if (cumulative.size() != st.pair_count()) throw InvalidInput("cumulative loss has the wrong length");
    if (weights.size() != st.horizon()) throw InvalidInput("one weight per layer is required");
    double top = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("layer weights must be positive and finite");
        top = std::max(top, w);
    }
    for (double l : cumulative) {
        if (!std::isfinite(l)) throw InvalidInput("cumulative loss must be finite");
    }

    const Program prog = build_program(set);
    Objective obj{prog, std::vector<double>(st.pair_count()), std::vector<double>(st.pair_count())};
    for (std::size_t s = 0; s < st.state_count(); ++s) {
        for (std::size_t a = 0; a < st.actions(); ++a) {
            const std::size_t p = st.pair_index(s, a);
            obj.loss[p] = cumulative[p] / top;
            obj.weight[p] = weights[st.layer_of(s)] / top;
        }
    }

    const int n = prog.n;
    const int k = static_cast<int>(prog.eq.size());
    Eigen::MatrixXd At = Eigen::MatrixXd::Zero(n, k);
    for (int r = 0; r < k; ++r) {
        for (const auto& [i, w] : prog.eq[r]) At(i, r) += w;
    }
    const int free_dims = n - k;

    Eigen::VectorXd v = prog.start;
    Eigen::VectorXd g(n);
    Eigen::MatrixXd H(n, n);
    const double constraints = static_cast<double>(prog.ineq.size());
    double t = 1.0;
    std::size_t steps = 0;
    double decrement = 0.0;
    Eigen::VectorXd centered;
    double centered_gap = std::numeric_limits<double>::infinity();
    bool stalled = false;
    // past the rounding floor, fall back to the last centered point
    auto breakdown = [&](const std::string& what) {
        if (centered_gap <= options.fallback_gap) {
            stalled = true;
            return;
        }
        throw NumericalError(what);
    };
    while (free_dims > 0 && !stalled) {
        double previous = std::numeric_limits<double>::infinity();
        for (int inner = 0;; ++inner) {
            if (++steps > options.max_newton_steps || inner > 200) {
                breakdown("occupancy FTRL did not converge: " + std::to_string(steps - 1) +
                          " Newton steps, barrier parameter " + std::to_string(t) + ", decrement " +
                          std::to_string(decrement));
                break;
            }
            obj.derivatives(v, t, g, H);
            // Newton step restricted to the null space of the flow constraints,
            // in Jacobi-scaled coordinates v = D y. The start point is feasible
            // and every step lies in that null space, so the equalities hold up
            // to rounding throughout.
            const Eigen::VectorXd D = H.diagonal().cwiseSqrt().cwiseInverse();
            const Eigen::MatrixXd scaledAt = D.asDiagonal() * At;
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaledAt);
            const Eigen::MatrixXd Z = (qr.householderQ() * Eigen::MatrixXd::Identity(n, n)).rightCols(free_dims);
            const Eigen::MatrixXd scaledH = D.asDiagonal() * H * D.asDiagonal();
            const Eigen::VectorXd gy = Z.transpose() * (D.asDiagonal() * g);
            const Eigen::MatrixXd Hy = Z.transpose() * scaledH * Z;
            Eigen::VectorXd dy;
            Eigen::LLT<Eigen::MatrixXd> chol(Hy);
            if (chol.info() == Eigen::Success) {
                dy = -chol.solve(gy);
            } else {
                // numerically singular: pseudo-inverse on the well-resolved eigenspace
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hy);
                const Eigen::VectorXd& lambda = eig.eigenvalues();
                const double floor = 1e-13 * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
                Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
                for (Eigen::Index i = 0; i < lambda.size(); ++i) {
                    if (lambda[i] > floor) inv[i] = 1.0 / lambda[i];
                }
                dy = -(eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().transpose() * gy)));
            }
            decrement = -gy.dot(dy);
            if (!std::isfinite(decrement)) {
                throw NumericalError("occupancy FTRL produced a non-finite Newton step");
            }
            // a slightly negative decrement is rounding noise at a centered point
            if (decrement < 0.0 && decrement > -1e-6) break;
            if (decrement < 0.0) {
                breakdown("occupancy FTRL produced an ascent direction");
                break;
            }
            if (decrement / 2.0 <= 1e-12) break;
            // near the center Newton squares the decrement each step; once it
            // stops shrinking we are at the rounding floor of the t-scaled
            // gradient
            if (decrement < 1e-4 && decrement > 0.25 * previous) break;
            previous = decrement;
            const Eigen::VectorXd d = D.asDiagonal() * (Z * dy);

            double alpha_max = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < prog.ineq.size(); ++i) {
                const double slope = dot(prog.ineq[i], d);
                if (slope < 0.0) {
                    const double s = dot(prog.ineq[i], v) + prog.ineq_const[i];
                    alpha_max = std::min(alpha_max, -s / slope);
                }
            }
            double alpha = std::min(1.0, 0.99 * alpha_max);
            if (decrement > 0.04) {
                const double phi = obj.barrier(v, t);
                while (alpha > 1e-14 && !(obj.barrier(v + alpha * d, t) <= phi - 0.25 * alpha * decrement)) {
                    alpha *= 0.5;
                }
                if (alpha <= 1e-14) {
                    breakdown("occupancy FTRL line search stalled at barrier parameter " + std::to_string(t));
                    break;
                }
            }
            v += alpha * d;
        }
        if (stalled) break;
        centered = v;
        centered_gap = constraints / t;
        if (centered_gap < options.gap_tolerance) break;
        t *= options.barrier_growth;
    }
    if (stalled) {
        v = centered;
        t = constraints / centered_gap;
    }

    if (stats) {
        stats->variables = static_cast<std::size_t>(n);
        stats->constraints = prog.ineq.size();
        stats->newton_steps = steps;
        stats->final_gap = constraints / t;
    }
    OccupancyMeasure q = extract(prog, v);
    validate_occupancy(st, q);
    return q;
}

OccupancyMeasure occupancy_ftrl_step(std::span<const double> cumulative, const ConfidenceSet& set,
                                     std::span<const double> thresholds, double eta,
                                     const OccupancySolverOptions& options, OccupancySolverStats* stats) {
    if (thresholds.size() != set.structure().horizon()) throw InvalidInput("one threshold per layer is required");
    const std::vector<double> weights = ftrl_layer_weights(thresholds, eta);
    return solve_occupancy_program(cumulative, set, weights, options, stats);
}

}  // namespace scalefree
