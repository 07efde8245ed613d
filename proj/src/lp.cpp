#include "phesopt/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phes {

void validate_lp(const LpProblem& p) {
    if (p.n_vars < 0) throw std::invalid_argument("n_vars must be >= 0");
    if (static_cast<int>(p.objective.size()) != p.n_vars)
        throw std::invalid_argument("objective length != n_vars");
    if (static_cast<int>(p.var_bounds.size()) != p.n_vars)
        throw std::invalid_argument("var_bounds length != n_vars");
    for (int j = 0; j < p.n_vars; ++j) {
        auto [lo, hi] = p.var_bounds[static_cast<size_t>(j)];
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            throw std::invalid_argument("invalid bounds for variable " + std::to_string(j));
        if (!std::isfinite(p.objective[static_cast<size_t>(j)]))
            throw std::invalid_argument("non-finite objective coefficient at " + std::to_string(j));
    }
    for (size_t r = 0; r < p.rows.size(); ++r) {
        const auto& row = p.rows[r];
        if (!std::isfinite(row.rhs))
            throw std::invalid_argument("non-finite rhs in row " + std::to_string(r));
        for (auto [j, a] : row.coeffs) {
            if (j < 0 || j >= p.n_vars)
                throw std::invalid_argument("row " + std::to_string(r) +
                                            " references variable " + std::to_string(j) +
                                            " outside [0," + std::to_string(p.n_vars) + ")");
            if (!std::isfinite(a))
                throw std::invalid_argument("non-finite coefficient in row " + std::to_string(r));
        }
    }
}

namespace {

enum class ColState : uint8_t { Basic, AtLower, AtUpper, Free, Fixed };

class Simplex {
public:
    Simplex(const LpProblem& p, const LpOptions& opts) : p_(p), opts_(opts) {
        m_ = static_cast<int>(p.rows.size());
        n_ = p.n_vars;
        build();
    }

    LpSolution run() {
        LpSolution sol;
        // Phase 1: maximize -sum(artificials).
        if (n_art_ > 0) {
            set_phase1_costs();
            refresh();
            Outcome oc = iterate();
            if (oc == Outcome::IterLimit)
                throw std::runtime_error("simplex iteration cap (" +
                                         std::to_string(opts_.max_iterations) + ") exceeded in phase 1");
            double art_sum = -current_objective();
            if (art_sum > phase1_tol()) {
                sol.status = LpStatus::Infeasible;
                sol.infeasibility = art_sum;
                sol.iterations = iters_;
                return sol;
            }
            // Pin artificials at zero for phase 2.
            for (int j = ncols_ - n_art_; j < ncols_; ++j) {
                lo_(j) = 0.0;
                hi_(j) = 0.0;
                if (state_[static_cast<size_t>(j)] != ColState::Basic) {
                    state_[static_cast<size_t>(j)] = ColState::Fixed;
                    value_(j) = 0.0;
                }
            }
        }
        set_phase2_costs();
        refresh();
        bland_ = false;
        stall_count_ = 0;
        Outcome oc = iterate();
        sol.iterations = iters_;
        if (oc == Outcome::IterLimit)
            throw std::runtime_error("simplex iteration cap (" +
                                     std::to_string(opts_.max_iterations) + ") exceeded in phase 2");
        if (oc == Outcome::Unbounded) {
            sol.status = LpStatus::Unbounded;
            sol.unbounded_ray = unbounded_ray_;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.x = extract_x();
        sol.objective_value = 0.0;
        for (int j = 0; j < n_; ++j)
            sol.objective_value += p_.objective[static_cast<size_t>(j)] * sol.x[static_cast<size_t>(j)];
        return sol;
    }

private:
    enum class Outcome { Optimal, Unbounded, IterLimit };

    void build() {
        // Columns: structural | slacks | artificials.
        ncols_ = n_ + m_;
        A_.setZero(m_, n_ + 2 * m_); // reserve worst-case artificial space
        lo_.resize(n_ + 2 * m_);
        hi_.resize(n_ + 2 * m_);
        value_.resize(n_ + 2 * m_);
        state_.assign(static_cast<size_t>(n_ + 2 * m_), ColState::AtLower);
        b_.resize(m_);

        for (int j = 0; j < n_; ++j) {
            lo_(j) = p_.var_bounds[static_cast<size_t>(j)].first;
            hi_(j) = p_.var_bounds[static_cast<size_t>(j)].second;
        }
        for (int i = 0; i < m_; ++i) {
            const auto& row = p_.rows[static_cast<size_t>(i)];
            for (auto [j, a] : row.coeffs) A_(i, j) += a;
            int sj = n_ + i;
            A_(i, sj) = 1.0;
            switch (row.rel) {
                case Relation::LE: lo_(sj) = 0.0; hi_(sj) = kInf; break;
                case Relation::EQ: lo_(sj) = 0.0; hi_(sj) = 0.0; break;
                case Relation::GE: lo_(sj) = -kInf; hi_(sj) = 0.0; break;
            }
            b_(i) = row.rhs;
        }

        // Initial nonbasic point: each column at the finite bound closest to zero.
        for (int j = 0; j < ncols_; ++j) init_nonbasic(j);

        // Residuals decide which rows get a basic slack and which need an artificial.
        Eigen::VectorXd resid = b_;
        for (int j = 0; j < ncols_; ++j)
            if (value_(j) != 0.0) resid -= A_.col(j) * value_(j);
        // resid is the value the slack would need on top of its chosen bound.
        basis_.assign(static_cast<size_t>(m_), -1);
        n_art_ = 0;
        for (int i = 0; i < m_; ++i) {
            int sj = n_ + i;
            double want = value_(sj) + resid(i);
            if (want >= lo_(sj) - 1e-12 && want <= hi_(sj) + 1e-12) {
                state_[static_cast<size_t>(sj)] = ColState::Basic;
                value_(sj) = std::clamp(want, lo_(sj), hi_(sj));
                basis_[static_cast<size_t>(i)] = sj;
            } else {
                // Clamp the slack to its nearest feasible bound, absorb the rest
                // in a fresh artificial.
                double clamped = std::clamp(want, lo_(sj), hi_(sj));
                double gap = want - clamped;
                value_(sj) = clamped;
                state_[static_cast<size_t>(sj)] = (clamped == lo_(sj)) ? ColState::AtLower
                                                                       : ColState::AtUpper;
                int aj = n_ + m_ + n_art_;
                A_(i, aj) = (gap > 0.0) ? 1.0 : -1.0;
                lo_(aj) = 0.0;
                hi_(aj) = kInf;
                value_(aj) = std::abs(gap);
                state_[static_cast<size_t>(aj)] = ColState::Basic;
                basis_[static_cast<size_t>(i)] = aj;
                ++n_art_;
            }
        }
        ncols_ = n_ + m_ + n_art_;
        A_.conservativeResize(m_, ncols_);
        lo_.conservativeResize(ncols_);
        hi_.conservativeResize(ncols_);
        value_.conservativeResize(ncols_);
        state_.resize(static_cast<size_t>(ncols_));

        T_ = A_;
        beta_ = b_;
        // A negative artificial makes the starting basis diag(+-1), not the
        // identity; normalize those rows so every basis column is e_i.
        for (int i = 0; i < m_; ++i) {
            int bj = basis_[static_cast<size_t>(i)];
            if (bj >= n_ + m_ && A_(i, bj) < 0.0) {
                T_.row(i) *= -1.0;
                beta_(i) *= -1.0;
            }
        }
        xB_.resize(m_);
        for (int i = 0; i < m_; ++i) xB_(i) = value_(basis_[static_cast<size_t>(i)]);
        cost_.setZero(ncols_);
        d_.setZero(ncols_);
    }

    void init_nonbasic(int j) {
        if (std::isfinite(lo_(j))) {
            value_(j) = lo_(j);
            state_[static_cast<size_t>(j)] = (lo_(j) == hi_(j)) ? ColState::Fixed : ColState::AtLower;
        } else if (std::isfinite(hi_(j))) {
            value_(j) = hi_(j);
            state_[static_cast<size_t>(j)] = ColState::AtUpper;
        } else {
            value_(j) = 0.0;
            state_[static_cast<size_t>(j)] = ColState::Free;
        }
    }

    void set_phase1_costs() {
        cost_.setZero(ncols_);
        for (int j = n_ + m_; j < ncols_; ++j) cost_(j) = -1.0;
    }
    void set_phase2_costs() {
        cost_.setZero(ncols_);
        for (int j = 0; j < n_; ++j) cost_(j) = p_.objective[static_cast<size_t>(j)];
    }

    double phase1_tol() const {
        double scale = 1.0 + b_.cwiseAbs().maxCoeff();
        return opts_.feas_tol * scale;
    }

    // Full recompute of basic values and reduced costs from the tableau.
    void refresh() {
        Eigen::VectorXd acc = beta_;
        for (int j = 0; j < ncols_; ++j) {
            if (state_[static_cast<size_t>(j)] == ColState::Basic) continue;
            if (value_(j) != 0.0) acc -= T_.col(j) * value_(j);
        }
        xB_ = acc;
        for (int i = 0; i < m_; ++i) value_(basis_[static_cast<size_t>(i)]) = xB_(i);

        Eigen::VectorXd cB(m_);
        for (int i = 0; i < m_; ++i) cB(i) = cost_(basis_[static_cast<size_t>(i)]);
        d_ = cost_.transpose() - cB.transpose() * T_;
        for (int i = 0; i < m_; ++i) d_(basis_[static_cast<size_t>(i)]) = 0.0;
    }

    double current_objective() const {
        double z = 0.0;
        for (int j = 0; j < ncols_; ++j)
            if (cost_(j) != 0.0) z += cost_(j) * value_(j);
        return z;
    }

    Series extract_x() const {
        Series x(static_cast<size_t>(n_));
        for (int j = 0; j < n_; ++j) x[static_cast<size_t>(j)] = value_(j);
        return x;
    }

    Outcome iterate() {
        const double dj_tol = 1e-9;
        const double piv_tol = 1e-9;
        double best_z = current_objective();
        long since_refresh = 0;
        while (true) {
            if (iters_ >= opts_.max_iterations) return Outcome::IterLimit;

            // Pricing.
            int enter = -1;
            double enter_dir = 0.0;
            double best_score = dj_tol;
            for (int j = 0; j < ncols_; ++j) {
                double dj = d_(j);
                double dir;
                switch (state_[static_cast<size_t>(j)]) {
                    case ColState::AtLower: dir = 1.0; break;
                    case ColState::AtUpper: dir = -1.0; break;
                    case ColState::Free: dir = (dj > 0.0) ? 1.0 : -1.0; break;
                    default: continue;
                }
                double score = dj * dir;
                if (score <= dj_tol) continue;
                if (bland_) { enter = j; enter_dir = dir; break; }
                if (score > best_score) { best_score = score; enter = j; enter_dir = dir; }
            }
            if (enter < 0) return Outcome::Optimal;

            ++iters_;
            Eigen::VectorXd w = T_.col(enter);

            // Ratio test over basic variables plus the entering variable's own span.
            double span = hi_(enter) - lo_(enter); // inf allowed
            double t_max = span;
            int leave_row = -1;
            double leave_bound = 0.0;
            for (int i = 0; i < m_; ++i) {
                double delta = -enter_dir * w(i); // d(xB_i)/dt
                int bj = basis_[static_cast<size_t>(i)];
                double ratio, bound;
                if (delta < -piv_tol) {
                    if (!std::isfinite(lo_(bj))) continue;
                    ratio = (xB_(i) - lo_(bj)) / (-delta);
                    bound = lo_(bj);
                } else if (delta > piv_tol) {
                    if (!std::isfinite(hi_(bj))) continue;
                    ratio = (hi_(bj) - xB_(i)) / delta;
                    bound = hi_(bj);
                } else {
                    continue;
                }
                if (ratio < 0.0) ratio = 0.0; // basic marginally past its bound
                bool better = ratio < t_max - 1e-12;
                bool tie = std::abs(ratio - t_max) <= 1e-12 && leave_row >= 0;
                if (better) {
                    t_max = ratio;
                    leave_row = i;
                    leave_bound = bound;
                } else if (tie) {
                    if (bland_) {
                        if (bj < basis_[static_cast<size_t>(leave_row)]) {
                            leave_row = i;
                            leave_bound = bound;
                        }
                    } else if (std::abs(w(i)) > std::abs(w(leave_row))) {
                        leave_row = i;
                        leave_bound = bound;
                    }
                }
            }

            if (!std::isfinite(t_max)) {
                unbounded_ray_ = enter;
                return Outcome::Unbounded;
            }

            double gain = d_(enter) * enter_dir * t_max;
            if (leave_row < 0) {
                // Bound flip: entering runs to its opposite bound.
                xB_ -= enter_dir * t_max * w;
                for (int i = 0; i < m_; ++i) value_(basis_[static_cast<size_t>(i)]) = xB_(i);
                if (state_[static_cast<size_t>(enter)] == ColState::AtLower) {
                    value_(enter) = hi_(enter);
                    state_[static_cast<size_t>(enter)] = ColState::AtUpper;
                } else {
                    value_(enter) = lo_(enter);
                    state_[static_cast<size_t>(enter)] = ColState::AtLower;
                }
            } else {
                double enter_val = value_(enter) + enter_dir * t_max;
                xB_ -= enter_dir * t_max * w;
                for (int i = 0; i < m_; ++i) value_(basis_[static_cast<size_t>(i)]) = xB_(i);
                int bj = basis_[static_cast<size_t>(leave_row)];
                value_(bj) = leave_bound;
                state_[static_cast<size_t>(bj)] =
                    (lo_(bj) == hi_(bj)) ? ColState::Fixed
                    : (leave_bound == lo_(bj) ? ColState::AtLower : ColState::AtUpper);

                // Tableau pivot (rank-1 update).
                double piv = T_(leave_row, enter);
                Eigen::RowVectorXd prow = T_.row(leave_row) / piv;
                Eigen::VectorXd colj = T_.col(enter);
                double beta_r = beta_(leave_row) / piv;
                T_.noalias() -= colj * prow;
                T_.row(leave_row) = prow;
                beta_ -= colj * beta_r;
                beta_(leave_row) = beta_r;
                double dj = d_(enter);
                d_.noalias() -= dj * prow;
                d_(enter) = 0.0;

                basis_[static_cast<size_t>(leave_row)] = enter;
                state_[static_cast<size_t>(enter)] = ColState::Basic;
                value_(enter) = enter_val;
                xB_(leave_row) = enter_val;
            }

            // Stall detection drives the Bland fallback.
            double z = best_z + gain;
            if (gain > 1e-12 * (1.0 + std::abs(best_z))) {
                best_z = z;
                stall_count_ = 0;
            } else if (!bland_ && ++stall_count_ >= opts_.stall_threshold) {
                bland_ = true;
            }

            if (++since_refresh >= 256) {
                refresh();
                since_refresh = 0;
            }
        }
    }

    const LpProblem& p_;
    const LpOptions& opts_;
    int m_ = 0, n_ = 0, ncols_ = 0, n_art_ = 0;
    Eigen::MatrixXd A_, T_;
    Eigen::VectorXd b_, beta_, xB_, lo_, hi_, value_, cost_;
    Eigen::RowVectorXd d_;
    std::vector<ColState> state_;
    std::vector<int> basis_;
    long iters_ = 0;
    int stall_count_ = 0;
    bool bland_ = false;
    int unbounded_ray_ = -1;
};

} // namespace

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts) {
    validate_lp(p);
    if (p.n_vars == 0) {
        // Only constant rows: feasible iff every row holds at x = ().
        for (const auto& row : p.rows) {
            bool ok = (row.rel == Relation::LE && 0.0 <= row.rhs + opts.feas_tol) ||
                      (row.rel == Relation::GE && 0.0 >= row.rhs - opts.feas_tol) ||
                      (row.rel == Relation::EQ && std::abs(row.rhs) <= opts.feas_tol);
            if (!ok) return {LpStatus::Infeasible, {}, 0.0, 0, std::abs(row.rhs), -1};
        }
        return {LpStatus::Optimal, {}, 0.0, 0, 0.0, -1};
    }
    Simplex s(p, opts);
    return s.run();
}

std::string dump_lp(const LpProblem& p, const std::vector<int>& binary_vars) {
    std::ostringstream os;
    os.precision(17);
    os << "nvars " << p.n_vars << "\n";
    os << "obj";
    for (int j = 0; j < p.n_vars; ++j)
        if (p.objective[static_cast<size_t>(j)] != 0.0)
            os << " " << j << ":" << p.objective[static_cast<size_t>(j)];
    os << "\n";
    for (int j = 0; j < p.n_vars; ++j) {
        auto [lo, hi] = p.var_bounds[static_cast<size_t>(j)];
        if (lo != 0.0 || hi != kInf) os << "bounds " << j << " " << lo << " " << hi << "\n";
    }
    if (!binary_vars.empty()) {
        os << "binary";
        for (int j : binary_vars) os << " " << j;
        os << "\n";
    }
    for (const auto& row : p.rows) {
        os << "row " << (row.rel == Relation::LE ? "<=" : row.rel == Relation::EQ ? "=" : ">=")
           << " " << row.rhs;
        for (auto [j, a] : row.coeffs) os << " " << j << ":" << a;
        os << "\n";
    }
    return os.str();
}

std::pair<LpProblem, std::vector<int>> parse_lp_dump(const std::string& text) {
    LpProblem p;
    std::vector<int> binaries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto parse_terms = [&](std::istringstream& is, std::vector<std::pair<int, double>>& out) {
        std::string term;
        while (is >> term) {
            auto colon = term.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("line " + std::to_string(lineno) +
                                         ": expected index:value, got '" + term + "'");
            out.emplace_back(std::stoi(term.substr(0, colon)), std::stod(term.substr(colon + 1)));
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string kw;
        is >> kw;
        if (kw == "nvars") {
            int n;
            is >> n;
            for (int i = 0; i < n; ++i) p.add_var();
        } else if (kw == "obj") {
            std::vector<std::pair<int, double>> terms;
            parse_terms(is, terms);
            for (auto [j, c] : terms) p.objective.at(static_cast<size_t>(j)) = c;
        } else if (kw == "bounds") {
            int j;
            double lo, hi;
            is >> j >> lo >> hi;
            p.var_bounds.at(static_cast<size_t>(j)) = {lo, hi};
        } else if (kw == "binary") {
            int j;
            while (is >> j) binaries.push_back(j);
        } else if (kw == "row") {
            std::string rel;
            double rhs;
            is >> rel >> rhs;
            LpRow row;
            row.rhs = rhs;
            row.rel = rel == "<=" ? Relation::LE : rel == "=" ? Relation::EQ : Relation::GE;
            parse_terms(is, row.coeffs);
            p.rows.push_back(std::move(row));
        } else {
            throw std::runtime_error("line " + std::to_string(lineno) + ": unknown keyword '" +
                                     kw + "'");
        }
    }
    return {std::move(p), std::move(binaries)};
}

} // namespace phes
