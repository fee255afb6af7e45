#include "sdsim/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdsim/errors.hpp"

namespace sds::markov {

GeneratorMatrix::GeneratorMatrix(int states, Eigen::MatrixXd rates)
    : m(states), gamma(std::move(rates)) {
    validate();
}

void GeneratorMatrix::validate() const {
    if (m < 1 || gamma.rows() != m || gamma.cols() != m) {
        throw ConfigError("generator: matrix must be m x m with m >= 1");
    }
    const double scale = std::max(1.0, gamma.cwiseAbs().maxCoeff());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j && gamma(i, j) < 0.0) {
                std::ostringstream msg;
                msg << "generator: negative off-diagonal rate at (" << i + 1
                    << ", " << j + 1 << "): " << gamma(i, j);
                throw ConfigError(msg.str());
            }
        }
        const double rowsum = gamma.row(i).sum();
        if (std::abs(rowsum) > 1e-10 * scale) {
            std::ostringstream msg;
            msg << "generator: row " << i + 1 << " sums to " << rowsum
                << ", expected 0";
            throw ConfigError(msg.str());
        }
    }
}

namespace {

// Diagonal Pade approximant of order 6 for exp(A).
Eigen::MatrixXd expm_pade6(const Eigen::MatrixXd& a) {
    static const double c[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0, 1.0 / 66.0,
                                1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
    const int n = static_cast<int>(a.rows());
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    Eigen::MatrixXd as = a;
    if (norm > 0.25) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.25))));
        as /= std::ldexp(1.0, squarings);
    }
    const Eigen::MatrixXd a2 = as * as;
    // p(A) = U + V, q(A) = -U + V with U odd and V even in A.
    Eigen::MatrixXd v = c[6] * a2 + c[4] * Eigen::MatrixXd::Identity(n, n);
    v = a2 * v + c[2] * Eigen::MatrixXd::Identity(n, n);
    v = a2 * v + c[0] * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd u = c[5] * a2 + c[3] * Eigen::MatrixXd::Identity(n, n);
    u = a2 * u + c[1] * Eigen::MatrixXd::Identity(n, n);
    u = as * u;
    Eigen::MatrixXd result = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

struct CommunicatingClasses {
    std::vector<std::vector<int>> classes;  // strongly connected components
    std::vector<int> component_of;
};

CommunicatingClasses find_classes(const GeneratorMatrix& g) {
    // Kosaraju on the graph of strictly positive off-diagonal rates.
    const int m = g.m;
    std::vector<std::vector<int>> fwd(m), bwd(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j && g.gamma(i, j) > 0.0) {
                fwd[i].push_back(j);
                bwd[j].push_back(i);
            }
        }
    }
    std::vector<int> order;
    std::vector<char> seen(m, 0);
    std::vector<std::pair<int, std::size_t>> stack;
    for (int start = 0; start < m; ++start) {
        if (seen[start]) continue;
        stack.emplace_back(start, 0);
        seen[start] = 1;
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            if (idx < fwd[node].size()) {
                const int next = fwd[node][idx++];
                if (!seen[next]) {
                    seen[next] = 1;
                    stack.emplace_back(next, 0);
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
    }
    CommunicatingClasses out;
    out.component_of.assign(m, -1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (out.component_of[*it] >= 0) continue;
        const int comp = static_cast<int>(out.classes.size());
        out.classes.emplace_back();
        std::vector<int> dfs{*it};
        out.component_of[*it] = comp;
        while (!dfs.empty()) {
            const int node = dfs.back();
            dfs.pop_back();
            out.classes[comp].push_back(node);
            for (int prev : bwd[node]) {
                if (out.component_of[prev] < 0) {
                    out.component_of[prev] = comp;
                    dfs.push_back(prev);
                }
            }
        }
    }
    return out;
}

std::string states_list(const std::vector<int>& states) {
    std::vector<int> sorted = states;
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream out;
    out << "{";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i) out << ", ";
        out << sorted[i] + 1;
    }
    out << "}";
    return out.str();
}

} // namespace

TransitionMatrix transition_matrix(const GeneratorMatrix& gamma, double delta) {
    gamma.validate();
    if (!(delta > 0.0)) throw ConfigError("transition_matrix: delta must be positive");
    TransitionMatrix out;
    out.m = gamma.m;
    out.step = delta;
    out.p = expm_pade6(delta * gamma.gamma);
    for (int i = 0; i < out.m; ++i) {
        for (int j = 0; j < out.m; ++j) {
            if (out.p(i, j) < 0.0) out.p(i, j) = 0.0;
            if (out.p(i, j) > 1.0) out.p(i, j) = 1.0;
        }
        out.p.row(i) /= out.p.row(i).sum();
    }
    return out;
}

std::vector<int> sample_chain(const TransitionMatrix& p, int r0, int steps,
                              rng::Stream& stream) {
    if (r0 < 0 || r0 >= p.m) throw ConfigError("sample_chain: initial state out of range");
    std::vector<int> path(static_cast<std::size_t>(steps) + 1);
    path[0] = r0;
    int r = r0;
    for (int k = 1; k <= steps; ++k) {
        const double u = stream.uniform();
        double cum = 0.0;
        int next = p.m - 1;
        for (int j = 0; j < p.m; ++j) {
            cum += p.p(r, j);
            if (u <= cum) {
                next = j;
                break;
            }
        }
        r = next;
        path[static_cast<std::size_t>(k)] = r;
    }
    return path;
}

bool is_irreducible(const GeneratorMatrix& gamma) {
    gamma.validate();
    return find_classes(gamma).classes.size() == 1;
}

StationaryDistribution stationary_distribution(const GeneratorMatrix& gamma) {
    gamma.validate();
    const auto classes = find_classes(gamma);
    if (classes.classes.size() > 1) {
        // Report a closed class: one with no rate leading out of it.
        for (const auto& cls : classes.classes) {
            bool closed = true;
            for (int i : cls) {
                for (int j = 0; j < gamma.m && closed; ++j) {
                    if (i != j && gamma.gamma(i, j) > 0.0 &&
                        classes.component_of[j] != classes.component_of[i]) {
                        closed = false;
                    }
                }
            }
            if (closed) {
                std::vector<int> outside;
                for (int s = 0; s < gamma.m; ++s) {
                    if (classes.component_of[s] != classes.component_of[cls.front()]) {
                        outside.push_back(s);
                    }
                }
                throw ConfigError(
                    "stationary_distribution: generator is reducible; states " +
                    states_list(outside) + " are unreachable from the closed class " +
                    states_list(cls));
            }
        }
        throw ConfigError("stationary_distribution: generator is reducible");
    }
    const int m = gamma.m;
    Eigen::MatrixXd a = gamma.gamma.transpose();
    a.row(m - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(m - 1) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
    pi /= pi.sum();
    const double residual = (pi.transpose() * gamma.gamma).cwiseAbs().maxCoeff();
    if (residual > 1e-10 || pi.minCoeff() <= 0.0) {
        throw NumericalError("stationary_distribution: solve failed, residual " +
                             std::to_string(residual));
    }
    return StationaryDistribution{std::move(pi)};
}

Eigen::MatrixXd gamma_pu(const GeneratorMatrix& gamma, double p,
                         const Eigen::VectorXd& u) {
    gamma.validate();
    if (u.size() != gamma.m) throw ConfigError("gamma_pu: u has wrong length");
    if (!(p > 0.0)) throw ConfigError("gamma_pu: p must be positive");
    Eigen::MatrixXd out = gamma.gamma;
    out.diagonal() += 0.5 * p * u;
    return out;
}

namespace {
double spectral_abscissa(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
    double lambda = solver.eigenvalues()(0).real();
    for (int i = 1; i < a.rows(); ++i) {
        lambda = std::max(lambda, solver.eigenvalues()(i).real());
    }
    return lambda;
}
} // namespace

double p_star(const GeneratorMatrix& gamma, const Eigen::VectorXd& u) {
    gamma.validate();
    if (u.size() != gamma.m) throw ConfigError("p_star: u has wrong length");
    if (u.maxCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    // With some u_i > 0 the admissible window is finite. The spectral
    // abscissa lambda(p) of gamma + (p/2)diag(u) is convex in p (diagonal
    // perturbation of a Metzler matrix) with lambda(0) = 0, so eta = -lambda
    // is positive exactly on (0, p_hat) where p_hat is the unique positive
    // root of lambda. At p = min{-2 gamma_ii / u_i} a diagonal entry of
    // gamma_pu vanishes, forcing lambda >= 0 there; that brackets the root.
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < gamma.m; ++i) {
        if (u(i) > 0.0) hi = std::min(hi, -2.0 * gamma.gamma(i, i) / u(i));
    }
    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (spectral_abscissa(gamma_pu(gamma, mid, u)) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

SpectralResult eta_xi(const GeneratorMatrix& gamma, double p,
                      const Eigen::VectorXd& u) {
    gamma.validate();
    if (u.size() != gamma.m) throw ConfigError("eta_xi: u has wrong length");
    const auto pi = stationary_distribution(gamma);
    const double pi_u = pi.pi.dot(u);
    if (!(pi_u < 0.0)) {
        throw ConfigError("eta_xi: requires pi*u < 0, got pi*u = " + std::to_string(pi_u));
    }
    const double pstar = p_star(gamma, u);
    if (!(p > 0.0) || !(p < pstar)) {
        throw ConfigError("eta_xi: p must lie in (0, " + std::to_string(pstar) +
                          "), got " + std::to_string(p));
    }
    const int m = gamma.m;
    const Eigen::MatrixXd a = gamma_pu(gamma, p, u);
    double lambda;
    Eigen::VectorXd xi(m);
    if (m == 1) {
        lambda = a(0, 0);
        xi(0) = 1.0;
    } else if (m == 2) {
        const double half_tr = 0.5 * (a(0, 0) + a(1, 1));
        const double half_gap = 0.5 * (a(0, 0) - a(1, 1));
        const double disc = std::sqrt(half_gap * half_gap + a(0, 1) * a(1, 0));
        lambda = half_tr + disc;
        xi(0) = a(0, 1);
        xi(1) = lambda - a(0, 0);
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
        lambda = solver.eigenvalues()(0).real();
        for (int i = 1; i < m; ++i) {
            lambda = std::max(lambda, solver.eigenvalues()(i).real());
        }
        // The dominant eigenvalue of an irreducible matrix with nonnegative
        // off-diagonal entries is real with a strictly positive eigenvector;
        // inverse iteration with a small shift recovers it to full precision.
        const double shift = lambda + 1e-8 * std::max(1.0, std::abs(lambda));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(
            a - shift * Eigen::MatrixXd::Identity(m, m));
        xi.setOnes();
        for (int iter = 0; iter < 50; ++iter) {
            Eigen::VectorXd next = lu.solve(xi);
            next /= next.norm();
            if ((next - xi).norm() < 1e-15 || (next + xi).norm() < 1e-15) {
                xi = next;
                break;
            }
            xi = next;
        }
        lambda = xi.dot(a * xi) / xi.squaredNorm();
    }
    double max_abs = 0.0;
    int max_idx = 0;
    for (int i = 0; i < m; ++i) {
        if (std::abs(xi(i)) > max_abs) {
            max_abs = std::abs(xi(i));
            max_idx = i;
        }
    }
    if (xi(max_idx) < 0.0) xi = -xi;
    const double eta = -lambda;
    auto spectrum_string = [&]() {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
        std::ostringstream out;
        out << "spectrum:";
        for (int i = 0; i < m; ++i) {
            out << " (" << solver.eigenvalues()(i).real() << ", "
                << solver.eigenvalues()(i).imag() << ")";
        }
        return out.str();
    };
    if (!(eta > 0.0)) {
        throw NumericalError("eta_xi: computed eta = " + std::to_string(eta) +
                             " is not positive despite preconditions; " +
                             spectrum_string());
    }
    if (xi.minCoeff() <= 0.0) {
        throw NumericalError("eta_xi: eigenvector not strictly positive; " +
                             spectrum_string());
    }
    xi /= xi.minCoeff();
    SpectralResult out;
    out.p = p;
    out.u = u;
    out.eta = eta;
    out.xi = std::move(xi);
    return out;
}

} // namespace sds::markov
