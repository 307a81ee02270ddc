#include "qepkit/gnep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qepkit {

int GnepInstance::total_dim() const {
    int d = 0;
    for (const auto& p : players)
        d += p.dim;
    return d;
}

std::vector<int> GnepInstance::offsets() const {
    std::vector<int> off;
    int d = 0;
    for (const auto& p : players) {
        off.push_back(d);
        d += p.dim;
    }
    return off;
}

Vec GnepInstance::G(const Vec& y) const {
    Vec out(total_dim());
    int off = 0;
    for (const auto& p : players) {
        Vec g = p.grad_theta(y);
        if (g.size() != p.dim)
            throw DimensionError("gnep: gradient block has wrong length");
        out.segment(off, p.dim) = -g;
        off += p.dim;
    }
    return out;
}

QepInstance gnep_to_qep(const GnepInstance& g) {
    const int n = g.total_dim();
    std::vector<ConvexSet> cs;
    for (const auto& p : g.players) {
        if (p.C.dim() != p.dim)
            throw DimensionError("gnep_to_qep: C_i dimension mismatch");
        cs.push_back(p.C);
    }
    if (g.ambient.dim() != n)
        throw DimensionError("gnep_to_qep: ambient dimension mismatch");
    QepInstance q;
    q.name = g.name;
    q.dim = n;
    q.C = ConvexSet::product(std::move(cs));
    auto players = g.players;
    q.K.image = [players](const Vec& x) {
        std::vector<ConvexSet> ks;
        for (const auto& p : players) {
            ConvexSet k = p.K(x);
            if (k.dim() != p.dim)
                throw DimensionError("gnep_to_qep: K_i dimension mismatch");
            ks.push_back(std::move(k));
        }
        return ConvexSet::product(std::move(ks));
    };
    q.f = Bifunction::from_field([g](const Vec& y) { return g.G(y); });
    q.ambient = g.ambient;
    return q;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& G, const Vec& x, double h) {
    const Eigen::Index n = x.size();
    Vec g0 = G(x);
    Mat J(g0.size(), n);
    Vec xp = x, xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        J.col(j) = (G(xp) - G(xm)) / (2 * h);
        xp[j] = xm[j] = x[j];
    }
    if (!J.allFinite())
        throw Error("fd_jacobian: non-finite derivative");
    return J;
}

Vec jacobi_eigenvalues(Mat S, double tol, int max_sweeps) {
    const Eigen::Index n = S.rows();
    if (S.cols() != n)
        throw DimensionError("jacobi_eigenvalues: matrix not square");
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += S(p, q) * S(p, q);
        if (off <= tol * tol * std::max(1.0, S.squaredNorm()))
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (S(p, q) == 0.0)
                    continue;
                double theta = (S(q, q) - S(p, p)) / (2 * S(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    double skp = S(k, p), skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    double spk = S(p, k), sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
            }
        }
    }
    Vec ev = S.diagonal();
    std::sort(ev.data(), ev.data() + n);
    return ev;
}

double estimate_mu(const GnepInstance& g, const std::vector<Vec>& samples) {
    if (samples.empty())
        throw Error("estimate_mu: no samples");
    double mu = std::numeric_limits<double>::infinity();
    for (const Vec& x : samples) {
        Mat J = fd_jacobian([&g](const Vec& y) { return g.G(y); }, x);
        mu = std::min(mu, jacobi_eigenvalues(0.5 * (J + J.transpose()))[0]);
    }
    return mu;
}

double estimate_L(const GnepInstance& g, const std::vector<Vec>& samples) {
    if (samples.empty())
        throw Error("estimate_L: no samples");
    double L = 0.0;
    for (const Vec& x : samples) {
        Mat J = fd_jacobian([&g](const Vec& y) { return g.G(y); }, x);
        Vec ev = jacobi_eigenvalues(J.transpose() * J);
        L = std::max(L, std::sqrt(std::max(0.0, ev[ev.size() - 1])));
    }
    return L;
}

std::function<Vec(const Vec&)> fd_own_gradient(std::function<double(const Vec&)> theta, int offset,
                                               int dim, double h) {
    return [theta = std::move(theta), offset, dim, h](const Vec& y) {
        Vec g(dim);
        Vec yp = y, ym = y;
        for (int j = 0; j < dim; ++j) {
            int i = offset + j;
            yp[i] = y[i] + h;
            ym[i] = y[i] - h;
            g[j] = (theta(yp) - theta(ym)) / (2 * h);
            yp[i] = ym[i] = y[i];
        }
        return g;
    };
}

}  // namespace qepkit
