#include "qepkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qepkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

struct ConvexSet::Node {
    Kind kind;
    int dim = 0;
    Vec lower, upper;
    Vec center;
    double radius = 0.0;
    Mat A;
    Vec b;
    Vec row_norm2;
    bool flat = false;  // contains an equality pair
    std::vector<ConvexSet> children;  // Translated: base at [0]; Product: blocks
    Vec shift;
    Vec box_lo, box_hi;
};

namespace {

double max_violation(const Mat& A, const Vec& b, const Vec& x) {
    if (A.rows() == 0)
        return 0.0;
    return (A * x - b).maxCoeff();
}

// Exact projection onto the rows with t_k > 0 taken as equalities. Accepted
// only when the multipliers are nonnegative and every row is satisfied.
bool polish_active_set(const Mat& A, const Vec& b, const Vec& p, const Vec& t, Vec& x) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index k = 0; k < t.size(); ++k)
        if (t[k] > 0.0)
            rows.push_back(k);
    if (rows.empty())
        return false;
    Mat As(rows.size(), A.cols());
    Vec bs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        As.row(i) = A.row(rows[i]);
        bs[i] = b[rows[i]];
    }
    const Vec lambda = (As * As.transpose()).completeOrthogonalDecomposition().solve(As * p - bs);
    if (!lambda.allFinite() || lambda.minCoeff() < 0.0)
        return false;
    const Vec z = p - As.transpose() * lambda;
    const double scale = 1.0 + p.lpNorm<Eigen::Infinity>();
    if (max_violation(A, b, z) > 1e-12 * scale || (As * z - bs).cwiseAbs().maxCoeff() > 1e-12 * scale)
        return false;
    x = z;
    return true;
}

// Dykstra over halfspaces; the correction for halfspace k is t_k * a_k.
Vec dykstra(const Mat& A, const Vec& b, const Vec& rn2, const Vec& p, const ProjectOptions& opt,
            bool& converged) {
    const Eigen::Index m = A.rows();
    Vec x = p;
    Vec t = Vec::Zero(m);
    converged = false;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        Vec x_prev = x;
        double corr_change = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (rn2[k] == 0.0)
                continue;
            Vec y = x + t[k] * A.row(k).transpose();
            double s = A.row(k).dot(y) - b[k];
            double t_new = s > 0.0 ? s / rn2[k] : 0.0;
            corr_change += std::abs(t_new - t[k]) * std::sqrt(rn2[k]);
            t[k] = t_new;
            x = y - t_new * A.row(k).transpose();
        }
        if ((x - x_prev).norm() <= opt.tol && corr_change <= opt.tol) {
            converged = true;
            break;
        }
        if (sweep % 25 == 24 && polish_active_set(A, b, p, t, x)) {
            converged = true;
            break;
        }
    }
    return x;
}

// Interval bound propagation over the rows of A z <= b.
void propagate_bounds(const Mat& A, const Vec& b, Vec& lo, Vec& hi) {
    const Eigen::Index m = A.rows(), n = A.cols();
    lo = Vec::Constant(n, -kInf);
    hi = Vec::Constant(n, kInf);
    for (int pass = 0; pass < 100; ++pass) {
        bool changed = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            int n_inf = 0;
            double finite_sum = 0.0;
            std::vector<double> term(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                double a = A(i, k);
                double v = a == 0.0 ? 0.0 : (a > 0 ? a * lo[k] : a * hi[k]);
                term[k] = v;
                if (std::isinf(v))
                    ++n_inf;
                else
                    finite_sum += v;
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                double a = A(i, j);
                if (a == 0.0)
                    continue;
                bool own_inf = std::isinf(term[j]);
                if (n_inf - (own_inf ? 1 : 0) > 0)
                    continue;
                double rest = finite_sum - (own_inf ? 0.0 : term[j]);
                double bound = (b[i] - rest) / a;
                if (a > 0 && bound < hi[j] - 1e-12 * (1 + std::abs(bound))) {
                    hi[j] = bound;
                    changed = true;
                } else if (a < 0 && bound > lo[j] + 1e-12 * (1 + std::abs(bound))) {
                    lo[j] = bound;
                    changed = true;
                }
            }
        }
        if (!changed)
            break;
    }
}

bool has_equality_pair(const Mat& A, const Vec& b) {
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = i + 1; j < A.rows(); ++j)
            if ((A.row(i) + A.row(j)).norm() <= 1e-12 * (1 + A.row(i).norm()) &&
                std::abs(b[i] + b[j]) <= 1e-12 * (1 + std::abs(b[i])))
                return true;
    return false;
}

}  // namespace

ConvexSet::ConvexSet() : ConvexSet(box(Vec(), Vec())) {}

ConvexSet ConvexSet::box(Vec lower, Vec upper) {
    if (lower.size() != upper.size())
        throw DimensionError("box: bound dimensions differ");
    if ((lower.array() > upper.array()).any())
        throw InfeasibleError("box: lower bound exceeds upper bound");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Box;
    n->dim = static_cast<int>(lower.size());
    n->box_lo = lower;
    n->box_hi = upper;
    n->lower = std::move(lower);
    n->upper = std::move(upper);
    return ConvexSet(n);
}

ConvexSet ConvexSet::ball(Vec center, double radius) {
    if (!(radius >= 0.0))
        throw InfeasibleError("ball: negative radius");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Ball;
    n->dim = static_cast<int>(center.size());
    n->box_lo = center.array() - radius;
    n->box_hi = center.array() + radius;
    n->center = std::move(center);
    n->radius = radius;
    return ConvexSet(n);
}

ConvexSet ConvexSet::polyhedron(Mat A, Vec b) {
    if (A.rows() != b.size())
        throw DimensionError("polyhedron: A and b row counts differ");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Polyhedron;
    n->dim = static_cast<int>(A.cols());
    n->row_norm2 = A.rowwise().squaredNorm();
    n->flat = has_equality_pair(A, b);
    propagate_bounds(A, b, n->box_lo, n->box_hi);
    if ((n->box_lo.array() > n->box_hi.array() + 1e-9).any())
        throw InfeasibleError("polyhedron: empty (bound propagation)");
    bool ok = false;
    Vec origin = Vec::Zero(n->dim);
    Vec z = dykstra(A, b, n->row_norm2, origin, ProjectOptions{}, ok);
    if (max_violation(A, b, z) > 1e-6)
        throw InfeasibleError("polyhedron: empty (feasibility phase)");
    n->A = std::move(A);
    n->b = std::move(b);
    return ConvexSet(n);
}

ConvexSet ConvexSet::translated(ConvexSet base, Vec shift) {
    require_dim(shift, base.dim(), "translated");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Translated;
    n->dim = base.dim();
    auto [lo, hi] = base.bounding_box();
    n->box_lo = lo + shift;
    n->box_hi = hi + shift;
    n->shift = std::move(shift);
    n->children.push_back(std::move(base));
    return ConvexSet(n);
}

ConvexSet ConvexSet::product(std::vector<ConvexSet> parts) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Product;
    int d = 0;
    for (const auto& p : parts)
        d += p.dim();
    n->dim = d;
    n->box_lo.resize(d);
    n->box_hi.resize(d);
    int off = 0;
    for (const auto& p : parts) {
        auto [lo, hi] = p.bounding_box();
        n->box_lo.segment(off, p.dim()) = lo;
        n->box_hi.segment(off, p.dim()) = hi;
        off += p.dim();
    }
    n->children = std::move(parts);
    return ConvexSet(n);
}

ConvexSet::Kind ConvexSet::kind() const { return node_->kind; }
int ConvexSet::dim() const { return node_->dim; }
const Vec& ConvexSet::lower() const { return node_->lower; }
const Vec& ConvexSet::upper() const { return node_->upper; }
const Vec& ConvexSet::center() const { return node_->center; }
double ConvexSet::radius() const { return node_->radius; }
const Mat& ConvexSet::A() const { return node_->A; }
const Vec& ConvexSet::b() const { return node_->b; }
const Vec& ConvexSet::row_norm2() const { return node_->row_norm2; }
bool ConvexSet::flat() const { return node_->flat; }
const ConvexSet& ConvexSet::base() const { return node_->children.at(0); }
const Vec& ConvexSet::shift() const { return node_->shift; }
const std::vector<ConvexSet>& ConvexSet::parts() const { return node_->children; }
std::pair<Vec, Vec> ConvexSet::bounding_box() const { return {node_->box_lo, node_->box_hi}; }

Vec project(const ConvexSet& set, const Vec& point, const ProjectOptions& opt) {
    require_dim(point, set.dim(), "project");
    switch (set.kind()) {
    case ConvexSet::Kind::Box:
        return point.cwiseMax(set.lower()).cwiseMin(set.upper());
    case ConvexSet::Kind::Ball: {
        Vec d = point - set.center();
        double r = d.norm();
        if (r <= set.radius())
            return point;
        return set.center() + (set.radius() / r) * d;
    }
    case ConvexSet::Kind::Polyhedron: {
        const Mat& A = set.A();
        const Vec& b = set.b();
        if (A.rows() == 0 || (A * point - b).maxCoeff() <= 0.0)
            return point;
        const Vec& rn2 = set.row_norm2();
        if (A.rows() == 1) {
            double s = A.row(0).dot(point) - b[0];
            return point - (s / rn2[0]) * A.row(0).transpose();
        }
        bool ok = false;
        Vec z = dykstra(A, b, rn2, point, opt, ok);
        if (!ok)
            throw ConvergenceError("project: Dykstra did not reach tolerance");
        return z;
    }
    case ConvexSet::Kind::Translated:
        return set.shift() + project(set.base(), point - set.shift(), opt);
    case ConvexSet::Kind::Product: {
        Vec out(point.size());
        int off = 0;
        for (const auto& p : set.parts()) {
            out.segment(off, p.dim()) = project(p, point.segment(off, p.dim()), opt);
            off += p.dim();
        }
        return out;
    }
    }
    return point;
}

bool contains(const ConvexSet& set, const Vec& point, double tol) {
    require_dim(point, set.dim(), "contains");
    switch (set.kind()) {
    case ConvexSet::Kind::Box:
        return ((point - set.lower()).array() >= -tol).all() &&
               ((set.upper() - point).array() >= -tol).all();
    case ConvexSet::Kind::Ball:
        return (point - set.center()).norm() <= set.radius() + tol;
    case ConvexSet::Kind::Polyhedron:
        return set.A().rows() == 0 || (set.A() * point - set.b()).maxCoeff() <= tol;
    case ConvexSet::Kind::Translated:
        return contains(set.base(), point - set.shift(), tol);
    case ConvexSet::Kind::Product: {
        int off = 0;
        for (const auto& p : set.parts()) {
            if (!contains(p, point.segment(off, p.dim()), tol))
                return false;
            off += p.dim();
        }
        return true;
    }
    }
    return false;
}

Vec sample_point(const ConvexSet& set, Rng& rng) {
    const int n = set.dim();
    switch (set.kind()) {
    case ConvexSet::Kind::Box: {
        Vec z(n);
        for (int i = 0; i < n; ++i)
            z[i] = set.lower()[i] == set.upper()[i] ? set.lower()[i]
                                                    : uniform(rng, set.lower()[i], set.upper()[i]);
        return z;
    }
    case ConvexSet::Kind::Ball: {
        std::normal_distribution<double> g;
        Vec d(n);
        for (int i = 0; i < n; ++i)
            d[i] = g(rng);
        double len = d.norm();
        if (len == 0.0)
            return set.center();
        double r = set.radius() * std::pow(uniform(rng, 0.0, 1.0), 1.0 / n);
        return set.center() + (r / len) * d;
    }
    case ConvexSet::Kind::Polyhedron: {
        auto [lo, hi] = set.bounding_box();
        if (!lo.allFinite() || !hi.allFinite())
            throw SamplingError("sample_point: unbounded polyhedron");
        // Degenerate faces can come back with lo a few ulps above hi.
        ConvexSet enclosing = ConvexSet::box(lo, hi.cwiseMax(lo));
        if (set.flat())
            return project(set, sample_point(enclosing, rng));
        for (int attempt = 0; attempt < 1000000; ++attempt) {
            Vec z = sample_point(enclosing, rng);
            if (contains(set, z, 0.0))
                return z;
        }
        throw SamplingError("sample_point: rejection sampling exhausted");
    }
    case ConvexSet::Kind::Translated:
        return set.shift() + sample_point(set.base(), rng);
    case ConvexSet::Kind::Product: {
        Vec z(n);
        int off = 0;
        for (const auto& p : set.parts()) {
            z.segment(off, p.dim()) = sample_point(p, rng);
            off += p.dim();
        }
        return z;
    }
    }
    return Vec::Zero(n);
}

std::vector<Vec> box_vertices(const ConvexSet& set, int max_dim) {
    Vec lo, hi;
    if (set.kind() == ConvexSet::Kind::Box) {
        lo = set.lower();
        hi = set.upper();
    } else if (set.kind() == ConvexSet::Kind::Translated &&
               set.base().kind() == ConvexSet::Kind::Box) {
        lo = set.base().lower() + set.shift();
        hi = set.base().upper() + set.shift();
    } else {
        return {};
    }
    const int n = static_cast<int>(lo.size());
    if (n > max_dim)
        return {};
    std::vector<Vec> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        Vec v(n);
        for (int i = 0; i < n; ++i)
            v[i] = (mask >> i) & 1 ? hi[i] : lo[i];
        out.push_back(std::move(v));
    }
    return out;
}

ConstraintMap ConstraintMap::constant(ConvexSet set) {
    ConstraintMap m;
    m.image = [set](const Vec&) { return set; };
    m.is_moving_set = true;
    m.nu = [d = set.dim()](const Vec&) { return Vec::Zero(d); };
    m.base = set;
    m.nu_lip = 0.0;
    return m;
}

ConstraintMap ConstraintMap::moving(std::function<Vec(const Vec&)> nu, ConvexSet base,
                                    std::optional<double> nu_lip) {
    ConstraintMap m;
    m.image = [nu, base](const Vec& x) { return ConvexSet::translated(base, nu(x)); };
    m.is_moving_set = true;
    m.nu = std::move(nu);
    m.base = std::move(base);
    m.nu_lip = nu_lip;
    return m;
}

double estimate_projection_lipschitz(const ConstraintMap& map,
                                     const std::vector<std::pair<Vec, Vec>>& sample_pairs,
                                     const std::vector<Vec>& probe_points) {
    if (sample_pairs.empty() || probe_points.empty())
        throw Error("estimate_projection_lipschitz: empty sample list");
    double best = 0.0;
    for (const auto& [u, v] : sample_pairs) {
        double duv = (u - v).norm();
        if (duv == 0.0)
            throw Error("estimate_projection_lipschitz: coincident pair");
        ConvexSet Ku = map(u), Kv = map(v);
        for (const auto& z : probe_points)
            best = std::max(best, (project(Ku, z) - project(Kv, z)).norm() / duv);
    }
    return best;
}

}  // namespace qepkit
