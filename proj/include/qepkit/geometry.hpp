#pragma once

#include "qepkit/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace qepkit {

struct ProjectOptions {
    int max_sweeps = 10000;
    double tol = 1e-10;
};

// Immutable closed convex set. Copies share the underlying node.
class ConvexSet {
public:
    enum class Kind { Box, Ball, Polyhedron, Translated, Product };
    struct Node;

    // Zero-dimensional box; placeholder until assigned.
    ConvexSet();
    static ConvexSet box(Vec lower, Vec upper);
    static ConvexSet ball(Vec center, double radius);
    // {z : A z <= b}; rejected if empty.
    static ConvexSet polyhedron(Mat A, Vec b);
    static ConvexSet translated(ConvexSet base, Vec shift);
    static ConvexSet product(std::vector<ConvexSet> parts);

    Kind kind() const;
    int dim() const;

    // Box / Ball accessors.
    const Vec& lower() const;
    const Vec& upper() const;
    const Vec& center() const;
    double radius() const;
    // Polyhedron accessors.
    const Mat& A() const;
    const Vec& b() const;
    const Vec& row_norm2() const;
    // True when the rows contain an equality pair (a, -a).
    bool flat() const;
    // Translated accessors.
    const ConvexSet& base() const;
    const Vec& shift() const;
    // Product accessors.
    const std::vector<ConvexSet>& parts() const;

    // Componentwise enclosing box (entries may be infinite).
    std::pair<Vec, Vec> bounding_box() const;

private:
    explicit ConvexSet(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Vec project(const ConvexSet& set, const Vec& point, const ProjectOptions& opt = {});
bool contains(const ConvexSet& set, const Vec& point, double tol);

// Uniform sample: exact for Box/Ball, rejection from the bounding box for
// Polyhedron. Flat polyhedra fall back to projecting a box sample.
Vec sample_point(const ConvexSet& set, Rng& rng);

// Vertices of a Box, or an empty list when the set is not a (translated) Box
// or has more than max_dim coordinates.
std::vector<Vec> box_vertices(const ConvexSet& set, int max_dim = 12);

struct ConstraintMap {
    std::function<ConvexSet(const Vec&)> image;
    bool is_moving_set = false;
    // K(x) = nu(x) + base when is_moving_set.
    std::function<Vec(const Vec&)> nu;
    std::optional<ConvexSet> base;
    // Lipschitz constant of nu, when known exactly.
    std::optional<double> nu_lip;

    ConvexSet operator()(const Vec& x) const { return image(x); }

    static ConstraintMap constant(ConvexSet set);
    static ConstraintMap moving(std::function<Vec(const Vec&)> nu, ConvexSet base,
                                std::optional<double> nu_lip = std::nullopt);
};

double estimate_projection_lipschitz(const ConstraintMap& map,
                                     const std::vector<std::pair<Vec, Vec>>& sample_pairs,
                                     const std::vector<Vec>& probe_points);

}  // namespace qepkit
