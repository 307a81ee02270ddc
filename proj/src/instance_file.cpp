#include "qepkit/gnep.hpp"
#include "qepkit/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace qepkit {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& key, const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ParseError("key '" + key + "': not a number: '" + s + "'");
    return v;
}

InstanceFile::Value parse_value(const std::string& key, const std::string& raw, int line) {
    InstanceFile::Value v;
    if (raw.empty() || raw.front() != '[') {
        v.text = raw;
        return v;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        throw ParseError("line " + std::to_string(line) + ": malformed array for '" + key + "'");
    }
    auto numbers = [&](const nlohmann::json& arr) {
        std::vector<double> out;
        for (const auto& e : arr) {
            if (!e.is_number())
                throw ParseError("line " + std::to_string(line) + ": non-numeric entry in '" +
                                 key + "'");
            out.push_back(e.get<double>());
        }
        return out;
    };
    if (!j.empty() && j.front().is_array()) {
        v.type = InstanceFile::Value::Type::Matrix;
        for (const auto& row : j) {
            if (!row.is_array())
                throw ParseError("line " + std::to_string(line) + ": ragged matrix '" + key + "'");
            v.matrix.push_back(numbers(row));
            if (v.matrix.back().size() != v.matrix.front().size())
                throw ParseError("line " + std::to_string(line) + ": ragged matrix '" + key + "'");
        }
    } else {
        v.type = InstanceFile::Value::Type::Array;
        v.array = numbers(j);
    }
    return v;
}

std::string array_text(const std::vector<double>& a) {
    std::string s = "[";
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i)
            s += ", ";
        s += format_number(a[i]);
    }
    return s + "]";
}

const std::set<std::string> kCommonKeys{"name",  "kind",   "seed",  "algorithm", "y0",
                                        "eps",   "gamma",  "alpha", "mu",        "L",
                                        "n_hat", "k_eps",  "beta0", "inner_delta",
                                        "max_outer"};

const std::set<std::string>& kind_keys(const std::string& kind) {
    static const std::map<std::string, std::set<std::string>> keys{
        {"builtin", {"id", "n", "row"}},
        {"custom-quadratic", {"M", "p", "c_lower", "c_upper", "k_lower", "k_upper", "nu"}},
        {"gnep-spec",
         {"M", "p", "c_lower", "c_upper", "k_lower", "k_upper", "nu", "player_dims"}},
        {"emm-2",
         {"A", "B", "b_lower", "b_upper", "c_lower", "c_upper", "p0_lower", "p0_upper",
          "p1_lower", "p1_upper", "demand"}},
        {"emm-10",
         {"A", "B", "p0", "b_lower", "b_upper", "p0_lower", "p0_upper", "p1_lower", "p1_upper",
          "demand", "emm_alpha", "start_scale"}},
    };
    auto it = keys.find(kind);
    if (it == keys.end())
        throw ParseError("unknown kind: '" + kind + "'");
    return it->second;
}

void check_keys(const InstanceFile& f) {
    if (!f.has("kind"))
        throw ParseError("missing required key 'kind'");
    const auto& allowed = kind_keys(f.text("kind"));
    for (const auto& [k, v] : f.entries)
        if (!kCommonKeys.count(k) && !allowed.count(k))
            throw ParseError("unknown key '" + k + "' for kind '" + f.text("kind") + "'");
}

Vec to_vec(const std::vector<double>& a) {
    return Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
}

int to_int(const InstanceFile& f, const std::string& key, int dflt) {
    const double v = f.number(key, dflt);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ParseError("key '" + key + "': expected an integer");
    return static_cast<int>(v);
}

std::uint64_t to_seed(const InstanceFile& f) {
    if (!f.has("seed"))
        return 0;
    const std::string s = f.text("seed");
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s.front() == '-' || end != s.c_str() + s.size() || errno == ERANGE)
        throw ParseError("key 'seed': expected a non-negative integer");
    return v;
}

std::vector<Interval> intervals(const InstanceFile& f, const std::string& lo,
                                const std::string& hi, std::size_t n) {
    auto a = f.array(lo), b = f.array(hi);
    if (a.size() != n || b.size() != n)
        throw ParseError("'" + lo + "' and '" + hi + "' need " + std::to_string(n) + " entries");
    std::vector<Interval> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({a[i], b[i]});
    return out;
}

struct QuadraticData {
    Mat M;
    Vec p, c_lo, c_hi, k_lo, k_hi;
    double nu = 0.0;
};

QuadraticData quadratic_data(const InstanceFile& f) {
    QuadraticData d;
    d.M = f.matrix("M");
    const auto n = d.M.rows();
    if (d.M.cols() != n)
        throw ParseError("'M' must be square");
    d.p = f.has("p") ? to_vec(f.array("p")) : Vec::Zero(n);
    d.c_lo = to_vec(f.array("c_lower"));
    d.c_hi = to_vec(f.array("c_upper"));
    d.k_lo = to_vec(f.array("k_lower"));
    d.k_hi = to_vec(f.array("k_upper"));
    for (const Vec* v : {&d.p, &d.c_lo, &d.c_hi, &d.k_lo, &d.k_hi})
        if (v->size() != n)
            throw ParseError("vector lengths must match the order of 'M'");
    d.nu = f.number("nu", 0.0);
    return d;
}

ConvexSet ambient_for(const Vec& c_lo, const Vec& c_hi, const Vec& k_lo, const Vec& k_hi,
                      double nu) {
    Vec a = nu * c_lo, b = nu * c_hi;
    return ConvexSet::box(k_lo + a.cwiseMin(b), k_hi + a.cwiseMax(b));
}

void set_constants(QepInstance& q, const Mat& M) {
    const Vec ev = jacobi_eigenvalues(0.5 * (M + M.transpose()));
    if (ev[0] > 0)
        q.f.mu = ev[0];
    q.f.lip = std::sqrt(std::max(0.0, jacobi_eigenvalues(M.transpose() * M).maxCoeff()));
}

Problem custom_quadratic(const InstanceFile& f) {
    QuadraticData d = quadratic_data(f);
    Problem p;
    p.id = "custom-quadratic";
    QepInstance& q = p.inst;
    q.name = f.text("name", "custom-quadratic");
    q.dim = static_cast<int>(d.M.rows());
    q.C = ConvexSet::box(d.c_lo, d.c_hi);
    ConvexSet base = ConvexSet::box(d.k_lo, d.k_hi);
    const double nu = d.nu;
    q.K = nu == 0 ? ConstraintMap::constant(base)
                  : ConstraintMap::moving([nu](const Vec& x) { return Vec(nu * x); }, base,
                                          std::abs(nu));
    Mat M = d.M;
    Vec pv = d.p;
    q.f = Bifunction::from_field([M, pv](const Vec& x) { return Vec(M * x + pv); });
    set_constants(q, M);
    q.ambient = ambient_for(d.c_lo, d.c_hi, d.k_lo, d.k_hi, nu);
    p.y0 = 0.5 * (d.k_lo + d.k_hi);
    return p;
}

Problem gnep_spec(const InstanceFile& f) {
    QuadraticData d = quadratic_data(f);
    const auto dims = f.array("player_dims");
    GnepInstance g;
    g.name = f.text("name", "gnep-spec");
    int offset = 0;
    const Mat M = d.M;
    const Vec pv = d.p;
    const double nu = d.nu;
    for (double dd : dims) {
        const int m = static_cast<int>(dd);
        if (m != dd || m < 1)
            throw ParseError("'player_dims' entries must be positive integers");
        if (offset + m > M.rows())
            throw ParseError("'player_dims' exceed the order of 'M'");
        Player pl;
        pl.dim = m;
        pl.C = ConvexSet::box(d.c_lo.segment(offset, m), d.c_hi.segment(offset, m));
        ConvexSet base = ConvexSet::box(d.k_lo.segment(offset, m), d.k_hi.segment(offset, m));
        pl.K = [base, nu, offset, m](const Vec& y) {
            return nu == 0 ? base : ConvexSet::translated(base, nu * y.segment(offset, m));
        };
        pl.grad_theta = [M, pv, offset, m](const Vec& y) {
            return Vec(M.middleRows(offset, m) * y + pv.segment(offset, m));
        };
        g.players.push_back(pl);
        offset += m;
    }
    if (offset != M.rows())
        throw ParseError("'player_dims' must sum to the order of 'M'");
    g.ambient = ambient_for(d.c_lo, d.c_hi, d.k_lo, d.k_hi, nu);
    Problem p;
    p.id = "gnep-spec";
    p.inst = gnep_to_qep(g);
    p.inst.name = g.name;
    // G(y) = -(M y + p)
    set_constants(p.inst, -M);
    p.y0 = 0.5 * (d.k_lo + d.k_hi);
    return p;
}

EmmParams emm_common(const InstanceFile& f, std::size_t n) {
    EmmParams e;
    e.n_producers = static_cast<int>(n);
    e.b_bounds = intervals(f, "b_lower", "b_upper", n);
    e.p0_bounds = intervals(f, "p0_lower", "p0_upper", n);
    e.p1_bounds = intervals(f, "p1_lower", "p1_upper", n);
    e.demand = f.number("demand", 1.0);
    return e;
}

Problem emm_2(const InstanceFile& f) {
    const auto A = f.array("A");
    EmmParams e = emm_common(f, A.size());
    e.A = A;
    e.B = f.array("B");
    e.c_bounds = intervals(f, "c_lower", "c_upper", A.size());
    e.validate();
    Problem p;
    p.id = "emm2";
    p.inst = build_emm_2(e).qep;
    p.emm = e;
    std::vector<std::array<double, 3>> bids;
    for (std::size_t i = 0; i < A.size(); ++i)
        bids.push_back({e.A[i], 0.5 * (e.b_bounds[i][0] + e.b_bounds[i][1]),
                        0.5 * (e.c_bounds[i][0] + e.c_bounds[i][1])});
    p.y0 = embed_bids(bids);
    return p;
}

Problem emm_10(const InstanceFile& f, std::uint64_t seed) {
    Emm10Draw d = emm10_draw(seed);
    if (f.has("A") || f.has("B")) {
        const auto n = f.array("A").size();
        d.params = emm_common(f, n);
        d.params.A = f.array("A");
        d.params.B = f.array("B");
        d.p0.clear();
        for (const auto& iv : d.params.p0_bounds)
            d.p0.push_back(0.5 * (iv[0] + iv[1]));
    } else if (f.has("b_lower")) {
        EmmParams e = emm_common(f, d.params.A.size());
        e.A = d.params.A;
        e.B = d.params.B;
        d.params = e;
    }
    if (f.has("p0")) {
        d.p0 = f.array("p0");
        if (d.p0.size() != d.params.A.size())
            throw ParseError("'p0' needs one entry per producer");
    }
    d.params.alpha = f.number("emm_alpha", d.params.alpha);
    d.params.validate();
    Problem p;
    p.id = "emm10";
    p.inst = build_emm_10(d.params);
    p.emm = d.params;
    p.y0 = emm10_start(d, f.number("start_scale", 1.0));
    p.algorithm = "strong";
    return p;
}

}  // namespace

bool InstanceFile::has(const std::string& key) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const auto& e) { return e.first == key; });
}

const InstanceFile::Value& InstanceFile::at(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key)
            return v;
    throw ParseError("missing required key '" + key + "'");
}

std::string InstanceFile::text(const std::string& key, const std::string& dflt) const {
    if (!has(key))
        return dflt;
    const Value& v = at(key);
    if (v.type != Value::Type::Text)
        throw ParseError("key '" + key + "': expected a scalar");
    return v.text;
}

double InstanceFile::number(const std::string& key, double dflt) const {
    if (!has(key))
        return dflt;
    return to_number(key, text(key));
}

std::vector<double> InstanceFile::array(const std::string& key) const {
    const Value& v = at(key);
    if (v.type != Value::Type::Array)
        throw ParseError("key '" + key + "': expected an array");
    return v.array;
}

Mat InstanceFile::matrix(const std::string& key) const {
    const Value& v = at(key);
    if (v.type != Value::Type::Matrix || v.matrix.empty())
        throw ParseError("key '" + key + "': expected a matrix");
    Mat m(v.matrix.size(), v.matrix.front().size());
    for (std::size_t i = 0; i < v.matrix.size(); ++i)
        for (std::size_t j = 0; j < v.matrix[i].size(); ++j)
            m(i, j) = v.matrix[i][j];
    return m;
}

void InstanceFile::set(const std::string& key, Value v) {
    for (auto& [k, old] : entries)
        if (k == key) {
            old = std::move(v);
            return;
        }
    entries.emplace_back(key, std::move(v));
}

InstanceFile parse_instance(const std::string& text) {
    InstanceFile f;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(line) + ": empty key");
        if (f.has(key))
            throw ParseError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
        f.entries.emplace_back(key, parse_value(key, value, line));
    }
    check_keys(f);
    return f;
}

InstanceFile load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open instance file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_instance(ss.str());
}

std::string serialize_instance(const InstanceFile& f) {
    std::string out;
    for (const auto& [k, v] : f.entries) {
        out += k + " = ";
        switch (v.type) {
        case InstanceFile::Value::Type::Text: out += v.text; break;
        case InstanceFile::Value::Type::Array: out += array_text(v.array); break;
        case InstanceFile::Value::Type::Matrix:
            out += "[";
            for (std::size_t i = 0; i < v.matrix.size(); ++i)
                out += (i ? ", " : "") + array_text(v.matrix[i]);
            out += "]";
            break;
        }
        out += '\n';
    }
    return out;
}

Problem instantiate(const InstanceFile& f) {
    check_keys(f);
    const std::string kind = f.text("kind");
    const std::uint64_t seed = to_seed(f);
    Problem p;
    if (kind == "builtin") {
        BuiltinArgs args;
        args.n = to_int(f, "n", 0);
        args.row = to_int(f, "row", 1);
        args.seed = seed;
        p = make_builtin(f.text("id"), args);
    } else if (kind == "custom-quadratic") {
        p = custom_quadratic(f);
    } else if (kind == "gnep-spec") {
        p = gnep_spec(f);
    } else if (kind == "emm-2") {
        p = emm_2(f);
    } else {
        p = emm_10(f, seed);
    }
    if (f.has("name"))
        p.inst.name = f.text("name");
    if (f.has("algorithm")) {
        p.algorithm = f.text("algorithm");
        if (p.algorithm != "strong" && p.algorithm != "proximal")
            throw ParseError("key 'algorithm': expected strong or proximal");
    }
    if (f.has("y0")) {
        p.y0 = to_vec(f.array("y0"));
        if (p.y0.size() != p.inst.dim)
            throw ParseError("key 'y0': expected " + std::to_string(p.inst.dim) + " entries");
    }
    p.eps = f.number("eps", p.eps);
    if (!(p.eps > 0))
        throw ParseError("key 'eps': must be positive");
    if (f.has("gamma")) {
        try {
            p.gamma = GammaSchedule::parse(f.text("gamma"), p.inst.dim);
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("key 'gamma': ") + e.what());
        }
    }
    if (f.has("alpha"))
        p.strong.alpha = f.number("alpha", 0);
    if (f.has("mu"))
        p.strong.mu = f.number("mu", 0);
    if (f.has("L"))
        p.strong.L = f.number("L", 0);
    if (f.has("n_hat"))
        p.strong.n_hat = to_int(f, "n_hat", 0);
    if (f.has("k_eps"))
        p.strong.k_eps = to_int(f, "k_eps", 0);
    p.strong.seed = seed;
    if (f.has("beta0"))
        p.proximal.inner = SubgradientSchedule::harmonic(f.number("beta0", 1.0));
    if (f.has("inner_delta"))
        p.inner_delta = f.number("inner_delta", 0);
    p.max_outer = to_int(f, "max_outer", p.max_outer);
    return p;
}

}  // namespace qepkit
