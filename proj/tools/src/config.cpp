#include "apde_cli/config.hpp"

#include "apde/field_io.hpp"
#include "apde/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace apde::cli {

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string s = "invalid configuration:";
          for (const auto& e : errors) s += "\n  " + e;
          return s;
      }()),
      errors_(std::move(errors))
{
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

class BadValue : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double to_double(const std::string& s)
{
    double v = 0.0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
        throw BadValue("expected a real number, got '" + t + "'");
    return v;
}

long long to_int(const std::string& s)
{
    long long v = 0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw BadValue("expected an integer, got '" + t + "'");
    return v;
}

std::size_t to_size(const std::string& s)
{
    const long long v = to_int(s);
    if (v < 0) throw BadValue("expected a nonnegative integer, got '" + trim(s) + "'");
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& s)
{
    const auto t = trim(s);
    if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "off" || t == "no" || t == "0") return false;
    throw BadValue("expected a boolean (true/false), got '" + t + "'");
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) out.push_back(trim(item));
    if (out.size() == 1 && out.front().empty()) out.clear();
    for (const auto& x : out)
        if (x.empty()) throw BadValue("empty list element in '" + trim(s) + "'");
    return out;
}

std::vector<double> to_doubles(const std::string& s)
{
    std::vector<double> v;
    for (const auto& x : split_list(s)) v.push_back(to_double(x));
    return v;
}

// Grid entries arrive before the rank is known; they are resolved afterwards.
struct RawGrid {
    std::vector<std::size_t> dims;
    std::vector<double> origin;
    std::vector<double> spacing;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct Pending {
    RunConfig cfg;
    RawGrid grid;
    bool have_n = false;
    std::size_t declared_n = 0;
    bool have_snapshot_count = false;
    std::size_t snapshot_count = 0;
    std::string snapshot_spacing = "log";
};

using Setter = std::function<void(Pending&, const std::string&)>;

const std::map<std::string, Setter>& registry()
{
    static const std::map<std::string, Setter> keys = {
        {"run.name", [](Pending& p, const std::string& v) { p.cfg.name = trim(v); }},
        {"run.mode", [](Pending& p, const std::string& v) { p.cfg.mode = trim(v); }},
        {"run.seed", [](Pending& p, const std::string& v) { p.cfg.seed = to_size(v); }},
        {"run.t0", [](Pending& p, const std::string& v) { p.cfg.t0 = to_double(v); }},
        {"run.t1", [](Pending& p, const std::string& v) { p.cfg.t1 = to_double(v); }},
        {"output.dir", [](Pending& p, const std::string& v) { p.cfg.out_dir = trim(v); }},
        {"exponents.p", [](Pending& p, const std::string& v) { p.cfg.p = to_doubles(v); }},
        {"exponents.n",
         [](Pending& p, const std::string& v) {
             p.declared_n = to_size(v);
             p.have_n = true;
         }},
        {"grid.dims",
         [](Pending& p, const std::string& v) {
             p.grid.dims.clear();
             for (const auto& x : split_list(v)) p.grid.dims.push_back(to_size(x));
         }},
        {"grid.origin", [](Pending& p, const std::string& v) { p.grid.origin = to_doubles(v); }},
        {"grid.spacing", [](Pending& p, const std::string& v) { p.grid.spacing = to_doubles(v); }},
        {"grid.lower", [](Pending& p, const std::string& v) { p.grid.lower = to_doubles(v); }},
        {"grid.upper", [](Pending& p, const std::string& v) { p.grid.upper = to_doubles(v); }},
        {"solver.scheme",
         [](Pending& p, const std::string& v) {
             const auto t = trim(v);
             if (t == "explicit")
                 p.cfg.solver.scheme = Scheme::explicit_flux;
             else if (t == "implicit")
                 p.cfg.solver.scheme = Scheme::implicit_prox;
             else
                 throw BadValue("expected explicit or implicit, got '" + t + "'");
         }},
        {"solver.cfl_safety", [](Pending& p, const std::string& v) { p.cfg.solver.cfl_safety = to_double(v); }},
        {"solver.implicit_dt", [](Pending& p, const std::string& v) { p.cfg.solver.implicit_dt = to_double(v); }},
        {"solver.min_tol", [](Pending& p, const std::string& v) { p.cfg.solver.min_tol = to_double(v); }},
        {"solver.max_inner_iters",
         [](Pending& p, const std::string& v) { p.cfg.solver.max_inner_iters = static_cast<int>(to_int(v)); }},
        {"solver.max_linear_iters",
         [](Pending& p, const std::string& v) { p.cfg.solver.max_linear_iters = static_cast<int>(to_int(v)); }},
        {"solver.snapshot_times", [](Pending& p, const std::string& v) { p.cfg.solver.snapshot_times = to_doubles(v); }},
        {"solver.snapshot_count",
         [](Pending& p, const std::string& v) {
             p.snapshot_count = to_size(v);
             p.have_snapshot_count = true;
         }},
        {"solver.snapshot_spacing", [](Pending& p, const std::string& v) { p.snapshot_spacing = trim(v); }},
        {"solver.support_threshold",
         [](Pending& p, const std::string& v) { p.cfg.solver.support_threshold = to_double(v); }},
        {"solver.contact_threshold",
         [](Pending& p, const std::string& v) { p.cfg.solver.contact_threshold = to_double(v); }},
        {"solver.contact_cells", [](Pending& p, const std::string& v) { p.cfg.solver.contact_cells = to_size(v); }},
        {"initial.kind", [](Pending& p, const std::string& v) { p.cfg.initial.kind = trim(v); }},
        {"initial.center", [](Pending& p, const std::string& v) { p.cfg.initial.center = to_doubles(v); }},
        {"initial.half_width", [](Pending& p, const std::string& v) { p.cfg.initial.half_width = to_doubles(v); }},
        {"initial.amplitude", [](Pending& p, const std::string& v) { p.cfg.initial.amplitude = to_double(v); }},
        {"initial.radius", [](Pending& p, const std::string& v) { p.cfg.initial.radius = to_double(v); }},
        {"initial.path", [](Pending& p, const std::string& v) { p.cfg.initial.path = trim(v); }},
        {"initial.mass", [](Pending& p, const std::string& v) { p.cfg.initial.mass = to_double(v); }},
        {"fixed_point.eps0", [](Pending& p, const std::string& v) { p.cfg.fixed_point.eps0 = to_double(v); }},
        {"fixed_point.s_bar", [](Pending& p, const std::string& v) { p.cfg.fixed_point.s_bar = to_double(v); }},
        {"fixed_point.tol", [](Pending& p, const std::string& v) { p.cfg.fixed_point.tol = to_double(v); }},
        {"fixed_point.max_iters",
         [](Pending& p, const std::string& v) { p.cfg.fixed_point.max_iters = static_cast<int>(to_int(v)); }},
        {"fixed_point.use_running_sup",
         [](Pending& p, const std::string& v) { p.cfg.fixed_point.use_running_sup = to_bool(v); }},
        {"fixed_point.stall_window",
         [](Pending& p, const std::string& v) { p.cfg.fixed_point.stall_window = static_cast<int>(to_int(v)); }},
        {"fixed_point.renormalize_mass",
         [](Pending& p, const std::string& v) { p.cfg.fixed_point.renormalize_mass = to_bool(v); }},
        {"verify.suites", [](Pending& p, const std::string& v) { p.cfg.verify.suites = split_list(v); }},
        {"verify.c1", [](Pending& p, const std::string& v) { p.cfg.verify.c1 = to_double(v); }},
        {"verify.c2", [](Pending& p, const std::string& v) { p.cfg.verify.c2 = to_doubles(v); }},
        {"verify.rho", [](Pending& p, const std::string& v) { p.cfg.verify.rho = to_doubles(v); }},
        {"verify.probe_times", [](Pending& p, const std::string& v) { p.cfg.verify.probe_times = to_doubles(v); }},
        {"verify.probe_fractions",
         [](Pending& p, const std::string& v) { p.cfg.verify.probe_fractions = to_doubles(v); }},
        {"verify.degiorgi_a", [](Pending& p, const std::string& v) { p.cfg.verify.degiorgi_a = to_doubles(v); }},
        {"verify.degiorgi_lattice",
         [](Pending& p, const std::string& v) { p.cfg.verify.degiorgi_lattice = to_size(v); }},
        {"verify.support_r0", [](Pending& p, const std::string& v) { p.cfg.verify.support_r0 = to_doubles(v); }},
        {"verify.support_origin", [](Pending& p, const std::string& v) { p.cfg.verify.support_origin = to_double(v); }},
        {"verify.support_late_fraction",
         [](Pending& p, const std::string& v) { p.cfg.verify.support_late_fraction = to_double(v); }},
        {"verify.comparison_pairs",
         [](Pending& p, const std::string& v) { p.cfg.verify.comparison_pairs = to_size(v); }},
        {"verify.comparison_steps",
         [](Pending& p, const std::string& v) { p.cfg.verify.comparison_steps = to_size(v); }},
        {"verify.selfsim_rho", [](Pending& p, const std::string& v) { p.cfg.verify.selfsim_rho = to_doubles(v); }},
        {"verify.cluster_lambda", [](Pending& p, const std::string& v) { p.cfg.verify.cluster_lambda = to_double(v); }},
        {"verify.cluster_nu", [](Pending& p, const std::string& v) { p.cfg.verify.cluster_nu = to_double(v); }},
        {"verify.cluster_alpha_bar",
         [](Pending& p, const std::string& v) { p.cfg.verify.cluster_alpha_bar = to_double(v); }},
        {"verify.cluster_a", [](Pending& p, const std::string& v) { p.cfg.verify.cluster_a = to_double(v); }},
        {"verify.cluster_depth",
         [](Pending& p, const std::string& v) { p.cfg.verify.cluster_depth = static_cast<int>(to_int(v)); }},
        {"verify.stability_applications",
         [](Pending& p, const std::string& v) { p.cfg.verify.stability_applications = static_cast<int>(to_int(v)); }},
    };
    return keys;
}

const std::vector<std::string> kSuites = {"mass",     "comparison", "support", "selfsim", "harnack",
                                          "degiorgi", "cluster",    "oracle"};

template <class T>
bool broadcast(std::vector<T>& v, std::size_t n)
{
    if (v.size() == 1 && n > 1) v.assign(n, v.front());
    return v.size() == n;
}

void resolve(Pending& pend, std::vector<std::string>& errors)
{
    RunConfig& c = pend.cfg;
    auto check = [&](const std::function<void()>& f) {
        try {
            f();
        } catch (const std::exception& ex) {
            errors.push_back(ex.what());
        }
    };

    std::size_t n = c.p.size();
    if (n == 0) {
        errors.push_back("exponents.p is required");
    } else {
        if (pend.have_n && pend.declared_n != n)
            errors.push_back("exponents.n = " + std::to_string(pend.declared_n) + " disagrees with the " +
                             std::to_string(n) + " entries of exponents.p");
        check([&] {
            const ExponentData e = derive_exponents(c.p);
            const AdmissibilityReport rep = validate_admissible(e);
            for (const auto& v : rep.violations) errors.push_back("exponents.p: " + v);
        });
    }

    // Grid: dims plus either origin/spacing or lower/upper.
    Grid g;
    RawGrid& r = pend.grid;
    if (n > 0) {
        if (r.dims.empty()) {
            errors.push_back("grid.dims is required");
        } else if (!broadcast(r.dims, n)) {
            errors.push_back("grid.dims needs 1 or " + std::to_string(n) + " entries");
        } else {
            g.dims = r.dims;
            const bool box = !r.lower.empty() || !r.upper.empty();
            const bool cells = !r.origin.empty() || !r.spacing.empty();
            if (box && cells) {
                errors.push_back("grid: give either origin/spacing or lower/upper, not both");
            } else if (box) {
                if (!broadcast(r.lower, n) || !broadcast(r.upper, n)) {
                    errors.push_back("grid.lower and grid.upper need 1 or " + std::to_string(n) + " entries");
                } else {
                    for (std::size_t a = 0; a < n; ++a) {
                        g.origin.push_back(r.lower[a]);
                        g.spacing.push_back((r.upper[a] - r.lower[a]) / static_cast<double>(std::max<std::size_t>(g.dims[a], 1)));
                    }
                }
            } else if (!broadcast(r.origin, n) || !broadcast(r.spacing, n)) {
                errors.push_back("grid.origin and grid.spacing (or grid.lower/grid.upper) need 1 or " +
                                 std::to_string(n) + " entries");
            } else {
                g.origin = r.origin;
                g.spacing = r.spacing;
            }
            if (g.origin.size() == n) check([&] { validate(g); });
        }
    }
    c.grid = g;

    if (!(c.t0 > 0.0)) errors.push_back("run.t0 must be positive");
    if (!(c.t1 > c.t0)) errors.push_back("run.t1 must exceed run.t0");
    if (c.mode != "evolve" && c.mode != "barenblatt") errors.push_back("run.mode must be evolve or barenblatt");
    if (c.name.empty() || c.name.find('/') != std::string::npos || c.name.front() == '.')
        errors.push_back("run.name must be a plain file name");

    if (pend.have_snapshot_count) {
        if (!c.solver.snapshot_times.empty())
            errors.push_back("solver.snapshot_times and solver.snapshot_count are mutually exclusive");
        else if (pend.snapshot_count < 2)
            errors.push_back("solver.snapshot_count must be at least 2");
        else if (pend.snapshot_spacing != "log" && pend.snapshot_spacing != "linear")
            errors.push_back("solver.snapshot_spacing must be log or linear");
        else if (c.t0 > 0.0 && c.t1 > c.t0) {
            const std::size_t k = pend.snapshot_count;
            for (std::size_t i = 0; i < k; ++i) {
                const double f = static_cast<double>(i) / static_cast<double>(k - 1);
                double t = pend.snapshot_spacing == "log" ? c.t0 * std::pow(c.t1 / c.t0, f) : c.t0 + f * (c.t1 - c.t0);
                if (i == 0) t = c.t0;
                if (i + 1 == k) t = c.t1;
                c.solver.snapshot_times.push_back(t);
            }
        }
    }
    for (double t : c.solver.snapshot_times)
        if (t < c.t0 || t > c.t1) {
            errors.push_back("solver.snapshot_times entries must lie in [run.t0, run.t1]");
            break;
        }
    for (std::size_t i = 1; i < c.solver.snapshot_times.size(); ++i)
        if (!(c.solver.snapshot_times[i] > c.solver.snapshot_times[i - 1])) {
            errors.push_back("solver.snapshot_times must increase strictly");
            break;
        }
    check([&] { validate(c.solver); });
    check([&] { validate(c.fixed_point); });
    c.fixed_point.solver = c.solver;

    const auto& k = c.initial.kind;
    if (c.mode != "evolve") {
    } else if (k == "indicator-box" || k == "bump") {
        if (n > 0) {
            if (c.initial.center.empty()) c.initial.center.assign(n, 0.0);
            if (!broadcast(c.initial.center, n)) errors.push_back("initial.center needs 1 or N entries");
            if (k == "indicator-box") {
                if (c.initial.half_width.empty()) errors.push_back("initial.half_width is required for indicator-box");
                else if (!broadcast(c.initial.half_width, n)) errors.push_back("initial.half_width needs 1 or N entries");
                for (double h : c.initial.half_width)
                    if (!(h > 0.0)) errors.push_back("initial.half_width entries must be positive");
            } else if (!(c.initial.radius > 0.0)) {
                errors.push_back("initial.radius must be positive");
            }
        }
        if (!(c.initial.amplitude >= 0.0)) errors.push_back("initial.amplitude must be nonnegative");
    } else if (k == "field-file") {
        if (c.initial.path.empty())
            errors.push_back("initial.path is required for field-file");
        else if (!std::filesystem::is_regular_file(c.initial.path))
            errors.push_back("initial.path does not name an existing file: " + c.initial.path.string());
    } else if (k == "barenblatt") {
        if (!(c.initial.mass > 0.0)) errors.push_back("initial.mass must be positive");
        if (n > 0 && !std::all_of(c.p.begin(), c.p.end(), [&](double x) { return x == c.p.front(); }))
            errors.push_back("initial.kind = barenblatt requires equal exponents");
    } else {
        errors.push_back("initial.kind must be indicator-box, bump, field-file or barenblatt");
    }

    for (const auto& s : c.verify.suites)
        if (std::find(kSuites.begin(), kSuites.end(), s) == kSuites.end())
            errors.push_back("verify.suites: unknown suite '" + s + "'");
    const auto& v = c.verify;
    if (!(v.c1 > 0.0)) errors.push_back("verify.c1 must be positive");
    for (double x : v.c2)
        if (!(x > 0.0)) errors.push_back("verify.c2 entries must be positive");
    for (double x : v.rho)
        if (!(x > 0.0)) errors.push_back("verify.rho entries must be positive");
    for (double x : v.selfsim_rho)
        if (!(x > 0.0)) errors.push_back("verify.selfsim_rho entries must be positive");
    for (double x : v.degiorgi_a)
        if (!(x > 0.0 && x <= 1.0)) errors.push_back("verify.degiorgi_a entries must lie in (0, 1]");
    if (v.degiorgi_lattice == 0) errors.push_back("verify.degiorgi_lattice must be positive");
    if (!(v.support_late_fraction > 0.0 && v.support_late_fraction <= 1.0))
        errors.push_back("verify.support_late_fraction must lie in (0, 1]");
    if (!v.support_r0.empty() && n > 0 && !broadcast(c.verify.support_r0, n))
        errors.push_back("verify.support_r0 needs 1 or N entries");
    if (!(v.cluster_lambda > 0.0)) errors.push_back("verify.cluster_lambda must be positive");
    if (!(v.cluster_nu > 0.0 && v.cluster_nu < 1.0)) errors.push_back("verify.cluster_nu must lie in (0, 1)");
    if (!(v.cluster_a > 0.0)) errors.push_back("verify.cluster_a must be positive");
    if (v.cluster_depth < 0) errors.push_back("verify.cluster_depth must be nonnegative");
    if (v.stability_applications < 0) errors.push_back("verify.stability_applications must be nonnegative");
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin)
{
    std::vector<std::string> errors;
    Pending pend;
    std::map<std::string, int> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::string normalised;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            errors.push_back(where + "expected 'section.key = value'");
            continue;
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const auto it = registry().find(key);
        if (it == registry().end()) {
            errors.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh) {
            errors.push_back(where + "duplicate key '" + key + "' (first set on line " + std::to_string(pos->second) + ")");
            continue;
        }
        try {
            it->second(pend, value);
            normalised += key + " = " + value + "\n";
        } catch (const BadValue& ex) {
            errors.push_back(where + key + ": " + ex.what());
        }
    }
    resolve(pend, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    pend.cfg.source_text = normalised;
    return pend.cfg;
}

RunConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

Field make_initial(const RunConfig& cfg, const ExponentData& e)
{
    const Grid& g = cfg.grid;
    const auto& in = cfg.initial;
    if (in.kind == "field-file") {
        FieldFile f = read_field(in.path);
        if (!(f.field.grid == g)) throw std::invalid_argument("initial.path: field grid differs from the configured grid");
        f.field.time = cfg.t0;
        return f.field;
    }
    if (in.kind == "barenblatt") return sample_field(IsotropicBarenblatt(cfg.p.front(), e.n, in.mass), g, cfg.t0);
    Field u = Field::zeros(g, cfg.t0);
    const auto strides = g.strides();
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        double r2 = 0.0;
        bool inside = true;
        for (std::size_t a = 0; a < g.rank(); ++a) {
            const double d = g.center(a, (i / strides[a]) % g.dims[a]) - in.center[a];
            if (in.kind == "indicator-box")
                inside = inside && std::abs(d) < in.half_width[a];
            else
                r2 += d * d;
        }
        if (in.kind == "indicator-box") {
            u.values[i] = inside ? in.amplitude : 0.0;
        } else {
            const double s = 1.0 - r2 / (in.radius * in.radius);
            u.values[i] = s > 0.0 ? in.amplitude * s * s : 0.0;
        }
    }
    return u;
}

} // namespace apde::cli
