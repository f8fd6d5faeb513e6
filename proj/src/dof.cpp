#include "tsvc/dof.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tsvc/csv.hpp"
#include "tsvc/parallel.hpp"
#include "tsvc/random.hpp"

namespace tsvc {

namespace detail {
extern const std::string_view kReferenceTableCsv;
}

double dof_naive(int p, int s) {
    if (p < 1 || s < 0) throw Error(ErrorKind::DomainError, "naive DoF needs p >= 1 and s >= 0");
    return static_cast<double>(p + s + 1);
}

double dof_mfp(int s, int p, double n) {
    if (p < 2) throw Error(ErrorKind::DomainError, "DoF formula is defined for p >= 2");
    if (s < 0 || !(n >= 1.0)) throw Error(ErrorKind::DomainError, "DoF formula needs s >= 0 and n >= 1");
    if (s == 0) return static_cast<double>(p + 1);
    const double sd = s;
    const double pd = p;
    return 2.13 + 2.02 * sd + 1.26 * pd + 0.61 * pd * sd + 0.00016 * pd * sd * n;
}

LookupMode parse_lookup_mode(const std::string& name) {
    if (name == "exact") return LookupMode::Exact;
    if (name == "nearest") return LookupMode::Nearest;
    throw Error(ErrorKind::InvalidArgument, "lookup mode must be exact or nearest, got '" + name + "'");
}

DofTable::DofTable(std::vector<DofTableRow> rows) : rows_(std::move(rows)) {}

const DofTable& DofTable::reference() {
    static const DofTable table = [] {
        std::istringstream in{std::string(detail::kReferenceTableCsv)};
        return read_csv(in);
    }();
    return table;
}

DofTable DofTable::read_csv(std::istream& in) {
    const CsvTable csv = read_csv_table(in);
    const auto ip = csv.column_index("p");
    const auto in_ = csv.column_index("n");
    const auto is = csv.column_index("s");
    const auto id = csv.column_index("dof");
    const auto ise = csv.find_column("se");
    std::vector<DofTableRow> rows;
    rows.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double p = csv.number(i, ip);
        const double n = csv.number(i, in_);
        const double s = csv.number(i, is);
        DofTableRow row;
        row.p = static_cast<int>(std::lround(p));
        row.n = std::lround(n);
        row.s = static_cast<int>(std::lround(s));
        row.dof = csv.number(i, id);
        row.se = ise ? csv.number(i, *ise) : 0.0;
        if (row.p != p || row.n != n || row.s != s)
            throw Error(ErrorKind::InvalidArgument, "p, n and s must be integers in a DoF table");
        rows.push_back(row);
    }
    return DofTable(std::move(rows));
}

DofTable DofTable::read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return read_csv(in);
}

void DofTable::write_csv(std::ostream& out) const {
    out << "p,n,s,dof,se\n";
    for (const auto& r : rows_)
        out << r.p << ',' << r.n << ',' << r.s << ',' << format_number(r.dof) << ','
            << format_number(r.se) << '\n';
}

std::optional<DofTableRow> DofTable::find(int p, long n, int s) const {
    for (const auto& r : rows_)
        if (r.p == p && r.n == n && r.s == s) return r;
    return std::nullopt;
}

namespace {

template <typename T>
T snap(const std::vector<T>& grid, T value) {
    T best = grid.front();
    for (T g : grid) {
        const auto d = g > value ? g - value : value - g;
        const auto bd = best > value ? best - value : value - best;
        if (d < bd || (d == bd && g < best)) best = g;
    }
    return best;
}

}  // namespace

double DofTable::lookup(int p, long n, int s, LookupMode mode) const {
    if (rows_.empty()) throw Error(ErrorKind::MissingDof, "DoF table is empty");
    if (mode == LookupMode::Exact) {
        if (auto row = find(p, n, s)) return row->dof;
        const bool cell_known = std::any_of(rows_.begin(), rows_.end(),
                                            [&](const DofTableRow& r) { return r.p == p && r.n == n; });
        if (cell_known)
            throw Error(ErrorKind::MissingDof, "DoF table has no entry for s=" + std::to_string(s));
        throw Error(ErrorKind::OffGrid, "(p=" + std::to_string(p) + ", n=" + std::to_string(n) +
                                            ", s=" + std::to_string(s) + ") is not on the DoF grid");
    }
    std::vector<int> ps;
    for (const auto& r : rows_) ps.push_back(r.p);
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    const int gp = snap(ps, p);
    std::vector<long> ns;
    for (const auto& r : rows_)
        if (r.p == gp) ns.push_back(r.n);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    const long gn = snap(ns, n);
    if (auto row = find(gp, gn, s)) return row->dof;
    throw Error(ErrorKind::MissingDof, "DoF table has no entry for s=" + std::to_string(s) +
                                           " at (p=" + std::to_string(gp) + ", n=" + std::to_string(gn) + ")");
}

PathFitter tsvc_path_fitter(int s_max, FitOptions options) {
    options.threads = 1;
    return [s_max, options](const Dataset& data) {
        const ModelPath path = fit_path(data, s_max, options);
        std::vector<Vector> fitted;
        fitted.reserve(path.models.size());
        for (const auto& m : path.models) fitted.push_back(m.fit.fitted);
        return fitted;
    };
}

PathFitter linear_fitter() {
    return [](const Dataset& data) {
        Matrix design(data.n(), data.p() + 1);
        design.col(0).setOnes();
        design.rightCols(data.p()) = data.X();
        return std::vector<Vector>{solve_least_squares(design, data.y()).fitted};
    };
}

std::optional<double> McDofResult::dof(int s) const {
    for (const auto& e : estimates)
        if (e.s == s && e.runs > 0) return e.dof;
    return std::nullopt;
}

DofTable McDofResult::as_table() const {
    std::vector<DofTableRow> rows;
    for (const auto& e : estimates)
        if (e.runs > 0) rows.push_back(DofTableRow{static_cast<int>(p), static_cast<long>(n), e.s, e.dof, e.se});
    return DofTable(std::move(rows));
}

void McDofResult::write_csv(std::ostream& out) const { as_table().write_csv(out); }

McDofResult mc_dof(const McDesign& design, const PathFitter& fitter, const McDofConfig& config) {
    const Eigen::Index n = design.X ? design.X->rows() : design.n;
    const Eigen::Index p = design.X ? design.X->cols() : design.p;
    if (config.m < 2) throw Error(ErrorKind::InvalidArgument, "mc_dof needs m >= 2 replicates");
    if (config.runs < 1) throw Error(ErrorKind::InvalidArgument, "mc_dof needs at least one run");
    if (config.s_max < 0) throw Error(ErrorKind::InvalidArgument, "s_max must be >= 0");
    if (n < 1 || p < 1) throw Error(ErrorKind::InvalidArgument, "mc_dof needs n >= 1 and p >= 1");
    if (config.mu.size() != 0 && config.mu.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "mu must have length n");
    const Vector mu = config.mu.size() ? config.mu : Vector::Zero(n);
    const auto names = default_names(p);
    const auto m = static_cast<std::size_t>(config.m);
    const std::size_t levels = static_cast<std::size_t>(config.s_max) + 1;

    McDofResult result;
    result.n = n;
    result.p = p;
    result.seed = config.seed;
    result.m = config.m;
    result.runs = config.runs;
    std::vector<std::vector<double>> per_run(levels);

    for (int run = 0; run < config.runs; ++run) {
        Matrix X;
        if (design.X) {
            X = *design.X;
        } else {
            Rng xrng = make_stream(config.seed, {static_cast<std::uint64_t>(run), 0});
            X = standard_normal(xrng, n, p);
        }
        Matrix Y(n, static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j) {
            Rng rng = make_stream(config.seed, {static_cast<std::uint64_t>(run), j + 1});
            Y.col(static_cast<Eigen::Index>(j)) = mu + standard_normal(rng, n);
        }
        std::vector<std::vector<Vector>> fitted(m);
        parallel_for(m, config.threads, [&](std::size_t j) {
            fitted[j] = fitter(Dataset(Y.col(static_cast<Eigen::Index>(j)), X, names));
        });

        for (std::size_t j = 0; j < m; ++j)
            if (fitted[j].size() < levels) ++result.early_stops;

        for (std::size_t s = 0; s < levels; ++s) {
            std::vector<std::size_t> reached;
            for (std::size_t j = 0; j < m; ++j)
                if (fitted[j].size() > s) reached.push_back(j);
            if (reached.size() < 2) continue;
            const double k = static_cast<double>(reached.size());
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double fbar = 0.0;
                double ybar = 0.0;
                for (auto j : reached) {
                    fbar += fitted[j][s][i];
                    ybar += Y(i, static_cast<Eigen::Index>(j));
                }
                fbar /= k;
                ybar /= k;
                double cov = 0.0;
                for (auto j : reached)
                    cov += (fitted[j][s][i] - fbar) * (Y(i, static_cast<Eigen::Index>(j)) - ybar);
                total += cov / (k - 1.0);
            }
            per_run[s].push_back(total);
        }
    }

    for (std::size_t s = 0; s < levels; ++s) {
        McDofEstimate e;
        e.s = static_cast<int>(s);
        const auto& v = per_run[s];
        e.runs = static_cast<int>(v.size());
        if (!v.empty()) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            e.dof = mean;
            if (v.size() > 1) {
                double ss = 0.0;
                for (double x : v) ss += (x - mean) * (x - mean);
                const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
                e.se = sd / std::sqrt(static_cast<double>(v.size()));
            }
        }
        result.estimates.push_back(e);
    }
    return result;
}

}  // namespace tsvc
