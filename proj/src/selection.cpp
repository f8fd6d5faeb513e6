#include "tsvc/selection.hpp"

#include <cmath>
#include <ostream>

#include "tsvc/csv.hpp"

namespace tsvc {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string dof_method_name(const DofMethod& method) {
    return std::visit(overloaded{[](const NaiveDof&) { return std::string("naive"); },
                                 [](const MfpFormulaDof&) { return std::string("mfp"); },
                                 [](const McTableDof&) { return std::string("mc-table"); },
                                 [](const McCustomDof&) { return std::string("mc-custom"); }},
                      method);
}

double dof_for(const DofMethod& method, int p, long n, int s) {
    if (s < 0) throw Error(ErrorKind::InvalidArgument, "split count must be >= 0");
    if (s == 0) return static_cast<double>(p + 1);
    return std::visit(
        overloaded{[&](const NaiveDof&) { return dof_naive(p, s); },
                   [&](const MfpFormulaDof&) { return dof_mfp(s, p, static_cast<double>(n)); },
                   [&](const McTableDof& t) {
                       const DofTable& table = t.table ? *t.table : DofTable::reference();
                       return table.lookup(p, n, s, t.mode);
                   },
                   [&](const McCustomDof& c) {
                       if (auto row = c.table.find(p, n, s)) return row->dof;
                       throw Error(ErrorKind::MissingDof,
                                   "custom DoF estimates lack s=" + std::to_string(s));
                   }},
        method);
}

double bic(double log_lik, double dof, double n) { return -2.0 * log_lik + std::log(n) * dof; }

int smallest_argmin(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::InvalidArgument, "argmin of an empty sequence");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return static_cast<int>(best);
}

PruneReport prune_path(const ModelPath& path, const DofMethod& method) {
    if (path.models.empty()) throw Error(ErrorKind::InvalidArgument, "cannot prune an empty path");
    PruneReport report;
    report.dof_method = dof_method_name(method);
    std::vector<double> values;
    for (const auto& model : path.models) {
        PruneRow row;
        row.s = model.splits;
        row.dof = dof_for(method, static_cast<int>(model.p), static_cast<long>(model.n), model.splits);
        row.log_lik = gaussian_log_lik(model.fit.rss, model.n);
        row.bic = bic(row.log_lik, row.dof, static_cast<double>(model.n));
        values.push_back(row.bic);
        report.rows.push_back(row);
    }
    report.selected = report.rows[static_cast<std::size_t>(smallest_argmin(values))].s;
    return report;
}

void PruneReport::write_csv(std::ostream& out) const {
    out << "s,dof,loglik,bic,selected\n";
    for (const auto& r : rows)
        out << r.s << ',' << format_number(r.dof) << ',' << format_number(r.log_lik) << ','
            << format_number(r.bic) << ',' << (r.s == selected ? 1 : 0) << '\n';
}

PruneReport PruneReport::read_csv(std::istream& in) {
    const CsvTable csv = read_csv_table(in);
    const auto cs = csv.column_index("s");
    const auto cd = csv.column_index("dof");
    const auto cl = csv.column_index("loglik");
    const auto cb = csv.column_index("bic");
    const auto csel = csv.column_index("selected");
    PruneReport report;
    int flagged = 0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        PruneRow row;
        row.s = static_cast<int>(csv.number(i, cs));
        row.dof = csv.number(i, cd);
        row.log_lik = csv.number(i, cl);
        row.bic = csv.number(i, cb);
        if (csv.number(i, csel) != 0.0) {
            report.selected = row.s;
            ++flagged;
        }
        report.rows.push_back(row);
    }
    if (flagged != 1) throw Error(ErrorKind::InvalidArgument, "prune report must flag exactly one row");
    return report;
}

}  // namespace tsvc
