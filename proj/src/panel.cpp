#include "oriv/panel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "oriv/rng.hpp"

namespace oriv {

const Matrix& PanelDataset::var(const std::string& name) const {
    auto it = variables.find(name);
    if (it == variables.end()) throw config_error("panel variable not present: " + name);
    return it->second;
}

PanelDataset PanelDataset::take_firms(const std::vector<int>& rows) const {
    PanelDataset out;
    out.periods = periods;
    out.dropped_incomplete = 0;
    out.firm_ids.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i)
        out.firm_ids.push_back(firm_ids[static_cast<size_t>(rows[i])]);
    for (const auto& [name, m] : variables) out.variables[name] = rows_of(m, rows);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

bool id_less(const std::string& a, const std::string& b) {
    // numeric ids sort numerically, otherwise lexicographic
    auto parse = [](const std::string& s, long long& v) {
        if (s.empty()) return false;
        char* end = nullptr;
        v = std::strtoll(s.c_str(), &end, 10);
        return end && *end == '\0';
    };
    long long va, vb;
    if (parse(a, va) && parse(b, vb)) return va < vb || (va == vb && a < b);
    return a < b;
}

}  // namespace

PanelDataset load_panel_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open panel file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw io_error("empty panel file: " + path);
    auto header = split_csv_line(header_line);
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

    auto col_of = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw config_error("column missing from CSV header: " + name);
        return it->second;
    };
    int fc = col_of(schema.firm_col);
    int pc = col_of(schema.period_col);
    std::vector<std::pair<std::string, int>> vcols;
    for (const auto& [var, csvname] : schema.variables) vcols.emplace_back(var, col_of(csvname));

    // firm -> period -> values per variable
    struct Row {
        std::vector<double> vals;
    };
    std::map<std::string, std::map<long long, Row>, decltype(&id_less)> firms(&id_less);
    std::set<long long> periods;

    std::string line;
    long long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        auto need = [&](int c) -> const std::string& {
            if (c >= static_cast<int>(fields.size()))
                throw io_error("row " + std::to_string(lineno) + ": too few fields");
            return fields[static_cast<size_t>(c)];
        };
        const std::string& id = need(fc);
        char* end = nullptr;
        long long period = std::strtoll(need(pc).c_str(), &end, 10);
        if (!end || *end != '\0')
            throw io_error("row " + std::to_string(lineno) + ": non-integer period '" + need(pc) +
                           "'");
        Row r;
        r.vals.reserve(vcols.size());
        for (const auto& [var, c] : vcols) {
            const std::string& s = need(c);
            char* e2 = nullptr;
            double v = std::strtod(s.c_str(), &e2);
            if (s.empty() || !e2 || *e2 != '\0')
                throw io_error("row " + std::to_string(lineno) + ": non-numeric value '" + s +
                               "' in column " + var);
            r.vals.push_back(v);
        }
        periods.insert(period);
        firms[id][period] = std::move(r);
    }

    PanelDataset out;
    out.periods.assign(periods.begin(), periods.end());
    const int T = static_cast<int>(out.periods.size());
    if (T == 0) throw io_error("panel file has no data rows: " + path);

    std::vector<const std::map<long long, Row>*> kept;
    for (const auto& [id, rows] : firms) {
        if (static_cast<int>(rows.size()) == T) {
            out.firm_ids.push_back(id);
            kept.push_back(&rows);
        } else {
            ++out.dropped_incomplete;
        }
    }
    const int n = static_cast<int>(out.firm_ids.size());
    for (size_t v = 0; v < vcols.size(); ++v) {
        Matrix m(n, T);
        for (int i = 0; i < n; ++i) {
            int t = 0;
            for (long long p : out.periods) m(i, t++) = kept[static_cast<size_t>(i)]->at(p).vals[v];
        }
        out.variables[vcols[v].first] = std::move(m);
    }
    return out;
}

void write_panel_csv(const std::string& path, const PanelDataset& panel) {
    std::ofstream outf(path);
    if (!outf) throw io_error("cannot write panel file: " + path);
    outf << "firm_id,period";
    for (const auto& [name, m] : panel.variables) outf << "," << name;
    outf << "\n";
    char buf[64];
    for (int i = 0; i < panel.n_firms(); ++i) {
        for (int t = 0; t < panel.n_periods(); ++t) {
            outf << panel.firm_ids[static_cast<size_t>(i)] << "," << panel.periods[static_cast<size_t>(t)];
            for (const auto& [name, m] : panel.variables) {
                std::snprintf(buf, sizeof buf, "%.17g", m(i, t));
                outf << "," << buf;
            }
            outf << "\n";
        }
    }
    if (!outf) throw io_error("write failed: " + path);
}

std::vector<int> FoldPlan::fold(int l) const {
    std::vector<int> out;
    for (int i = 0; i < n_firms; ++i)
        if (assignment[static_cast<size_t>(i)] == l) out.push_back(i);
    return out;
}

std::vector<int> FoldPlan::complement(int l) const {
    std::vector<int> out;
    for (int i = 0; i < n_firms; ++i)
        if (assignment[static_cast<size_t>(i)] != l) out.push_back(i);
    return out;
}

FoldPlan make_folds(int n_firms, int L, uint64_t seed) {
    require(L >= 2, "make_folds: L must be >= 2");
    if (L > n_firms) throw std::invalid_argument("make_folds: L exceeds number of firms");
    FoldPlan plan;
    plan.n_firms = n_firms;
    plan.L = L;
    plan.seed = seed;
    std::vector<int> order(static_cast<size_t>(n_firms));
    for (int i = 0; i < n_firms; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);
    plan.assignment.assign(static_cast<size_t>(n_firms), -1);
    int base = n_firms / L, extra = n_firms % L, pos = 0;
    for (int l = 0; l < L; ++l) {
        int sz = base + (l < extra ? 1 : 0);
        for (int k = 0; k < sz; ++k) plan.assignment[static_cast<size_t>(order[static_cast<size_t>(pos++)])] = l;
    }
    return plan;
}

}  // namespace oriv
