#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oriv/types.hpp"

namespace oriv {

// Balanced firm x period panel, all variables in logs. Immutable after load.
struct PanelDataset {
    std::vector<std::string> firm_ids;            // canonical order (sorted by id)
    std::vector<long long> periods;               // sorted distinct periods
    std::map<std::string, Matrix> variables;      // name -> n_firms x n_periods
    int dropped_incomplete = 0;                   // firms dropped at load

    int n_firms() const { return static_cast<int>(firm_ids.size()); }
    int n_periods() const { return static_cast<int>(periods.size()); }

    bool has(const std::string& name) const { return variables.count(name) != 0; }
    const Matrix& var(const std::string& name) const;

    // New panel containing the given firm rows (duplicates allowed; used by the
    // firm-level bootstrap).
    PanelDataset take_firms(const std::vector<int>& rows) const;
};

struct CsvSchema {
    std::string firm_col = "firm_id";
    std::string period_col = "period";
    // panel variable name -> csv column name
    std::vector<std::pair<std::string, std::string>> variables;
};

PanelDataset load_panel_csv(const std::string& path, const CsvSchema& schema);
void write_panel_csv(const std::string& path, const PanelDataset& panel);

// L-way partition of firm indices; sizes differ by at most one; bit-identical
// reconstruction from (n_firms, L, seed).
struct FoldPlan {
    int n_firms = 0;
    int L = 0;
    uint64_t seed = 0;
    std::vector<int> assignment;  // firm index -> fold

    std::vector<int> fold(int l) const;
    std::vector<int> complement(int l) const;
};

FoldPlan make_folds(int n_firms, int L, uint64_t seed);

}  // namespace oriv
