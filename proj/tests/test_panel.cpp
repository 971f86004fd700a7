#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "oriv/panel.hpp"

using namespace oriv;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/oriv_test_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

CsvSchema basic_schema() {
    CsvSchema s;
    s.variables = {{"Y", "output"}, {"K", "capital"}};
    return s;
}

}  // namespace

TEST_CASE("load_panel_csv pivots a complete panel") {
    auto path = write_temp("complete.csv",
                           "firm_id,period,output,capital\n"
                           "a,1,1.0,0.1\na,2,1.1,0.2\na,3,1.2,0.3\n"
                           "b,1,2.0,0.4\nb,2,2.1,0.5\nb,3,2.2,0.6\n"
                           "c,1,3.0,0.7\nc,2,3.1,0.8\nc,3,3.2,0.9\n");
    PanelDataset p = load_panel_csv(path, basic_schema());
    CHECK(p.n_firms() == 3);
    CHECK(p.n_periods() == 3);
    CHECK(p.dropped_incomplete == 0);
    CHECK(p.var("Y")(0, 2) == doctest::Approx(1.2));
    CHECK(p.var("K")(2, 0) == doctest::Approx(0.7));
}

TEST_CASE("firms with incomplete coverage are dropped and counted") {
    auto path = write_temp("incomplete.csv",
                           "firm_id,period,output,capital\n"
                           "a,1,1.0,0.1\na,2,1.1,0.2\na,3,1.2,0.3\n"
                           "b,1,2.0,0.4\nb,3,2.2,0.6\n");
    PanelDataset p = load_panel_csv(path, basic_schema());
    CHECK(p.n_firms() == 1);
    CHECK(p.dropped_incomplete == 1);
}

TEST_CASE("missing schema column is a schema error") {
    auto path = write_temp("badcol.csv", "firm_id,period,output\na,1,1.0\n");
    CHECK_THROWS_AS(load_panel_csv(path, basic_schema()), config_error);
}

TEST_CASE("non-numeric cell reports the row number") {
    auto path = write_temp("badnum.csv",
                           "firm_id,period,output,capital\n"
                           "a,1,1.0,0.1\na,2,oops,0.2\n");
    try {
        load_panel_csv(path, basic_schema());
        FAIL("expected parse error");
    } catch (const io_error& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("fold assignment is invariant to csv row order") {
    auto path1 = write_temp("order1.csv",
                            "firm_id,period,output,capital\n"
                            "b,1,2.0,0.4\nb,2,2.1,0.5\nb,3,2.2,0.6\n"
                            "a,1,1.0,0.1\na,2,1.1,0.2\na,3,1.2,0.3\n");
    auto path2 = write_temp("order2.csv",
                            "firm_id,period,output,capital\n"
                            "a,2,1.1,0.2\na,1,1.0,0.1\na,3,1.2,0.3\n"
                            "b,3,2.2,0.6\nb,1,2.0,0.4\nb,2,2.1,0.5\n");
    PanelDataset p1 = load_panel_csv(path1, basic_schema());
    PanelDataset p2 = load_panel_csv(path2, basic_schema());
    CHECK(p1.firm_ids == p2.firm_ids);
    CHECK(p1.var("Y") == p2.var("Y"));
}

TEST_CASE("round trip through write_panel_csv") {
    auto path1 = write_temp("round1.csv",
                            "firm_id,period,output,capital\n"
                            "1,1,1.25,0.5\n1,2,1.5,0.75\n2,1,2.25,1.5\n2,2,2.5,1.75\n");
    PanelDataset p = load_panel_csv(path1, basic_schema());
    std::string path2 = "/tmp/oriv_test_round2.csv";
    write_panel_csv(path2, p);
    CsvSchema s2;
    s2.variables = {{"Y", "Y"}, {"K", "K"}};
    PanelDataset q = load_panel_csv(path2, s2);
    CHECK(q.var("Y") == p.var("Y"));
    CHECK(q.var("K") == p.var("K"));
}

TEST_CASE("make_folds divides exactly") {
    FoldPlan f = make_folds(10, 5, 123);
    for (int l = 0; l < 5; ++l) CHECK(f.fold(l).size() == 2);
}

TEST_CASE("make_folds remainder rule") {
    FoldPlan f = make_folds(11, 5, 123);
    std::multiset<size_t> sizes;
    for (int l = 0; l < 5; ++l) sizes.insert(f.fold(l).size());
    CHECK(sizes == std::multiset<size_t>{3, 2, 2, 2, 2});
}

TEST_CASE("make_folds deterministic in seed") {
    CHECK(make_folds(57, 5, 9).assignment == make_folds(57, 5, 9).assignment);
    CHECK(make_folds(57, 5, 9).assignment != make_folds(57, 5, 10).assignment);
}

TEST_CASE("folds partition the firms") {
    FoldPlan f = make_folds(23, 4, 5);
    for (int l = 0; l < 4; ++l) {
        auto in = f.fold(l);
        auto out = f.complement(l);
        CHECK(in.size() + out.size() == 23);
        std::set<int> all(in.begin(), in.end());
        all.insert(out.begin(), out.end());
        CHECK(all.size() == 23);
    }
}

TEST_CASE("make_folds rejects L > n") { CHECK_THROWS(make_folds(3, 5, 1)); }
