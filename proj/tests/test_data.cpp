#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "lsg/data.hpp"
#include "lsg/errors.hpp"

using namespace lsg;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/lsg_test_" + name) {
        std::ofstream(path) << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("load_csv basic shapes") {
    TempFile f("basic.csv", "a,b\n1,2\n3,4\n5,6\n");
    Dataset ds = load_csv(f.path);
    CHECK(ds.T() == 3);
    CHECK(ds.C() == 2);
    CHECK(ds.channel_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.values.at2(2, 1) == 6.0);
}

TEST_CASE("load_csv skips a leading date column") {
    TempFile f("dated.csv", "date,x,y\n2020-01-01,1,10\n2020-01-02,2,20\n");
    Dataset ds = load_csv(f.path);
    CHECK(ds.C() == 2);
    CHECK(ds.channel_names == std::vector<std::string>{"x", "y"});
    CHECK(ds.values.at2(1, 0) == 2.0);

    // "index" headers (the synthetic output format) are skipped too
    TempFile g("indexed.csv", "index,value\n0,0.5\n1,-0.25\n");
    Dataset ds2 = load_csv(g.path);
    CHECK(ds2.C() == 1);
    CHECK(ds2.values.at2(1, 0) == -0.25);

    // explicit flag forces skipping regardless of name
    TempFile h("flagged.csv", "t,v\n99,1\n98,2\n");
    CsvOptions opt;
    opt.skip_first_column = true;
    CHECK(load_csv(h.path, opt).C() == 1);
}

TEST_CASE("load_csv handles an ETT-format header") {
    std::string content = "date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT\n";
    for (int i = 0; i < 20; ++i) {
        content += "2016-07-01 " + std::to_string(i) + ":00:00";
        for (int c = 0; c < 7; ++c) content += "," + std::to_string(i * 0.5 + c);
        content += "\n";
    }
    TempFile f("ett.csv", content);
    Dataset ds = load_csv(f.path);
    CHECK(ds.C() == 7);
    CHECK(ds.T() == 20);
    CHECK(ds.channel_names.back() == "OT");
}

TEST_CASE("load_csv error reporting") {
    TempFile bad("badcell.csv", "a,b\n1,2\n3,oops\n");
    CHECK_THROWS_WITH_AS(load_csv(bad.path), doctest::Contains("row 2"), data_error);
    CHECK_THROWS_WITH_AS(load_csv(bad.path), doctest::Contains("column 2"), data_error);

    TempFile ragged("ragged.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(ragged.path), data_error);

    TempFile nan("nan.csv", "a\n1\nnan\n");
    CHECK_THROWS_AS(load_csv(nan.path), data_error);

    TempFile empty("empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty.path), data_error);
    CHECK_THROWS_AS(load_csv("/tmp/lsg_no_such_file.csv"), data_error);
}

TEST_CASE("save_csv round trips through load_csv") {
    Dataset ds;
    ds.values = Tensor({3, 2}, {1.5, -2.25, 0.125, 3.75, 1e-9, 42.0});
    ds.channel_names = {"u", "v"};
    TempFile f("roundtrip.csv", "");
    save_csv(ds, f.path);
    Dataset back = load_csv(f.path);
    REQUIRE(back.T() == 3);
    REQUIRE(back.C() == 2);
    for (std::size_t i = 0; i < 6; ++i) CHECK(back.values[i] == ds.values[i]);
}

TEST_CASE("chrono_split boundary arithmetic") {
    Dataset ds;
    ds.values = Tensor({100, 1});
    for (std::size_t i = 0; i < 100; ++i) ds.values[i] = static_cast<double>(i);
    ds.channel_names = {"v"};

    auto parts = chrono_split(ds, 0.7, 0.1, 0.2);
    CHECK(parts[0].T() == 70);
    CHECK(parts[1].T() == 10);
    CHECK(parts[2].T() == 20);
    CHECK(parts[0].values[0] == 0.0);
    CHECK(parts[1].values[0] == 70.0);
    CHECK(parts[2].values[0] == 80.0);
    CHECK(parts[0].start_offset == 0);
    CHECK(parts[1].start_offset == 70);
    CHECK(parts[2].start_offset == 80);

    CHECK_THROWS_AS(chrono_split(ds, 1.0, 0.0, 0.0), config_error);
    CHECK_THROWS_AS(chrono_split(ds, 0.5, 0.2, 0.2), config_error);  // sums to 0.9
    CHECK_THROWS_AS(chrono_split(ds, 0.7, 0.1, 0.2, 15), config_error);  // val < 15
}

TEST_CASE("chrono_split ETT-scale floor arithmetic") {
    Dataset ds;
    ds.values = Tensor({17420, 1});
    ds.channel_names = {"v"};
    auto parts = chrono_split(ds, 0.6, 0.2, 0.2);
    CHECK(parts[0].T() == 10452);
    CHECK(parts[1].T() == 3484);
    CHECK(parts[2].T() == 3484);
}

TEST_CASE("window extraction counts and contents") {
    Dataset ds;
    ds.values = Tensor({10, 2});
    for (std::size_t i = 0; i < 20; ++i) ds.values[i] = static_cast<double>(i);
    ds.channel_names = {"a", "b"};

    auto ws = windows(ds, 3, 2, 1);
    CHECK(ws.size() == 6);
    CHECK(ws[0].origin_index == 0);
    CHECK(ws[5].origin_index == 5);
    // lookback and horizon are adjacent slices
    CHECK(ws[2].lookback.at2(0, 0) == ds.values.at2(2, 0));
    CHECK(ws[2].lookback.at2(2, 1) == ds.values.at2(4, 1));
    CHECK(ws[2].horizon.at2(0, 0) == ds.values.at2(5, 0));
    CHECK(ws[2].horizon.at2(1, 1) == ds.values.at2(6, 1));

    Dataset small;
    small.values = Tensor({4, 1});
    small.channel_names = {"a"};
    CHECK(windows(small, 3, 2, 1).empty());

    Dataset big;
    big.values = Tensor({200, 1});
    big.channel_names = {"a"};
    CHECK(windows(big, 96, 96, 1).size() == 9);
    CHECK(windows(big, 96, 96, 96).size() == 1);

    CHECK_THROWS_AS(windows(ds, 0, 2, 1), config_error);
    CHECK_THROWS_AS(windows(ds, 3, 2, 0), config_error);
}

TEST_CASE("windows never cross a split boundary") {
    Dataset ds;
    ds.values = Tensor({120, 1});
    for (std::size_t i = 0; i < 120; ++i) ds.values[i] = static_cast<double>(i);
    ds.channel_names = {"v"};
    auto parts = chrono_split(ds, 0.5, 0.25, 0.25);
    const std::size_t L = 8, H = 4;
    const std::size_t bounds[4] = {0, 60, 90, 120};
    for (int p = 0; p < 3; ++p) {
        for (const auto& w : windows(parts[p], L, H, 3)) {
            const std::size_t abs_begin = parts[p].start_offset + w.origin_index;
            const std::size_t abs_end = abs_begin + L + H;
            CHECK(abs_begin >= bounds[p]);
            CHECK(abs_end <= bounds[p + 1]);
            // content identity with the parent series
            CHECK(w.lookback[0] == static_cast<double>(abs_begin));
            CHECK(w.horizon[H - 1] == static_cast<double>(abs_end - 1));
        }
    }
}

TEST_CASE("patching with and without padding") {
    Tensor x({96, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    PatchGrid g = patch(x, 24);
    CHECK(g.N == 4);
    CHECK(g.P == 24);
    CHECK(g.patches.shape() == std::vector<std::size_t>{4, 24, 2});

    Tensor y({36, 1});
    for (std::size_t i = 0; i < 36; ++i) y[i] = static_cast<double>(i + 1);
    PatchGrid gy = patch(y, 24);
    CHECK(gy.N == 2);
    // first 12 rows of patch 0 repeat row 0
    for (std::size_t r = 0; r < 12; ++r) CHECK(gy.patches[r] == y[0]);
    CHECK(gy.patches[12] == y[0]);
    CHECK(gy.patches[13] == y[1]);

    Tensor back = unpatch(gy);
    REQUIRE(back.shape() == y.shape());
    for (std::size_t i = 0; i < 36; ++i) CHECK(back[i] == y[i]);
}

TEST_CASE("patch/unpatch round trip over random sizes") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> ld(1, 512), pd(1, 512), cd(1, 4);
    for (int iter = 0; iter < 60; ++iter) {
        const std::size_t L = ld(rng), P = pd(rng), C = cd(rng);
        Tensor x({L, C});
        std::uniform_real_distribution<double> vd(-5.0, 5.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = vd(rng);
        PatchGrid g = patch(x, P);
        CHECK(g.N == (L + P - 1) / P);
        CHECK(g.N * g.P >= L);
        Tensor back = unpatch(g);
        REQUIRE(back.size() == x.size());
        bool same = true;
        for (std::size_t i = 0; i < x.size(); ++i) same &= (back[i] == x[i]);
        CHECK(same);
    }
}

TEST_CASE("synthetic generator sigma profiles") {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::periodic;
    spec.dt = 0.1;
    CHECK(synthetic_sigma(spec, 0) == doctest::Approx(0.9));  // cos(0) = 1
    // cos(pi) = -1 at t ~ pi -> sigma ~ 0.1
    const std::size_t i_pi = 31;  // t = 3.1, near pi
    CHECK(synthetic_sigma(spec, i_pi) == doctest::Approx(0.5 + 0.4 * std::cos(3.1)));

    SyntheticSpec reg;
    reg.kind = SyntheticSpec::Kind::regime_switching;
    reg.regime_len = 100;
    CHECK(synthetic_sigma(reg, 150) == 1.0);  // floor(150/100)=1, odd
    CHECK(synthetic_sigma(reg, 50) == 0.1);
    CHECK(synthetic_sigma(reg, 250) == 0.1);  // floor=2, even
}

TEST_CASE("synthetic generator determinism and structure") {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::periodic;
    spec.length = 500;
    spec.dt = 0.1;
    spec.seed = 31337;
    auto [ds1, sig1] = gen_synthetic(spec);
    auto [ds2, sig2] = gen_synthetic(spec);
    CHECK(ds1.T() == 500);
    CHECK(ds1.C() == 1);
    REQUIRE(sig1.size() == 500);
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(ds1.values[i] == ds2.values[i]);  // bit identical
        CHECK(sig1[i] == sig2[i]);
    }
    spec.seed = 31338;
    auto [ds3, sig3] = gen_synthetic(spec);
    bool differs = false;
    for (std::size_t i = 0; i < 500; ++i) differs |= (ds3.values[i] != ds1.values[i]);
    CHECK(differs);
}

TEST_CASE("regime blocks recover nominal sigma within 15 percent") {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::regime_switching;
    spec.length = 4000;
    spec.dt = 0.1;
    spec.seed = 7;
    spec.regime_len = 500;
    auto [ds, sig] = gen_synthetic(spec);
    for (std::size_t block = 0; block < 8; ++block) {
        const double nominal = block % 2 == 0 ? 0.1 : 1.0;
        double sq = 0.0;
        for (std::size_t i = block * 500; i < (block + 1) * 500; ++i) {
            const double resid = ds.values[i] - std::sin(static_cast<double>(i) * spec.dt);
            sq += resid * resid;
        }
        const double sd = std::sqrt(sq / 500.0);
        CHECK(std::fabs(sd - nominal) / nominal < 0.15);
    }
}

TEST_CASE("standardizer normalizes the train split") {
    Dataset ds;
    ds.values = Tensor({50, 2});
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d1(5.0, 3.0), d2(-2.0, 0.5);
    for (std::size_t t = 0; t < 50; ++t) {
        ds.values.at2(t, 0) = d1(rng);
        ds.values.at2(t, 1) = d2(rng);
    }
    ds.channel_names = {"a", "b"};

    Standardizer s = Standardizer::fit(ds);
    Dataset z = s.apply(ds);
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0.0, sq = 0.0;
        for (std::size_t t = 0; t < 50; ++t) m += z.values.at2(t, c);
        m /= 50.0;
        for (std::size_t t = 0; t < 50; ++t) {
            const double dd = z.values.at2(t, c) - m;
            sq += dd * dd;
        }
        CHECK(std::fabs(m) < 1e-12);
        CHECK(std::fabs(std::sqrt(sq / 50.0) - 1.0) < 1e-12);
    }

    Tensor back = s.invert(z.values);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(back[i] == doctest::Approx(ds.values[i]).epsilon(1e-12));

    Standardizer id = Standardizer::identity(2);
    Dataset same = id.apply(ds);
    for (std::size_t i = 0; i < ds.values.size(); ++i)
        CHECK(same.values[i] == ds.values[i]);
}
