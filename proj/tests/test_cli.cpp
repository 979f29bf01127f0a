#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include <json.hpp>

#include "qindef/indefinite.hpp"
#include "qindef/matrix_file.hpp"

using namespace qindef;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

/// Run the CLI from the build directory, capturing stdout and the exit code.
RunResult run(const std::string& args) {
    const std::string cmd = "./qindef " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof(buf), pipe)) res.out.append(buf, n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

QMatrix mat_from_json(const json& sec) {
    QMatrix m(sec.at("rows").get<Eigen::Index>(), sec.at("cols").get<Eigen::Index>());
    const json& entries = sec.at("entries");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const json& q = entries.at(size_t(i)).at(size_t(j));
            m.set(i, j, Quaternion(q.at(0).get<double>(), q.at(1).get<double>(),
                                   q.at(2).get<double>(), q.at(3).get<double>()));
        }
    return m;
}

QMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = static_cast<Eigen::Index>(rows.begin()->size());
    QMatrix m(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m.set(i, j++, Quaternion(v));
        ++i;
    }
    return m;
}

void write_file(const std::string& path, const std::map<std::string, QMatrix>& sections) {
    MatrixFile f;
    f.sections = sections;
    f.save(path);
}

}  // namespace

TEST_CASE("matrix document round trip is lossless") {
    QMatrix m(2, 3);
    m.set(0, 0, Quaternion(1.0 / 3.0, -2e-17, 3.5, 1e300));
    m.set(1, 2, Quaternion(0.1, 0.2, 0.3, -0.4));
    MatrixFile f;
    f.sections.emplace("X", m);
    const MatrixFile g = MatrixFile::parse(f.serialize());
    CHECK((g.get("X") - m).norm() == 0.0);
    CHECK_THROWS_AS(g.get("Y"), InvalidInputError);
    CHECK_THROWS_AS(MatrixFile::parse("{not json"), InvalidInputError);
}

TEST_CASE("canonical command") {
    write_file("cli_canonical.json", {{"A", jordan_block(0.0, 2)}, {"H", sip(2)}});
    const RunResult r = run("--format json canonical cli_canonical.json");
    CHECK(r.exit_code == 0);
    const json doc = json::parse(r.out);
    REQUIRE(doc.at("blocks").size() == 1);
    CHECK(doc.at("blocks").at(0).at("re").get<double>() == 0.0);
    CHECK(doc.at("blocks").at(0).at("size").get<int>() == 2);
    CHECK(doc.at("blocks").at(0).at("sign").get<int>() == 1);

    // Non-selfadjoint input: exit 2.
    write_file("cli_bad.json", {{"A", jordan_block(0.0, 2)}, {"H", QMatrix::Identity(2)}});
    CHECK(run("canonical cli_bad.json").exit_code == 2);

    // Malformed document: exit 2.
    FILE* f = fopen("cli_malformed.json", "w");
    fputs("{broken", f);
    fclose(f);
    CHECK(run("canonical cli_malformed.json").exit_code == 2);
    CHECK(run("canonical cli_missing_file.json").exit_code == 2);
}

TEST_CASE("sqrt command") {
    QMatrix minus_i2(2, 2);
    minus_i2.set(0, 0, Quaternion(-1.0));
    minus_i2.set(1, 1, Quaternion(-1.0));
    QMatrix d(2, 2);
    d.set(0, 0, Quaternion(1.0));
    d.set(1, 1, Quaternion(-1.0));
    write_file("cli_sqrt_ok.json", {{"A", minus_i2}, {"H", d}});
    const RunResult r = run("--format json sqrt cli_sqrt_ok.json");
    CHECK(r.exit_code == 0);
    const QMatrix a = mat_from_json(json::parse(r.out).at("A"));
    CHECK((a * a - minus_i2).norm() <= 1e-10);
    CHECK(is_h_selfadjoint(a, HForm(d)).ok);

    // -I with a definite form admits no root: exit 1 both ways.
    write_file("cli_sqrt_no.json", {{"A", minus_i2}, {"H", QMatrix::Identity(2)}});
    CHECK(run("sqrt cli_sqrt_no.json --report-only").exit_code == 1);
    CHECK(run("sqrt cli_sqrt_no.json").exit_code == 1);
}

TEST_CASE("polar and verify commands") {
    const QMatrix x = from_rows({{1, 0}, {0, 0}});
    write_file("cli_polar_ok.json", {{"X", x}, {"H", sip(2)}});
    const RunResult r = run("--format json polar cli_polar_ok.json");
    CHECK(r.exit_code == 0);
    const json doc = json::parse(r.out);
    const QMatrix u = mat_from_json(doc.at("U"));
    const QMatrix a = mat_from_json(doc.at("A"));
    CHECK((x - u * a).norm() <= 1e-10);

    // Emitted decomposition re-verifies through the verify command.
    write_file("cli_verify.json", {{"X", x}, {"H", sip(2)}, {"U", u}, {"A", a}});
    const RunResult v = run("--format json verify cli_verify.json");
    CHECK(v.exit_code == 0);
    CHECK(json::parse(v.out).at("ok").get<bool>());

    // A broken pair fails verification with exit 1.
    write_file("cli_verify_bad.json",
               {{"X", x}, {"H", sip(2)}, {"U", QMatrix::Identity(2)}, {"A", x}});
    CHECK(run("verify cli_verify_bad.json").exit_code == 1);

    // Non-decomposable X: exit 1 naming condition (iii).
    const QMatrix x2 = from_rows({{1, -1}, {0, 0}});
    write_file("cli_polar_no.json", {{"X", x2}, {"H", sip(2)}});
    const RunResult rn = run("polar cli_polar_no.json");
    CHECK(rn.exit_code == 1);
    CHECK(rn.out.find("condition (iii)") != std::string::npos);
    const RunResult rr = run("--format json polar cli_polar_no.json --report-only");
    CHECK(rr.exit_code == 1);
    const json rep = json::parse(rr.out);
    CHECK_FALSE(rep.at("exists").get<bool>());
    CHECK(rep.at("condition_i").get<bool>());
    CHECK(rep.at("condition_ii").get<bool>());
    CHECK_FALSE(rep.at("condition_iii").get<bool>());
}

TEST_CASE("witt command") {
    QMatrix v(2, 1);
    v.set(0, 0, Quaternion(1.0));
    write_file("cli_witt.json", {{"V", v}, {"H", sip(2)}});

    // Plain extension certifies.
    const RunResult r0 = run("--format json witt cli_witt.json");
    CHECK(r0.exit_code == 0);
    const QMatrix u0 = mat_from_json(json::parse(r0.out).at("U"));
    CHECK(is_h_unitary(u0, HForm(sip(2))).ok);

    // The inline --p3 shear fixture.
    const RunResult r = run("--format json witt cli_witt.json --p3 i");
    CHECK(r.exit_code == 0);
    const QMatrix u = mat_from_json(json::parse(r.out).at("U"));
    QMatrix expect = QMatrix::Identity(2);
    expect.set(0, 1, Quaternion::unit_i());
    CHECK((u - expect).norm() <= 1e-10);

    // Signature mismatch: exit 1.
    write_file("cli_witt_sig.json",
               {{"V", v}, {"H", QMatrix::Identity(2)}, {"H2", -1.0 * QMatrix::Identity(2)}});
    CHECK(run("witt cli_witt_sig.json").exit_code == 1);
}

TEST_CASE("gen command determinism and validation") {
    const RunResult a = run("gen \"0:2:+,0:1:+\" --seed 42");
    const RunResult b = run("gen \"0:2:+,0:1:+\" --seed 42");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != run("gen \"0:2:+,0:1:+\" --seed 43").out);

    // Output feeds back into the canonical command.
    FILE* f = fopen("cli_gen.json", "w");
    fputs(a.out.c_str(), f);
    fclose(f);
    const RunResult c = run("--format json canonical cli_gen.json");
    CHECK(c.exit_code == 0);
    CHECK(json::parse(c.out).at("blocks").size() == 2);

    // Polar instances verify.
    const RunResult p = run("gen \"0:2:+,0:1:+\" --seed 7 --polar");
    CHECK(p.exit_code == 0);
    FILE* g = fopen("cli_gen_polar.json", "w");
    fputs(p.out.c_str(), g);
    fclose(g);
    CHECK(run("verify cli_gen_polar.json").exit_code == 0);

    // Bad block specs: exit 2.
    CHECK(run("gen \"0:2:*\"").exit_code == 2);
    CHECK(run("gen \"1+2i:1:+\"").exit_code == 2);  // nonreal blocks need sign 0
    CHECK(run("gen \"-1:1:+,-1:1:+\" --polar").exit_code == 2);

    // Unknown flags and missing subcommands: exit 2.
    CHECK(run("gen").exit_code == 2);
    CHECK(run("frobnicate x.json").exit_code == 2);
}
