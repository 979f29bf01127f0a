#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qindef/gen.hpp"
#include "qindef/matrix_file.hpp"
#include "qindef/witt.hpp"

using namespace qindef;
using nlohmann::json;

namespace {

constexpr int kOk = 0;          // success
constexpr int kNonexistent = 1; // the requested object provably does not exist
constexpr int kInvalid = 2;     // parse/validation failure
constexpr int kAmbiguous = 3;   // numerical decision could not be certified

struct Options {
    Tolerance tol;
    bool json_format = false;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

json matrix_json(const QMatrix& m) {
    json entries = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const Quaternion q = m(i, j);
            row.push_back(json::array({q.x0, q.x1, q.x2, q.x3}));
        }
        entries.push_back(row);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

void print_matrix_text(std::ostream& os, const std::string& name, const QMatrix& m) {
    os << name << ": " << m.rows() << " x " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << " ";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const Quaternion q = m(i, j);
            os << " [" << fmt(q.x0) << ", " << fmt(q.x1) << ", " << fmt(q.x2) << ", "
               << fmt(q.x3) << "]";
        }
        os << "\n";
    }
}

json blocks_json(const std::vector<CanonicalBlock>& blocks) {
    json out = json::array();
    for (const auto& b : blocks)
        out.push_back({{"re", b.lambda.real()},
                       {"im", b.lambda.imag()},
                       {"size", b.size},
                       {"sign", b.sign}});
    return out;
}

void print_blocks_text(std::ostream& os, const std::vector<CanonicalBlock>& blocks) {
    os << "blocks:\n";
    for (const auto& b : blocks)
        os << "  lambda: (" << fmt(b.lambda.real()) << ", " << fmt(b.lambda.imag())
           << ")  size: " << b.size << "  sign: " << b.sign << "\n";
}

/// Parse a quaternion literal like "1", "i", "-2.5k", or "1+2i-3j+0.5k".
Quaternion parse_quaternion(const std::string& text) {
    Quaternion out;
    size_t pos = 0;
    bool any = false;
    while (pos < text.size()) {
        size_t end = pos + 1;  // keep a leading sign with its term
        while (end < text.size() && text[end] != '+' && text[end] != '-') {
            // do not split inside an exponent like 1e-3
            if ((text[end] == 'e' || text[end] == 'E') && end + 1 < text.size() &&
                (text[end + 1] == '+' || text[end + 1] == '-'))
                ++end;
            ++end;
        }
        std::string term = text.substr(pos, end - pos);
        pos = end;
        if (term.empty() || term == "+" || term == "-")
            throw InvalidInputError("bad quaternion literal: \"" + text + "\"");
        int axis = 0;
        const char last = term.back();
        if (last == 'i') axis = 1;
        if (last == 'j') axis = 2;
        if (last == 'k') axis = 3;
        if (axis != 0) term.pop_back();
        double coef = 1.0;
        if (term == "-")
            coef = -1.0;
        else if (!term.empty() && term != "+") {
            try {
                size_t used = 0;
                coef = std::stod(term, &used);
                if (used != term.size()) throw std::invalid_argument(term);
            } catch (const std::exception&) {
                throw InvalidInputError("bad quaternion literal: \"" + text + "\"");
            }
        }
        if (axis == 0) out.x0 += coef;
        if (axis == 1) out.x1 += coef;
        if (axis == 2) out.x2 += coef;
        if (axis == 3) out.x3 += coef;
        any = true;
    }
    if (!any) throw InvalidInputError("empty quaternion literal");
    return out;
}

std::complex<double> parse_complex(const std::string& text) {
    const Quaternion q = parse_quaternion(text);
    if (q.x2 != 0.0 || q.x3 != 0.0)
        throw InvalidInputError("eigenvalue must be complex: \"" + text + "\"");
    return {q.x0, q.x1};
}

/// Block-spec string "lambda:size:sign,...", e.g. "0:2:+,1+2i:1:0".
std::vector<CanonicalBlock> parse_blockspec(const std::string& spec) {
    std::vector<CanonicalBlock> blocks;
    std::istringstream ss(spec);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        const size_t c2 = entry.rfind(':');
        const size_t c1 = c2 == std::string::npos ? std::string::npos : entry.rfind(':', c2 - 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c1 == 0)
            throw InvalidInputError("bad block entry: \"" + entry + "\"");
        CanonicalBlock b;
        b.lambda = parse_complex(entry.substr(0, c1));
        try {
            b.size = std::stol(entry.substr(c1 + 1, c2 - c1 - 1));
        } catch (const std::exception&) {
            throw InvalidInputError("bad block size in: \"" + entry + "\"");
        }
        const std::string sign = entry.substr(c2 + 1);
        if (sign == "+")
            b.sign = 1;
        else if (sign == "-")
            b.sign = -1;
        else if (sign == "0")
            b.sign = 0;
        else
            throw InvalidInputError("bad block sign in: \"" + entry + "\"");
        if (b.size < 1) throw InvalidInputError("block size must be positive");
        if (b.is_real() == (b.sign == 0))
            throw InvalidInputError("real blocks need sign +/-, nonreal blocks sign 0");
        blocks.push_back(b);
    }
    if (blocks.empty()) throw InvalidInputError("empty block spec");
    return blocks;
}

/// A Witt parameter given inline (1x1 quaternion literal) or as a path to a
/// matrix document holding the named section (or a single section).
QMatrix load_param(const std::string& value, const std::string& name, Eigen::Index rows,
                   Eigen::Index cols) {
    std::optional<Quaternion> inline_value;
    try {
        inline_value = parse_quaternion(value);
    } catch (const InvalidInputError&) {
        // not a literal; treat as a file path below
    }
    if (inline_value) {
        if (rows != 1 || cols != 1)
            throw InvalidInputError("inline " + name + " needs a 1x1 parameter, expected " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
        QMatrix m(1, 1);
        m.set(0, 0, *inline_value);
        return m;
    }
    const MatrixFile f = MatrixFile::load(value);
    if (f.has(name)) return f.get(name);
    if (f.sections.size() == 1) return f.sections.begin()->second;
    throw InvalidInputError("parameter file \"" + value + "\" has no section \"" + name + "\"");
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

int cmd_canonical(const std::string& path, const Options& opt) {
    const MatrixFile in = MatrixFile::load(path);
    const HForm h(in.get("H"), opt.tol);
    const CanonicalForm form = canonical_form(in.get("A"), h, opt.tol);
    if (opt.json_format) {
        json doc = {{"blocks", blocks_json(form.blocks)},
                    {"S", matrix_json(form.S)},
                    {"residual_similarity", form.residuals.similarity},
                    {"residual_congruence", form.residuals.congruence}};
        std::cout << doc.dump(2) << "\n";
    } else {
        print_blocks_text(std::cout, form.blocks);
        std::cout << "residual_similarity: " << fmt(form.residuals.similarity) << "\n";
        std::cout << "residual_congruence: " << fmt(form.residuals.congruence) << "\n";
        print_matrix_text(std::cout, "S", form.S);
    }
    return kOk;
}

int cmd_sqrt(const std::string& path, bool report_only, const Options& opt) {
    const MatrixFile in = MatrixFile::load(path);
    const HForm h(in.get("H"), opt.tol);
    const QMatrix& b = in.get("A");
    const CanonicalForm form = canonical_form(b, h, opt.tol);
    const SqrtReport rep = sqrt_exists(form, opt.tol);
    if (report_only) {
        if (opt.json_format) {
            json doc = {{"exists", rep.exists},
                        {"negative_violations", blocks_json(rep.negative_violations)},
                        {"zero_violations", blocks_json(rep.zero_violations)}};
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << "exists: " << (rep.exists ? "true" : "false") << "\n";
            std::cout << "negative_violations: " << rep.negative_violations.size() << "\n";
            std::cout << "zero_violations: " << rep.zero_violations.size() << "\n";
        }
        return rep.exists ? kOk : kNonexistent;
    }
    std::optional<QMatrix> target;
    if (in.has("K")) target = in.get("K");
    const QMatrix root = sqrt_build(b, h, opt.tol, target);
    if (opt.json_format) {
        json doc = {{"A", matrix_json(root)}};
        std::cout << doc.dump(2) << "\n";
    } else {
        print_matrix_text(std::cout, "A", root);
    }
    return kOk;
}

std::string failing_condition(const PolarReport& rep) {
    if (!rep.cond_i) return "condition (i): negative-eigenvalue blocks do not pair up";
    if (!rep.cond_ii) return "condition (ii): zero blocks do not pair up";
    return "condition (iii): " + rep.kernel_witness;
}

int cmd_polar(const std::string& path, bool report_only, const Options& opt) {
    const MatrixFile in = MatrixFile::load(path);
    const HForm h(in.get("H"), opt.tol);
    const QMatrix& x = in.get("X");
    const PolarReport rep = polar_exists(x, h, opt.tol);
    if (report_only) {
        if (opt.json_format) {
            json doc = {{"exists", rep.exists},
                        {"condition_i", rep.cond_i},
                        {"condition_ii", rep.cond_ii},
                        {"condition_iii", rep.cond_iii},
                        {"kernel_witness", rep.kernel_witness},
                        {"blocks", blocks_json(rep.form.blocks)}};
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << "exists: " << (rep.exists ? "true" : "false") << "\n";
            std::cout << "condition_i: " << (rep.cond_i ? "pass" : "fail") << "\n";
            std::cout << "condition_ii: " << (rep.cond_ii ? "pass" : "fail") << "\n";
            std::cout << "condition_iii: " << (rep.cond_iii ? "pass" : "fail") << "\n";
            if (!rep.exists) std::cout << "failure: " << failing_condition(rep) << "\n";
        }
        return rep.exists ? kOk : kNonexistent;
    }
    if (!rep.exists) {
        std::cout << "nonexistent: " << failing_condition(rep) << "\n";
        return kNonexistent;
    }
    const PolarDecomposition dec = polar_decompose(x, h, opt.tol);
    if (opt.json_format) {
        json doc = {{"U", matrix_json(dec.u)},
                    {"A", matrix_json(dec.a)},
                    {"residual_factor", dec.residuals.factor},
                    {"residual_unitarity", dec.residuals.unitarity},
                    {"residual_selfadjoint", dec.residuals.selfadjoint},
                    {"residual_kernel", dec.residuals.kernel}};
        std::cout << doc.dump(2) << "\n";
    } else {
        print_matrix_text(std::cout, "U", dec.u);
        print_matrix_text(std::cout, "A", dec.a);
        std::cout << "residual_factor: " << fmt(dec.residuals.factor) << "\n";
        std::cout << "residual_unitarity: " << fmt(dec.residuals.unitarity) << "\n";
        std::cout << "residual_selfadjoint: " << fmt(dec.residuals.selfadjoint) << "\n";
        std::cout << "residual_kernel: " << fmt(dec.residuals.kernel) << "\n";
    }
    return kOk;
}

int cmd_verify(const std::string& path, const Options& opt) {
    const MatrixFile in = MatrixFile::load(path);
    const HForm h(in.get("H"), opt.tol);
    const PolarResiduals res = verify_polar(in.get("X"), h, in.get("U"), in.get("A"), opt.tol);
    if (opt.json_format) {
        json doc = {{"ok", res.ok},
                    {"residual_factor", res.factor},
                    {"residual_unitarity", res.unitarity},
                    {"residual_selfadjoint", res.selfadjoint},
                    {"residual_kernel", res.kernel},
                    {"kernel_match", res.kernel_match}};
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "ok: " << (res.ok ? "true" : "false") << "\n";
        std::cout << "residual_factor: " << fmt(res.factor) << "\n";
        std::cout << "residual_unitarity: " << fmt(res.unitarity) << "\n";
        std::cout << "residual_selfadjoint: " << fmt(res.selfadjoint) << "\n";
        std::cout << "residual_kernel: " << fmt(res.kernel) << "\n";
        std::cout << "kernel_match: " << (res.kernel_match ? "true" : "false") << "\n";
    }
    return res.ok ? kOk : kNonexistent;
}

int cmd_witt(const std::string& path, const std::string& p1s, const std::string& p2s,
             const std::string& p3s, const Options& opt) {
    const MatrixFile in = MatrixFile::load(path);
    const HForm h1(in.get("H"), opt.tol);
    const HForm h2 = in.has("H2") ? HForm(in.get("H2"), opt.tol) : h1;
    IsometryPairs u0;
    u0.basis = in.get("V");
    u0.images = in.has("W") ? in.get("W") : u0.basis;
    QMatrix u;
    if (p1s.empty() && p2s.empty() && p3s.empty()) {
        u = extend_isometry(u0, h1, h2, opt.tol);
    } else {
        const WittBasis wb = witt_basis(u0, h1, h2, opt.tol);
        const Eigen::Index m0 = wb.profile.m0;
        const Eigen::Index c = h1.dim() - wb.profile.m() - m0;
        WittParams params{QMatrix::Identity(c), QMatrix(c, m0), QMatrix(m0, m0)};
        if (!p1s.empty()) params.p1 = load_param(p1s, "P1", c, c);
        if (!p2s.empty()) params.p2 = load_param(p2s, "P2", c, m0);
        if (!p3s.empty()) params.p3 = load_param(p3s, "P3", m0, m0);
        u = witt_from_params(u0, wb, params, h1, h2, opt.tol);
    }
    if (opt.json_format) {
        json doc = {{"U", matrix_json(u)}};
        std::cout << doc.dump(2) << "\n";
    } else {
        print_matrix_text(std::cout, "U", u);
    }
    return kOk;
}

int cmd_gen(const std::string& spec, Seed seed, double cond_cap, bool polar_instance) {
    const std::vector<CanonicalBlock> blocks = parse_blockspec(spec);
    MatrixFile out;
    if (polar_instance) {
        const GeneratedPolarInstance inst = gen_polar_instance(blocks, seed);
        out.sections.emplace("X", inst.x);
        out.sections.emplace("H", inst.h.matrix());
        out.sections.emplace("U", inst.ground.u);
        out.sections.emplace("A", inst.ground.a);
    } else {
        const GeneratedPair pair = gen_selfadjoint_pair(blocks, seed, cond_cap);
        out.sections.emplace("A", pair.a);
        out.sections.emplace("H", pair.h.matrix());
        out.sections.emplace("S", pair.s_true);
    }
    std::cout << out.serialize();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Canonical forms, square roots, isometry extensions, and polar "
                 "decompositions in quaternion indefinite inner product spaces"};
    app.require_subcommand(1);

    Options opt;
    std::string format = "text";
    app.add_option("--tol", opt.tol.residual_tol, "certification threshold");
    app.add_option("--rank-tol", opt.tol.rank_tol, "relative singular-value threshold");
    app.add_option("--cluster-radius", opt.tol.cluster_radius, "eigenvalue grouping radius");
    app.add_option("--format", format, "report format: text or json")
        ->check(CLI::IsMember({"text", "json"}));

    std::string in_canonical, in_sqrt, in_polar, in_verify, in_witt;
    bool sqrt_report = false, polar_report = false;
    std::string p1s, p2s, p3s;
    std::string gen_spec;
    Seed seed = 0;
    double cond_cap = 1e6;
    bool gen_polar = false;

    auto* sc_canonical = app.add_subcommand("canonical", "canonical form of (A, H)");
    sc_canonical->add_option("input", in_canonical, "matrix document with A, H")->required();

    auto* sc_sqrt = app.add_subcommand("sqrt", "H-selfadjoint square root of A");
    sc_sqrt->add_option("input", in_sqrt, "matrix document with A, H (optional K)")->required();
    sc_sqrt->add_flag("--report-only", sqrt_report, "existence report only");

    auto* sc_polar = app.add_subcommand("polar", "H-polar decomposition X = U A");
    sc_polar->add_option("input", in_polar, "matrix document with X, H")->required();
    sc_polar->add_flag("--report-only", polar_report, "existence report only");

    auto* sc_verify = app.add_subcommand("verify", "re-verify a decomposition");
    sc_verify->add_option("input", in_verify, "matrix document with X, H, U, A")->required();

    auto* sc_witt = app.add_subcommand("witt", "extend an isometry given on a subspace");
    sc_witt->add_option("input", in_witt, "matrix document with V, H (optional W, H2)")
        ->required();
    sc_witt->add_option("--p1", p1s, "J2-unitary parameter (file or inline)");
    sc_witt->add_option("--p2", p2s, "coupling parameter (file or inline)");
    sc_witt->add_option("--p3", p3s, "skew-Hermitian parameter (file or inline)");

    auto* sc_gen = app.add_subcommand("gen", "generate a structured instance");
    sc_gen->add_option("blocks", gen_spec, "block spec, e.g. \"0:2:+,0:1:+\"")->required();
    sc_gen->add_option("--seed", seed, "pseudorandom seed");
    sc_gen->add_option("--cond-cap", cond_cap, "condition cap for the similarity");
    sc_gen->add_flag("--polar", gen_polar, "emit a decomposable polar instance (X, H, U, A)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    opt.json_format = format == "json";
    try {
        opt.tol.validate();
        if (sc_canonical->parsed()) return cmd_canonical(in_canonical, opt);
        if (sc_sqrt->parsed()) return cmd_sqrt(in_sqrt, sqrt_report, opt);
        if (sc_polar->parsed()) return cmd_polar(in_polar, polar_report, opt);
        if (sc_verify->parsed()) return cmd_verify(in_verify, opt);
        if (sc_witt->parsed()) return cmd_witt(in_witt, p1s, p2s, p3s, opt);
        if (sc_gen->parsed()) return cmd_gen(gen_spec, seed, cond_cap, gen_polar);
    } catch (const NonexistenceError& e) {
        std::cerr << "nonexistent: " << e.what() << "\n";
        return kNonexistent;
    } catch (const InvalidInputError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kInvalid;
    } catch (const AmbiguityError& e) {
        std::cerr << "numerical ambiguity: " << e.what() << "\n";
        return kAmbiguous;
    }
    return kInvalid;
}
