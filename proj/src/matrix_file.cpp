#include "qindef/matrix_file.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qindef {

using nlohmann::json;

const QMatrix& MatrixFile::get(const std::string& name) const {
    const auto it = sections.find(name);
    if (it == sections.end())
        throw InvalidInputError("MatrixFile: missing section \"" + name + "\"");
    return it->second;
}

std::string MatrixFile::serialize() const {
    json doc = json::object();
    for (const auto& [name, m] : sections) {
        json entries = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const Quaternion q = m(i, j);
                row.push_back(json::array({q.x0, q.x1, q.x2, q.x3}));
            }
            entries.push_back(row);
        }
        doc[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
    }
    return doc.dump(2) + "\n";
}

MatrixFile MatrixFile::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInputError(std::string("MatrixFile: malformed document: ") + e.what());
    }
    if (!doc.is_object()) throw InvalidInputError("MatrixFile: top level must be an object");
    MatrixFile out;
    for (const auto& [name, sec] : doc.items()) {
        try {
            const Eigen::Index rows = sec.at("rows").get<Eigen::Index>();
            const Eigen::Index cols = sec.at("cols").get<Eigen::Index>();
            if (rows < 0 || cols < 0)
                throw InvalidInputError("MatrixFile: negative dimensions");
            const json& entries = sec.at("entries");
            if (static_cast<Eigen::Index>(entries.size()) != rows)
                throw InvalidInputError("MatrixFile: row count mismatch");
            QMatrix m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i) {
                const json& row = entries.at(static_cast<size_t>(i));
                if (static_cast<Eigen::Index>(row.size()) != cols)
                    throw InvalidInputError("MatrixFile: column count mismatch");
                for (Eigen::Index j = 0; j < cols; ++j) {
                    const json& q = row.at(static_cast<size_t>(j));
                    if (q.size() != 4)
                        throw InvalidInputError("MatrixFile: entries must be quadruples");
                    m.set(i, j,
                          Quaternion(q.at(0).get<double>(), q.at(1).get<double>(),
                                     q.at(2).get<double>(), q.at(3).get<double>()));
                }
            }
            out.sections.emplace(name, std::move(m));
        } catch (const json::exception& e) {
            throw InvalidInputError("MatrixFile: bad section \"" + name + "\": " + e.what());
        }
    }
    return out;
}

MatrixFile MatrixFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("MatrixFile: cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void MatrixFile::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("MatrixFile: cannot write \"" + path + "\"");
    out << serialize();
}

}  // namespace qindef
