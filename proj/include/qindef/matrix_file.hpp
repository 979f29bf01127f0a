#pragma once

#include <map>
#include <string>

#include "qindef/numeric.hpp"
#include "qindef/qmatrix.hpp"

namespace qindef {

/// Named matrix sections serialized as a JSON text document. Each section
/// holds rows/cols and the entries as [x0, x1, x2, x3] quadruples in
/// row-major nested lists; the writer-reader round trip is lossless.
struct MatrixFile {
    std::map<std::string, QMatrix> sections;

    bool has(const std::string& name) const { return sections.count(name) > 0; }
    const QMatrix& get(const std::string& name) const;

    std::string serialize() const;
    static MatrixFile parse(const std::string& text);
    static MatrixFile load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace qindef
