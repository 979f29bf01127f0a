#include "qindef/qmatrix.hpp"

#include <ostream>

namespace qindef {

std::ostream& operator<<(std::ostream& os, const Quaternion& q) {
    return os << '[' << q.x0 << ',' << q.x1 << ',' << q.x2 << ',' << q.x3 << ']';
}

ComplexMatrix omega_embed(const QMatrix& a) {
    const Eigen::Index r = a.rows(), c = a.cols();
    ComplexMatrix m(2 * r, 2 * c);
    m.topLeftCorner(r, c) = a.part1();
    m.topRightCorner(r, c) = a.part2().conjugate();
    m.bottomLeftCorner(r, c) = -a.part2();
    m.bottomRightCorner(r, c) = a.part1().conjugate();
    return m;
}

ComplexMatrix phi_cols(const QMatrix& a) {
    ComplexMatrix m(2 * a.rows(), a.cols());
    m.topRows(a.rows()) = a.part1();
    m.bottomRows(a.rows()) = -a.part2();
    return m;
}

QMatrix phi_pullback(const ComplexMatrix& z) {
    const Eigen::Index n = z.rows() / 2;
    return QMatrix(z.topRows(n), -z.bottomRows(n));
}

ComplexMatrix structure_map(const ComplexMatrix& z) {
    const Eigen::Index n = z.rows() / 2;
    ComplexMatrix out(z.rows(), z.cols());
    out.topRows(n) = z.bottomRows(n).conjugate();
    out.bottomRows(n) = -z.topRows(n).conjugate();
    return out;
}

Quaternion dot(const QMatrix& u, const QMatrix& v) {
    const QMatrix d = u.adjoint() * v;
    return d(0, 0);
}

}  // namespace qindef
