#include "isolab/quat.hpp"

namespace isolab {

static QVec unit(int i) {
    QVec x{0, 0, 0, 0};
    x[i] = 1;
    return x;
}

Frame::Frame(const EndoLab& L, int v) : L_(&L), v_(v) {
    f_.push_back(L.scalar(v, 1));
    t_.push_back(2);
    B_ = {{mpq_class(2)}};
    Binv_ = {{mpq_class(1, 2)}};
}

QVec Frame::one() const { return unit(0); }

// pair(y, f_i) = Tr(y) Tr(f_i) - Tr(y f_i) for the current frame
std::vector<mpq_class> Frame::pairings(const EndoRep& y, mpz_class& tr, mpz_class& dg) const {
    if (y.domain() != v_ || !y.is_endo()) throw Error("InvalidArgument", "element of another curve");
    tr = L_->trace(y);
    dg = L_->degree(y);
    std::vector<mpq_class> b;
    b.push_back(tr);
    for (int i = 1; i < rank(); ++i) b.push_back(tr * t_[i] - L_->trace(L_->compose(y, f_[i])));
    return b;
}

std::optional<QVec> Frame::coords_in_span(const EndoRep& y) const {
    mpz_class tr, dg;
    auto b = pairings(y, tr, dg);
    int r = rank();
    QVec x{0, 0, 0, 0};
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) x[i] += Binv_[i][j] * b[j];
    if (pair(x, x) != 2 * dg) return std::nullopt;
    return x;
}

void Frame::add(const EndoRep& y) {
    if (rank() == 4) throw Error("InternalError", "frame already has rank 4");
    mpz_class tr, dg;
    auto b = pairings(y, tr, dg);
    int r = rank();
    for (int i = 0; i < r; ++i) B_[i].push_back(b[i]);
    b.push_back(2 * dg);
    B_.push_back(b);
    f_.push_back(y);
    t_.push_back(tr);
    auto inv = zla::inverse(B_);
    if (!inv) throw Error("InternalError", "frame became degenerate");
    Binv_ = *inv;
    act_.clear();
    if (rank() == 4) build_table();
}

void Frame::build_table() {
    for (int i = 0; i < 4; ++i) {
        table_[0][i] = unit(i);
        table_[i][0] = unit(i);
    }
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) {
            auto x = coords_in_span(L_->compose(f_[i], f_[j]));
            if (!x) throw Error("InternalError", "product left the rank 4 span");
            table_[i][j] = *x;
        }
}

QVec Frame::coords(const EndoRep& y) {
    if (auto x = coords_in_span(y)) return *x;
    add(y);
    return unit(rank() - 1);
}

mpq_class Frame::pair(const QVec& x, const QVec& y) const {
    mpq_class s = 0;
    int r = rank();
    for (int i = 0; i < r; ++i) {
        if (x[i] == 0) continue;
        for (int j = 0; j < r; ++j)
            if (y[j] != 0) s += x[i] * B_[i][j] * y[j];
    }
    return s;
}

mpq_class Frame::trd(const QVec& x) const {
    mpq_class s = 0;
    for (int i = 0; i < rank(); ++i) s += x[i] * t_[i];
    return s;
}

mpq_class Frame::nrd(const QVec& x) const { return pair(x, x) / 2; }

mpq_class Frame::trd_mul(const QVec& x, const QVec& y) const { return trd(x) * trd(y) - pair(x, y); }

QVec Frame::conj(const QVec& x) const {
    QVec r;
    for (int i = 0; i < 4; ++i) r[i] = -x[i];
    r[0] += trd(x);
    return r;
}

QVec Frame::mul(const QVec& x, const QVec& y) const {
    if (rank() != 4) throw Error("NotRankFour", "multiplication table needs a full frame");
    QVec r{0, 0, 0, 0};
    for (int i = 0; i < 4; ++i) {
        if (x[i] == 0) continue;
        for (int j = 0; j < 4; ++j) {
            if (y[j] == 0) continue;
            mpq_class c = x[i] * y[j];
            for (int k = 0; k < 4; ++k) r[k] += c * table_[i][j][k];
        }
    }
    return r;
}

Mat2 Frame::action(const ZVec& x, u64 M) const {
    auto it = act_.find(M);
    if (it == act_.end()) {
        std::vector<Mat2> a;
        for (auto& f : f_) a.push_back(L_->action(f, M));
        it = act_.emplace(M, std::move(a)).first;
    }
    Mat2 r{0, 0, 0, 0};
    for (int i = 0; i < rank(); ++i)
        if (x[i] != 0) r = mat2::add(r, mat2::scale(it->second[i], x[i], M), M);
    return r;
}

EndoRep Frame::numerator(const ZVec& x) const {
    std::vector<mpz_class> c;
    std::vector<EndoRep> xs;
    for (int i = 0; i < rank(); ++i)
        if (x[i] != 0) {
            c.push_back(x[i]);
            xs.push_back(f_[i]);
        }
    if (xs.empty()) return L_->scalar(v_, 0);
    return L_->lincomb(c, xs);
}

EndoRep Frame::realize(const QVec& x) const {
    mpz_class d = 1;
    for (auto& c : x) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), c.get_den_mpz_t());
    ZVec z(4);
    for (int i = 0; i < 4; ++i) {
        mpq_class v = x[i] * d;
        z[i] = v.get_num();
    }
    EndoRep n = numerator(z);
    return d == 1 ? n : L_->div_exact(n, d);
}

nlohmann::json Frame::to_json() const {
    nlohmann::json j;
    j["vertex"] = v_;
    j["elements"] = nlohmann::json::array();
    for (auto& f : f_) j["elements"].push_back(L_->to_json(f));
    nlohmann::json g = nlohmann::json::array();
    for (auto& r : B_) {
        nlohmann::json row = nlohmann::json::array();
        for (auto& x : r) row.push_back(x.get_str());
        g.push_back(row);
    }
    j["pairing"] = g;
    return j;
}

}  // namespace isolab
