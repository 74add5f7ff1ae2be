#include "eggsep/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace eggsep {

std::size_t shape_numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) {
        if (e == 0) throw std::invalid_argument("tensor extent must be positive");
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw std::invalid_argument("tensor shape/data mismatch: " + shape_str() + " vs " +
                                    std::to_string(data.size()) + " values");
}

Tensor Tensor::zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vec(std::initializer_list<double> v) {
    return Tensor({v.size()}, std::vector<double>(v));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::initializer_list<double> v) {
    return Tensor({r, c}, std::vector<double>(v));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw std::invalid_argument("rows(): tensor is not 2-D, shape " + shape_str());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw std::invalid_argument("cols(): tensor is not 2-D, shape " + shape_str());
    return shape[1];
}

double& Tensor::at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
double Tensor::at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : data) m = std::min(m, v);
    return m;
}

double Tensor::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : data) m = std::max(m, v);
    return m;
}

double Tensor::norm2() const { return std::sqrt(dot(*this, *this)); }

double Tensor::abs_sum() const {
    double s = 0.0;
    for (double v : data) s += std::abs(v);
    return s;
}

double Tensor::sum_value() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

void ensure_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) throw std::runtime_error(std::string(what) + ": non-finite value produced");
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] + b.data[i];
    ensure_finite(out, "add");
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] - b.data[i];
    ensure_finite(out, "sub");
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] * b.data[i];
    ensure_finite(out, "mul");
    return out;
}

Tensor div_eps(const Tensor& a, const Tensor& b, double eps) {
    check_same_shape(a, b, "div_eps");
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] / (b.data[i] + eps);
    ensure_finite(out, "div_eps");
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] * s;
    ensure_finite(out, "scale");
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
    return out;
}

Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[j * m + i] = a.data[i * n + j];
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols();
    if (b.rows() != k)
        throw std::invalid_argument("matmul: inner dimensions differ, " + a.shape_str() + " * " +
                                    b.shape_str());
    const std::size_t n = b.cols();
    Tensor out({m, n});
    const double* A = a.data.data();
    const double* B = b.data.data();
    double* C = out.data.data();
    // Each C element accumulates over p in ascending order in both branches,
    // so the two loop orders produce bit-identical results. The p-outer form
    // streams B exactly once and is used while C stays cache-resident.
    if (m * n <= 64 * 1024) {
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = B + p * n;
            for (std::size_t i = 0; i < m; ++i) {
                const double aip = A[i * k + p];
                double* ci = C + i * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            double* ci = C + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = A[i * k + p];
                const double* bp = B + p * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
            }
        }
    }
    ensure_finite(out, "matmul");
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& g) {
    const std::size_t m = a.rows(), k = a.cols();
    if (g.rows() != m)
        throw std::invalid_argument("matmul_tn: leading dimensions differ, " + a.shape_str() + " vs " +
                                    g.shape_str());
    const std::size_t n = g.cols();
    Tensor out({k, n});
    const double* A = a.data.data();
    const double* G = g.data.data();
    double* C = out.data.data();
    // j-chunked so the touched C panel stays cache-resident; chunking leaves
    // each element's accumulation order over i unchanged.
    constexpr std::size_t kChunk = 512;
    for (std::size_t j0 = 0; j0 < n; j0 += kChunk) {
        const std::size_t j1 = std::min(n, j0 + kChunk);
        for (std::size_t i = 0; i < m; ++i) {
            const double* gi = G + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = A[i * k + p];
                double* cp = C + p * n;
                for (std::size_t j = j0; j < j1; ++j) cp[j] += aip * gi[j];
            }
        }
    }
    ensure_finite(out, "matmul_tn");
    return out;
}

Tensor row_bias(const Tensor& m, const Tensor& bias) {
    const std::size_t r = m.rows(), c = m.cols();
    if (bias.rank() != 1 || bias.numel() != c)
        throw std::invalid_argument("row_bias: bias shape " + bias.shape_str() + " does not match columns of " +
                                    m.shape_str());
    Tensor out(m.shape);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = m.data[i * c + j] + bias.data[j];
    ensure_finite(out, "row_bias");
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double mean_value(const Tensor& a) { return a.sum_value() / static_cast<double>(a.numel()); }

// ---- EGT1 ----

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("EGT1: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("EGT1: truncated payload");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void write_egt(const Tensor& t, std::ostream& os) {
    os.write("EGT1", 4);
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape) put_u32(os, static_cast<std::uint32_t>(e));
    for (double v : t.data) put_f64(os, v);
    if (!os) throw std::runtime_error("EGT1: write failed");
}

Tensor read_egt(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "EGT1", 4) != 0) throw std::runtime_error("EGT1: bad magic");
    const std::uint32_t rank = get_u32(is);
    if (rank > 8) throw std::runtime_error("EGT1: implausible rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) {
        e = get_u32(is);
        if (e == 0) throw std::runtime_error("EGT1: zero extent");
    }
    Tensor t(shape);
    for (double& v : t.data) v = get_f64(is);
    return t;
}

void write_egt_file(const Tensor& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_egt(t, os);
}

Tensor read_egt_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_egt(is);
}

Tensor stack(const std::vector<Tensor>& samples) {
    if (samples.empty()) throw std::invalid_argument("stack: empty sample list");
    const Tensor& first = samples.front();
    std::vector<std::size_t> shape{samples.size()};
    shape.insert(shape.end(), first.shape.begin(), first.shape.end());
    Tensor out(shape);
    const std::size_t n = first.numel();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].same_shape(first))
            throw std::invalid_argument("stack: sample " + std::to_string(i) + " has shape " +
                                        samples[i].shape_str() + ", expected " + first.shape_str());
        std::copy(samples[i].data.begin(), samples[i].data.end(), out.data.begin() + i * n);
    }
    return out;
}

std::vector<Tensor> unstack(const Tensor& stacked) {
    if (stacked.rank() < 2) throw std::invalid_argument("unstack: tensor rank must be >= 2");
    const std::size_t count = stacked.shape[0];
    std::vector<std::size_t> shape(stacked.shape.begin() + 1, stacked.shape.end());
    const std::size_t n = shape_numel(shape);
    std::vector<Tensor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor t(shape);
        std::copy(stacked.data.begin() + i * n, stacked.data.begin() + (i + 1) * n, t.data.begin());
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace eggsep
