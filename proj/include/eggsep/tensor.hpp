#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

namespace eggsep {

// Dense row-major tensor of 64-bit reals. The universal value type for
// signals, parameters and gradients.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s);
    static Tensor full(std::vector<std::size_t> s, double v);
    static Tensor scalar(double v);
    static Tensor vec(std::initializer_list<double> v);
    static Tensor matrix(std::size_t r, std::size_t c, std::initializer_list<double> v);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return numel() == 1; }

    // 2-D accessors; throw unless rank()==2
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
    double min_value() const;
    double max_value() const;
    double norm2() const;
    double abs_sum() const;
    double sum_value() const;

    std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& s);

// ---- elementwise / linear algebra kernels (no autodiff; graph ops reuse these) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a / (b + eps); the safe-division idiom used by masks and ratio diagnostics
Tensor div_eps(const Tensor& a, const Tensor& b, double eps = 1e-8);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor transpose(const Tensor& a);
// C = A*B for A [m x k], B [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A^T * G for A [m x k], G [m x n]; gives [k x n] without materializing A^T
Tensor matmul_tn(const Tensor& a, const Tensor& g);
// out[i,j] = m[i,j] + bias[j]
Tensor row_bias(const Tensor& m, const Tensor& bias);
double dot(const Tensor& a, const Tensor& b);
double mean_value(const Tensor& a);

void ensure_finite(const Tensor& t, const char* what);

// ---- EGT1 binary tensor file ----
// magic "EGT1", u32 rank, u32 extents (little-endian), f64 little-endian payload.

void write_egt(const Tensor& t, std::ostream& os);
Tensor read_egt(std::istream& is);
void write_egt_file(const Tensor& t, const std::string& path);
Tensor read_egt_file(const std::string& path);

// Stack n same-shape samples into one [n, ...] tensor and back.
Tensor stack(const std::vector<Tensor>& samples);
std::vector<Tensor> unstack(const Tensor& stacked);

}  // namespace eggsep
