#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "perihom/lattice.hpp"
#include "perihom/model.hpp"

namespace perihom {

// Uniform N^d grid on [0, L)^d, row-major node numbering (axis 0 slowest).
struct TorusGrid {
  int dim = 2;
  int n = 32;
  double length = 1.0;

  TorusGrid() = default;
  TorusGrid(int d, int nodes_per_axis, double box_length = 1.0);

  double spacing() const { return length / n; }
  double cell_volume() const;
  std::size_t size() const;
  std::array<int, 3> index(std::size_t node) const;
  std::size_t node(const std::array<int, 3>& idx) const;  // wraps modulo n
  Point coord(std::size_t node) const;
  bool operator==(const TorusGrid& o) const {
    return dim == o.dim && n == o.n && length == o.length;
  }
};

// Tensor of rank r per node, d^r components, stored component-major.
class PeriodicField {
 public:
  PeriodicField() = default;
  PeriodicField(const TorusGrid& grid, int rank);

  const TorusGrid& grid() const { return grid_; }
  int rank() const { return rank_; }
  int components() const { return components_; }
  std::size_t nodes() const { return nodes_; }

  double* component(int c) { return data_.data() + c * nodes_; }
  const double* component(int c) const { return data_.data() + c * nodes_; }
  double& at(std::size_t node, int c) { return data_[c * nodes_ + node]; }
  double at(std::size_t node, int c) const { return data_[c * nodes_ + node]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  PeriodicField& operator+=(const PeriodicField& o);
  PeriodicField& operator-=(const PeriodicField& o);
  PeriodicField& operator*=(double s);

 private:
  TorusGrid grid_;
  int rank_ = 0;
  int components_ = 1;
  std::size_t nodes_ = 0;
  std::vector<double> data_;
};

PeriodicField operator+(PeriodicField a, const PeriodicField& b);
PeriodicField operator-(PeriodicField a, const PeriodicField& b);
PeriodicField operator*(double s, PeriodicField a);

void require_same_grid(const PeriodicField& a, const PeriodicField& b, const char* where);

// Discrete L2 inner product and norm with the nodal cell volume.
double inner(const PeriodicField& a, const PeriodicField& b);
double norm(const PeriodicField& a);
double max_abs(const PeriodicField& a);

std::vector<double> mean(const PeriodicField& v);
PeriodicField project_mean_zero(const PeriodicField& v);

PeriodicField sample_scalar(const TorusGrid& grid, const std::function<double(const Point&)>& f);

// Real-to-complex FFT on a d-dimensional periodic grid. Plans use FFTW_ESTIMATE
// and private aligned buffers, so results are bitwise reproducible. Not
// thread-safe: one plan instance per grid shape is shared process-wide.
class FftPlan {
 public:
  static const FftPlan& get(int dim, int n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  void forward(const double* in, std::complex<double>* out) const;
  // Inverse including the 1/N^d normalization.
  void backward(const std::complex<double>* in, double* out) const;
  // Signed integer wavenumbers of a spectral index; last axis is halved.
  std::array<int, 3> wavenumber(std::size_t spectral_index) const;

 private:
  FftPlan(int dim, int n);
  int dim_, n_;
  std::size_t real_size_, spectral_size_;
  double* rbuf_;
  void* cbuf_;
  void* fwd_;
  void* bwd_;
};

// Periodized lattice field: out(q) = sum over lattice offsets z = n*s with
// n = q (mod N) of fn(z, weight). Offsets are folded into the fundamental cell;
// image shells are counted per axis. shells < 0 selects the required count.
int required_shells(const LatticeKernel& kernel, const TorusGrid& grid);
PeriodicField periodize(const LatticeKernel& kernel, const TorusGrid& grid, int rank, int shells,
                        const std::function<void(const Point& z, double w, double* out)>& fn);

// Matrix kernel weights omega_n z(x)z/|z|^2 folded onto the grid; node values of
// the periodized kernel are weights / spacing^d with spacing in kernel units.
struct PeriodizedMatrixKernel {
  TorusGrid grid;
  double spacing = 0.0;
  int shells = 0;
  PeriodicField weights;  // rank 2

  double node_value(std::size_t node, int i, int j) const;
};

PeriodizedMatrixKernel build_periodized_kernel(const LatticeKernel& kernel, const TorusGrid& grid,
                                               int shells = -1);
PeriodizedMatrixKernel build_periodized_kernel(const KernelSpec& spec, const TorusGrid& grid, int shells,
                                               const QuadratureConfig& quad = {});

// Cached spectra of a rank-r weight field for cyclic convolutions
// (W * v)(q) = sum_y W(q - y) v(y).
class SpectralKernel {
 public:
  SpectralKernel() = default;
  explicit SpectralKernel(const PeriodicField& weights);

  const TorusGrid& grid() const { return grid_; }
  int rank() const { return rank_; }
  // out_I = sum_j W_{I j} * v_j for rank-1 v; output rank r - 1.
  PeriodicField contract(const PeriodicField& v) const;
  // out_I = W_I * s for scalar s; output rank r.
  PeriodicField scalar(const PeriodicField& s) const;
  // sum over nodes of each component.
  const std::vector<double>& totals() const { return totals_; }

 private:
  TorusGrid grid_;
  int rank_ = 0;
  std::vector<std::vector<std::complex<double>>> spectra_;
  std::vector<double> totals_;
};

// (K * v)(q) = h^d sum_y K(q - y) v(y) with K the periodized node values.
PeriodicField periodic_convolve(const PeriodizedMatrixKernel& kernel, const PeriodicField& v);

// Spectral derivatives on the box [0, L)^d.
// gradient: rank 1 -> rank 2, (k, l) = d u_k / d x_l.
// hessian:  rank 1 -> rank 3, (l, j, k) = d^2 u_l / d x_j d x_k.
PeriodicField gradient(const PeriodicField& u);
PeriodicField hessian(const PeriodicField& u);

// Binary format: uint64 LE header length, JSON header
// {format, dimension, N, rank, box_length, layout}, then float64 LE values.
void write_field(const std::string& path, const PeriodicField& f);
PeriodicField read_field(const std::string& path);

}  // namespace perihom
