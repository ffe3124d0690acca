#include "perihom/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "perihom/errors.hpp"
#include "perihom/tensor.hpp"

namespace perihom {

TorusGrid::TorusGrid(int d, int nodes_per_axis, double box_length)
    : dim(d), n(nodes_per_axis), length(box_length) {
  if (d < 1 || d > 3) throw ArgumentError("grid dimension must be 1, 2 or 3");
  if (n < 4 || n % 2 != 0) throw ArgumentError("grid needs N >= 4 and even, got " + std::to_string(n));
  if (!(length > 0.0)) throw ArgumentError("box length must be positive");
}

double TorusGrid::cell_volume() const { return std::pow(spacing(), dim); }

std::size_t TorusGrid::size() const {
  std::size_t s = 1;
  for (int i = 0; i < dim; ++i) s *= n;
  return s;
}

std::array<int, 3> TorusGrid::index(std::size_t node) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(node % n);
    node /= n;
  }
  return idx;
}

std::size_t TorusGrid::node(const std::array<int, 3>& idx) const {
  std::size_t f = 0;
  for (int i = 0; i < dim; ++i) {
    int v = idx[i] % n;
    if (v < 0) v += n;
    f = f * n + v;
  }
  return f;
}

Point TorusGrid::coord(std::size_t node) const {
  auto idx = index(node);
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) p[i] = idx[i] * spacing();
  return p;
}

PeriodicField::PeriodicField(const TorusGrid& grid, int rank)
    : grid_(grid), rank_(rank), components_(ipow(grid.dim, rank)), nodes_(grid.size()) {
  if (rank < 0 || rank > 4) throw ArgumentError("field rank must be 0..4");
  data_.assign(nodes_ * components_, 0.0);
}

void require_same_grid(const PeriodicField& a, const PeriodicField& b, const char* where) {
  if (!(a.grid() == b.grid()) || a.rank() != b.rank())
    throw ArgumentError(std::string(where) + ": grid or rank mismatch");
}

PeriodicField& PeriodicField::operator+=(const PeriodicField& o) {
  require_same_grid(*this, o, "field +=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

PeriodicField& PeriodicField::operator-=(const PeriodicField& o) {
  require_same_grid(*this, o, "field -=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

PeriodicField& PeriodicField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
PeriodicField operator*(double s, PeriodicField a) { return a *= s; }

double inner(const PeriodicField& a, const PeriodicField& b) {
  require_same_grid(a, b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
  return s * a.grid().cell_volume();
}

double norm(const PeriodicField& a) { return std::sqrt(inner(a, a)); }

double max_abs(const PeriodicField& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::fabs(v));
  return m;
}

std::vector<double> mean(const PeriodicField& v) {
  std::vector<double> m(v.components(), 0.0);
  for (int c = 0; c < v.components(); ++c) {
    const double* p = v.component(c);
    double s = 0.0;
    for (std::size_t k = 0; k < v.nodes(); ++k) s += p[k];
    m[c] = s / static_cast<double>(v.nodes());
  }
  return m;
}

PeriodicField project_mean_zero(const PeriodicField& v) {
  PeriodicField out = v;
  auto m = mean(v);
  for (int c = 0; c < v.components(); ++c) {
    double* p = out.component(c);
    for (std::size_t k = 0; k < v.nodes(); ++k) p[k] -= m[c];
  }
  return out;
}

PeriodicField sample_scalar(const TorusGrid& grid, const std::function<double(const Point&)>& f) {
  PeriodicField out(grid, 0);
  for (std::size_t k = 0; k < grid.size(); ++k) out.at(k, 0) = f(grid.coord(k));
  return out;
}

// ---------------------------------------------------------------------------
// FFT

const FftPlan& FftPlan::get(int dim, int n) {
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
  auto key = std::make_pair(dim, n);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::unique_ptr<FftPlan>(new FftPlan(dim, n))).first;
  return *it->second;
}

FftPlan::FftPlan(int dim, int n) : dim_(dim), n_(n) {
  int dims[3] = {n, n, n};
  real_size_ = 1;
  for (int i = 0; i < dim; ++i) real_size_ *= n;
  spectral_size_ = real_size_ / n * (n / 2 + 1);
  rbuf_ = fftw_alloc_real(real_size_);
  fftw_complex* c = fftw_alloc_complex(spectral_size_);
  cbuf_ = c;
  fwd_ = fftw_plan_dft_r2c(dim, dims, rbuf_, c, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_c2r(dim, dims, c, rbuf_, FFTW_ESTIMATE);
}

FftPlan::~FftPlan() {
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

void FftPlan::forward(const double* in, std::complex<double>* out) const {
  std::memcpy(rbuf_, in, real_size_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::memcpy(static_cast<void*>(out), cbuf_, spectral_size_ * sizeof(fftw_complex));
}

void FftPlan::backward(const std::complex<double>* in, double* out) const {
  std::memcpy(cbuf_, static_cast<const void*>(in), spectral_size_ * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(bwd_));
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t k = 0; k < real_size_; ++k) out[k] = rbuf_[k] * scale;
}

std::array<int, 3> FftPlan::wavenumber(std::size_t s) const {
  std::array<int, 3> k{0, 0, 0};
  const int half = n_ / 2 + 1;
  k[dim_ - 1] = static_cast<int>(s % half);
  s /= half;
  for (int i = dim_ - 2; i >= 0; --i) {
    int idx = static_cast<int>(s % n_);
    s /= n_;
    k[i] = idx <= n_ / 2 ? idx : idx - n_;
  }
  return k;
}

// ---------------------------------------------------------------------------
// Periodization

namespace {

int image_index(int offset, int n) {
  // offset - k*n lands in [-n/2, n/2)
  return static_cast<int>(std::floor((offset + n / 2) / static_cast<double>(n)));
}

}  // namespace

int required_shells(const LatticeKernel& kernel, const TorusGrid& grid) {
  int s = 0;
  for (const auto& o : kernel.offsets)
    for (int i = 0; i < kernel.dim; ++i) s = std::max(s, std::abs(image_index(o[i], grid.n)));
  return s;
}

PeriodicField periodize(const LatticeKernel& kernel, const TorusGrid& grid, int rank, int shells,
                        const std::function<void(const Point& z, double w, double* out)>& fn) {
  if (kernel.dim != grid.dim) throw ArgumentError("periodize: kernel and grid dimension differ");
  int need = required_shells(kernel, grid);
  if (shells >= 0 && shells < need) {
    std::ostringstream os;
    os << "periodization needs " << need << " image shells, got " << shells;
    throw AccuracyError(os.str());
  }
  PeriodicField out(grid, rank);
  std::vector<double> buf(out.components());
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    std::fill(buf.begin(), buf.end(), 0.0);
    fn(kernel.z(k), kernel.weights[k], buf.data());
    std::size_t node = grid.node(kernel.offsets[k]);
    for (int c = 0; c < out.components(); ++c) out.at(node, c) += buf[c];
  }
  return out;
}

double PeriodizedMatrixKernel::node_value(std::size_t node, int i, int j) const {
  return weights.at(node, i * grid.dim + j) / std::pow(spacing, grid.dim);
}

PeriodizedMatrixKernel build_periodized_kernel(const LatticeKernel& kernel, const TorusGrid& grid,
                                               int shells) {
  PeriodizedMatrixKernel pk;
  pk.grid = grid;
  pk.spacing = kernel.spacing;
  pk.shells = shells >= 0 ? shells : required_shells(kernel, grid);
  const int d = grid.dim;
  pk.weights = periodize(kernel, grid, 2, shells, [d](const Point& z, double w, double* out) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i * d + j] = w * z[i] * z[j] / r2;
  });
  return pk;
}

PeriodizedMatrixKernel build_periodized_kernel(const KernelSpec& spec, const TorusGrid& grid, int shells,
                                               const QuadratureConfig& quad) {
  if (spec.dim != grid.dim) throw ArgumentError("kernel and grid dimension differ");
  return build_periodized_kernel(discretize_kernel(spec, grid.spacing(), quad), grid, shells);
}

// ---------------------------------------------------------------------------
// Convolution

SpectralKernel::SpectralKernel(const PeriodicField& weights)
    : grid_(weights.grid()), rank_(weights.rank()) {
  const FftPlan& plan = FftPlan::get(grid_.dim, grid_.n);
  spectra_.resize(weights.components());
  totals_.resize(weights.components());
  for (int c = 0; c < weights.components(); ++c) {
    spectra_[c].resize(plan.spectral_size());
    plan.forward(weights.component(c), spectra_[c].data());
    double s = 0.0;
    const double* p = weights.component(c);
    for (std::size_t k = 0; k < weights.nodes(); ++k) s += p[k];
    totals_[c] = s;
  }
}

PeriodicField SpectralKernel::contract(const PeriodicField& v) const {
  if (!(v.grid() == grid_) || v.rank() != 1) throw ArgumentError("convolution: grid mismatch");
  const int d = grid_.dim;
  const FftPlan& plan = FftPlan::get(d, grid_.n);
  const std::size_t S = plan.spectral_size();
  std::vector<std::vector<std::complex<double>>> vh(d, std::vector<std::complex<double>>(S));
  for (int j = 0; j < d; ++j) plan.forward(v.component(j), vh[j].data());
  PeriodicField out(grid_, rank_ - 1);
  std::vector<std::complex<double>> acc(S);
  for (int I = 0; I < out.components(); ++I) {
    std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
    for (int j = 0; j < d; ++j) {
      const auto& w = spectra_[I * d + j];
      for (std::size_t s = 0; s < S; ++s) acc[s] += w[s] * vh[j][s];
    }
    plan.backward(acc.data(), out.component(I));
  }
  return out;
}

PeriodicField SpectralKernel::scalar(const PeriodicField& sfield) const {
  if (!(sfield.grid() == grid_) || sfield.rank() != 0) throw ArgumentError("convolution: grid mismatch");
  const FftPlan& plan = FftPlan::get(grid_.dim, grid_.n);
  const std::size_t S = plan.spectral_size();
  std::vector<std::complex<double>> sh(S), acc(S);
  plan.forward(sfield.component(0), sh.data());
  PeriodicField out(grid_, rank_);
  for (int I = 0; I < out.components(); ++I) {
    for (std::size_t s = 0; s < S; ++s) acc[s] = spectra_[I][s] * sh[s];
    plan.backward(acc.data(), out.component(I));
  }
  return out;
}

PeriodicField periodic_convolve(const PeriodizedMatrixKernel& kernel, const PeriodicField& v) {
  if (!(kernel.grid == v.grid()) || v.rank() != 1)
    throw ArgumentError("periodic_convolve: grid mismatch");
  return SpectralKernel(kernel.weights).contract(v);
}

// ---------------------------------------------------------------------------
// Derivatives

PeriodicField gradient(const PeriodicField& u) {
  if (u.rank() != 1) throw ArgumentError("gradient expects a vector field");
  const TorusGrid& g = u.grid();
  const int d = g.dim;
  const FftPlan& plan = FftPlan::get(d, g.n);
  const std::size_t S = plan.spectral_size();
  const double w0 = 2.0 * std::numbers::pi / g.length;
  PeriodicField out(g, 2);
  std::vector<std::complex<double>> uh(S), tmp(S);
  for (int k = 0; k < d; ++k) {
    plan.forward(u.component(k), uh.data());
    for (int l = 0; l < d; ++l) {
      for (std::size_t s = 0; s < S; ++s) {
        int kl = plan.wavenumber(s)[l];
        double f = (2 * std::abs(kl) == g.n) ? 0.0 : w0 * kl;
        tmp[s] = std::complex<double>(0.0, f) * uh[s];
      }
      plan.backward(tmp.data(), out.component(k * d + l));
    }
  }
  return out;
}

PeriodicField hessian(const PeriodicField& u) {
  if (u.rank() != 1) throw ArgumentError("hessian expects a vector field");
  const TorusGrid& g = u.grid();
  const int d = g.dim;
  const FftPlan& plan = FftPlan::get(d, g.n);
  const std::size_t S = plan.spectral_size();
  const double w0 = 2.0 * std::numbers::pi / g.length;
  PeriodicField out(g, 3);
  std::vector<std::complex<double>> uh(S), tmp(S);
  for (int l = 0; l < d; ++l) {
    plan.forward(u.component(l), uh.data());
    for (int j = 0; j < d; ++j) {
      for (int k = j; k < d; ++k) {
        for (std::size_t s = 0; s < S; ++s) {
          auto kv = plan.wavenumber(s);
          double f;
          if (j == k) {
            f = -(w0 * kv[j]) * (w0 * kv[j]);
          } else {
            bool nyq = 2 * std::abs(kv[j]) == g.n || 2 * std::abs(kv[k]) == g.n;
            f = nyq ? 0.0 : -(w0 * kv[j]) * (w0 * kv[k]);
          }
          tmp[s] = f * uh[s];
        }
        plan.backward(tmp.data(), out.component(tidx(d, l, j, k)));
        if (k != j)
          std::memcpy(out.component(tidx(d, l, k, j)), out.component(tidx(d, l, j, k)),
                      out.nodes() * sizeof(double));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

}  // namespace

void write_field(const std::string& path, const PeriodicField& f) {
  nlohmann::json h = {{"format", "perihom-field"},
                      {"version", 1},
                      {"dimension", f.grid().dim},
                      {"N", f.grid().n},
                      {"rank", f.rank()},
                      {"box_length", f.grid().length},
                      {"layout", "component-major"}};
  std::string header = h.dump();
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ArgumentError("cannot write " + path);
    std::uint64_t len = to_le<std::uint64_t>(header.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (double v : f.data()) {
      double le = to_le(v);
      os.write(reinterpret_cast<const char*>(&le), sizeof(le));
    }
    if (!os) throw ArgumentError("write failed for " + path);
  }
  std::rename(tmp.c_str(), path.c_str());
}

PeriodicField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot read " + path);
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  len = to_le(len);
  if (!is || len > (1u << 20)) throw ArgumentError("corrupt field header in " + path);
  std::string header(len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(len));
  auto h = nlohmann::json::parse(header);
  if (h.value("format", "") != "perihom-field") throw ArgumentError("not a field file: " + path);
  TorusGrid g(h.at("dimension").get<int>(), h.at("N").get<int>(), h.at("box_length").get<double>());
  PeriodicField f(g, h.at("rank").get<int>());
  for (double& v : f.data()) {
    double le;
    is.read(reinterpret_cast<char*>(&le), sizeof(le));
    v = to_le(le);
  }
  if (!is) throw ArgumentError("truncated field data in " + path);
  return f;
}

}  // namespace perihom
