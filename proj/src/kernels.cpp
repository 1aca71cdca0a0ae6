#include "wee/kernels.hpp"

#include <cmath>

namespace wee::kern {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

void matmul_nn(double* c, const double* a, const double* b, int m, int k, int n) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nn_ref(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void matmul_nt_ref(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void acc_nn(double* c, const double* a, const double* b, int m, int k, int n) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void acc_nn_ref(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void acc_nt(double* c, const double* a, const double* b, int m, int k, int n) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void acc_nt_ref(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void acc_tn(double* c, const double* a, const double* b, int m, int k, int n) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int p = 0; p < k; ++p) {
    double* cp = c + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double aip = a[static_cast<std::size_t>(i) * k + p];
      const double* bi = b + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

void acc_tn_ref(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int p = 0; p < k; ++p) {
    double* cp = c + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double aip = a[static_cast<std::size_t>(i) * k + p];
      const double* bi = b + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

double gelu_scalar(double x) {
  // x * Phi(x) with the exact normal CDF.
  return x * 0.5 * std::erfc(-x * kInvSqrt2);
}

double gelu_grad_scalar(double x) {
  const double phi_cdf = 0.5 * std::erfc(-x * kInvSqrt2);
  const double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return phi_cdf + x * phi_pdf;
}

void gelu(double* y, const double* x, std::size_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelWorkMin)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    y[i] = gelu_scalar(x[i]);
  }
}

void gelu_ref(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_grad_acc(double* dx, const double* dy, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * gelu_grad_scalar(x[i]);
}

void softmax_rows(double* y, const double* x, int rows, int cols) {
  const std::size_t work = static_cast<std::size_t>(rows) * cols * 8;
#pragma omp parallel for schedule(static) if (work >= kParallelWorkMin)
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * cols;
    double* yr = y + static_cast<std::size_t>(r) * cols;
    double mx = xr[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

void softmax_rows_ref(double* y, const double* x, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * cols;
    double* yr = y + static_cast<std::size_t>(r) * cols;
    double mx = xr[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

void dft_magnitudes(double* mags, const double* frame, int len) {
  const int bins = len / 2 + 1;
  const double w = -6.283185307179586476925286766559 / static_cast<double>(len);
  for (int b = 0; b < bins; ++b) {
    double re = 0.0;
    double im = 0.0;
    for (int t = 0; t < len; ++t) {
      const double ang = w * b * t;
      re += frame[t] * std::cos(ang);
      im += frame[t] * std::sin(ang);
    }
    mags[b] = std::sqrt(re * re + im * im);
  }
}

}  // namespace wee::kern
