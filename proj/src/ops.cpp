#include "multiface/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blas.hpp"
#include "multiface/errors.hpp"

namespace multiface::ops {

using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
    }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
    if (x.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(x.shape()));
    }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            Node& in = parent(self, p);
            if (!in.requires_grad) continue;
            auto& g = in.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return Tensor::from_op(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& x = parent(self, 0);
        Node& y = parent(self, 1);
        if (x.requires_grad) {
            auto& g = x.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.data[i];
        }
        if (y.requires_grad) {
            auto& g = y.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.data[i];
        }
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v *= factor;
    return Tensor::from_op(x.shape(), std::move(out), {x}, [factor](Node& self) {
        auto& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    return Tensor::from_op(Shape{}, {total}, {x}, [](Node& self) {
        auto& g = parent(self, 0).grad_buffer();
        for (double& v : g) v += self.grad[0];
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    blas::gemm(blas::Trans::no, blas::Trans::no, m, n, k, 1.0, a.data().data(), b.data().data(), 0.0,
               out.data());
    return Tensor::from_op({m, n}, std::move(out), {a, b}, [m, n, k](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) {
            blas::gemm(blas::Trans::no, blas::Trans::yes, m, k, n, 1.0, self.grad.data(), pb.data.data(), 1.0,
                       pa.grad_buffer().data());
        }
        if (pb.requires_grad) {
            blas::gemm(blas::Trans::yes, blas::Trans::no, k, n, m, 1.0, pa.data.data(), self.grad.data(), 1.0,
                       pb.grad_buffer().data());
        }
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_nt");
    require_rank(b, 2, "matmul_nt");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw ShapeError("matmul_nt: inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
    }
    std::vector<double> out(m * n, 0.0);
    blas::gemm(blas::Trans::no, blas::Trans::yes, m, n, k, 1.0, a.data().data(), b.data().data(), 0.0,
               out.data());
    return Tensor::from_op({m, n}, std::move(out), {a, b}, [m, n, k](Node& self) {
        Node& pa = parent(self, 0);
        Node& pb = parent(self, 1);
        if (pa.requires_grad) {
            blas::gemm(blas::Trans::no, blas::Trans::no, m, k, n, 1.0, self.grad.data(), pb.data.data(), 1.0,
                       pa.grad_buffer().data());
        }
        if (pb.requires_grad) {
            blas::gemm(blas::Trans::yes, blas::Trans::no, n, k, m, 1.0, self.grad.data(), pa.data.data(), 1.0,
                       pb.grad_buffer().data());
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias) {
    require_rank(x, 2, "linear");
    require_rank(weight, 2, "linear");
    if (weight.dim(1) != x.dim(1)) {
        throw ShapeError("linear: input width " + std::to_string(x.dim(1)) + " does not match weight " +
                         shape_string(weight.shape()));
    }
    Tensor out = matmul_nt(x, weight);
    if (bias == nullptr) return out;
    const std::size_t rows = out.dim(0), cols = out.dim(1);
    if (bias->rank() != 1 || bias->dim(0) != cols) {
        throw ShapeError("linear: bias " + shape_string(bias->shape()) + " does not match " + std::to_string(cols) +
                         " outputs");
    }
    std::vector<double> values(out.data().begin(), out.data().end());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) values[r * cols + c] += bias->data()[c];
    return Tensor::from_op(out.shape(), std::move(values), {out, *bias}, [rows, cols](Node& self) {
        Node& pre = parent(self, 0);
        Node& b = parent(self, 1);
        if (pre.requires_grad) {
            auto& g = pre.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (b.requires_grad) {
            auto& g = b.grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
        }
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.data()[i]);
    return Tensor::from_op(x.shape(), std::move(out), {x}, [](Node& self) {
        Node& in = parent(self, 0);
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in.data[i] > 0.0) g[i] += self.grad[i];
    });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x.data()[i], lo, hi);
    return Tensor::from_op(x.shape(), std::move(out), {x}, [lo, hi](Node& self) {
        Node& in = parent(self, 0);
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in.data[i] >= lo && in.data[i] <= hi) g[i] += self.grad[i];
    });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride) {
    require_rank(x, 4, "conv2d");
    require_rank(weight, 4, "conv2d");
    const std::size_t batch = x.dim(0), channels = x.dim(1), height = x.dim(2), width = x.dim(3);
    const std::size_t out_ch = weight.dim(0), kernel = weight.dim(2);
    if (weight.dim(1) != channels || weight.dim(3) != kernel) {
        throw ShapeError("conv2d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                         shape_string(x.shape()));
    }
    if (bias.rank() != 1 || bias.dim(0) != out_ch) {
        throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(out_ch) + " output channels");
    }
    if (stride == 0 || kernel > height || kernel > width) {
        throw ShapeError("conv2d: kernel " + std::to_string(kernel) + " does not fit input " + shape_string(x.shape()));
    }
    const std::size_t out_h = (height - kernel) / stride + 1;
    const std::size_t out_w = (width - kernel) / stride + 1;
    const std::size_t plane = out_h * out_w;
    const std::size_t patch = channels * kernel * kernel;
    const std::size_t cols_n = batch * plane;

    // cols[patch][batch * plane]
    auto cols = std::make_shared<std::vector<double>>(patch * cols_n);
    const double* xin = x.data().data();
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t ky = 0; ky < kernel; ++ky)
            for (std::size_t kx = 0; kx < kernel; ++kx) {
                double* row = cols->data() + ((c * kernel + ky) * kernel + kx) * cols_n;
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* img = xin + (b * channels + c) * height * width;
                    double* dst = row + b * plane;
                    for (std::size_t oy = 0; oy < out_h; ++oy) {
                        const double* src = img + (oy * stride + ky) * width + kx;
                        for (std::size_t ox = 0; ox < out_w; ++ox) dst[oy * out_w + ox] = src[ox * stride];
                    }
                }
            }

    std::vector<double> tmp(out_ch * cols_n, 0.0);
    blas::gemm(blas::Trans::no, blas::Trans::no, out_ch, cols_n, patch, 1.0, weight.data().data(), cols->data(),
               0.0, tmp.data());
    std::vector<double> out(batch * out_ch * plane);
    for (std::size_t o = 0; o < out_ch; ++o)
        for (std::size_t b = 0; b < batch; ++b) {
            const double* src = tmp.data() + o * cols_n + b * plane;
            double* dst = out.data() + (b * out_ch + o) * plane;
            const double bo = bias.data()[o];
            for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + bo;
        }

    return Tensor::from_op(
        {batch, out_ch, out_h, out_w}, std::move(out), {x, weight, bias},
        [=](Node& self) {
            Node& in = parent(self, 0);
            Node& w = parent(self, 1);
            Node& bs = parent(self, 2);
            std::vector<double> dtmp(out_ch * cols_n);
            for (std::size_t o = 0; o < out_ch; ++o)
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* src = self.grad.data() + (b * out_ch + o) * plane;
                    std::copy(src, src + plane, dtmp.data() + o * cols_n + b * plane);
                }
            if (bs.requires_grad) {
                auto& g = bs.grad_buffer();
                for (std::size_t o = 0; o < out_ch; ++o) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < cols_n; ++i) acc += dtmp[o * cols_n + i];
                    g[o] += acc;
                }
            }
            if (w.requires_grad) {
                blas::gemm(blas::Trans::no, blas::Trans::yes, out_ch, patch, cols_n, 1.0, dtmp.data(), cols->data(),
                           1.0, w.grad_buffer().data());
            }
            if (in.requires_grad) {
                std::vector<double> dcols(patch * cols_n, 0.0);
                blas::gemm(blas::Trans::yes, blas::Trans::no, patch, cols_n, out_ch, 1.0, w.data.data(), dtmp.data(),
                           0.0, dcols.data());
                auto& g = in.grad_buffer();
                for (std::size_t c = 0; c < channels; ++c)
                    for (std::size_t ky = 0; ky < kernel; ++ky)
                        for (std::size_t kx = 0; kx < kernel; ++kx) {
                            const double* row = dcols.data() + ((c * kernel + ky) * kernel + kx) * cols_n;
                            for (std::size_t b = 0; b < batch; ++b) {
                                double* img = g.data() + (b * channels + c) * height * width;
                                const double* src = row + b * plane;
                                for (std::size_t oy = 0; oy < out_h; ++oy) {
                                    double* dst = img + (oy * stride + ky) * width + kx;
                                    for (std::size_t ox = 0; ox < out_w; ++ox) dst[ox * stride] += src[oy * out_w + ox];
                                }
                            }
                        }
            }
        });
}

Tensor max_pool2d(const Tensor& x, std::size_t kernel) {
    require_rank(x, 4, "max_pool2d");
    const std::size_t batch = x.dim(0), channels = x.dim(1), height = x.dim(2), width = x.dim(3);
    if (kernel == 0 || kernel > height || kernel > width) {
        throw ShapeError("max_pool2d: kernel " + std::to_string(kernel) + " does not fit input " +
                         shape_string(x.shape()));
    }
    const std::size_t out_h = height / kernel, out_w = width / kernel;
    std::vector<double> out(batch * channels * out_h * out_w);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    const double* in = x.data().data();
    std::size_t o = 0;
    for (std::size_t bc = 0; bc < batch * channels; ++bc) {
        const std::size_t base = bc * height * width;
        for (std::size_t oy = 0; oy < out_h; ++oy)
            for (std::size_t ox = 0; ox < out_w; ++ox, ++o) {
                std::size_t best = base + oy * kernel * width + ox * kernel;
                for (std::size_t ky = 0; ky < kernel; ++ky)
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        const std::size_t idx = base + (oy * kernel + ky) * width + ox * kernel + kx;
                        if (in[idx] > in[best]) best = idx;
                    }
                out[o] = in[best];
                (*argmax)[o] = best;
            }
    }
    return Tensor::from_op({batch, channels, out_h, out_w}, std::move(out), {x}, [argmax](Node& self) {
        auto& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < argmax->size(); ++i) g[(*argmax)[i]] += self.grad[i];
    });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ValueError("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*mask)[i] = uniform(rng) < rate ? 0.0 : keep_scale;
        out[i] = x.data()[i] * (*mask)[i];
    }
    return Tensor::from_op(x.shape(), std::move(out), {x}, [mask](Node& self) {
        auto& g = parent(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    return Tensor::from_op(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {x},
                           [](Node& self) {
                               auto& g = parent(self, 0).grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                           });
}

Tensor flatten(const Tensor& x) {
    if (x.rank() < 1) throw ShapeError("flatten: scalar input");
    return reshape(x, {x.dim(0), x.size() / x.dim(0)});
}

Tensor l2_normalize(const Tensor& x, double eps) {
    if (x.rank() < 1) throw ShapeError("l2_normalize: scalar input");
    const std::size_t width = x.shape().back();
    const std::size_t rows = x.size() / width;
    auto norms = std::make_shared<std::vector<double>>(rows);
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x.data().data() + r * width;
        double sq = 0.0;
        for (std::size_t j = 0; j < width; ++j) sq += row[j] * row[j];
        const double norm = std::sqrt(sq);
        if (!(norm >= eps)) {
            throw ValueError("zero_norm_row", "l2_normalize: row " + std::to_string(r) + " has norm " +
                                                  std::to_string(norm) + " below eps");
        }
        (*norms)[r] = norm;
        for (std::size_t j = 0; j < width; ++j) out[r * width + j] = row[j] / norm;
    }
    return Tensor::from_op(x.shape(), std::move(out), {x}, [norms, width, rows](Node& self) {
        // Recover y = x / |x| from the input to avoid keeping a second copy.
        Node& in = parent(self, 0);
        auto& g = in.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            const double n = (*norms)[r];
            const double* xr = in.data.data() + r * width;
            const double* dy = self.grad.data() + r * width;
            double proj = 0.0;
            for (std::size_t j = 0; j < width; ++j) proj += (xr[j] / n) * dy[j];
            for (std::size_t j = 0; j < width; ++j) g[r * width + j] += (dy[j] - (xr[j] / n) * proj) / n;
        }
    });
}

Tensor slice_columns(const Tensor& x, std::size_t begin, std::size_t end) {
    require_rank(x, 2, "slice_columns");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (begin >= end || end > cols) {
        throw ShapeError("slice_columns: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + shape_string(x.shape()));
    }
    const std::size_t w = end - begin;
    std::vector<double> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(x.data().data() + r * cols + begin, w, out.data() + r * w);
    return Tensor::from_op({rows, w}, std::move(out), {x}, [=](Node& self) {
        auto& g = parent(self, 0).grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j) g[r * cols + begin + j] += self.grad[r * w + j];
    });
}

Tensor concat_columns(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_columns: no inputs");
    const std::size_t rows = parts[0].rank() == 2 ? parts[0].dim(0) : 0;
    std::vector<std::size_t> offsets;
    std::size_t cols = 0;
    for (const Tensor& p : parts) {
        require_rank(p, 2, "concat_columns");
        if (p.dim(0) != rows) throw ShapeError("concat_columns: row counts differ");
        offsets.push_back(cols);
        cols += p.dim(1);
    }
    std::vector<double> out(rows * cols);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::size_t w = parts[i].dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(parts[i].data().data() + r * w, w, out.data() + r * cols + offsets[i]);
    }
    return Tensor::from_op({rows, cols}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                           [offsets, rows, cols](Node& self) {
                               for (std::size_t i = 0; i < self.parents.size(); ++i) {
                                   Node& p = parent(self, i);
                                   if (!p.requires_grad) continue;
                                   const std::size_t w = p.shape[1];
                                   auto& g = p.grad_buffer();
                                   for (std::size_t r = 0; r < rows; ++r)
                                       for (std::size_t j = 0; j < w; ++j)
                                           g[r * w + j] += self.grad[r * cols + offsets[i] + j];
                               }
                           });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    require_rank(logits, 2, "softmax_cross_entropy");
    const std::size_t rows = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != rows) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
            throw ValueError("label_out_of_range", "label " + std::to_string(labels[r]) + " at row " +
                                                       std::to_string(r) + " outside [0," + std::to_string(classes) +
                                                       ")");
        }
    }
    auto probs = std::make_shared<std::vector<double>>(rows * classes);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* z = logits.data().data() + r * classes;
        const double zmax = *std::max_element(z, z + classes);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
        const double log_denom = std::log(denom);
        for (std::size_t c = 0; c < classes; ++c) (*probs)[r * classes + c] = std::exp(z[c] - zmax) / denom;
        total += log_denom - (z[labels[r]] - zmax);
    }
    std::vector<int> label_copy(labels.begin(), labels.end());
    return Tensor::from_op(Shape{}, {total / static_cast<double>(rows)}, {logits},
                           [probs, label_copy = std::move(label_copy), rows, classes](Node& self) {
                               auto& g = parent(self, 0).grad_buffer();
                               const double k = self.grad[0] / static_cast<double>(rows);
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t c = 0; c < classes; ++c) {
                                       const double target = static_cast<std::size_t>(label_copy[r]) == c ? 1.0 : 0.0;
                                       g[r * classes + c] += k * ((*probs)[r * classes + c] - target);
                                   }
                           });
}

}  // namespace multiface::ops
