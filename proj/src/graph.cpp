#include "lsg/graph.hpp"

#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "lsg/errors.hpp"
#include "lsg/kernels.hpp"

namespace lsg::ad {

namespace k = lsg::kernels;

const Tensor& Value::val() const { return tape->value(*this); }

Value Tape::leaf(Tensor t, bool requires_grad) {
    Node n;
    n.value = std::move(t);
    n.needs_grad = requires_grad;
    n.is_param = requires_grad;
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Value Tape::emit(const char* op, Tensor value, const std::vector<Value>& parents, BackFn fn) {
    if (!value.all_finite())
        throw numeric_error(std::string(op) + " produced non-finite values");
    Node n;
    n.value = std::move(value);
    for (const Value& p : parents) {
        if (p.tape != this) throw contract_error(std::string(op) + ": operands from different tapes");
        if (nodes_[p.idx].needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.back = std::move(fn);
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Value v) const { return nodes_.at(v.idx).value; }

const Tensor& Tape::grad(Value v) const {
    auto it = param_grads_.find(v.idx);
    if (it == param_grads_.end())
        throw contract_error("grad(): node is not a tracked parameter or backward() not run");
    return it->second;
}

void Tape::accumulate(std::uint32_t idx, const Tensor& contribution) {
    Tensor& g = grads_[idx];
    if (g.empty()) {
        g = contribution;
    } else {
        k::add(g.data(), contribution.data(), g.data(), g.size());
    }
}

void Tape::accumulate(std::uint32_t idx, Tensor&& contribution) {
    Tensor& g = grads_[idx];
    if (g.empty()) {
        g = std::move(contribution);
    } else {
        k::add(g.data(), contribution.data(), g.data(), g.size());
    }
}

void Tape::backward(Value loss) {
    if (loss.tape != this) throw contract_error("backward(): loss from a different tape");
    if (nodes_.at(loss.idx).value.size() != 1)
        throw contract_error("backward(): loss must be scalar, got shape " +
                             nodes_[loss.idx].value.shape_str());

    param_grads_.clear();
    grads_.assign(nodes_.size(), Tensor{});
    {
        const Tensor& lv = nodes_[loss.idx].value;
        grads_[loss.idx] = Tensor(lv.shape(), std::vector<double>{1.0});
    }

    for (std::uint32_t i = loss.idx + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (grads_[i].empty()) continue;
        if (n.back) n.back(*this, grads_[i], i);
    }

    // Retain parameter gradients, discard every intermediate.
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].is_param) continue;
        if (grads_[i].empty())
            param_grads_.emplace(i, Tensor::zeros(nodes_[i].value.shape()));
        else
            param_grads_.emplace(i, std::move(grads_[i]));
    }
    grads_.clear();
    grads_.shrink_to_fit();
}

// ---------------------------------------------------------------------------
// op builders
// ---------------------------------------------------------------------------

namespace {

enum class Bcast { Equal, AScalar, BScalar, ARow, BRow };

bool is_row_of(const Tensor& vec, const Tensor& mat) {
    if (mat.rank() != 2) return false;
    if (vec.rank() == 1) return vec.shape()[0] == mat.shape()[1];
    if (vec.rank() == 2) return vec.shape()[0] == 1 && vec.shape()[1] == mat.shape()[1];
    return false;
}

Bcast classify(const char* op, const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return Bcast::Equal;
    if (b.size() == 1) return Bcast::BScalar;
    if (a.size() == 1) return Bcast::AScalar;
    if (is_row_of(b, a)) return Bcast::BRow;
    if (is_row_of(a, b)) return Bcast::ARow;
    throw shape_error(std::string(op) + ": incompatible shapes " + a.shape_str() + " vs " +
                      b.shape_str());
}

// Reduce an Equal-shaped gradient down to the shape of a broadcast operand.
Tensor reduce_to(const Tensor& g, const Tensor& like, Bcast kind, bool operand_is_a) {
    const bool scalar_case = (kind == Bcast::AScalar && operand_is_a) ||
                             (kind == Bcast::BScalar && !operand_is_a);
    if (scalar_case) {
        Tensor out(like.shape());
        out[0] = k::sum(g.data(), g.size());
        return out;
    }
    // row-vector case: sum over rows
    Tensor out(like.shape());
    k::col_sum(g.data(), out.data(), g.rows(), g.cols());
    return out;
}

using EwFull = void (*)(const double*, const double*, double*, std::size_t);

// Forward of a broadcasting binary via a same-length kernel applied per row
// (or with one side expanded for the scalar cases).
Tensor bcast_forward(const Tensor& a, const Tensor& b, Bcast kind, EwFull full,
                     double (*sop)(double, double)) {
    switch (kind) {
        case Bcast::Equal: {
            Tensor out(a.shape());
            full(a.data(), b.data(), out.data(), a.size());
            return out;
        }
        case Bcast::BScalar: {
            Tensor out(a.shape());
            const double s = b[0];
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = sop(a[i], s);
            return out;
        }
        case Bcast::AScalar: {
            Tensor out(b.shape());
            const double s = a[0];
            for (std::size_t i = 0; i < b.size(); ++i) out[i] = sop(s, b[i]);
            return out;
        }
        case Bcast::BRow: {
            Tensor out(a.shape());
            const std::size_t rows = a.rows(), cols = a.cols();
            for (std::size_t r = 0; r < rows; ++r)
                full(a.data() + r * cols, b.data(), out.data() + r * cols, cols);
            return out;
        }
        case Bcast::ARow: {
            Tensor out(b.shape());
            const std::size_t rows = b.rows(), cols = b.cols();
            for (std::size_t r = 0; r < rows; ++r)
                full(a.data(), b.data() + r * cols, out.data() + r * cols, cols);
            return out;
        }
    }
    throw contract_error("unreachable broadcast kind");
}

// Expand a possibly-broadcast operand to the full output shape.
Tensor expand_like(const Tensor& x, const Tensor& out_like) {
    if (x.same_shape(out_like)) return x;
    Tensor out(out_like.shape());
    if (x.size() == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[0];
        return out;
    }
    const std::size_t rows = out_like.rows(), cols = out_like.cols();
    for (std::size_t r = 0; r < rows; ++r)
        std::memcpy(out.data() + r * cols, x.data(), cols * sizeof(double));
    return out;
}

} // namespace

Value matmul(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const std::size_t m = av.rows(), ka = av.cols();
    const std::size_t kb = bv.rows(), n = bv.cols();
    if (ka != kb)
        throw shape_error("matmul: inner dimensions disagree, " + av.shape_str() + " * " +
                          bv.shape_str());
    Tensor out({m, n});
    k::matmul(av.data(), bv.data(), out.data(), m, ka, n);
    const auto ai = a.idx, bi = b.idx;
    return t.emit("matmul", std::move(out), {a, b},
                  [ai, bi, m, ka, n](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& A = tp.value(Value{&tp, ai});
                      const Tensor& B = tp.value(Value{&tp, bi});
                      if (tp.needs_grad(Value{&tp, ai})) {
                          Tensor bt({n, ka});
                          k::transpose(B.data(), bt.data(), ka, n);
                          Tensor da(A.shape());
                          k::matmul(g.data(), bt.data(), da.data(), m, n, ka);
                          tp.accumulate(ai, std::move(da));
                      }
                      if (tp.needs_grad(Value{&tp, bi})) {
                          Tensor at({ka, m});
                          k::transpose(A.data(), at.data(), m, ka);
                          Tensor db(B.shape());
                          k::matmul(at.data(), g.data(), db.data(), ka, m, n);
                          tp.accumulate(bi, std::move(db));
                      }
                  });
}

Value add(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const Bcast kind = classify("add", av, bv);
    Tensor out = bcast_forward(av, bv, kind, &k::add, [](double x, double y) { return x + y; });
    const auto ai = a.idx, bi = b.idx;
    return t.emit("add", std::move(out), {a, b},
                  [ai, bi, kind](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& A = tp.value(Value{&tp, ai});
                      const Tensor& B = tp.value(Value{&tp, bi});
                      if (tp.needs_grad(Value{&tp, ai}))
                          tp.accumulate(ai, A.same_shape(g) ? g : reduce_to(g, A, kind, true));
                      if (tp.needs_grad(Value{&tp, bi}))
                          tp.accumulate(bi, B.same_shape(g) ? g : reduce_to(g, B, kind, false));
                  });
}

Value sub(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const Bcast kind = classify("sub", av, bv);
    Tensor out = bcast_forward(av, bv, kind, &k::sub, [](double x, double y) { return x - y; });
    const auto ai = a.idx, bi = b.idx;
    return t.emit("sub", std::move(out), {a, b},
                  [ai, bi, kind](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& A = tp.value(Value{&tp, ai});
                      const Tensor& B = tp.value(Value{&tp, bi});
                      if (tp.needs_grad(Value{&tp, ai}))
                          tp.accumulate(ai, A.same_shape(g) ? g : reduce_to(g, A, kind, true));
                      if (tp.needs_grad(Value{&tp, bi})) {
                          Tensor neg(g.shape());
                          k::mul_scalar(g.data(), -1.0, neg.data(), g.size());
                          tp.accumulate(bi, B.same_shape(neg) ? std::move(neg)
                                                              : reduce_to(neg, B, kind, false));
                      }
                  });
}

Value mul(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const Bcast kind = classify("mul", av, bv);
    Tensor out = bcast_forward(av, bv, kind, &k::mul, [](double x, double y) { return x * y; });
    const auto ai = a.idx, bi = b.idx;
    return t.emit("mul", std::move(out), {a, b},
                  [ai, bi, kind](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& A = tp.value(Value{&tp, ai});
                      const Tensor& B = tp.value(Value{&tp, bi});
                      if (tp.needs_grad(Value{&tp, ai})) {
                          Tensor bx = expand_like(B, g);
                          Tensor da(g.shape());
                          k::mul(g.data(), bx.data(), da.data(), g.size());
                          tp.accumulate(ai, A.same_shape(da) ? std::move(da)
                                                             : reduce_to(da, A, kind, true));
                      }
                      if (tp.needs_grad(Value{&tp, bi})) {
                          Tensor ax = expand_like(A, g);
                          Tensor db(g.shape());
                          k::mul(g.data(), ax.data(), db.data(), g.size());
                          tp.accumulate(bi, B.same_shape(db) ? std::move(db)
                                                             : reduce_to(db, B, kind, false));
                      }
                  });
}

Value div(Value a, Value b) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    for (std::size_t i = 0; i < bv.size(); ++i)
        if (!(bv[i] > 0.0))
            throw std::domain_error("div: denominator must be positive, got " +
                                    std::to_string(bv[i]));
    const Bcast kind = classify("div", av, bv);
    Tensor out = bcast_forward(av, bv, kind, &k::div, [](double x, double y) { return x / y; });
    const auto ai = a.idx, bi = b.idx;
    return t.emit("div", std::move(out), {a, b},
                  [ai, bi, kind](Tape& tp, const Tensor& g, std::uint32_t self) {
                      const Tensor& A = tp.value(Value{&tp, ai});
                      const Tensor& B = tp.value(Value{&tp, bi});
                      Tensor bx = expand_like(B, g);
                      if (tp.needs_grad(Value{&tp, ai})) {
                          Tensor da(g.shape());
                          k::div(g.data(), bx.data(), da.data(), g.size());
                          tp.accumulate(ai, A.same_shape(da) ? std::move(da)
                                                             : reduce_to(da, A, kind, true));
                      }
                      if (tp.needs_grad(Value{&tp, bi})) {
                          // d/db (a/b) = -(a/b)/b = -out/b
                          const Tensor& outv = tp.value(Value{&tp, self});
                          Tensor db(g.shape());
                          k::div(outv.data(), bx.data(), db.data(), g.size());
                          k::mul(db.data(), g.data(), db.data(), g.size());
                          k::mul_scalar(db.data(), -1.0, db.data(), g.size());
                          tp.accumulate(bi, B.same_shape(db) ? std::move(db)
                                                             : reduce_to(db, B, kind, false));
                      }
                  });
}

Value add_scalar(Value a, double s) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::add_scalar(av.data(), s, out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("add_scalar", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t) { tp.accumulate(ai, g); });
}

Value mul_scalar(Value a, double s) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::mul_scalar(av.data(), s, out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("mul_scalar", std::move(out), {a},
                  [ai, s](Tape& tp, const Tensor& g, std::uint32_t) {
                      Tensor da(g.shape());
                      k::mul_scalar(g.data(), s, da.data(), g.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

Value exp(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::exp(av.data(), out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("exp", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t self) {
                      const Tensor& outv = tp.value(Value{&tp, self});
                      Tensor da(g.shape());
                      k::mul(g.data(), outv.data(), da.data(), g.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

Value log(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    for (std::size_t i = 0; i < av.size(); ++i)
        if (!(av[i] > 0.0))
            throw std::domain_error("log: argument must be positive, got " +
                                    std::to_string(av[i]));
    Tensor out(av.shape());
    k::log(av.data(), out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("log", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& x = tp.value(Value{&tp, ai});
                      Tensor da(g.shape());
                      k::div(g.data(), x.data(), da.data(), g.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

Value square(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::square(av.data(), out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("square", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& x = tp.value(Value{&tp, ai});
                      Tensor da(g.shape());
                      k::mul(g.data(), x.data(), da.data(), g.size());
                      k::mul_scalar(da.data(), 2.0, da.data(), da.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

Value softplus(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::softplus(av.data(), out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("softplus", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& x = tp.value(Value{&tp, ai});
                      Tensor da(g.shape());
                      k::sigmoid(x.data(), da.data(), x.size());
                      k::mul(da.data(), g.data(), da.data(), da.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

Value relu(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    Tensor out(av.shape());
    k::relu(av.data(), out.data(), av.size());
    const auto ai = a.idx;
    return t.emit("relu", std::move(out), {a},
                  [ai](Tape& tp, const Tensor& g, std::uint32_t) {
                      const Tensor& x = tp.value(Value{&tp, ai});
                      Tensor da(g.shape());
                      k::relu_mask(x.data(), g.data(), da.data(), x.size());
                      tp.accumulate(ai, std::move(da));
                  });
}

namespace {

Value reduce_impl(Value a, const std::vector<std::size_t>& axes, bool take_mean) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const char* name = take_mean ? "mean" : "sum";
    for (std::size_t ax : axes)
        if (ax >= av.rank())
            throw shape_error(std::string(name) + ": axis " + std::to_string(ax) +
                              " out of range for shape " + av.shape_str());
    if (axes.empty()) return a;  // identity

    const bool full = axes.size() == av.rank();
    if (full) {
        const std::size_t n = av.size();
        const double s = k::sum(av.data(), n);
        Tensor out = Tensor::scalar(take_mean ? s / static_cast<double>(n) : s);
        const auto ai = a.idx;
        const std::vector<std::size_t> shp = av.shape();
        return t.emit(name, std::move(out), {a},
                      [ai, shp, take_mean, n](Tape& tp, const Tensor& g, std::uint32_t) {
                          const double gv =
                              take_mean ? g[0] / static_cast<double>(n) : g[0];
                          tp.accumulate(ai, Tensor::full(shp, gv));
                      });
    }

    if (av.rank() != 2 || axes.size() != 1)
        throw shape_error(std::string(name) + ": axis reduction supported for rank-2 only");
    const std::size_t axis = axes[0];
    const std::size_t rows = av.rows(), cols = av.cols();
    const auto ai = a.idx;
    if (axis == 0) {
        Tensor out({cols});
        k::col_sum(av.data(), out.data(), rows, cols);
        if (take_mean) k::mul_scalar(out.data(), 1.0 / static_cast<double>(rows),
                                     out.data(), cols);
        return t.emit(name, std::move(out), {a},
                      [ai, rows, cols, take_mean](Tape& tp, const Tensor& g, std::uint32_t) {
                          Tensor da({rows, cols});
                          Tensor row = g;
                          if (take_mean)
                              k::mul_scalar(row.data(), 1.0 / static_cast<double>(rows),
                                            row.data(), cols);
                          for (std::size_t r = 0; r < rows; ++r)
                              std::memcpy(da.data() + r * cols, row.data(),
                                          cols * sizeof(double));
                          tp.accumulate(ai, std::move(da));
                      });
    }
    Tensor out({rows});
    k::row_sum(av.data(), out.data(), rows, cols);
    if (take_mean) k::mul_scalar(out.data(), 1.0 / static_cast<double>(cols), out.data(), rows);
    return t.emit(name, std::move(out), {a},
                  [ai, rows, cols, take_mean](Tape& tp, const Tensor& g, std::uint32_t) {
                      Tensor da({rows, cols});
                      for (std::size_t r = 0; r < rows; ++r) {
                          const double gv = take_mean
                                                ? g[r] / static_cast<double>(cols)
                                                : g[r];
                          for (std::size_t c = 0; c < cols; ++c) da.at2(r, c) = gv;
                      }
                      tp.accumulate(ai, std::move(da));
                  });
}

std::vector<std::size_t> all_axes(const Tensor& t) {
    std::vector<std::size_t> axes(t.rank());
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    if (axes.empty()) axes.push_back(0);  // scalar: reduce is still identity-ish
    return axes;
}

} // namespace

Value sum(Value a, const std::vector<std::size_t>& axes) { return reduce_impl(a, axes, false); }
Value mean(Value a, const std::vector<std::size_t>& axes) { return reduce_impl(a, axes, true); }

Value sum_all(Value a) {
    const Tensor& av = a.tape->value(a);
    if (av.rank() == 0) return a;
    return reduce_impl(a, all_axes(av), false);
}

Value mean_all(Value a) {
    const Tensor& av = a.tape->value(a);
    if (av.rank() == 0) return a;
    return reduce_impl(a, all_axes(av), true);
}

Value reshape(Value a, std::vector<std::size_t> shape) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (shape_product(shape) != av.size()) {
        std::string want;
        for (std::size_t d : shape) want += (want.empty() ? "" : "x") + std::to_string(d);
        throw shape_error("reshape: element count mismatch, " + av.shape_str() + " -> [" +
                          want + "]");
    }
    Tensor out(std::move(shape), av.vec());
    const auto ai = a.idx;
    const std::vector<std::size_t> orig = av.shape();
    return t.emit("reshape", std::move(out), {a},
                  [ai, orig](Tape& tp, const Tensor& g, std::uint32_t) {
                      tp.accumulate(ai, Tensor(orig, g.vec()));
                  });
}

Value transpose(Value a) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.rank() != 2) throw shape_error("transpose: rank-2 required, got " + av.shape_str());
    const std::size_t rows = av.rows(), cols = av.cols();
    Tensor out({cols, rows});
    k::transpose(av.data(), out.data(), rows, cols);
    const auto ai = a.idx;
    return t.emit("transpose", std::move(out), {a},
                  [ai, rows, cols](Tape& tp, const Tensor& g, std::uint32_t) {
                      Tensor da({rows, cols});
                      k::transpose(g.data(), da.data(), cols, rows);
                      tp.accumulate(ai, std::move(da));
                  });
}

Value concat(const std::vector<Value>& parts, std::size_t axis) {
    if (parts.empty()) throw contract_error("concat: no operands");
    if (axis > 1) throw shape_error("concat: axis must be 0 or 1");
    Tape& t = *parts[0].tape;

    std::vector<std::size_t> part_rows, part_cols;
    for (const Value& p : parts) {
        const Tensor& pv = t.value(p);
        if (pv.rank() != 2 && pv.rank() != 1)
            throw shape_error("concat: rank-1/2 required, got " + pv.shape_str());
        part_rows.push_back(pv.rows());
        part_cols.push_back(pv.cols());
    }
    std::size_t rows = 0, cols = 0;
    if (axis == 0) {
        cols = part_cols[0];
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (part_cols[i] != cols)
                throw shape_error("concat axis 0: column counts differ");
            rows += part_rows[i];
        }
    } else {
        rows = part_rows[0];
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (part_rows[i] != rows)
                throw shape_error("concat axis 1: row counts differ");
            cols += part_cols[i];
        }
    }

    Tensor out({rows, cols});
    if (axis == 0) {
        std::size_t r0 = 0;
        for (const Value& p : parts) {
            const Tensor& pv = t.value(p);
            std::memcpy(out.data() + r0 * cols, pv.data(), pv.size() * sizeof(double));
            r0 += pv.rows();
        }
    } else {
        std::size_t c0 = 0;
        for (const Value& p : parts) {
            const Tensor& pv = t.value(p);
            const std::size_t pc = pv.cols();
            for (std::size_t r = 0; r < rows; ++r)
                std::memcpy(out.data() + r * cols + c0, pv.data() + r * pc,
                            pc * sizeof(double));
            c0 += pc;
        }
    }

    std::vector<std::uint32_t> idxs;
    for (const Value& p : parts) idxs.push_back(p.idx);
    return t.emit("concat", std::move(out), parts,
                  [idxs, part_rows, part_cols, axis, rows, cols](Tape& tp, const Tensor& g,
                                                                 std::uint32_t) {
                      std::size_t off = 0;
                      for (std::size_t i = 0; i < idxs.size(); ++i) {
                          const Value pv{&tp, idxs[i]};
                          const std::size_t pr = part_rows[i], pc = part_cols[i];
                          if (tp.needs_grad(pv)) {
                              Tensor dp(tp.value(pv).shape());
                              if (axis == 0) {
                                  std::memcpy(dp.data(), g.data() + off * cols,
                                              pr * cols * sizeof(double));
                              } else {
                                  for (std::size_t r = 0; r < rows; ++r)
                                      std::memcpy(dp.data() + r * pc,
                                                  g.data() + r * cols + off,
                                                  pc * sizeof(double));
                              }
                              tp.accumulate(idxs[i], std::move(dp));
                          }
                          off += axis == 0 ? pr : pc;
                      }
                  });
}

std::vector<Value> split(Value a, std::size_t axis, const std::vector<std::size_t>& sizes) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.rank() != 2) throw shape_error("split: rank-2 required, got " + av.shape_str());
    if (axis > 1) throw shape_error("split: axis must be 0 or 1");
    const std::size_t rows = av.rows(), cols = av.cols();
    std::size_t total = 0;
    for (std::size_t s : sizes) total += s;
    if (total != (axis == 0 ? rows : cols))
        throw shape_error("split: sizes sum to " + std::to_string(total) + ", extent is " +
                          std::to_string(axis == 0 ? rows : cols));

    std::vector<Value> out;
    const auto ai = a.idx;
    std::size_t off = 0;
    for (std::size_t s : sizes) {
        // emit() may reallocate node storage, so re-fetch the source each part
        const double* src = t.value(a).data();
        Tensor part(axis == 0 ? std::vector<std::size_t>{s, cols}
                              : std::vector<std::size_t>{rows, s});
        if (axis == 0) {
            std::memcpy(part.data(), src + off * cols, s * cols * sizeof(double));
        } else {
            for (std::size_t r = 0; r < rows; ++r)
                std::memcpy(part.data() + r * s, src + r * cols + off,
                            s * sizeof(double));
        }
        const std::size_t this_off = off;
        out.push_back(t.emit(
            "split", std::move(part), {a},
            [ai, axis, rows, cols, s, this_off](Tape& tp, const Tensor& g, std::uint32_t) {
                Tensor da = Tensor::zeros({rows, cols});
                if (axis == 0) {
                    std::memcpy(da.data() + this_off * cols, g.data(),
                                s * cols * sizeof(double));
                } else {
                    for (std::size_t r = 0; r < rows; ++r)
                        std::memcpy(da.data() + r * cols + this_off, g.data() + r * s,
                                    s * sizeof(double));
                }
                tp.accumulate(ai, std::move(da));
            }));
        off += s;
    }
    return out;
}

Value slice_rows(Value a, std::size_t row0, std::size_t row1) {
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    if (av.rank() != 2) throw shape_error("slice_rows: rank-2 required");
    const std::size_t rows = av.rows(), cols = av.cols();
    if (row0 >= row1 || row1 > rows)
        throw shape_error("slice_rows: bad range [" + std::to_string(row0) + ", " +
                          std::to_string(row1) + ") for " + std::to_string(rows) + " rows");
    const std::size_t n = row1 - row0;
    Tensor out({n, cols});
    std::memcpy(out.data(), av.data() + row0 * cols, n * cols * sizeof(double));
    const auto ai = a.idx;
    return t.emit("slice_rows", std::move(out), {a},
                  [ai, rows, cols, row0, n](Tape& tp, const Tensor& g, std::uint32_t) {
                      Tensor da = Tensor::zeros({rows, cols});
                      std::memcpy(da.data() + row0 * cols, g.data(),
                                  n * cols * sizeof(double));
                      tp.accumulate(ai, std::move(da));
                  });
}

} // namespace lsg::ad
