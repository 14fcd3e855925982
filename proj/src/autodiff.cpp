// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace mcf::ad {

namespace {

inline Arr stable_softplus(const Arr& a) {
    // log(1 + e^a) = max(a, 0) + log1p(e^{-|a|})
    return a.max(0.0) + (-a.abs()).exp().unaryExpr([](double v) { return std::log1p(v); });
}

inline Arr sigmoid(const Arr& a) {
    return ((a * 0.5).tanh() + 1.0) * 0.5;
}

}  // namespace

Var Tape::push(Arr value, bool needs_grad, std::function<void(Tape&)> backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = recording_ && needs_grad;
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Arr& Tape::grad_ref(int idx) {
    Node& n = nodes_[idx];
    if (n.grad.size() == 0) n.grad = Arr::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::constant(Arr value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Arr value) { return push(std::move(value), true, nullptr); }

void Tape::backward(Var root) {
    assert(val(root).size() == 1);
    backward_with_seed(root, Arr::Constant(1, 1, 1.0));
}

void Tape::backward_with_seed(Var y, const Arr& seed) {
    if (!recording_) throw McfError("backward on a non-recording tape");
    if (seed.rows() != val(y).rows() || seed.cols() != val(y).cols())
        throw McfError("backward seed shape mismatch");
    grad_ref(y.idx) += seed;
    for (int i = y.idx; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.backward && n.grad.size() != 0) n.backward(*this);
    }
}

// ---------------------------------------------------------------- elementwise

Var Tape::add(Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    Var out = push(val(a) + val(b), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g;
            if (gb) t.grad_ref(bi) += g;
        };
    }
    return out;
}

Var Tape::sub(Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    Var out = push(val(a) - val(b), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g;
            if (gb) t.grad_ref(bi) -= g;
        };
    }
    return out;
}

Var Tape::mul(Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    Var out = push(val(a) * val(b), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g * t.nodes_[bi].value;
            if (gb) t.grad_ref(bi) += g * t.nodes_[ai].value;
        };
    }
    return out;
}

Var Tape::div(Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    Var out = push(val(a) / val(b), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            const Arr& bv = t.nodes_[bi].value;
            if (ga) t.grad_ref(ai) += g / bv;
            if (gb) t.grad_ref(bi) -= g * t.nodes_[oi].value / bv;
        };
    }
    return out;
}

// ------------------------------------------------------------- row broadcast

Var Tape::sub_brow(Var a, Var row) {
    const int ai = a.idx, ri = row.idx;
    const Arr& av = val(a);
    Arr v = av.rowwise() - val(row).row(0);
    Var out = push(std::move(v), wants(a) || wants(row), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gr = wants(row);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g;
            if (gr) t.grad_ref(ri).row(0) -= g.colwise().sum();
        };
    }
    return out;
}

Var Tape::mul_brow(Var a, Var row) {
    const int ai = a.idx, ri = row.idx;
    Arr v = val(a).rowwise() * val(row).row(0);
    Var out = push(std::move(v), wants(a) || wants(row), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gr = wants(row);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g.rowwise() * t.nodes_[ri].value.row(0);
            if (gr) t.grad_ref(ri).row(0) += (g * t.nodes_[ai].value).colwise().sum();
        };
    }
    return out;
}

Var Tape::div_brow(Var a, Var row) {
    const int ai = a.idx, ri = row.idx;
    Arr v = val(a).rowwise() / val(row).row(0);
    Var out = push(std::move(v), wants(a) || wants(row), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gr = wants(row);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            const Arr& rv = t.nodes_[ri].value;
            if (ga) t.grad_ref(ai) += g.rowwise() / rv.row(0);
            if (gr)
                t.grad_ref(ri).row(0) -=
                    (g * t.nodes_[oi].value).colwise().sum() / rv.row(0);
        };
    }
    return out;
}

// ------------------------------------------------------------------- scalars

Var Tape::add_s(Var a, double c) {
    const int ai = a.idx;
    Var out = push(val(a) + c, wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) { t.grad_ref(ai) += t.nodes_[oi].grad; };
    }
    return out;
}

Var Tape::mul_s(Var a, double c) {
    const int ai = a.idx;
    Var out = push(val(a) * c, wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) { t.grad_ref(ai) += c * t.nodes_[oi].grad; };
    }
    return out;
}

// --------------------------------------------------------------------- unary

Var Tape::neg(Var a) { return mul_s(a, -1.0); }

Var Tape::exp(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).exp(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad * t.nodes_[oi].value;
        };
    }
    return out;
}

Var Tape::log(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).log(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad / t.nodes_[ai].value;
        };
    }
    return out;
}

Var Tape::log_abs(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).abs().log(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad / t.nodes_[ai].value;
        };
    }
    return out;
}

Var Tape::sqrt(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).sqrt(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad * 0.5 / t.nodes_[oi].value;
        };
    }
    return out;
}

Var Tape::square(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).square(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad * 2.0 * t.nodes_[ai].value;
        };
    }
    return out;
}

Var Tape::tanh(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).tanh(), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& y = t.nodes_[oi].value;
            t.grad_ref(ai) += t.nodes_[oi].grad * (1.0 - y.square());
        };
    }
    return out;
}

Var Tape::relu(Var a) {
    const int ai = a.idx;
    Var out = push(val(a).max(0.0), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            const Arr mask = (t.nodes_[ai].value > 0.0).cast<double>();
            t.grad_ref(ai) += t.nodes_[oi].grad * mask;
        };
    }
    return out;
}

Var Tape::softplus(Var a) {
    const int ai = a.idx;
    Var out = push(stable_softplus(val(a)), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad * sigmoid(t.nodes_[ai].value);
        };
    }
    return out;
}

// ---------------------------------------------------------------- reductions

Var Tape::sum_all(Var a) {
    const int ai = a.idx;
    Var out = push(Arr::Constant(1, 1, val(a).sum()), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad(0, 0);
        };
    }
    return out;
}

Var Tape::mean_all(Var a) {
    const int ai = a.idx;
    const double inv_n = 1.0 / static_cast<double>(val(a).size());
    Var out = push(Arr::Constant(1, 1, val(a).mean()), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai) += t.nodes_[oi].grad(0, 0) * inv_n;
        };
    }
    return out;
}

Var Tape::colsum(Var a) {
    const int ai = a.idx;
    Arr v = val(a).colwise().sum();
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai).rowwise() += t.nodes_[oi].grad.row(0);
        };
    }
    return out;
}

Var Tape::cumsum_rows(Var a) {
    const Arr& av = val(a);
    Arr v(av.rows(), av.cols());
    for (Eigen::Index j = 0; j < av.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < av.rows(); ++i) {
            s += av(i, j);
            v(i, j) = s;
        }
    }
    const int ai = a.idx;
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            Arr& ga = t.grad_ref(ai);
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                double s = 0.0;
                for (Eigen::Index i = g.rows() - 1; i >= 0; --i) {
                    s += g(i, j);
                    ga(i, j) += s;
                }
            }
        };
    }
    return out;
}

// ----------------------------------------------------------------- structure

Var Tape::vcat(Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    const Arr& av = val(a);
    const Arr& bv = val(b);
    Arr v(av.rows() + bv.rows(), av.cols());
    v.topRows(av.rows()) = av;
    v.bottomRows(bv.rows()) = bv;
    const int ra = static_cast<int>(av.rows()), rb = static_cast<int>(bv.rows());
    Var out = push(std::move(v), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g.topRows(ra);
            if (gb) t.grad_ref(bi) += g.bottomRows(rb);
        };
    }
    return out;
}

Var Tape::rows(Var a, int first, int count) {
    const int ai = a.idx;
    Arr v = val(a).middleRows(first, count);
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            t.grad_ref(ai).middleRows(first, count) += t.nodes_[oi].grad;
        };
    }
    return out;
}

Var Tape::permute_rows(Var a, const std::vector<int>& perm) {
    const int ai = a.idx;
    const Arr& av = val(a);
    Arr v(av.rows(), av.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) v.row(i) = av.row(perm[i]);
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        std::vector<int> p = perm;
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            Arr& ga = t.grad_ref(ai);
            for (std::size_t i = 0; i < p.size(); ++i) ga.row(p[i]) += g.row(i);
        };
    }
    return out;
}

Var Tape::reshape_rows(Var a, int new_rows) {
    const int ai = a.idx;
    const Arr& av = val(a);
    const Eigen::Index n = av.size();
    if (n % new_rows != 0) throw McfError("reshape_rows: size not divisible");
    Arr v = Eigen::Map<const Arr>(av.data(), new_rows, n / new_rows);
    const int orig_rows = static_cast<int>(av.rows());
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            t.grad_ref(ai) +=
                Eigen::Map<const Arr>(g.data(), orig_rows, g.size() / orig_rows);
        };
    }
    return out;
}

Var Tape::gather_rows_percol(Var a, std::vector<int> idx) {
    const int ai = a.idx;
    const Arr& av = val(a);
    Arr v(1, av.cols());
    for (Eigen::Index j = 0; j < av.cols(); ++j) v(0, j) = av(idx[j], j);
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=, ix = std::move(idx)](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            Arr& ga = t.grad_ref(ai);
            for (Eigen::Index j = 0; j < g.cols(); ++j) ga(ix[j], j) += g(0, j);
        };
    }
    return out;
}

Var Tape::gather_cols(Var a, std::vector<int> idx) {
    const int ai = a.idx;
    const Arr& av = val(a);
    Arr v(av.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) v.col(j) = av.col(idx[j]);
    Var out = push(std::move(v), wants(a), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        nodes_[oi].backward = [=, ix = std::move(idx)](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            Arr& ga = t.grad_ref(ai);
            for (std::size_t j = 0; j < ix.size(); ++j) ga.col(ix[j]) += g.col(j);
        };
    }
    return out;
}

Var Tape::select(const Eigen::ArrayXXd& mask01, Var a, Var b) {
    const int ai = a.idx, bi = b.idx;
    Arr v = mask01 * val(a) + (1.0 - mask01) * val(b);
    Var out = push(std::move(v), wants(a) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool ga = wants(a), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (ga) t.grad_ref(ai) += g * mask01;
            if (gb) t.grad_ref(bi) += g * (1.0 - mask01);
        };
    }
    return out;
}

// ------------------------------------------------------------ linear algebra

Var Tape::matmul(Var w, Var x) {
    const int wi = w.idx, xi = x.idx;
    Arr v = (val(w).matrix() * val(x).matrix()).array();
    Var out = push(std::move(v), wants(w) || wants(x), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool gw = wants(w), gx = wants(x);
        nodes_[oi].backward = [=](Tape& t) {
            const auto g = t.nodes_[oi].grad.matrix();
            if (gw)
                t.grad_ref(wi).matrix() += g * t.nodes_[xi].value.matrix().transpose();
            if (gx)
                t.grad_ref(xi).matrix() += t.nodes_[wi].value.matrix().transpose() * g;
        };
    }
    return out;
}

Var Tape::add_bcol(Var x, Var bias) {
    const int xi = x.idx, bi = bias.idx;
    Arr v = val(x).colwise() + val(bias).col(0);
    Var out = push(std::move(v), wants(x) || wants(bias), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool gx = wants(x), gb = wants(bias);
        nodes_[oi].backward = [=](Tape& t) {
            const Arr& g = t.nodes_[oi].grad;
            if (gx) t.grad_ref(xi) += g;
            if (gb) t.grad_ref(bi).col(0) += g.rowwise().sum();
        };
    }
    return out;
}

Var Tape::trisolve_lower_unit(Var l, Var b) {
    const int li = l.idx, bi = b.idx;
    Mat lmat = val(l).matrix();
    lmat.diagonal().setOnes();
    Mat y = lmat.triangularView<Eigen::UnitLower>().solve(val(b).matrix());
    Var out = push(y.array(), wants(l) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool gl = wants(l), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            Mat lm = t.nodes_[li].value.matrix();
            lm.diagonal().setOnes();
            const Mat s = lm.transpose()
                              .triangularView<Eigen::UnitUpper>()
                              .solve(t.nodes_[oi].grad.matrix());
            if (gb) t.grad_ref(bi).matrix() += s;
            if (gl) {
                Mat gmat = -s * t.nodes_[oi].value.matrix().transpose();
                gmat.triangularView<Eigen::Upper>().setZero();  // strict lower only
                t.grad_ref(li).matrix() += gmat;
            }
        };
    }
    return out;
}

Var Tape::trisolve_upper(Var u, Var b) {
    const int ui = u.idx, bi = b.idx;
    Mat y = val(u).matrix().triangularView<Eigen::Upper>().solve(val(b).matrix());
    Var out = push(y.array(), wants(u) || wants(b), nullptr);
    const int oi = out.idx;
    if (recording_ && nodes_[oi].needs_grad) {
        const bool gu = wants(u), gb = wants(b);
        nodes_[oi].backward = [=](Tape& t) {
            const Mat s = t.nodes_[ui]
                              .value.matrix()
                              .transpose()
                              .triangularView<Eigen::Lower>()
                              .solve(t.nodes_[oi].grad.matrix());
            if (gb) t.grad_ref(bi).matrix() += s;
            if (gu) {
                Mat gmat = -s * t.nodes_[oi].value.matrix().transpose();
                gmat.triangularView<Eigen::StrictlyLower>().setZero();
                t.grad_ref(ui).matrix() += gmat;
            }
        };
    }
    return out;
}

// ------------------------------------------------------------------ bindings

Var BindingSet::bind(Arr& param) {
    for (const auto& [p, v] : entries_)
        if (p == &param) return v;
    Var v = (tape_->recording() && !frozen_) ? tape_->leaf(param) : tape_->constant(param);
    entries_.emplace_back(&param, v);
    return v;
}

const Arr* BindingSet::grad_of(const Arr* param) const {
    for (const auto& [p, v] : entries_) {
        if (p == param) {
            const Arr& g = tape_->grad(v);
            return g.size() == 0 ? nullptr : &g;
        }
    }
    return nullptr;
}

}  // namespace mcf::ad
