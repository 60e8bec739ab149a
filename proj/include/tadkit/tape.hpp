#ifndef TADKIT_TAPE_HPP
#define TADKIT_TAPE_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tadkit/kernels.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

// Trainable weight. grad is the cross-sample reduction target; per-sample
// gradients accumulate in a GradStore so the reduction order is fixed.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    int index = -1;

    void zero_grad() {
        grad = Tensor<T>(value.c, value.t, value.s);
    }
};

template <typename T>
struct ParamRef {
    const Tensor<T>* value = nullptr;
    int index = -1;  // < 0 means constant (no gradient)
};

// Per-graph parameter gradient sink, aligned with the model's param registry.
template <typename T>
using GradStore = std::vector<Tensor<T>>;

// Reverse-mode tape over Tensor values. One graph is confined to a single
// thread; parameters are read-only during forward.
template <typename T>
class Graph {
public:
    using BackFn = std::function<void(const Tensor<T>& dy, Graph& g)>;

    explicit Graph(GradStore<T>* param_grads = nullptr, bool record = true)
        : pg_(param_grads), record_(record) {}

    bool recording() const { return record_; }

    int input(Tensor<T> x) { return push(std::move(x), nullptr); }

    // Leaf that reads a parameter tensor; its gradient lands in the store.
    int param_leaf(ParamRef<T> p) {
        Tensor<T> v = *p.value;
        if (!record_ || p.index < 0) return push(std::move(v), nullptr);
        return push(std::move(v), [p](const Tensor<T>& dy, Graph& g) {
            Tensor<T>& dst = g.param_grad(p.index, *p.value);
            for (size_t i = 0; i < dy.v.size(); ++i) dst.v[i] += dy.v[i];
        });
    }

    int conv_temporal(int x, ParamRef<T> w, ParamRef<T> b, int stride, int pad) {
        const Tensor<T>& xv = val(x);
        Tensor<T> y = conv_temporal_fwd(xv, *w.value, b.value ? b.value->data() : nullptr,
                                        stride, pad);
        if (!record_) return push(std::move(y), nullptr);
        // Parameter tensors must outlive the graph; only ids are captured.
        return push(std::move(y), [x, w, b, stride, pad](const Tensor<T>& dy, Graph& g) {
            const Tensor<T>& xv = g.val(x);
            Tensor<T>* dw = w.index >= 0 ? &g.param_grad(w.index, *w.value) : nullptr;
            T* db = (b.value && b.index >= 0)
                        ? g.param_grad(b.index, *b.value).data()
                        : nullptr;
            Tensor<T>* dx = g.wants_grad(x) ? &g.grad_buffer(x) : nullptr;
            conv_temporal_bwd(xv, *w.value, dy, stride, pad, dx, dw, db);
        });
    }

    int maxpool_temporal(int x, int k, int stride, int pad) {
        std::vector<int32_t> argmax;
        Tensor<T> y = maxpool_temporal_fwd(val(x), k, stride, pad, record_ ? &argmax : nullptr);
        if (!record_) return push(std::move(y), nullptr);
        return push(std::move(y),
                    [x, argmax = std::move(argmax)](const Tensor<T>& dy, Graph& g) {
                        if (g.wants_grad(x)) maxpool_temporal_bwd(dy, argmax, &g.grad_buffer(x));
                    });
    }

    int spatial_avg_pool(int x) {
        Tensor<T> y = spatial_avg_pool_fwd(val(x));
        if (!record_) return push(std::move(y), nullptr);
        return push(std::move(y), [x](const Tensor<T>& dy, Graph& g) {
            if (g.wants_grad(x)) spatial_avg_pool_bwd(dy, &g.grad_buffer(x));
        });
    }

    int upsample_x2(int x) {
        Tensor<T> y = upsample_x2_fwd(val(x));
        if (!record_) return push(std::move(y), nullptr);
        return push(std::move(y), [x](const Tensor<T>& dy, Graph& g) {
            if (g.wants_grad(x)) upsample_x2_bwd(dy, &g.grad_buffer(x));
        });
    }

    int relu(int x) {
        Tensor<T> y = val(x);
        for (T& v : y.v) v = v > T(0) ? v : T(0);
        if (!record_) return push(std::move(y), nullptr);
        const int yid = static_cast<int>(nodes_.size());
        return push(std::move(y), [x, yid](const Tensor<T>& dy, Graph& g) {
            if (!g.wants_grad(x)) return;
            const Tensor<T>& yv = g.val(yid);
            Tensor<T>& dx = g.grad_buffer(x);
            for (size_t i = 0; i < dy.v.size(); ++i) {
                if (yv.v[i] > T(0)) dx.v[i] += dy.v[i];
            }
        });
    }

    int sigmoid(int x) {
        Tensor<T> y = val(x);
        for (T& v : y.v) v = stable_sigmoid(v);
        if (!record_) return push(std::move(y), nullptr);
        const int yid = static_cast<int>(nodes_.size());
        return push(std::move(y), [x, yid](const Tensor<T>& dy, Graph& g) {
            if (!g.wants_grad(x)) return;
            const Tensor<T>& yv = g.val(yid);
            Tensor<T>& dx = g.grad_buffer(x);
            for (size_t i = 0; i < dy.v.size(); ++i) {
                dx.v[i] += dy.v[i] * yv.v[i] * (T(1) - yv.v[i]);
            }
        });
    }

    int add(int a, int b) {
        const Tensor<T>& av = val(a);
        const Tensor<T>& bv = val(b);
        if (!av.same_shape(bv)) throw ConfigError("add: shape mismatch");
        Tensor<T> y = av;
        for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += bv.v[i];
        if (!record_) return push(std::move(y), nullptr);
        return push(std::move(y), [a, b](const Tensor<T>& dy, Graph& g) {
            if (g.wants_grad(a)) {
                Tensor<T>& da = g.grad_buffer(a);
                for (size_t i = 0; i < dy.v.size(); ++i) da.v[i] += dy.v[i];
            }
            if (g.wants_grad(b)) {
                Tensor<T>& db = g.grad_buffer(b);
                for (size_t i = 0; i < dy.v.size(); ++i) db.v[i] += dy.v[i];
            }
        });
    }

    int scale(int x, T f) {
        Tensor<T> y = val(x);
        for (T& v : y.v) v *= f;
        if (!record_) return push(std::move(y), nullptr);
        return push(std::move(y), [x, f](const Tensor<T>& dy, Graph& g) {
            if (!g.wants_grad(x)) return;
            Tensor<T>& dx = g.grad_buffer(x);
            for (size_t i = 0; i < dy.v.size(); ++i) dx.v[i] += f * dy.v[i];
        });
    }

    // Hook for fused ops (losses) that compute their own backward.
    int custom(Tensor<T> value, BackFn back) {
        return push(std::move(value), record_ ? std::move(back) : nullptr);
    }

    const Tensor<T>& val(int id) const { return nodes_[id].val; }

    // Accumulation buffer for a node's incoming gradient (zeros on first use).
    Tensor<T>& grad_buffer(int id) {
        Tensor<T>& g = grads_[id];
        if (g.v.empty()) {
            const Tensor<T>& v = nodes_[id].val;
            g = Tensor<T>(v.c, v.t, v.s);
        }
        return g;
    }

    // Gradient propagation stops at inputs, which never register interest.
    bool wants_grad(int id) const { return nodes_[id].back != nullptr || track_inputs_; }

    Tensor<T>& param_grad(int index, const Tensor<T>& like) {
        if (static_cast<size_t>(index) >= pg_->size()) pg_->resize(index + 1);
        Tensor<T>& g = (*pg_)[index];
        if (g.v.empty()) g = Tensor<T>(like.c, like.t, like.s);
        return g;
    }

    // Also collect gradients w.r.t. input nodes (used by op-level checks).
    void track_input_grads(bool on) { track_inputs_ = on; }

    // Run reverse pass from the given (node, seed) pairs; seed shape must
    // match the node value shape (scalars use a 1x1x1 tensor).
    void backward(const std::vector<std::pair<int, T>>& scalar_seeds) {
        grads_.resize(nodes_.size());
        for (const auto& [id, seed] : scalar_seeds) {
            Tensor<T>& g = grad_buffer(id);
            if (g.v.size() != 1) throw ConfigError("backward seed on non-scalar node");
            g.v[0] += seed;
        }
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            if (!nodes_[i].back) continue;
            if (static_cast<size_t>(i) >= grads_.size() || grads_[i].v.empty()) continue;
            nodes_[i].back(grads_[i], *this);
        }
    }

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> val;
        BackFn back;
    };

    int push(Tensor<T> v, BackFn back) {
        nodes_.push_back(Node{std::move(v), std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    std::vector<Tensor<T>> grads_;
    GradStore<T>* pg_;
    bool record_;
    bool track_inputs_ = false;
};

}  // namespace tadkit

#endif
