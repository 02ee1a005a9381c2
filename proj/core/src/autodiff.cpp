#include "ptp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace ptp::diff {

namespace {

constexpr double kProbFloor = 1e-12;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("autodiff: ") + what);
}

void ensure_grad(Node& n) {
  if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros_like(n.value);
}

}  // namespace

NodePtr leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->grad = Tensor::zeros_like(n->value);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  return n;
}

NodePtr constant(Tensor value) { return leaf(std::move(value), false); }

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->grad = Tensor::zeros_like(n->value);
  n->is_leaf = false;
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) n->requires_grad = true;
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

NodePtr affine(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  require(x->value.rank() == 2 && w->value.rank() == 2, "affine expects matrices");
  require(b->value.rank() == 1 && b->value.size() == w->value.cols(),
          "affine bias must match output width");
  Tensor y = matmul(x->value, w->value);
  const std::size_t rows = y.rows(), cols = y.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) y.at(i, j) += b->value[j];
  }
  return make_node(std::move(y), {x, w, b}, [](Node& n) {
    const auto& x = n.parents[0];
    const auto& w = n.parents[1];
    const auto& b = n.parents[2];
    if (x->requires_grad) {
      ensure_grad(*x);
      add_in_place(x->grad, matmul_transposed(n.grad, w->value));
    }
    if (w->requires_grad) {
      ensure_grad(*w);
      add_in_place(w->grad, transposed_matmul(x->value, n.grad));
    }
    if (b->requires_grad) {
      ensure_grad(*b);
      const std::size_t rows = n.grad.rows(), cols = n.grad.cols();
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) b->grad[j] += n.grad.at(i, j);
      }
    }
  });
}

NodePtr relu(const NodePtr& x) {
  Tensor y = x->value;
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(y), {x}, [](Node& n) {
    const auto& x = n.parents[0];
    if (!x->requires_grad) return;
    ensure_grad(*x);
    // subgradient 0 at the kink
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (x->value[i] > 0.0) x->grad[i] += n.grad[i];
    }
  });
}

NodePtr softmax(const NodePtr& x) {
  require(x->value.rank() == 2, "softmax expects a matrix");
  Tensor y = x->value;
  const std::size_t rows = y.rows(), cols = y.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = y.at(i, 0);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, y.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = std::exp(y.at(i, j) - mx);
      y.at(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < cols; ++j) y.at(i, j) /= sum;
  }
  return make_node(std::move(y), {x}, [](Node& n) {
    const auto& x = n.parents[0];
    if (!x->requires_grad) return;
    ensure_grad(*x);
    const std::size_t rows = n.value.rows(), cols = n.value.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
      for (std::size_t j = 0; j < cols; ++j) {
        x->grad.at(i, j) += n.value.at(i, j) * (n.grad.at(i, j) - dot);
      }
    }
  });
}

NodePtr cross_entropy(const NodePtr& probabilities, std::vector<int> labels) {
  require(probabilities->value.rank() == 2, "cross_entropy expects a probability matrix");
  const std::size_t rows = probabilities->value.rows(), cols = probabilities->value.cols();
  require(labels.size() == rows, "cross_entropy labels must match batch size");
  for (int y : labels) require(y >= 0 && static_cast<std::size_t>(y) < cols, "label out of range");
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    loss -= std::log(std::max(probabilities->value.at(i, labels[i]), kProbFloor));
  }
  loss /= static_cast<double>(rows);
  auto shared = std::make_shared<std::vector<int>>(std::move(labels));
  return make_node(Tensor::scalar(loss), {probabilities}, [shared](Node& n) {
    const auto& p = n.parents[0];
    if (!p->requires_grad) return;
    ensure_grad(*p);
    const double g = n.grad.item();
    const double inv_batch = 1.0 / static_cast<double>(shared->size());
    for (std::size_t i = 0; i < shared->size(); ++i) {
      const double pi = std::max(p->value.at(i, (*shared)[i]), kProbFloor);
      p->grad.at(i, (*shared)[i]) -= g * inv_batch / pi;
    }
  });
}

NodePtr embed(const NodePtr& table, std::vector<int> indices) {
  require(table->value.rank() == 2, "embed expects a table matrix");
  const std::size_t card = table->value.rows(), dim = table->value.cols();
  for (int ix : indices) {
    require(ix >= 0 && static_cast<std::size_t>(ix) < card, "embedding index out of range");
  }
  Tensor y = Tensor::matrix(indices.size(), dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* src = table->value.begin() + static_cast<std::size_t>(indices[i]) * dim;
    std::copy(src, src + dim, y.begin() + i * dim);
  }
  auto shared = std::make_shared<std::vector<int>>(std::move(indices));
  return make_node(std::move(y), {table}, [shared, dim](Node& n) {
    const auto& t = n.parents[0];
    if (!t->requires_grad) return;
    ensure_grad(*t);
    for (std::size_t i = 0; i < shared->size(); ++i) {
      double* dst = t->grad.begin() + static_cast<std::size_t>((*shared)[i]) * dim;
      const double* src = n.grad.begin() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
  });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  require(!parts.empty(), "concat_cols needs at least one part");
  const std::size_t rows = parts.front()->value.rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p->value.rank() == 2 && p->value.rows() == rows,
            "concat_cols parts must share the row count");
    total += p->value.cols();
  }
  Tensor y = Tensor::matrix(rows, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p->value.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(p->value.begin() + i * w, p->value.begin() + (i + 1) * w,
                y.begin() + i * total + offset);
    }
    offset += w;
  }
  return make_node(std::move(y), parts, [rows, total](Node& n) {
    std::size_t offset = 0;
    for (const auto& p : n.parents) {
      const std::size_t w = p->value.cols();
      if (p->requires_grad) {
        ensure_grad(*p);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* src = n.grad.begin() + i * total + offset;
          double* dst = p->grad.begin() + i * w;
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
        }
      }
      offset += w;
    }
  });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  require(a->value.same_shape(b->value), "add shape mismatch");
  Tensor y = a->value;
  add_in_place(y, b->value);
  return make_node(std::move(y), {a, b}, [](Node& n) {
    for (const auto& p : n.parents) {
      if (!p->requires_grad) continue;
      ensure_grad(*p);
      add_in_place(p->grad, n.grad);
    }
  });
}

NodePtr scale(const NodePtr& x, double factor) {
  Tensor y = x->value;
  for (double& v : y) v *= factor;
  return make_node(std::move(y), {x}, [factor](Node& n) {
    const auto& x = n.parents[0];
    if (!x->requires_grad) return;
    ensure_grad(*x);
    add_scaled(x->grad, n.grad, factor);
  });
}

namespace {

void topo_sort(const NodePtr& root, std::vector<Node*>& order) {
  // iterative DFS; graphs from long training loops would overflow the stack
  // with the recursive version
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (!parent->is_leaf && parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const NodePtr& loss) {
  require(loss->value.size() == 1, "backward needs a scalar loss");
  if (!loss->requires_grad) return;
  std::vector<Node*> order;  // parents-first
  topo_sort(loss, order);
  for (Node* n : order) {
    if (!n->is_leaf) n->grad.fill(0.0);
  }
  loss->grad.fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

void zero_grad(const std::vector<NodePtr>& params) {
  for (const auto& p : params) p->grad.fill(0.0);
}

double finite_diff_check(const std::function<NodePtr()>& build_loss,
                         const std::vector<NodePtr>& params, double h) {
  zero_grad(params);
  backward(build_loss());
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& v = params[pi]->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + h;
      const double up = build_loss()->value.item();
      v[i] = orig - h;
      const double down = build_loss()->value.item();
      v[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = analytic[pi][i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
  }
  return worst;
}

}  // namespace ptp::diff
