// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "strf/model.hpp"

namespace strf {

enum class ParamGroup { Tensor, Mlp };

// A named view over one parameter block and (optionally) its gradient mirror.
template <class Real>
struct ParamBlock {
    std::string name;
    std::vector<int> shape;  // storage dims
    Real* values = nullptr;
    Real* grads = nullptr;  // null when no gradient model was bound
    size_t size = 0;
    ParamGroup group = ParamGroup::Tensor;
};

// Flat, ordered registry over every trainable block of a model. Block names
// follow the checkpoint convention: field/<name>/level<l>/<factor> and
// mlp/<head>/{w,b}<layer>. Iteration order is deterministic.
template <class Real>
class ParamRegistry {
  public:
    // `grads` may be null; it must be shape-identical to `model` otherwise.
    explicit ParamRegistry(Model<Real>* model, Model<Real>* grads = nullptr);

    const std::vector<ParamBlock<Real>>& blocks() const { return blocks_; }
    size_t total_params() const { return total_; }

    const ParamBlock<Real>* find(const std::string& name) const;

  private:
    std::vector<ParamBlock<Real>> blocks_;
    size_t total_ = 0;
};

}  // namespace strf
