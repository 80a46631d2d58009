// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/params.hpp"

namespace strf {

namespace {

template <class Real>
void add_field_blocks(std::vector<ParamBlock<Real>>& out, const std::string& field_name,
                      MultiscaleField<Real>* field, MultiscaleField<Real>* gfield) {
    for (size_t l = 0; l < field->levels.size(); ++l) {
        auto& lev = field->levels[l];
        auto* glev = gfield ? &gfield->levels[l] : nullptr;
        const int cr = lev.cr();
        const std::string base = "field/" + field_name + "/level" + std::to_string(l) + "/";

        struct Entry {
            const char* tag;
            std::vector<Real>* vals;
            std::vector<Real>* grads;
            std::vector<int> shape;
        };
        const Entry entries[6] = {
            {"line_x", &lev.line_x, glev ? &glev->line_x : nullptr, {lev.nx, cr}},
            {"line_y", &lev.line_y, glev ? &glev->line_y : nullptr, {lev.ny, cr}},
            {"line_z", &lev.line_z, glev ? &glev->line_z : nullptr, {lev.nz, cr}},
            {"plane_yz", &lev.plane_yz, glev ? &glev->plane_yz : nullptr, {lev.ny, lev.nz, cr}},
            {"plane_xz", &lev.plane_xz, glev ? &glev->plane_xz : nullptr, {lev.nx, lev.nz, cr}},
            {"plane_xy", &lev.plane_xy, glev ? &glev->plane_xy : nullptr, {lev.nx, lev.ny, cr}},
        };
        for (const auto& e : entries) {
            if (e.vals->empty()) continue;
            ParamBlock<Real> b;
            b.name = base + e.tag;
            b.shape = e.shape;
            b.values = e.vals->data();
            b.grads = e.grads ? e.grads->data() : nullptr;
            b.size = e.vals->size();
            b.group = ParamGroup::Tensor;
            out.push_back(std::move(b));
        }
    }
}

template <class Real>
void add_mlp_blocks(std::vector<ParamBlock<Real>>& out, const std::string& head, Mlp<Real>* mlp,
                    Mlp<Real>* gmlp) {
    for (size_t l = 0; l < mlp->layers.size(); ++l) {
        auto& layer = mlp->layers[l];
        auto* glayer = gmlp ? &gmlp->layers[l] : nullptr;
        ParamBlock<Real> w;
        w.name = "mlp/" + head + "/w" + std::to_string(l);
        w.shape = {layer.out, layer.in};
        w.values = layer.w.data();
        w.grads = glayer ? glayer->w.data() : nullptr;
        w.size = layer.w.size();
        w.group = ParamGroup::Mlp;
        out.push_back(std::move(w));
        ParamBlock<Real> b;
        b.name = "mlp/" + head + "/b" + std::to_string(l);
        b.shape = {layer.out};
        b.values = layer.b.data();
        b.grads = glayer ? glayer->b.data() : nullptr;
        b.size = layer.b.size();
        b.group = ParamGroup::Mlp;
        out.push_back(std::move(b));
    }
}

}  // namespace

template <class Real>
ParamRegistry<Real>::ParamRegistry(Model<Real>* model, Model<Real>* grads) {
    add_field_blocks(blocks_, "sigma", &model->sigma_field,
                     grads ? &grads->sigma_field : nullptr);
    add_field_blocks(blocks_, "ref", &model->ref_field, grads ? &grads->ref_field : nullptr);
    add_field_blocks(blocks_, "c_amb", &model->c_amb_field,
                     grads ? &grads->c_amb_field : nullptr);
    add_field_blocks(blocks_, "lambda_amb", &model->lambda_amb_field,
                     grads ? &grads->lambda_amb_field : nullptr);
    add_mlp_blocks(blocks_, "A", &model->lightfield.head_a,
                   grads ? &grads->lightfield.head_a : nullptr);
    add_mlp_blocks(blocks_, "B", &model->lightfield.head_b,
                   grads ? &grads->lightfield.head_b : nullptr);
    add_mlp_blocks(blocks_, "D", &model->lightfield.head_d,
                   grads ? &grads->lightfield.head_d : nullptr);
    total_ = 0;
    for (const auto& b : blocks_) total_ += b.size;
}

template <class Real>
const ParamBlock<Real>* ParamRegistry<Real>::find(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return &b;
    return nullptr;
}

template class ParamRegistry<float>;
template class ParamRegistry<double>;
template struct ParamBlock<float>;
template struct ParamBlock<double>;

}  // namespace strf
