// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "strf/config.hpp"
#include "strf/model.hpp"

namespace strf {

// Single-file checkpoint container, magic "STRF1": text manifest over a
// little-endian float32 payload with the config embedded verbatim.
//
//   STRF1
//   step = <n>
//   bounds = <minx> <miny> <minz> <maxx> <maxy> <maxz>
//   config_bytes = <n>
//   <config text>
//   blocks = <n>
//   <name> <ndims> <dims...> <byte offset>
//   payload_bytes = <n>
//   <raw float32 data>
//
// Blocks cover every trainable parameter (registry order) plus `asg/lobes`
// (the fixed lobe frames, informational). save(load(f)) == f bit-exactly.
template <class Real>
void save_checkpoint(const std::string& path, Model<Real>& model, const std::string& config_text,
                     int64_t step);

template <class Real>
struct LoadedCheckpoint {
    Config config;
    std::string config_text;
    int64_t step = 0;
    Model<Real> model;
};

template <class Real>
LoadedCheckpoint<Real> load_checkpoint(const std::string& path);

// Reads only the embedded config (to pick the working precision before a
// full typed load).
Config peek_checkpoint_config(const std::string& path);

}  // namespace strf
