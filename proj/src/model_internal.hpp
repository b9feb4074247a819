// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gbfa/model.hpp"
#include "gbfa/rng.hpp"

namespace gbfa::detail {

/// Training-mode knobs for forward_impl. A null pointer means evaluation mode.
struct DropoutPlan {
    double rate = 0.0;
    Rng* rng = nullptr;
    const CsrMatrix* dropped_features = nullptr;  // layer-0 input with dropout applied
};

void forward_impl(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                  std::size_t first_layer, const DropoutPlan* dropout);

}  // namespace gbfa::detail
