// Copyright 2026 The InterLUDE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "interlude/adaptive.hpp"
#include "interlude/augment.hpp"
#include "interlude/checkpoint.hpp"
#include "interlude/config.hpp"
#include "interlude/data.hpp"
#include "interlude/error.hpp"
#include "interlude/experiment.hpp"
#include "interlude/fusion.hpp"
#include "interlude/layout.hpp"
#include "interlude/losses.hpp"
#include "interlude/nn/layers.hpp"
#include "interlude/nn/model.hpp"
#include "interlude/nn/optim.hpp"
#include "interlude/objective.hpp"
#include "interlude/plot.hpp"
#include "interlude/random.hpp"
#include "interlude/run.hpp"
#include "interlude/tensor.hpp"
#include "interlude/train_config.hpp"
#include "interlude/trainer.hpp"
