// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fewer/autodiff.hpp"
#include "fewer/bench.hpp"
#include "fewer/dataset.hpp"
#include "fewer/error.hpp"
#include "fewer/evaluate.hpp"
#include "fewer/features.hpp"
#include "fewer/hash.hpp"
#include "fewer/manifest.hpp"
#include "fewer/metrics.hpp"
#include "fewer/model.hpp"
#include "fewer/synth.hpp"
#include "fewer/table.hpp"
#include "fewer/tensor.hpp"
#include "fewer/training.hpp"
#include "fewer/wer.hpp"
