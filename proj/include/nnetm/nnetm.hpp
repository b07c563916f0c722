// Copyright 2026 The NN-ETM Authors
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

#ifndef NNETM_NNETM_HPP_
#define NNETM_NNETM_HPP_

#include "nnetm/adam.hpp"
#include "nnetm/analysis.hpp"
#include "nnetm/autodiff.hpp"
#include "nnetm/config.hpp"
#include "nnetm/cost.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/etm.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/linalg.hpp"
#include "nnetm/mlp.hpp"
#include "nnetm/protocols.hpp"
#include "nnetm/rollout.hpp"
#include "nnetm/signals.hpp"
#include "nnetm/training.hpp"

#endif  // NNETM_NNETM_HPP_
