// Copyright 2026 The posg-synth Authors.
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

#include "posg/distribution.hpp"
#include "posg/error.hpp"
#include "posg/gridworld.hpp"
#include "posg/json_io.hpp"
#include "posg/model.hpp"
#include "posg/random.hpp"
#include "posg/strategy.hpp"
#include "posg/synthesis.hpp"
#include "posg/valuation.hpp"
