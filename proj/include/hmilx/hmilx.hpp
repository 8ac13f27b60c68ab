// Copyright 2026 The Authors.
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

// Umbrella header.

#pragma once

#include "hmilx/encode.hpp"
#include "hmilx/error.hpp"
#include "hmilx/explain.hpp"
#include "hmilx/harness.hpp"
#include "hmilx/model.hpp"
#include "hmilx/ranking.hpp"
#include "hmilx/rng.hpp"
#include "hmilx/sample.hpp"
#include "hmilx/schema.hpp"
#include "hmilx/subset.hpp"
#include "hmilx/synthgen.hpp"
#include "hmilx/train.hpp"
#include "hmilx/value.hpp"
