// Copyright 2026 The mncover Authors.
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

#ifndef MNCOVER_MNCOVER_HPP_
#define MNCOVER_MNCOVER_HPP_

#include "mncover/binary_io.hpp"
#include "mncover/bitset.hpp"
#include "mncover/calibration.hpp"
#include "mncover/coverage.hpp"
#include "mncover/error.hpp"
#include "mncover/masks.hpp"
#include "mncover/neuron_key.hpp"
#include "mncover/profile.hpp"
#include "mncover/reference_transformer.hpp"
#include "mncover/suite.hpp"
#include "mncover/suite_ops.hpp"
#include "mncover/trace.hpp"
#include "mncover/trace_io.hpp"
#include "mncover/transformations.hpp"

#endif  // MNCOVER_MNCOVER_HPP_
