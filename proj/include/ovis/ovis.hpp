// Copyright 2026 The OVIS Authors
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

#ifndef OVIS_OVIS_HPP
#define OVIS_OVIS_HPP

#include <ovis/adam.hpp>
#include <ovis/diagnostics/exact.hpp>
#include <ovis/diagnostics/posterior.hpp>
#include <ovis/diagnostics/slope.hpp>
#include <ovis/diagnostics/stats.hpp>
#include <ovis/errors.hpp>
#include <ovis/estimators/dispatch.hpp>
#include <ovis/models/gaussian.hpp>
#include <ovis/models/gmm.hpp>
#include <ovis/models/model.hpp>
#include <ovis/parameters.hpp>
#include <ovis/rng.hpp>
#include <ovis/weights.hpp>

#endif  // OVIS_OVIS_HPP
