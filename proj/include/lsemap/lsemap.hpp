/*
 * Copyright 2026 The lsemap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef LSEMAP_LSEMAP_HPP
#define LSEMAP_LSEMAP_HPP

#include "lsemap/baselines.hpp"
#include "lsemap/config.hpp"
#include "lsemap/data.hpp"
#include "lsemap/error.hpp"
#include "lsemap/gp.hpp"
#include "lsemap/grid.hpp"
#include "lsemap/level_set.hpp"
#include "lsemap/metrics.hpp"
#include "lsemap/runner.hpp"
#include "lsemap/service.hpp"
#include "lsemap/session.hpp"
#include "lsemap/transfer.hpp"

#endif  // LSEMAP_LSEMAP_HPP
