// Copyright (c) the stflow authors
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

#include "stflow/evaluation.hpp"
#include "stflow/flow_regularity.hpp"
#include "stflow/grid.hpp"
#include "stflow/horn_schunck.hpp"
#include "stflow/stats.hpp"
#include "stflow/trajectories.hpp"
#include "stflow/video_io.hpp"
#include "stflow/windows_norm.hpp"
