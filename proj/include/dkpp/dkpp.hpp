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

#ifndef DKPP_DKPP_HPP
#define DKPP_DKPP_HPP

#include "core.hpp"
#include "subset.hpp"
#include "spectral.hpp"
#include "kernel.hpp"
#include "bernoulli.hpp"
#include "model.hpp"
#include "inference.hpp"
#include "sampling.hpp"
#include "modeopt.hpp"
#include "learning.hpp"

#endif  // DKPP_DKPP_HPP
