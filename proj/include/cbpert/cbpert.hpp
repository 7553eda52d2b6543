// Copyright 2026 The cbpert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the numerical library. The experiment harness lives in
// cbpert/harness.hpp and pulls in the JSON dependency.

#ifndef CBPERT_CBPERT_HPP_
#define CBPERT_CBPERT_HPP_

#include "cbpert/bounds.hpp"
#include "cbpert/contour.hpp"
#include "cbpert/matcore.hpp"
#include "cbpert/noise.hpp"
#include "cbpert/quadrature.hpp"
#include "cbpert/rng.hpp"
#include "cbpert/spectral.hpp"

#endif  // CBPERT_CBPERT_HPP_
