/*
 * Copyright 2026 The distinf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "distinf/dataset.hpp"
#include "distinf/error.hpp"
#include "distinf/eval.hpp"
#include "distinf/experts.hpp"
#include "distinf/explain.hpp"
#include "distinf/image.hpp"
#include "distinf/influence.hpp"
#include "distinf/io.hpp"
#include "distinf/layers.hpp"
#include "distinf/network.hpp"
#include "distinf/parse.hpp"
#include "distinf/random.hpp"
#include "distinf/synth.hpp"
#include "distinf/tensor.hpp"
#include "distinf/text.hpp"
#include "distinf/train.hpp"
#include "distinf/verify.hpp"
