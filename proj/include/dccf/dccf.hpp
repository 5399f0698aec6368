//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include "dccf/assembly.hpp"
#include "dccf/colorspace.hpp"
#include "dccf/error.hpp"
#include "dccf/filters.hpp"
#include "dccf/gradient.hpp"
#include "dccf/image.hpp"
#include "dccf/interact.hpp"
#include "dccf/io.hpp"
#include "dccf/losses.hpp"
#include "dccf/optimizer.hpp"
#include "dccf/service.hpp"
#include "dccf/upsample.hpp"
