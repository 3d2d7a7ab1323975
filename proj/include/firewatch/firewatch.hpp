/* Copyright 2026 The Firewatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include "firewatch/alarm.hpp"
#include "firewatch/anchors.hpp"
#include "firewatch/config.hpp"
#include "firewatch/dataset.hpp"
#include "firewatch/detect.hpp"
#include "firewatch/eval.hpp"
#include "firewatch/geometry.hpp"
#include "firewatch/image.hpp"
#include "firewatch/replay.hpp"
#include "firewatch/retention.hpp"
#include "firewatch/temporal.hpp"
