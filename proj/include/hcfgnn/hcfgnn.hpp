// Copyright 2026 The hcfgnn Authors
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


#pragma once

#include "hcfgnn/error.hpp"
#include "hcfgnn/tensor.hpp"
#include "hcfgnn/random.hpp"
#include "hcfgnn/qos_data.hpp"
#include "hcfgnn/synthetic.hpp"
#include "hcfgnn/metrics.hpp"
#include "hcfgnn/attention.hpp"
#include "hcfgnn/model.hpp"
#include "hcfgnn/optim.hpp"
#include "hcfgnn/ldp.hpp"
#include "hcfgnn/messages.hpp"
#include "hcfgnn/client.hpp"
#include "hcfgnn/server.hpp"
#include "hcfgnn/config.hpp"
#include "hcfgnn/checkpoint.hpp"
#include "hcfgnn/harness.hpp"
#include "hcfgnn/experiment.hpp"
