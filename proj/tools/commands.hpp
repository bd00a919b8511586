/*
 * @file commands.hpp
 *
 * This file is part of SeqSafety
 *
 * Copyright 2026 Observational Health Data Sciences and Informatics
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
 */

#pragma once

#include "run_dir.hpp"

namespace seqsafety::cli {

// Each returns the process exit code; errors propagate as exceptions.
int cmd_simulate(const Options& options);
int cmd_cv(const Options& options);
int cmd_analyze(const Options& options);
int cmd_calibrate(const Options& options);
int cmd_report(const Options& options);

}  // namespace seqsafety::cli
