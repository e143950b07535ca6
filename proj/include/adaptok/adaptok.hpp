// Copyright 2026 The adaptok Authors.
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

#ifndef ADAPTOK_ADAPTOK_HPP
#define ADAPTOK_ADAPTOK_HPP

#include "adaptok/artifact_io.hpp"
#include "adaptok/bpe_tokenizer.hpp"
#include "adaptok/corpus_stats.hpp"
#include "adaptok/divergence_selector.hpp"
#include "adaptok/embed_init.hpp"
#include "adaptok/pipeline.hpp"
#include "adaptok/sequence_model.hpp"
#include "adaptok/static_embeddings.hpp"

#endif  // ADAPTOK_ADAPTOK_HPP
